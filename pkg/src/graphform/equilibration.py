"""Diagonal pre-conditioning by regularized Sinkhorn-Knopp.

Alternating closed-form updates drive the row and column sums of ``|DAE|^p``
toward common values; a regularizer ``gamma`` keeps the updates bounded when
the matrix cannot be equilibrated (zero rows, non-square support).  The
returned diagonals are the ``1/p`` powers of the converged iterates, and
``rescale_even`` splits a common factor so that ``|DAE|_F / sqrt(min(m, n))``
equals one, the normalization the solver expects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateInputError,
    DimensionError,
    NumericError,
    ParameterError,
)

__all__ = [
    "Equilibration",
    "EquilibrationReport",
    "equilibrate",
    "rescale_even",
    "check_equilibrated",
    "equilibration_objective",
]

_BLOCK = 256  # row-block size: |A|^p is formed per block, never in full


@dataclass(frozen=True)
class Equilibration:
    """Diagonals d = diag(D), e = diag(E) with bookkeeping."""

    d: np.ndarray
    e: np.ndarray
    p: int = 2
    gamma: float = 0.0
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        e = np.asarray(self.e, dtype=float)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)
        if not (np.all(d > 0.0) and np.all(np.isfinite(d))):
            raise ParameterError("diagonal d must be positive and finite")
        if not (np.all(e > 0.0) and np.all(np.isfinite(e))):
            raise ParameterError("diagonal e must be positive and finite")

    @classmethod
    def identity(cls, m: int, n: int) -> "Equilibration":
        return cls(d=np.ones(m), e=np.ones(n))


@dataclass(frozen=True)
class EquilibrationReport:
    row_deviation: float        # max relative deviation of row |DAE|^p sums
    col_deviation: float
    identity_abs: float         # |mean(d) - mean(e)|
    identity_rel: float
    frobenius_ratio: float      # |DAE|_F / sqrt(min(m, n))
    tol: float

    @property
    def rows_ok(self) -> bool:
        return self.row_deviation <= self.tol

    @property
    def cols_ok(self) -> bool:
        return self.col_deviation <= self.tol

    def as_dict(self) -> dict:
        return {
            "row_deviation": self.row_deviation,
            "col_deviation": self.col_deviation,
            "identity_abs": self.identity_abs,
            "identity_rel": self.identity_rel,
            "frobenius_ratio": self.frobenius_ratio,
            "tol": self.tol,
            "rows_ok": self.rows_ok,
            "cols_ok": self.cols_ok,
        }


def _abs_pow_ops(A, p: int):
    """Matvec handles for |A|^p and its transpose without materializing the
    full elementwise power of a dense A."""
    if sp.issparse(A):
        P = A.tocsr(copy=True)
        P.data = np.abs(P.data) ** p
        PT = P.T.tocsr()
        return (lambda x: P @ x), (lambda x: PT @ x)

    A = np.asarray(A, dtype=float)
    m, _ = A.shape

    def _pow(block):
        if p == 2:
            return block * block
        return np.abs(block) ** p

    def row_apply(x):
        out = np.empty(m)
        for i0 in range(0, m, _BLOCK):
            blk = A[i0:i0 + _BLOCK]
            out[i0:i0 + blk.shape[0]] = _pow(blk) @ x
        return out

    def col_apply(x):
        out = np.zeros(A.shape[1])
        for i0 in range(0, m, _BLOCK):
            blk = A[i0:i0 + _BLOCK]
            out += _pow(blk).T @ x[i0:i0 + blk.shape[0]]
        return out

    return row_apply, col_apply


def _is_all_zero(A) -> bool:
    if sp.issparse(A):
        return A.nnz == 0 or not np.any(A.data)
    return not np.any(A)


def equilibrate(A, gamma: Optional[float] = None, eps: Optional[float] = None,
                max_iter: int = 300,
                on_sweep: Optional[Callable] = None) -> Equilibration:
    """Regularized Sinkhorn-Knopp with p = 2.

    Starting from unit column weights, alternates the closed-form row and
    column updates until both iterates move less than ``eps`` in 2-norm or
    ``max_iter`` sweeps pass (then ``converged`` is False).  ``gamma``
    defaults to ``(m + n) * sqrt(machine eps)``; ``eps`` defaults to
    ``1e-4 * sqrt(max(m, n))`` so the test scales with the vector lengths.
    ``on_sweep(k, d, e)`` receives the diagonal iterates after each sweep.
    """
    if sp.issparse(A):
        m, n = A.shape
    else:
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise ParameterError("A must be a 2-D matrix")
        m, n = A.shape
    if _is_all_zero(A):
        raise DegenerateInputError("cannot equilibrate an all-zero matrix")
    if gamma is None:
        gamma = (m + n) * np.sqrt(np.finfo(float).eps)
    if gamma < 0.0:
        raise ParameterError("gamma must be nonnegative")
    if eps is None:
        eps = 1e-4 * np.sqrt(max(m, n))
    if not eps > 0.0:
        raise ParameterError("eps must be positive")
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")

    p = 2
    row_apply, col_apply = _abs_pow_ops(A, p)
    e_it = np.ones(n)
    d_prev = None
    d_it = None
    converged = False
    k = 0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        while k < max_iter:
            k += 1
            d_it = n / (row_apply(e_it) + gamma / m)
            e_new = m / (col_apply(d_it) + gamma / n)
            if on_sweep is not None:
                on_sweep(k, d_it ** (1.0 / p), e_new ** (1.0 / p))
            if (d_prev is not None
                    and np.linalg.norm(e_new - e_it) <= eps
                    and np.linalg.norm(d_it - d_prev) <= eps):
                e_it = e_new
                converged = True
                break
            d_prev = d_it
            e_it = e_new
    if not (np.all(np.isfinite(d_it)) and np.all(np.isfinite(e_it))
            and np.all(d_it > 0.0) and np.all(e_it > 0.0)):
        raise NumericError(
            "equilibration iterates are not finite; use gamma > 0 for "
            "matrices that cannot be equilibrated"
        )
    return Equilibration(
        d=d_it ** (1.0 / p), e=e_it ** (1.0 / p),
        p=p, gamma=float(gamma), iterations=k, converged=converged,
    )


def _frobenius_sq(A, d, e):
    row_apply, _ = _abs_pow_ops(A, 2)
    return float((d * d) @ row_apply(e * e))


def _check_scaling_dims(A, d, e):
    m, n = A.shape
    if d.shape != (m,) or e.shape != (n,):
        raise DimensionError(
            f"scaling of lengths {d.shape}/{e.shape} does not match matrix "
            f"of shape {A.shape}"
        )


def rescale_even(eq: Equilibration, A) -> Equilibration:
    """Split the factor |DAE|_F / sqrt(min(m, n)) evenly between d and e so
    the rescaled pair satisfies the unit Frobenius condition."""
    m, n = A.shape
    _check_scaling_dims(A, eq.d, eq.e)
    fro = np.sqrt(_frobenius_sq(A, eq.d, eq.e))
    factor = fro / np.sqrt(min(m, n))
    if not np.isfinite(factor) or factor == 0.0:
        raise DegenerateInputError("scaled matrix has zero or non-finite norm")
    s = np.sqrt(factor)
    return replace(eq, d=eq.d / s, e=eq.e / s)


def check_equilibrated(A, d, e, p: int = 2, tol: float = 1e-2
                       ) -> EquilibrationReport:
    """Report how far DAE is from equilibrated.

    Deviations are max relative distances of the row (column) sums of
    ``|DAE|^p`` from their mean; the identity residual compares the average
    entries of d and e, which agree at an exact regularized optimum.
    """
    m, n = A.shape
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    _check_scaling_dims(A, d, e)
    row_apply, col_apply = _abs_pow_ops(A, p)
    row_sums = (d ** p) * row_apply(e ** p)
    col_sums = (e ** p) * col_apply(d ** p)
    row_dev = _max_rel_deviation(row_sums)
    col_dev = _max_rel_deviation(col_sums)
    mean_d = float(np.mean(d))
    mean_e = float(np.mean(e))
    identity_abs = abs(mean_d - mean_e)
    identity_rel = identity_abs / max(mean_d, mean_e, np.finfo(float).tiny)
    if p == 2:
        fro_sq = float(np.sum(row_sums))
    else:
        fro_sq = _frobenius_sq(A, d, e)
    frobenius_ratio = float(np.sqrt(fro_sq / min(m, n)))
    return EquilibrationReport(
        row_deviation=row_dev,
        col_deviation=col_dev,
        identity_abs=identity_abs,
        identity_rel=identity_rel,
        frobenius_ratio=frobenius_ratio,
        tol=float(tol),
    )


def _max_rel_deviation(sums: np.ndarray) -> float:
    mean = float(np.mean(sums))
    if mean <= 0.0 or not np.isfinite(mean):
        return float("inf")
    return float(np.max(np.abs(sums - mean)) / mean)


def equilibration_objective(A, d, e, gamma: float, p: int = 2) -> float:
    """Regularized scaling objective at diagonals d, e (finite positive).

    In the log parametrization u = log(d^p), v = log(e^p) the coordinate
    descent sweeps of :func:`equilibrate` minimize this exactly per block,
    so it is non-increasing across sweeps.
    """
    m, n = A.shape
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    row_apply, _ = _abs_pow_ops(A, p)
    dp = d ** p
    ep = e ** p
    total = float(dp @ row_apply(ep))
    total -= n * float(np.sum(np.log(dp)))
    total -= m * float(np.sum(np.log(ep)))
    total += gamma * (float(np.sum(dp)) / m + float(np.sum(ep)) / n)
    return total
