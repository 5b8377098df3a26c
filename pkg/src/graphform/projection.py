"""Euclidean projection onto the graph {(x, y) : y = A x}.

Direct mode factorizes the reduced Gram matrix (A'A + I when m >= n, else
AA' + I) once with a Cholesky decomposition and reuses it for every
projection.  Indirect mode runs CGLS on the same reduced system and accepts a
warm start, so its cost tracks how far the query is from the graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionError, NumericError, ParameterError

__all__ = [
    "ProjectorCache",
    "IndirectResult",
    "build_projector",
    "project",
    "project_indirect",
]

# Instrumentation: number of build_projector calls in this process.
BUILD_COUNT = 0


class IndirectResult(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class ProjectorCache:
    mode: str                    # "direct" | "indirect"
    m: int
    n: int
    orientation: str             # "tall" (m >= n) | "wide"
    A: object                    # ndarray or scipy sparse matrix
    gram: Optional[np.ndarray]   # direct only: reduced q x q system matrix
    chol: Optional[tuple]        # direct only: scipy cho_factor result
    tol: float                   # indirect relative residual target
    max_inner: int


def _coerce_matrix(A):
    if sp.issparse(A):
        return A.tocsr()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError("A must be a 2-D matrix")
    return A


def build_projector(A, mode: str = "direct", tol: float = 1e-8,
                    max_inner: Optional[int] = None) -> ProjectorCache:
    """Prepare the projection onto the graph of ``A``.

    Direct mode forms and factorizes the reduced Gram matrix once, which
    dominates the cost of a solve; every later projection is two matvecs and
    a triangular solve.  Indirect mode stores only matvec handles.
    """
    global BUILD_COUNT
    if mode not in ("direct", "indirect"):
        raise ParameterError(f"unknown projection mode {mode!r}")
    if not tol > 0.0:
        raise ParameterError("projection tolerance must be positive")
    A = _coerce_matrix(A)
    m, n = A.shape
    orientation = "tall" if m >= n else "wide"
    if max_inner is None:
        max_inner = max(100, 2 * min(m, n))
    gram = None
    chol = None
    if mode == "direct":
        if sp.issparse(A):
            raise ParameterError(
                "sparse matrices are supported through indirect mode only"
            )
        if orientation == "tall":
            gram = A.T @ A
        else:
            gram = A @ A.T
        gram[np.diag_indices_from(gram)] += 1.0
        try:
            chol = scipy.linalg.cho_factor(gram, lower=True, check_finite=True)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"Gram factorization failed: {exc}") from exc
    BUILD_COUNT += 1
    return ProjectorCache(
        mode=mode, m=m, n=n, orientation=orientation, A=A,
        gram=gram, chol=chol, tol=float(tol), max_inner=int(max_inner),
    )


def _check_query(cache: ProjectorCache, c, d):
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if c.shape != (cache.n,) or d.shape != (cache.m,):
        raise DimensionError(
            f"expected c of length {cache.n} and d of length {cache.m}"
        )
    return c, d


def project(cache: ProjectorCache, c, d):
    """Exact projection of (c, d): the minimizer of ``|x-c|^2 + |y-d|^2``
    subject to ``y = A x``.  Requires a direct-mode cache."""
    if cache.mode != "direct":
        raise ParameterError("project requires a direct-mode cache; "
                             "use project_indirect")
    c, d = _check_query(cache, c, d)
    A = cache.A
    if cache.orientation == "tall":
        x = scipy.linalg.cho_solve(cache.chol, c + A.T @ d, check_finite=False)
        y = A @ x
    else:
        w = scipy.linalg.cho_solve(cache.chol, A @ c - d, check_finite=False)
        y = d + w
        x = c - A.T @ w
    return x, y


def project_indirect(cache: ProjectorCache, c, d, x_warm=None, y_warm=None,
                     tol: Optional[float] = None) -> IndirectResult:
    """Approximate projection by CGLS on the reduced system.

    Stops at relative reduced-system residual ``tol`` (default: cache.tol).
    With a warm start near the answer the iteration count drops toward zero;
    if ``max_inner`` is exhausted the last iterate is returned flagged.
    """
    c, d = _check_query(cache, c, d)
    if tol is None:
        tol = cache.tol
    if not tol > 0.0:
        raise ParameterError("projection tolerance must be positive")
    A = cache.A
    AT = A.T
    if cache.orientation == "tall":
        # (A'A + I) x = c + A'd  ==  min |Ax - d|^2 + |x - c|^2
        z0 = np.zeros(cache.n) if x_warm is None else np.asarray(x_warm, float)
        z, iters, ok = _cgls_regularized(
            lambda t: A @ t, lambda t: AT @ t, d, c, z0, tol, cache.max_inner
        )
        x = z
        y = A @ z
    else:
        # (AA' + I) w = A c - d; then y = d + w, x = c - A'w
        z0 = (np.zeros(cache.m) if y_warm is None
              else np.asarray(y_warm, float) - d)
        z, iters, ok = _cgls_regularized(
            lambda t: AT @ t, lambda t: A @ t, c, -d, z0, tol, cache.max_inner
        )
        y = d + z
        x = c - AT @ z
    return IndirectResult(x=x, y=y, iterations=iters, converged=ok)


def _cgls_regularized(mv, rmv, h1, h2, z0, tol, max_inner):
    """CGLS for min |G z - h1|^2 + |z - h2|^2 via the stacked system
    [G; I] z = [h1; h2]; the running CGLS residual s equals the residual of
    the reduced normal equations (G'G + I) z = G'h1 + h2."""
    z = np.array(z0, dtype=float, copy=True)
    r1 = h1 - mv(z)
    r2 = h2 - z
    s = rmv(r1) + r2
    gamma = float(s @ s)
    ref = float(np.linalg.norm(rmv(h1) + h2))
    if ref == 0.0:
        ref = 1.0
    thresh = (tol * ref) ** 2
    if gamma <= thresh:
        return z, 0, True
    p = s.copy()
    for it in range(1, max_inner + 1):
        q = mv(p)
        denom = float(q @ q) + float(p @ p)
        if denom <= 0.0 or not np.isfinite(denom):
            return z, it, False
        alpha = gamma / denom
        z += alpha * p
        r1 -= alpha * q
        r2 -= alpha * p
        s = rmv(r1) + r2
        gamma_new = float(s @ s)
        if gamma_new <= thresh:
            return z, it, True
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return z, max_inner, False
