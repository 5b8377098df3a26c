"""Random instance generators for nine standard problem families.

Every family emits a graph-form problem plus a metadata dict recording the
planted quantities (sparse coefficient vector, regularization weight, labels)
so tests can recompute derived values exactly.

Reproducibility: each array gets its own PCG64 stream, spawned from
``SeedSequence([seed, family_index])`` in the fixed order listed per family.
Normal variates use numpy's ziggurat sampler; instances are bit-reproducible
within this implementation for a given (family, m, n, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .functions import BaseFunction, SeparableFunction
from .problem import GraphFormProblem

__all__ = ["FAMILIES", "GenSpec", "generate"]

FAMILIES = (
    "basis_pursuit",
    "entropy_max",
    "huber_fit",
    "lasso",
    "logistic",
    "lp",
    "nnls",
    "portfolio",
    "svm",
)

_FAMILY_INDEX = {name: i for i, name in enumerate(FAMILIES)}

_ALIASES = {
    "basispursuit": "basis_pursuit",
    "entropymax": "entropy_max",
    "huberfit": "huber_fit",
    "huber": "huber_fit",
    "logisticregression": "logistic",
    "linearprogram": "lp",
    "nonnegleastsquares": "nnls",
    "supportvectormachine": "svm",
}


def canonical_family(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    if key in _FAMILY_INDEX:
        return key
    key2 = key.replace("_", "")
    if key2 in _ALIASES:
        return _ALIASES[key2]
    if key2 in _FAMILY_INDEX:
        return key2
    raise ParameterError(f"unknown problem family {name!r}")


@dataclass(frozen=True)
class GenSpec:
    """Instance request.  ``m``/``n`` are the data-matrix dimensions; for
    portfolio ``m`` plays the role of the factor count, and for entropy_max
    and portfolio the emitted constraint matrix gains one extra row."""

    family: str
    m: int
    n: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        if self.m < 1 or self.n < 1:
            raise ParameterError("dimensions must be positive")


def _streams(spec: GenSpec, names):
    root = np.random.SeedSequence([int(spec.seed), _FAMILY_INDEX[spec.family]])
    children = root.spawn(len(names))
    return {name: np.random.default_rng(child)
            for name, child in zip(names, children)}


def _require(cond: bool, message: str):
    if not cond:
        raise ParameterError(message)


def _sparse_plant(rng, n: int) -> np.ndarray:
    """Coefficients that vanish with probability 1/2, else N(0, 1/n)."""
    v = rng.normal(0.0, 1.0 / np.sqrt(n), size=n)
    v[rng.random(n) < 0.5] = 0.0
    return v


def _basis_pursuit(spec: GenSpec):
    _require(spec.m > spec.n, "basis_pursuit needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v"))
    A = rng["A"].normal(size=(m, n))
    v = _sparse_plant(rng["v"], n)
    b = A @ v
    f = SeparableFunction.from_arrays(BaseFunction.IND_EQ0, size=m, b=b)
    g = SeparableFunction.uniform(BaseFunction.ABS, n)
    meta = {"v": v, "b": b}
    return GraphFormProblem(A, f, g), meta


def _entropy_max(spec: GenSpec):
    _require(spec.m < spec.n, "entropy_max needs m < n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v"))
    # second moment parameter read as a variance (std sqrt(n))
    A0 = rng["A"].normal(0.0, np.sqrt(n), size=(m, n))
    v = rng["v"].random(n)
    b = (A0 @ v) / v.sum()
    A = np.vstack([A0, np.ones((1, n))])
    f = SeparableFunction.from_arrays(
        [BaseFunction.IND_LE0] * m + [BaseFunction.IND_EQ0],
        b=np.concatenate([b, [1.0]]),
    )
    g = SeparableFunction.uniform(BaseFunction.NEG_ENTR, n)
    meta = {"v": v, "b": b, "note": "row m+1 pins the simplex constraint"}
    return GraphFormProblem(A, f, g), meta


def _huber_fit(spec: GenSpec):
    _require(spec.m > spec.n, "huber_fit needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v", "noise", "outliers"))
    A = rng["A"].normal(0.0, np.sqrt(n), size=(m, n))
    v = rng["v"].normal(0.0, 1.0 / np.sqrt(n), size=n)
    eps = rng["noise"].normal(0.0, 0.5, size=m)
    outlier = rng["outliers"].random(m) >= 0.95
    eps[outlier] = rng["outliers"].random(outlier.sum()) * 10.0
    b = A @ v + eps
    f = SeparableFunction.from_arrays(BaseFunction.HUBER, size=m, b=b)
    g = SeparableFunction.uniform(BaseFunction.ZERO, n)
    meta = {"v": v, "b": b, "outlier_mask": outlier}
    return GraphFormProblem(A, f, g), meta


def _lasso(spec: GenSpec):
    _require(spec.m < spec.n, "lasso needs m < n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v", "noise"))
    A = rng["A"].normal(size=(m, n))
    v = _sparse_plant(rng["v"], n)
    b = A @ v + rng["noise"].normal(0.0, 0.5, size=m)
    lam = 0.2 * float(np.max(np.abs(A.T @ b)))
    f = SeparableFunction.from_arrays(BaseFunction.SQUARE, size=m, b=b)
    g = SeparableFunction.from_arrays(BaseFunction.ABS, size=n, c=lam)
    meta = {"v": v, "b": b, "lam": lam}
    return GraphFormProblem(A, f, g), meta


def _logistic(spec: GenSpec):
    _require(spec.m > spec.n, "logistic needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v", "labels"))
    A = rng["A"].normal(size=(m, n))
    v = _sparse_plant(rng["v"], n)
    p0 = 1.0 / (1.0 + np.exp(-(A @ v)))
    b = np.where(rng["labels"].random(m) < p0, 0.0, 1.0)
    lam = 0.1 * float(np.max(np.abs(A.T @ (0.5 - b))))
    f = SeparableFunction.from_arrays(BaseFunction.LOGISTIC, size=m, d=-b)
    g = SeparableFunction.from_arrays(BaseFunction.ABS, size=n, c=lam)
    meta = {"v": v, "labels": b, "lam": lam}
    return GraphFormProblem(A, f, g), meta


def _lp(spec: GenSpec):
    _require(spec.m > spec.n, "lp needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v", "noise", "u"))
    A = rng["A"].normal(size=(m, n))
    v = rng["v"].normal(0.0, 1.0 / np.sqrt(n), size=n)
    b = A @ v + rng["noise"].random(m) * 0.1
    u = rng["u"].random(m)
    c = -A.T @ u  # keeps the optimum finite
    f = SeparableFunction.from_arrays(BaseFunction.IND_LE0, size=m, b=b)
    g = SeparableFunction.from_arrays(BaseFunction.ZERO, size=n, d=c)
    meta = {"v": v, "u": u, "b": b, "c": c}
    return GraphFormProblem(A, f, g), meta


def _nnls(spec: GenSpec):
    _require(spec.m > spec.n, "nnls needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A", "v", "noise"))
    A = rng["A"].normal(size=(m, n))
    v = rng["v"].normal(1.0 / n, 1.0 / np.sqrt(n), size=n)
    b = A @ v + rng["noise"].normal(0.0, 0.5, size=m)
    f = SeparableFunction.from_arrays(BaseFunction.SQUARE, size=m, b=b)
    g = SeparableFunction.uniform(BaseFunction.IND_GE0, n)
    meta = {"v": v, "b": b}
    return GraphFormProblem(A, f, g), meta


def _portfolio(spec: GenSpec):
    # m plays the role of the factor count k; the emitted matrix stacks
    # F' over the all-ones row.
    k, n = spec.m, spec.n
    _require(n > k, "portfolio needs n > k (pass the factor count as m)")
    rng = _streams(spec, ("F", "D", "mu"))
    F = rng["F"].normal(size=(n, k))
    D = rng["D"].random(n) * np.sqrt(k)
    mu = rng["mu"].normal(size=n)
    gamma_risk = 1.0
    A = np.vstack([F.T, np.ones((1, n))])
    f = SeparableFunction.from_arrays(
        [BaseFunction.ZERO] * k + [BaseFunction.IND_EQ0],
        b=np.concatenate([np.zeros(k), [1.0]]),
        e=np.concatenate([np.full(k, 2.0 * gamma_risk), [0.0]]),
    )
    g = SeparableFunction.from_arrays(
        BaseFunction.IND_GE0, size=n, d=-mu, e=2.0 * gamma_risk * D
    )
    meta = {"D": D, "mu": mu, "gamma_risk": gamma_risk}
    return GraphFormProblem(A, f, g), meta


def _svm(spec: GenSpec):
    _require(spec.m > spec.n, "svm needs m > n")
    m, n = spec.m, spec.n
    rng = _streams(spec, ("A",))
    half = m // 2
    labels = np.where(np.arange(m) < half, 1.0, -1.0)
    centers = labels / n
    A = rng["A"].normal(0.0, 1.0 / np.sqrt(n), size=(m, n)) + centers[:, None]
    lam = 1.0  # hinge weight, free in this family; recorded in metadata
    A_signed = labels[:, None] * A
    f = SeparableFunction.from_arrays(
        BaseFunction.MAX_POS0, size=m, b=-1.0, c=lam
    )
    g = SeparableFunction.from_arrays(BaseFunction.ZERO, size=n, e=2.0)
    meta = {"labels": labels, "lam": lam, "raw_A": A}
    return GraphFormProblem(A_signed, f, g), meta


_BUILDERS = {
    "basis_pursuit": _basis_pursuit,
    "entropy_max": _entropy_max,
    "huber_fit": _huber_fit,
    "lasso": _lasso,
    "logistic": _logistic,
    "lp": _lp,
    "nnls": _nnls,
    "portfolio": _portfolio,
    "svm": _svm,
}


def generate(spec: GenSpec):
    """Build one random instance.  Returns ``(problem, metadata)``."""
    problem, meta = _BUILDERS[spec.family](spec)
    meta.update(
        family=spec.family, m=spec.m, n=spec.n, seed=spec.seed,
        rows=problem.m, cols=problem.n,
    )
    return problem, meta
