"""Graph-form problem container and duality gap.

A graph-form problem minimizes ``f(y) + g(x)`` subject to ``y = A x`` with
separable extended-real ``f`` and ``g``.  Infinite values encode constraints,
so the duality gap of a tuple can legitimately be ``+inf``; it is ``None``
only when a conjugate has no supported closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ParameterError
from .functions import SeparableFunction

__all__ = ["GraphFormProblem", "duality_gap"]


@dataclass(frozen=True, eq=False)
class GraphFormProblem:
    """Matrix A with separable objectives f (length m) and g (length n)."""

    A: object
    f: SeparableFunction
    g: SeparableFunction

    def __post_init__(self):
        A = self.A
        if sp.issparse(A):
            A = A.tocsr()
        else:
            A = np.ascontiguousarray(np.asarray(A, dtype=float))
            if A.ndim != 2:
                raise DimensionError("A must be a 2-D matrix")
            if not np.all(np.isfinite(A)):
                raise ParameterError("A must be finite")
        object.__setattr__(self, "A", A)
        m, n = A.shape
        if len(self.f) != m:
            raise DimensionError(
                f"f has {len(self.f)} terms but A has {m} rows"
            )
        if len(self.g) != n:
            raise DimensionError(
                f"g has {len(self.g)} terms but A has {n} columns"
            )

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.A)

    def objective(self, x, y) -> float:
        return self.f.evaluate(y) + self.g.evaluate(x)


def duality_gap(problem: GraphFormProblem, x, y, mu, nu):
    """``f(y) + f*(nu) + g(x) + g*(mu)``; ``None`` if a conjugate is
    unsupported.  Nonnegative for primal-dual feasible tuples, zero exactly
    at optimality."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if x.shape != (problem.n,) or mu.shape != (problem.n,):
        raise DimensionError("x and mu must have length n")
    if y.shape != (problem.m,) or nu.shape != (problem.m,):
        raise DimensionError("y and nu must have length m")
    f_conj = problem.f.conjugate(nu)
    if f_conj is None:
        return None
    g_conj = problem.g.conjugate(mu)
    if g_conj is None:
        return None
    return problem.f.evaluate(y) + f_conj + problem.g.evaluate(x) + g_conj
