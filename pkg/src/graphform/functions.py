"""Separable convex objectives built from a parametric base-function library.

Each scalar term has the shape

    c * h(a*x - b) + d*x + (e/2)*x**2

where ``h`` is one of ten base functions.  ``c >= 0`` and ``e >= 0`` keep the
term convex, and ``a != 0`` keeps the inner scaling invertible (the prox and
conjugate transforms divide by it).  A separable function is an ordered list
of such terms, evaluated coordinate by coordinate; indicator base functions
encode constraints by returning ``+inf`` outside their domain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "BaseFunction",
    "FunctionTerm",
    "SeparableFunction",
    "eval_base",
    "conjugate_base",
]


class BaseFunction(enum.Enum):
    """Base function kinds usable as the ``h`` of a term."""

    ABS = "Abs"            # |x|
    SQUARE = "Square"      # (1/2) x^2
    HUBER = "Huber"        # x^2/2 for |x| <= 1, |x| - 1/2 beyond
    NEG_ENTR = "NegEntr"   # x log x on x >= 0, with 0 log 0 = 0
    LOGISTIC = "Logistic"  # log(1 + e^x)
    MAX_POS0 = "MaxPos0"   # max(0, x)
    IND_GE0 = "IndGe0"     # indicator of x >= 0
    IND_LE0 = "IndLe0"     # indicator of x <= 0
    IND_EQ0 = "IndEq0"     # indicator of x == 0
    ZERO = "Zero"          # 0

    @classmethod
    def from_name(cls, name: str) -> "BaseFunction":
        key = str(name).replace("_", "").lower()
        try:
            return _NAME_LOOKUP[key]
        except KeyError:
            raise ParameterError(f"unknown base function {name!r}") from None


_NAME_LOOKUP = {k.value.lower(): k for k in BaseFunction}

KIND_CODE = {kind: i for i, kind in enumerate(BaseFunction)}
CODE_KIND = list(BaseFunction)

INDICATOR_KINDS = frozenset(
    {BaseFunction.IND_GE0, BaseFunction.IND_LE0, BaseFunction.IND_EQ0}
)

_ZERO_CODE = KIND_CODE[BaseFunction.ZERO]


def _as_code(h) -> int:
    if isinstance(h, BaseFunction):
        return KIND_CODE[h]
    if isinstance(h, (int, np.integer)):
        return int(h)
    return KIND_CODE[BaseFunction.from_name(h)]


def _eval_code(code: int, x: np.ndarray) -> np.ndarray:
    kind = CODE_KIND[code]
    if kind is BaseFunction.ZERO:
        return np.zeros_like(x)
    if kind is BaseFunction.ABS:
        return np.abs(x)
    if kind is BaseFunction.SQUARE:
        return 0.5 * x * x
    if kind is BaseFunction.HUBER:
        ax = np.abs(x)
        return np.where(ax <= 1.0, 0.5 * x * x, ax - 0.5)
    if kind is BaseFunction.NEG_ENTR:
        out = np.full_like(x, np.inf)
        pos = x > 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            out[pos] = x[pos] * np.log(x[pos])
        out[x == 0.0] = 0.0
        return out
    if kind is BaseFunction.LOGISTIC:
        return np.logaddexp(0.0, x)
    if kind is BaseFunction.MAX_POS0:
        return np.maximum(x, 0.0)
    if kind is BaseFunction.IND_GE0:
        return np.where(x >= 0.0, 0.0, np.inf)
    if kind is BaseFunction.IND_LE0:
        return np.where(x <= 0.0, 0.0, np.inf)
    if kind is BaseFunction.IND_EQ0:
        return np.where(x == 0.0, 0.0, np.inf)
    raise ParameterError(f"unknown base function code {code}")


def _conjugate_code(code: int, w: np.ndarray) -> np.ndarray:
    kind = CODE_KIND[code]
    if kind is BaseFunction.ZERO:
        return np.where(w == 0.0, 0.0, np.inf)
    if kind is BaseFunction.ABS:
        return np.where(np.abs(w) <= 1.0, 0.0, np.inf)
    if kind is BaseFunction.SQUARE:
        return 0.5 * w * w
    if kind is BaseFunction.HUBER:
        return np.where(np.abs(w) <= 1.0, 0.5 * w * w, np.inf)
    if kind is BaseFunction.NEG_ENTR:
        return np.exp(w - 1.0)
    if kind is BaseFunction.LOGISTIC:
        # binary entropy, finite only on [0, 1]
        out = np.full_like(w, np.inf)
        ok = (w >= 0.0) & (w <= 1.0)
        wk = w[ok]
        with np.errstate(invalid="ignore", divide="ignore"):
            lhs = np.where(wk > 0.0, wk * np.log(wk), 0.0)
            rhs = np.where(wk < 1.0, (1.0 - wk) * np.log1p(-wk), 0.0)
        out[ok] = lhs + rhs
        return out
    if kind is BaseFunction.MAX_POS0:
        return np.where((w >= 0.0) & (w <= 1.0), 0.0, np.inf)
    if kind is BaseFunction.IND_GE0:
        return np.where(w <= 0.0, 0.0, np.inf)
    if kind is BaseFunction.IND_LE0:
        return np.where(w >= 0.0, 0.0, np.inf)
    if kind is BaseFunction.IND_EQ0:
        return np.zeros_like(w)
    raise ParameterError(f"unknown base function code {code}")


def eval_base(h, x):
    """Evaluate the base function ``h`` elementwise (``+inf`` off-domain)."""
    x = np.asarray(x, dtype=float)
    return _eval_code(_as_code(h), x)


def conjugate_base(h, w):
    """Evaluate the convex conjugate of base function ``h`` elementwise."""
    w = np.asarray(w, dtype=float)
    return _conjugate_code(_as_code(h), w)


@dataclass(frozen=True)
class FunctionTerm:
    """One coordinate's objective: ``c*h(a*x - b) + d*x + (e/2)*x**2``."""

    h: BaseFunction
    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0
    e: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ParameterError(f"term parameter {name} must be finite")
            object.__setattr__(self, name, val)
        if not isinstance(self.h, BaseFunction):
            object.__setattr__(self, "h", BaseFunction.from_name(self.h))
        if self.a == 0.0:
            raise ParameterError("term scale a must be nonzero")
        if self.c < 0.0:
            raise ParameterError("term weight c must be nonnegative")
        if self.e < 0.0:
            raise ParameterError("term quadratic e must be nonnegative")


# Conjugates of terms with e > 0 have a closed form only for these kinds;
# everything else reports "unsupported" rather than approximating.
_EPOS_CONJ_KINDS = frozenset(
    {
        BaseFunction.ZERO,
        BaseFunction.SQUARE,
        BaseFunction.IND_EQ0,
        BaseFunction.IND_GE0,
        BaseFunction.IND_LE0,
    }
)


@dataclass(frozen=True, eq=False)
class SeparableFunction:
    """Coordinatewise sum of parametric terms, stored as flat arrays."""

    h: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.int64).ravel()
        object.__setattr__(self, "h", h)
        size = h.size
        for name in ("a", "b", "c", "d", "e"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 0:
                arr = np.full(size, float(arr))
            if arr.shape != (size,):
                raise DimensionError(f"parameter array {name} has wrong length")
            object.__setattr__(self, name, arr)
        if h.size and (h.min() < 0 or h.max() >= len(CODE_KIND)):
            raise ParameterError("invalid base function code")
        for name in ("a", "b", "c", "d", "e"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterError(f"parameter array {name} must be finite")
        if np.any(self.a == 0.0):
            raise ParameterError("term scale a must be nonzero")
        if np.any(self.c < 0.0):
            raise ParameterError("term weight c must be nonnegative")
        if np.any(self.e < 0.0):
            raise ParameterError("term quadratic e must be nonnegative")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Iterable[FunctionTerm]) -> "SeparableFunction":
        terms = list(terms)
        return cls(
            h=np.array([KIND_CODE[t.h] for t in terms], dtype=np.int64),
            a=np.array([t.a for t in terms]),
            b=np.array([t.b for t in terms]),
            c=np.array([t.c for t in terms]),
            d=np.array([t.d for t in terms]),
            e=np.array([t.e for t in terms]),
        )

    @classmethod
    def from_arrays(cls, h, size=None, a=1.0, b=0.0, c=1.0, d=0.0, e=0.0):
        """Build from a kind (or kind array) plus scalar-or-vector parameters."""
        if isinstance(h, (BaseFunction, str)):
            if size is None:
                raise ParameterError("size required when h is a single kind")
            codes = np.full(size, _as_code(h), dtype=np.int64)
        else:
            codes = np.array([_as_code(k) for k in np.ravel(h)], dtype=np.int64)
            if size is not None and codes.size != size:
                raise DimensionError("kind array does not match size")
        return cls(h=codes, a=a, b=b, c=c, d=d, e=e)

    @classmethod
    def uniform(cls, h, size, **params) -> "SeparableFunction":
        """``size`` copies of one term kind with shared parameters."""
        return cls.from_arrays(h, size=size, **params)

    # -- views -------------------------------------------------------------

    def __len__(self) -> int:
        return self.h.size

    @cached_property
    def terms(self) -> tuple:
        return tuple(
            FunctionTerm(
                CODE_KIND[int(self.h[i])],
                a=self.a[i], b=self.b[i], c=self.c[i], d=self.d[i], e=self.e[i],
            )
            for i in range(len(self))
        )

    @cached_property
    def _groups(self):
        """(code, index-array-or-None) pairs; None means every coordinate."""
        codes = np.unique(self.h)
        if codes.size == 1:
            return ((int(codes[0]), None),)
        return tuple(
            (int(code), np.flatnonzero(self.h == code)) for code in codes
        )

    @cached_property
    def _effective(self):
        """Kinds with c == 0 coordinates downgraded to ZERO and c snapped to 1.

        A zero-weight term is ``d*x + (e/2)*x**2``; routing it through the
        ZERO kind lets the prox/conjugate transforms share one code path.
        """
        zero_c = self.c == 0.0
        if not zero_c.any():
            return self.h, self.c, self._groups
        codes = np.where(zero_c, _ZERO_CODE, self.h)
        c_eff = np.where(zero_c, 1.0, self.c)
        uniq = np.unique(codes)
        if uniq.size == 1:
            groups = ((int(uniq[0]), None),)
        else:
            groups = tuple(
                (int(code), np.flatnonzero(codes == code)) for code in uniq
            )
        return codes, c_eff, groups

    # -- evaluation --------------------------------------------------------

    def evaluate(self, v) -> float:
        """Sum of all terms at ``v``; ``+inf`` if any indicator is violated."""
        v = np.asarray(v, dtype=float)
        if v.shape != (len(self),):
            raise DimensionError(
                f"expected vector of length {len(self)}, got shape {v.shape}"
            )
        z = self.a * v - self.b
        hvals = np.empty_like(z)
        for code, idx in self._groups:
            if idx is None:
                hvals = _eval_code(code, z)
            else:
                hvals[idx] = _eval_code(code, z[idx])
        # zero-weight coordinates contribute nothing even off-domain
        zero_c = self.c == 0.0
        if zero_c.any():
            hvals = np.where(zero_c, 0.0, hvals)
        total = float(self.c @ hvals)
        total += float(self.d @ v) + 0.5 * float(self.e @ (v * v))
        return total

    def conjugate(self, w):
        """Coordinatewise conjugate sum, or ``None`` when unsupported.

        Terms with ``e == 0`` reduce to the base conjugate through shift and
        scale rules.  Terms with ``e > 0`` are supported only for the kinds
        whose composition stays closed form.
        """
        w = np.asarray(w, dtype=float)
        if w.shape != (len(self),):
            raise DimensionError(
                f"expected vector of length {len(self)}, got shape {w.shape}"
            )
        codes, c_eff, groups = self._effective
        a, b, d, e = self.a, self.b, self.d, self.e
        vals = np.empty_like(w)
        wd = w - d
        e_zero = e == 0.0
        with np.errstate(invalid="ignore", over="ignore"):
            for code, idx in groups:
                if idx is None:
                    sel = np.arange(len(self))
                else:
                    sel = idx
                sel0 = sel[e_zero[sel]]
                selp = sel[~e_zero[sel]]
                if sel0.size:
                    q = wd[sel0] / (a[sel0] * c_eff[sel0])
                    base = _conjugate_code(code, q)
                    vals[sel0] = c_eff[sel0] * base + b[sel0] * wd[sel0] / a[sel0]
                if selp.size:
                    out = _conjugate_epos(
                        code, wd[selp], a[selp], b[selp], c_eff[selp], e[selp]
                    )
                    if out is None:
                        return None
                    vals[selp] = out
        return float(np.sum(vals))


def _conjugate_epos(code, wd, a, b, c, e):
    """Conjugate of ``c*h(a*x-b) + d*x + (e/2)x**2`` with e > 0, as a function
    of ``wd = w - d``.  Returns None when the kind has no closed form."""
    kind = CODE_KIND[code]
    if kind not in _EPOS_CONJ_KINDS:
        return None
    if kind is BaseFunction.ZERO:
        return wd * wd / (2.0 * e)
    if kind is BaseFunction.SQUARE:
        # the whole term is a quadratic: (alpha/2)x^2 + beta*x + cst
        alpha = c * a * a + e
        beta = -c * a * b
        cst = 0.5 * c * b * b
        t = wd - beta
        return t * t / (2.0 * alpha) - cst
    x0 = b / a
    boundary = wd * x0 - 0.5 * e * x0 * x0
    if kind is BaseFunction.IND_EQ0:
        return boundary
    xbar = wd / e
    interior = wd * wd / (2.0 * e)
    if kind is BaseFunction.IND_GE0:
        feasible = np.where(a > 0.0, xbar >= x0, xbar <= x0)
    else:  # IND_LE0
        feasible = np.where(a > 0.0, xbar <= x0, xbar >= x0)
    return np.where(feasible, interior, boundary)
