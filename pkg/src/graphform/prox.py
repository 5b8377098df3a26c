"""Proximal operators of the base functions and of parametric terms.

``prox_h(rho, v)`` minimizes ``h(z) + (rho/2)(z - v)**2``.  Full terms are
reduced to a base prox through the transform

    prox_term(v) = (prox_{h, (e+rho)/(c*a^2)}(a*(v*rho - d)/(e+rho) - b) + b) / a

which also absorbs diagonal pre-conditioning: a per-coordinate ``rho`` vector
is the canonical interface and a scalar is broadcast.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import DimensionError, ParameterError
from .functions import CODE_KIND, BaseFunction, SeparableFunction, _as_code

__all__ = ["prox_base", "prox_separable"]

# Scalar nonlinear solves: safeguarded Newton with bisection fallback.
STATIONARITY_TOL = 1e-12
MAX_NEWTON_ITER = 100


def _prox_logistic(rho, v):
    # root of g(z) = rho*(z - v) + sigmoid(z), bracketed by [v - 1/rho, v]
    lo = v - 1.0 / rho
    hi = np.array(v, dtype=float, copy=True)
    z = v - expit(v) / (rho + 0.25)
    z = np.clip(z, lo, hi)
    tol = STATIONARITY_TOL * np.maximum(1.0, np.abs(rho * v))
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(MAX_NEWTON_ITER):
        s = expit(z)
        g = rho * (z - v) + s
        done |= np.abs(g) <= tol
        if done.all():
            break
        neg = g < 0.0
        lo = np.where(neg & ~done, z, lo)
        hi = np.where(~neg & ~done, z, hi)
        znew = z - g / (rho + s * (1.0 - s))
        bad = (znew <= lo) | (znew >= hi) | ~np.isfinite(znew)
        znew = np.where(bad, 0.5 * (lo + hi), znew)
        z = np.where(done, z, znew)
    return z


def _prox_neg_entr(rho, v):
    # root of g(z) = log z + 1 + rho*(z - v) on z > 0; init avoids underflow
    z = np.maximum(v, 1e-6)
    lo = np.zeros_like(z)           # g -> -inf as z -> 0+
    hi = np.maximum(v, 1.0)         # g(max(v, 1)) >= 0
    tol = STATIONARITY_TOL * np.maximum(1.0, np.abs(rho) * (np.abs(v) + 1.0))
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(MAX_NEWTON_ITER):
        g = np.log(z) + 1.0 + rho * (z - v)
        done |= np.abs(g) <= tol
        if done.all():
            break
        neg = g < 0.0
        lo = np.where(neg & ~done, z, lo)
        hi = np.where(~neg & ~done, z, hi)
        znew = z - g * z / (1.0 + rho * z)
        bad = (znew <= lo) | (znew >= hi) | ~np.isfinite(znew)
        znew = np.where(bad, 0.5 * (lo + hi), znew)
        z = np.where(done, z, znew)
    return z


def _prox_code(code: int, rho: np.ndarray, v: np.ndarray) -> np.ndarray:
    kind = CODE_KIND[code]
    if kind is BaseFunction.ZERO:
        return np.array(v, dtype=float, copy=True)
    if kind is BaseFunction.ABS:
        return np.sign(v) * np.maximum(np.abs(v) - 1.0 / rho, 0.0)
    if kind is BaseFunction.SQUARE:
        return rho * v / (1.0 + rho)
    if kind is BaseFunction.HUBER:
        shrunk = rho * v / (1.0 + rho)
        linear = v - np.sign(v) / rho
        return np.where(np.abs(v) <= 1.0 + 1.0 / rho, shrunk, linear)
    if kind is BaseFunction.NEG_ENTR:
        return _prox_neg_entr(rho, v)
    if kind is BaseFunction.LOGISTIC:
        return _prox_logistic(rho, v)
    if kind is BaseFunction.MAX_POS0:
        inv = 1.0 / rho
        return np.where(v <= 0.0, v, np.where(v >= inv, v - inv, 0.0))
    if kind is BaseFunction.IND_GE0:
        return np.maximum(v, 0.0)
    if kind is BaseFunction.IND_LE0:
        return np.minimum(v, 0.0)
    if kind is BaseFunction.IND_EQ0:
        return np.zeros_like(v)
    raise ParameterError(f"unknown base function code {code}")


def prox_base(h, rho, v):
    """Prox of a base function.  Scalar in, scalar out; arrays broadcast."""
    v = np.asarray(v, dtype=float)
    rho_arr = np.broadcast_to(np.asarray(rho, dtype=float), v.shape)
    if not np.all(rho_arr > 0.0) or not np.all(np.isfinite(rho_arr)):
        raise ParameterError("prox parameter rho must be positive and finite")
    out = _prox_code(_as_code(h), rho_arr, v)
    if v.ndim == 0:
        return float(out)
    return out


def prox_separable(sf: SeparableFunction, rho, v) -> np.ndarray:
    """Coordinatewise prox of a separable function at parameter(s) ``rho``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (len(sf),):
        raise DimensionError(
            f"expected vector of length {len(sf)}, got shape {v.shape}"
        )
    rho_arr = np.asarray(rho, dtype=float)
    if rho_arr.ndim == 0:
        rho_arr = np.full(len(sf), float(rho_arr))
    elif rho_arr.shape != (len(sf),):
        raise DimensionError("rho vector does not match function length")
    if not np.all(rho_arr > 0.0) or not np.all(np.isfinite(rho_arr)):
        raise ParameterError("prox parameters must be positive and finite")

    codes, c_eff, groups = sf._effective
    denom = sf.e + rho_arr
    rho_h = denom / (c_eff * sf.a * sf.a)
    z0 = sf.a * (v * rho_arr - sf.d) / denom - sf.b
    if len(groups) == 1 and groups[0][1] is None:
        z = _prox_code(groups[0][0], rho_h, z0)
    else:
        z = np.empty_like(z0)
        for code, idx in groups:
            z[idx] = _prox_code(code, rho_h[idx], z0[idx])
    return (z + sf.b) / sf.a
