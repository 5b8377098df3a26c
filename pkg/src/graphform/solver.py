"""Operator-splitting solver for graph-form problems.

Each iteration applies the separable prox of g and f, projects the
over-relaxed point onto the graph of the (pre-conditioned) matrix, and
updates scaled duals.  Termination uses primal/dual residuals of the
half iterate in the original variable space, optionally the duality gap of
the full iterate, and the penalty can adapt once one residual has converged.

Pre-conditioning never touches the prox implementations: diagonal scalings
fold into per-coordinate prox parameters (rho * d_i**2 on the f side,
rho / e_j**2 on the g side) and into the projected matrix D A E.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .equilibration import Equilibration, equilibrate, rescale_even
from .errors import ParameterError
from .problem import GraphFormProblem, duality_gap
from .projection import ProjectorCache, build_projector, project, project_indirect
from .prox import prox_separable

__all__ = [
    "Status",
    "SolverSettings",
    "SolveResult",
    "Setup",
    "IterationSnapshot",
    "prepare",
    "solve",
    "recover_duals",
    "unscale",
    "residual_stop",
    "gap_stop",
    "adapt_rho",
]


class Status(enum.Enum):
    SOLVED = "Solved"
    MAX_ITERATIONS = "MaxIterations"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SolverSettings:
    """Knobs of the outer loop.

    Defaults: penalty 1, tolerances (1e-4, 1e-3), at most 10^4 iterations,
    over-relaxation 1.7, adaptive penalty with (delta, tau) = (1.05, 0.8),
    equilibration on, gap-based stopping off, direct projection.
    """

    rho0: float = 1.0
    abs_tol: float = 1e-4
    rel_tol: float = 1e-3
    max_iter: int = 10_000
    alpha: float = 1.7
    adaptive_rho: bool = True
    delta: float = 1.05
    tau: float = 0.8
    equilibrate: bool = True
    gap_stop: bool = False
    projection: str = "direct"
    projection_tol: Optional[float] = None  # indirect; None -> decreasing schedule
    max_inner: Optional[int] = None
    verbose: bool = False

    def __post_init__(self):
        if not self.rho0 > 0.0:
            raise ParameterError("rho0 must be positive")
        if not self.abs_tol > 0.0 or not self.rel_tol > 0.0:
            raise ParameterError("tolerances must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError("alpha must lie in (0, 2)")
        if not self.delta > 1.0:
            raise ParameterError("delta must exceed 1")
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError("tau must lie in (0, 1]")
        if self.projection not in ("direct", "indirect"):
            raise ParameterError("projection must be 'direct' or 'indirect'")
        if self.projection_tol is not None and not self.projection_tol > 0.0:
            raise ParameterError("projection_tol must be positive")


@dataclass
class SolveResult:
    x: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: Optional[float]
    status: Status
    iterations: int
    solve_time: float
    setup_time: float
    final_rho: float


@dataclass
class Setup:
    """Pre-conditioning and projector state reusable across solves on the
    same matrix (warm-start workflows skip the build entirely)."""

    scaling: Equilibration
    A_hat: object
    projector: ProjectorCache
    setup_time: float


@dataclass
class IterationSnapshot:
    """Hat-space view of one iteration, recorded when tracing."""

    k: int
    rho: float
    x_hat: np.ndarray
    y_hat: np.ndarray
    xt: np.ndarray
    yt: np.ndarray
    x_half_hat: np.ndarray
    y_half_hat: np.ndarray
    r_pri: float
    r_dual: float
    eps_pri: float
    eps_dual: float
    inner_iterations: int = 0


def _scale_matrix(A, d, e):
    if sp.issparse(A):
        return sp.diags(d) @ A @ sp.diags(e)
    return (d[:, None] * A) * e[None, :]


def prepare(problem: GraphFormProblem, settings: SolverSettings = None,
            scaling: Optional[Equilibration] = None) -> Setup:
    """Equilibrate (unless disabled or a scaling is supplied) and build the
    projector for the scaled matrix."""
    if settings is None:
        settings = SolverSettings()
    t0 = time.perf_counter()
    m, n = problem.A.shape
    if scaling is None:
        if settings.equilibrate:
            scaling = rescale_even(equilibrate(problem.A), problem.A)
        else:
            scaling = Equilibration.identity(m, n)
    A_hat = _scale_matrix(problem.A, scaling.d, scaling.e)
    tol = settings.projection_tol if settings.projection_tol is not None else 1e-8
    projector = build_projector(
        A_hat, mode=settings.projection, tol=tol, max_inner=settings.max_inner
    )
    return Setup(
        scaling=scaling, A_hat=A_hat, projector=projector,
        setup_time=time.perf_counter() - t0,
    )


def recover_duals(x_prev, y_prev, xt, yt, x_half, y_half, rho):
    """Duals of the current iteration (same space as its inputs).

    ``(x_prev, y_prev, xt, yt)`` must be the state that entered the prox
    step producing ``(x_half, y_half)``.  Returns
    ``(mu_half, nu_half, mu, nu)``.
    """
    mu_half = -rho * (x_half - x_prev + xt)
    nu_half = -rho * (y_half - y_prev + yt)
    mu = -rho * xt
    nu = -rho * yt
    return mu_half, nu_half, mu, nu


def unscale(x_hat, y_hat, mu_hat, nu_hat, d, e):
    """Map hat-space primal/dual vectors back to the original variables."""
    return e * x_hat, y_hat / d, mu_hat / e, d * nu_hat


def residual_stop(A, x_half, y_half, mu_half, nu_half, eps_abs, eps_rel):
    """Residual-based stopping test in the original variable space.

    Returns ``(stop, eps_pri, eps_dual, r_pri, r_dual)`` where the
    thresholds mix absolute and relative parts.
    """
    r_pri = float(np.linalg.norm(A @ x_half - y_half))
    r_dual = float(np.linalg.norm(A.T @ nu_half + mu_half))
    eps_pri = eps_abs + eps_rel * float(np.linalg.norm(y_half))
    eps_dual = eps_abs + eps_rel * float(np.linalg.norm(mu_half))
    return (r_pri <= eps_pri and r_dual <= eps_dual,
            eps_pri, eps_dual, r_pri, r_dual)


def gap_stop(problem: GraphFormProblem, x_full, y_full, mu_full, nu_full,
             eps_abs, eps_rel):
    """Gap-based stopping test at the full (primal and dual feasible)
    iterate.  Returns ``(stop, gap)``; ``gap`` is None when a conjugate is
    unsupported, and an infinite gap never stops (typical whenever f or g
    encode constraints)."""
    gap = duality_gap(problem, x_full, y_full, mu_full, nu_full)
    if gap is None or not np.isfinite(gap):
        return False, gap
    obj = problem.objective(x_full, y_full)
    if not np.isfinite(obj):
        return False, gap
    eps_gap = eps_abs + eps_rel * abs(obj)
    return gap <= eps_gap, gap


def adapt_rho(rho, xt, yt, k, l, u, r_pri, r_dual, eps_pri, eps_dual,
              delta, tau):
    """One adaptive-penalty decision.

    Once the dual residual is below threshold (and enough iterations have
    passed since the last decrease), the penalty grows by ``delta``;
    symmetrically it shrinks when the primal residual has converged.  Any
    change rescales the scaled duals by the old/new ratio.  Returns
    ``(rho, xt, yt, l, u)``.
    """
    if r_dual < eps_dual and tau * k > l:
        new_rho = delta * rho
        ratio = rho / new_rho
        return new_rho, xt * ratio, yt * ratio, l, k
    if r_pri < eps_pri and tau * k > u:
        new_rho = rho / delta
        ratio = rho / new_rho
        return new_rho, xt * ratio, yt * ratio, k, u
    return rho, xt, yt, l, u


_VERBOSE_HEADER = (
    f"{'iter':>6} {'r_pri':>11} {'eps_pri':>11} {'r_dual':>11} "
    f"{'eps_dual':>11} {'rho':>10} {'objective':>13}"
)


def solve(problem: GraphFormProblem, settings: SolverSettings = None, *,
          x0=None, nu0=None, scaling: Optional[Equilibration] = None,
          setup: Optional[Setup] = None,
          callback: Optional[Callable] = None,
          trace: Optional[list] = None) -> SolveResult:
    """Solve a graph-form problem.

    Parameters
    ----------
    problem : GraphFormProblem
    settings : SolverSettings, optional
    x0, nu0 : array, optional
        Warm start in original variables.  A missing half is estimated as
        zero; supplied duals are mapped so the iterates start dual feasible.
    scaling : Equilibration, optional
        Externally chosen diagonals (skips equilibration).
    setup : Setup, optional
        Reuse a previous :func:`prepare` result for the same matrix; the
        cached factorization is not rebuilt.
    callback : callable, optional
        Called once per iteration with
        ``(k, r_pri, r_dual, eps_pri, eps_dual, rho, objective)``.
    trace : list, optional
        Receives an :class:`IterationSnapshot` per iteration (hat space).

    Returns
    -------
    SolveResult with the half iterate ``(x, y, mu, nu)``, whose objective is
    finite by construction, plus residuals, status and timings.
    """
    if settings is None:
        settings = SolverSettings()
    own_setup = setup is None
    if own_setup:
        setup = prepare(problem, settings, scaling=scaling)
    setup_time = setup.setup_time if own_setup else 0.0

    t0 = time.perf_counter()
    A = problem.A
    A_hat = setup.A_hat
    d, e = setup.scaling.d, setup.scaling.e
    m, n = A.shape
    f, g = problem.f, problem.g

    rho = float(settings.rho0)
    d_sq = d * d
    e_sq = e * e

    x_hat = np.zeros(n)
    y_hat = np.zeros(m)
    xt = np.zeros(n)
    yt = np.zeros(m)
    if x0 is not None:
        x_hat = np.asarray(x0, dtype=float) / e
        y_hat = A_hat @ x_hat
    if nu0 is not None:
        nu_hat0 = np.asarray(nu0, dtype=float) / d
        yt = -nu_hat0 / rho
        xt = (A_hat.T @ nu_hat0) / rho

    alpha = settings.alpha
    fixed_ptol = settings.projection_tol
    indirect = settings.projection == "indirect"
    l_mark = 0
    u_mark = 0

    status = Status.MAX_ITERATIONS
    iterations = settings.max_iter
    gap_value = None

    # Tracked best-effort output (last finite iterate).
    x_half = np.zeros(n)
    y_half = np.zeros(m)
    mu_half = np.zeros(n)
    nu_half = np.zeros(m)
    objective = problem.objective(x_half, y_half)
    r_pri = r_dual = float("inf")

    if settings.verbose:
        print(_VERBOSE_HEADER)

    for k in range(settings.max_iter):
        rho_g = rho / e_sq
        rho_f = rho * d_sq

        vx = e * (x_hat - xt)
        vy = (y_hat - yt) / d
        x_half_new = prox_separable(g, rho_g, vx)
        y_half_new = prox_separable(f, rho_f, vy)
        if not (np.all(np.isfinite(x_half_new))
                and np.all(np.isfinite(y_half_new))):
            status = Status.DEGENERATE
            iterations = k
            break
        x_half, y_half = x_half_new, y_half_new
        xh_hat = x_half / e
        yh_hat = y_half * d

        mu_half_hat, nu_half_hat, _, _ = recover_duals(
            x_hat, y_hat, xt, yt, xh_hat, yh_hat, rho
        )
        _, _, mu_half, nu_half = unscale(
            xh_hat, yh_hat, mu_half_hat, nu_half_hat, d, e
        )

        stop, eps_pri, eps_dual, r_pri, r_dual = residual_stop(
            A, x_half, y_half, mu_half, nu_half,
            settings.abs_tol, settings.rel_tol,
        )
        objective = problem.objective(x_half, y_half)

        if callback is not None:
            callback(k, r_pri, r_dual, eps_pri, eps_dual, rho, objective)
        if settings.verbose:
            print(f"{k:6d} {r_pri:11.4e} {eps_pri:11.4e} {r_dual:11.4e} "
                  f"{eps_dual:11.4e} {rho:10.3e} {objective:13.6e}")

        if trace is not None:
            trace.append(IterationSnapshot(
                k=k, rho=rho, x_hat=x_hat.copy(), y_hat=y_hat.copy(),
                xt=xt.copy(), yt=yt.copy(), x_half_hat=xh_hat.copy(),
                y_half_hat=yh_hat.copy(), r_pri=r_pri, r_dual=r_dual,
                eps_pri=eps_pri, eps_dual=eps_dual,
            ))

        if stop:
            status = Status.SOLVED
            iterations = k + 1
            break

        if settings.gap_stop:
            x_full = e * x_hat
            y_full = y_hat / d
            mu_full = -rho * xt / e
            nu_full = -rho * d * yt
            gstop, gap_value = gap_stop(
                problem, x_full, y_full, mu_full, nu_full,
                settings.abs_tol, settings.rel_tol,
            )
            if gstop:
                status = Status.SOLVED
                iterations = k + 1
                break

        # over-relaxed projection input
        rx = alpha * xh_hat + (1.0 - alpha) * x_hat
        ry = alpha * yh_hat + (1.0 - alpha) * y_hat
        cx = rx + xt
        cy = ry + yt
        if indirect:
            if fixed_ptol is not None:
                ptol = fixed_ptol
            else:
                # decreasing schedule keeps projection errors summable
                drift = np.sqrt(
                    float(np.sum((xh_hat - x_hat) ** 2))
                    + float(np.sum((yh_hat - y_hat) ** 2))
                )
                ptol = min(1e-2, max(1e-10, 0.1 * drift))
            x_new, y_new, inner_iters, _ = project_indirect(
                setup.projector, cx, cy, x_hat, y_hat, tol=ptol
            )
            if trace is not None:
                trace[-1].inner_iterations = inner_iters
        else:
            x_new, y_new = project(setup.projector, cx, cy)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(y_new))):
            status = Status.DEGENERATE
            iterations = k + 1
            break

        xt = xt + rx - x_new
        yt = yt + ry - y_new
        x_hat, y_hat = x_new, y_new

        if settings.adaptive_rho:
            rho, xt, yt, l_mark, u_mark = adapt_rho(
                rho, xt, yt, k, l_mark, u_mark,
                r_pri, r_dual, eps_pri, eps_dual,
                settings.delta, settings.tau,
            )

    return SolveResult(
        x=x_half, y=y_half, mu=mu_half, nu=nu_half,
        objective=objective,
        primal_residual=r_pri, dual_residual=r_dual,
        gap=gap_value, status=status, iterations=iterations,
        solve_time=time.perf_counter() - t0, setup_time=setup_time,
        final_rho=rho,
    )
