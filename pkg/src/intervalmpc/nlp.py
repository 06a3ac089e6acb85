"""Inequality-constrained smooth minimization via augmented Lagrangians.

Solves

    min f(d)  s.t.  g(d) <= 0  (componentwise),  d in bounds

with a Powell-Hestenes-Rockafellar outer loop and a projected quasi-Newton
inner solver.  Gradients come from complex-step differentiation when the
problem's fused evaluator accepts complex input (exact to machine precision,
one batched call prices all ``dim`` directional perturbations), falling back
to forward finite differences otherwise.

Feasibility is always measured on scaled constraints ``g / scale``.  The
solver never returns a point whose scaled violation exceeds
``max(feas_tol, violation(warm_start))``: the warm start is kept as a
candidate and dominates any worse iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.optimize

from .intervals import Interval


class NlpEvaluationError(RuntimeError):
    """Objective or constraint evaluation returned a non-finite value."""


@dataclass
class NlpProblem:
    """Problem data.

    Parameters
    ----------
    dim : int
        Decision-vector length.
    objective : callable
        ``d -> float``.
    constraints : callable
        ``d -> (q,) array`` with the convention ``g <= 0`` feasible; may be
        ``None`` for unconstrained problems.
    bounds : Interval or None
        Box on the decision vector.
    eval_batch : callable or None
        ``D (B, dim) -> (f (B,), G (B, q))`` fused evaluator; when absent a
        row-loop fallback over ``objective``/``constraints`` is used.
    scale : array or None
        Positive per-constraint normalization (defaults to ones).
    """

    dim: int
    objective: Callable
    constraints: Optional[Callable] = None
    bounds: Optional[Interval] = None
    eval_batch: Optional[Callable] = None
    scale: Optional[np.ndarray] = None
    name: str = "nlp"


@dataclass
class NlpConfig:
    """Solver knobs.

    ``feas_tol`` applies to scaled constraints; ``kkt_tol`` to the projected
    stationarity residual of the internally normalized objective (the
    objective is divided by ``max(1, |f(warm_start)|)``, making the test
    scale-free).  The default ``kkt_tol`` sits above the noise floor of
    forward-difference gradients at ``fd_step``; tightening it much below
    1e-5 makes the finite-difference fallback spin without certifying.

    ``gradient`` selects how inner gradients are computed: ``"complex"``
    uses complex-step differentiation through ``eval_batch`` (requires the
    evaluator to propagate complex input), ``"fd"`` forward differences, and
    ``"auto"`` tries complex-step once and falls back to differences for the
    rest of the call if the evaluator rejects complex input.

    ``accept_ftol`` is the relative objective improvement below which an
    outer iteration counts as stalled; after ``accept_stall`` stalled outers
    with a feasible incumbent the loop accepts it instead of grinding
    multiplier updates that certify nothing.
    """

    feas_tol: float = 1e-6
    kkt_tol: float = 2e-5
    outer_max: int = 50
    inner_max: int = 150
    fd_step: float = 1e-6
    cs_step: float = 1e-20
    gradient: str = "auto"
    accept_ftol: float = 1e-5
    accept_stall: int = 3
    rho_init: float = 10.0
    rho_growth: float = 10.0
    rho_max: float = 1e12
    progress_factor: float = 0.5


@dataclass
class NlpSolution:
    point: np.ndarray
    objective_value: float
    max_violation: float
    status: str
    iterations: int
    inner_iterations: int
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rho: float = 0.0
    kkt_residual: float = float("nan")
    warm_violation: float = float("nan")


def _batch_eval(problem: NlpProblem, D: np.ndarray):
    if problem.eval_batch is not None:
        f, G = problem.eval_batch(D)
        f = np.asarray(f, dtype=float)
        G = np.asarray(G, dtype=float) if G is not None else np.zeros((D.shape[0], 0))
        return f, G
    rows_f = np.empty(D.shape[0])
    rows_g = []
    for i, d in enumerate(D):
        rows_f[i] = problem.objective(d)
        rows_g.append(np.zeros(0) if problem.constraints is None
                      else np.asarray(problem.constraints(d), dtype=float))
    return rows_f, np.asarray(rows_g)


def _check_finite(f: np.ndarray, G: np.ndarray, base_dim: int):
    if not np.all(np.isfinite(f)):
        row = int(np.argmax(~np.isfinite(f)))
        which = "base point" if row == 0 else f"perturbation of variable {row - 1}"
        raise NlpEvaluationError(f"objective non-finite at {which}")
    if G.size and not np.all(np.isfinite(G)):
        rows, cols = np.nonzero(~np.isfinite(G))
        row, col = int(rows[0]), int(cols[0])
        which = "base point" if row == 0 else f"perturbation of variable {row - 1}"
        raise NlpEvaluationError(f"constraint {col} non-finite at {which}")


def minimize(problem: NlpProblem, warm_start, config: Optional[NlpConfig] = None,
             warm_multipliers: Optional[np.ndarray] = None,
             warm_rho: Optional[float] = None) -> NlpSolution:
    """Run the augmented-Lagrangian loop from a warm start.

    Returns
    -------
    NlpSolution
        ``status`` is one of ``optimal`` (feasible, stationarity residual
        within ``kkt_tol``), ``feasible_suboptimal`` (feasible, stationarity
        not certified), ``infeasible`` (violation stopped improving with the
        penalty saturated), or ``iteration_limit``.
    """
    cfg = config or NlpConfig()
    d0 = np.asarray(warm_start, dtype=float).copy()
    if d0.shape != (problem.dim,):
        raise ValueError(f"warm start has shape {d0.shape}, expected ({problem.dim},)")

    f0_arr, g0_arr = _batch_eval(problem, d0[None, :])
    _check_finite(f0_arr, g0_arr, problem.dim)
    q = g0_arr.shape[1]
    scale = np.ones(q) if problem.scale is None else np.asarray(problem.scale, float)
    if scale.shape != (q,) or np.any(scale <= 0):
        raise ValueError("scale must be positive with one entry per constraint")
    f_scale = max(1.0, abs(float(f0_arr[0])))

    def scaled_viol(g_row):
        if q == 0:
            return 0.0
        return float(np.max(np.maximum(g_row / scale, 0.0), initial=0.0))

    warm_viol = scaled_viol(g0_arr[0])
    # Candidate records: (point, objective, scaled violation).
    best = (d0.copy(), float(f0_arr[0]), warm_viol)

    lam = (np.zeros(q) if warm_multipliers is None
           else np.asarray(warm_multipliers, dtype=float).copy())
    if lam.shape != (q,):
        lam = np.zeros(q)
    rho = float(warm_rho) if warm_rho else cfg.rho_init

    lb = ub = None
    if problem.bounds is not None:
        lb, ub = problem.bounds.lo, problem.bounds.hi
    steps_cache = np.empty(problem.dim)

    def al_value(f_row, g_row, lam_v, rho_v):
        if q == 0:
            return f_row / f_scale
        shifted = np.maximum(0.0, lam_v + rho_v * (g_row / scale))
        return f_row / f_scale + (np.sum(shifted * shifted) - np.sum(lam_v * lam_v)) / (2.0 * rho_v)

    if cfg.gradient not in ("auto", "complex", "fd"):
        raise ValueError(f"unknown gradient mode {cfg.gradient!r}")
    if cfg.gradient == "complex" and problem.eval_batch is None:
        raise ValueError("complex-step gradients require an eval_batch evaluator")
    # use_cs[0] flips to False for the rest of the call when the evaluator
    # turns out not to propagate complex input ("auto" mode only).
    use_cs = [cfg.gradient != "fd" and problem.eval_batch is not None]
    cs_dirs = None
    if use_cs[0]:
        cs_dirs = (1j * cfg.cs_step) * np.eye(problem.dim)

    def make_inner(lam_v, rho_v, counter):
        def fd_val_and_grad(d):
            np.multiply(np.maximum(1.0, np.abs(d)), cfg.fd_step, out=steps_cache)
            D = np.concatenate([d[None, :], d[None, :] + np.diag(steps_cache)], axis=0)
            f, G = _batch_eval(problem, D)
            _check_finite(f, G, problem.dim)
            if q == 0:
                vals = f / f_scale
            else:
                shifted = np.maximum(0.0, lam_v + rho_v * (G / scale))
                vals = f / f_scale + (np.sum(shifted * shifted, axis=1)
                                      - np.sum(lam_v * lam_v)) / (2.0 * rho_v)
            grad = (vals[1:] - vals[0]) / steps_cache
            counter[0] += 1
            counter[1] = (f[0], G[0])
            return vals[0], grad

        def cs_val_and_grad(d):
            # Row j evaluates at d + i h e_j; the real part of any row is the
            # unperturbed value to O(h^2) and the imaginary part over h the
            # exact directional derivative.
            f, G = problem.eval_batch(d[None, :] + cs_dirs)
            f = np.asarray(f)
            G = (np.asarray(G) if G is not None
                 else np.zeros((problem.dim, 0), dtype=f.dtype))
            if q == 0:
                vals = f / f_scale
            else:
                t = lam_v + rho_v * (G / scale)
                shifted = np.where(t.real > 0.0, t, np.zeros((), dtype=t.dtype))
                vals = f / f_scale + (np.sum(shifted * shifted, axis=1)
                                      - np.sum(lam_v * lam_v)) / (2.0 * rho_v)
            if not np.iscomplexobj(vals):
                raise TypeError("evaluator dropped the imaginary parts")
            value = float(vals[0].real)
            grad = np.asarray(vals.imag) / cfg.cs_step
            if not (np.isfinite(value) and np.all(np.isfinite(grad))):
                raise NlpEvaluationError(
                    "augmented Lagrangian non-finite under complex-step evaluation")
            counter[0] += 1
            counter[1] = (float(f[0].real), G[0].real)
            return value, grad

        def val_and_grad(d):
            if use_cs[0]:
                try:
                    return cs_val_and_grad(d)
                except (TypeError, ValueError) as exc:
                    if cfg.gradient == "complex":
                        raise NlpEvaluationError(
                            f"evaluator rejected complex input: {exc}") from exc
                    use_cs[0] = False
            return fd_val_and_grad(d)
        return val_and_grad

    def projected_grad_norm(d, grad):
        step = d - grad
        if lb is not None:
            step = np.clip(step, lb, ub)
        return float(np.max(np.abs(d - step), initial=0.0))

    d = d0.copy()
    total_inner = 0
    status = "iteration_limit"
    kkt_res = float("nan")
    prev_viol = warm_viol
    feasible_stall = 0
    stall_ref_f = best[1] if warm_viol <= cfg.feas_tol else np.inf
    outer_done = 0
    scipy_bounds = None if lb is None else list(zip(lb, ub))

    for outer in range(cfg.outer_max):
        outer_done = outer + 1
        counter = [0, None]
        fun = make_inner(lam, rho, counter)
        # Inexact inner solves: while the iterate is clearly infeasible a
        # loose stationarity target suffices (the multipliers will move
        # anyway); tighten toward the certification tolerance as the
        # violation shrinks.
        inner_gtol = float(np.clip(0.3 * prev_viol, 0.5 * cfg.kkt_tol, 1e-2))
        res = scipy.optimize.minimize(
            fun, d, jac=True, method="L-BFGS-B", bounds=scipy_bounds,
            options={"maxiter": cfg.inner_max, "ftol": 1e-12,
                     "gtol": inner_gtol, "maxcor": 20, "maxls": 40})
        total_inner += counter[0]
        d = np.asarray(res.x, dtype=float)
        f_d, G_row = _batch_eval(problem, d[None, :])
        _check_finite(f_d, G_row, problem.dim)
        f_d = float(f_d[0])
        g_row = G_row[0]
        viol = scaled_viol(g_row)

        feasible_now = viol <= cfg.feas_tol
        best_feasible = best[2] <= cfg.feas_tol
        if (feasible_now and (not best_feasible or f_d < best[1])) or \
           (not feasible_now and not best_feasible and viol < best[2]):
            best = (d.copy(), f_d, viol)

        # Multiplier update; the AL gradient at the inner solution equals the
        # Lagrangian gradient with these updated multipliers.
        if q:
            lam = np.maximum(0.0, lam + rho * (g_row / scale))
        kkt_res = projected_grad_norm(d, np.asarray(res.jac, dtype=float))

        # Stall accounting on the feasible incumbent: borderline iterates
        # that flicker across feas_tol must not restart the countdown, or
        # the loop grinds multiplier rounds that no longer buy objective.
        if best[2] <= cfg.feas_tol:
            if best[1] <= stall_ref_f - cfg.accept_ftol * max(1.0, abs(stall_ref_f)):
                stall_ref_f = best[1]
                feasible_stall = 0
            else:
                feasible_stall += 1

        if viol <= cfg.feas_tol:
            if kkt_res <= cfg.kkt_tol:
                # Return the certified point unless an earlier feasible
                # iterate is strictly better (then keep it, uncertified).
                if best[2] <= cfg.feas_tol and best[1] < f_d - 1e-10 * f_scale:
                    status = "feasible_suboptimal"
                else:
                    best = (d.copy(), f_d, viol)
                    status = "optimal"
                break
            status = "feasible_suboptimal"
            if res.nit == 0 and inner_gtol <= 0.5 * cfg.kkt_tol:
                break
        else:
            if viol > cfg.progress_factor * prev_viol:
                rho = min(rho * cfg.rho_growth, cfg.rho_max)
                if rho >= cfg.rho_max and viol >= prev_viol * 0.999:
                    status = "infeasible"
                    break
            status = "iteration_limit"
        if feasible_stall >= cfg.accept_stall:
            status = "feasible_suboptimal"
            break
        prev_viol = viol

    point, f_val, viol_val = best
    if viol_val > max(cfg.feas_tol, warm_viol):
        point, f_val, viol_val = d0.copy(), float(f0_arr[0]), warm_viol
    if viol_val > cfg.feas_tol and status in ("optimal", "feasible_suboptimal"):
        status = "infeasible"
    if viol_val <= cfg.feas_tol and status in ("infeasible", "iteration_limit"):
        status = "feasible_suboptimal"
    return NlpSolution(point=point, objective_value=f_val,
                       max_violation=viol_val, status=status,
                       iterations=outer_done, inner_iterations=total_inner,
                       multipliers=lam, rho=rho, kkt_residual=kkt_res,
                       warm_violation=warm_viol)
