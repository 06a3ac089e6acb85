"""Output-feedback MPC over interval predictions.

Each controller step follows the same loop:

1. advance the observers with the previously applied input and the
   measurement buffered at the previous call (the observer is a prediction
   form: a measurement taken at time k enters the box for time k+1),
2. refine the observer box by intersecting it with the one-step-ahead box
   predicted at the previous call,
3. solve for a feedforward sequence ``u_ff`` minimizing the cost of the
   predicted box midpoints subject to tube, input, obstacle and terminal
   constraints,
4. apply ``u = -K xhat + u_ff[0]`` and buffer the new measurement.

The decision variable is only the feedforward sequence; the state feedback
``-K xhat`` inside the predictor keeps the tubes from growing with the
horizon.  Setting ``K = 0`` recovers a pure feedforward (open-loop
prediction) controller with the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg

from .decomposition import DecomposedModel
from .estimation import Estimator, EstimatorState, NoiseBounds, feedback_input
from .gains import dlqr, spectral_radius
from .intervals import Interval, bound_product, split
from .nlp import NlpConfig, NlpProblem, NlpSolution, minimize
from .prediction import (PredictionTrajectory, Predictor, PredictorState,
                         WidthBound, init_from_estimate, steady_width)


class MpcError(RuntimeError):
    pass


class ControllerInfeasible(MpcError):
    """The solver could not produce a feasible feedforward sequence."""


@dataclass(frozen=True)
class Obstacle:
    """Circular keep-out region in position space.

    ``margin`` inflates the radius used in constraints; logged violations
    are always measured against the bare ``radius``.
    """

    center: np.ndarray
    radius: float
    margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def constraint_radius(self) -> float:
        return self.radius + self.margin


@dataclass
class TerminalIngredients:
    """Terminal set, terminal controller and terminal cost.

    ``Kf`` acts in input space (``u = Kf(x)``); the terminal cost is
    ``Vf(x) = gamma (x - center)' P (x - center)``.
    """

    center: np.ndarray
    radius: np.ndarray
    P: np.ndarray
    gamma: float
    K_lqr: np.ndarray
    u_eq: np.ndarray

    @property
    def box(self) -> Interval:
        return Interval.from_center(self.center, self.radius)

    def Kf(self, x) -> np.ndarray:
        x = np.asarray(x)
        return self.u_eq - (x - self.center) @ self.K_lqr.T

    def Vf(self, x) -> np.ndarray:
        x = np.asarray(x)
        dx = x - self.center
        return self.gamma * np.sum((dx @ self.P) * dx, axis=-1)


@dataclass
class ConstraintSets:
    """State box, input box, obstacles and terminal data for one scenario."""

    X: Interval
    U: Interval
    obstacles: List[Obstacle] = field(default_factory=list)
    terminal: Optional[TerminalIngredients] = None
    position_dims: tuple = (0, 1)
    position_offset: np.ndarray = None

    def __post_init__(self):
        if self.position_offset is None:
            self.position_offset = np.zeros(len(self.position_dims))
        else:
            self.position_offset = np.asarray(self.position_offset, dtype=float)

    @property
    def Xf(self) -> Optional[Interval]:
        return None if self.terminal is None else self.terminal.box

    def Kf(self, x):
        if self.terminal is None:
            raise MpcError("no terminal ingredients configured")
        return self.terminal.Kf(x)


class QuadraticStage:
    """``(x - x_ref)' H (x - x_ref) + (u - u_ref)' R (u - u_ref)``, batched."""

    def __init__(self, H, R, x_ref, u_ref=None):
        self.H = np.atleast_2d(np.asarray(H, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.x_ref = np.asarray(x_ref, dtype=float)
        self.u_ref = (np.zeros(self.R.shape[0]) if u_ref is None
                      else np.asarray(u_ref, dtype=float))

    def __call__(self, x, u):
        dx = np.asarray(x) - self.x_ref
        du = np.asarray(u) - self.u_ref
        return np.sum((dx @ self.H) * dx, axis=-1) + np.sum((du @ self.R) * du, axis=-1)


@dataclass
class MpcCost:
    """Stage/terminal costs on predicted midpoints plus optional extras.

    ``entropy_field`` maps absolute positions to an exploration utility that
    is subtracted with weight ``exploration_weight``; the harness refreshes
    it whenever the map changes.  ``input_stage`` is the input-space stage
    cost used by terminal decrease checks (defaults to ``stage``).
    """

    stage: Callable
    terminal: Callable
    exploration_weight: float = 0.0
    entropy_field: Optional[Callable] = None
    input_stage: Optional[Callable] = None


@dataclass
class MpcConfig:
    """Controller-level knobs.

    ``warm_rho_cap`` bounds the penalty parameter carried between steps: a
    saturated penalty from a hard step would otherwise stiffen every later
    solve.
    """

    N: int
    solver: NlpConfig = field(default_factory=NlpConfig)
    eq9_literal: bool = False
    reuse_multipliers: bool = True
    warm_rho_cap: float = 1e4


@dataclass
class MpcStepOutput:
    k: int
    u: np.ndarray
    u_ff: np.ndarray
    est_box: Interval
    est_point: np.ndarray
    solution: NlpSolution
    candidate_violation: float
    trajectory: Optional[PredictionTrajectory] = None
    plan_points: Optional[np.ndarray] = None


def _corner_signs():
    return np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=bool)


def build_problem(est: EstimatorState, model: DecomposedModel, nb: NoiseBounds,
                  gains, cs: ConstraintSets, cost: MpcCost, cfg: MpcConfig,
                  kernel: Optional[Predictor] = None):
    """Assemble the tube-MPC program for the current estimator state.

    Constraint block order: state-box upper/lower for steps 1..N, applied
    input interval upper/lower for steps 0..N-1, terminal midpoint box, then
    obstacle corner clearances for steps 1..N.  Each row is normalized by
    its constraint set's width in the solver.
    """
    kernel = kernel or Predictor(model, nb, gains)
    K = kernel.K
    N, n, m = cfg.N, model.nx, model.nu
    init = init_from_estimate(est)
    z0h, z0l = init.z.hi, init.z.lo
    e0h, e0l = init.e.hi, init.e.lo
    # Input tube: imagewise bounds of the applied input over the estimate box.
    in_split = split(K) if cfg.eq9_literal else split(-K)
    ti = cs.terminal
    pos = list(cs.position_dims)
    corner_mask = _corner_signs()

    def fused(D):
        # dtype follows D so the solver can push complex-step perturbations
        # through the whole evaluation (all operations below are analytic).
        D = np.asarray(D)
        U = D.reshape(D.shape[0], N, m)
        Zh, Zl, Eh, El = kernel.rollout_arrays(z0h, z0l, e0h, e0l, U)
        zmid = 0.5 * (Zh + Zl)
        f = cost.stage(zmid[:, :N, :], U).sum(axis=1) + cost.terminal(zmid[:, N, :])
        if cost.exploration_weight and cost.entropy_field is not None:
            p = zmid[:, 1:, :][:, :, pos] + cs.position_offset
            f = f - cost.exploration_weight * cost.entropy_field(p).sum(axis=1)
        blocks = [
            (Zh[:, 1:, :] - cs.X.hi).reshape(D.shape[0], -1),
            (cs.X.lo - Zl[:, 1:, :]).reshape(D.shape[0], -1),
        ]
        if cfg.eq9_literal:
            src_h, src_l = Zh[:, :N, :], Zl[:, :N, :]
        else:
            src_h, src_l = Zh[:, :N, :] + Eh[:, :N, :], Zl[:, :N, :] + El[:, :N, :]
        u_hi = U + src_h @ in_split.plus.T - src_l @ in_split.minus.T
        u_lo = U + src_l @ in_split.plus.T - src_h @ in_split.minus.T
        blocks.append((u_hi - cs.U.hi).reshape(D.shape[0], -1))
        blocks.append((cs.U.lo - u_lo).reshape(D.shape[0], -1))
        if ti is not None:
            # Branch-selected abs keeps the derivative of |t| usable under
            # complex-step evaluation (complex modulus would not be).
            t = zmid[:, N, :] - ti.center
            blocks.append(np.where(t.real >= 0.0, t, -t) - ti.radius)
        for ob in cs.obstacles:
            ph = Zh[:, 1:, :][:, :, pos] + cs.position_offset
            pl = Zl[:, 1:, :][:, :, pos] + cs.position_offset
            corners = np.where(corner_mask[None, :, None, :],
                               ph[:, None, :, :], pl[:, None, :, :])
            d2 = np.sum((corners - ob.center) ** 2, axis=-1)
            blocks.append((ob.constraint_radius ** 2 - d2).reshape(D.shape[0], -1))
        return f, np.concatenate(blocks, axis=1)

    scale_blocks = [
        np.tile(cs.X.width, N), np.tile(cs.X.width, N),
        np.tile(cs.U.width, N), np.tile(cs.U.width, N),
    ]
    if ti is not None:
        scale_blocks.append(2.0 * ti.radius)
    for ob in cs.obstacles:
        scale_blocks.append(np.full(4 * N, ob.constraint_radius ** 2))
    scale = np.concatenate(scale_blocks)

    problem = NlpProblem(
        dim=N * m,
        objective=lambda d: float(fused(d[None, :])[0][0]),
        constraints=lambda d: fused(d[None, :])[1][0],
        eval_batch=fused,
        scale=scale,
        name="interval-mpc",
    )
    return problem, kernel, init


def shift_warm_start(prev: PredictionTrajectory, cs: ConstraintSets, K) -> np.ndarray:
    """Shift the previous feedforward sequence and append the terminal law.

    The appended element steers the candidate's final midpoint with the
    terminal controller; in feedforward space that is
    ``Kf(z_mid) + K xi_mid`` evaluated at the previous trajectory's last
    step, so the realized input at the predicted estimate equals ``Kf``'s.
    """
    K = np.asarray(K, dtype=float)
    N = prev.horizon
    z_end = prev.z_mid[..., N, :]
    xi_end = prev.xi_mid[..., N, :]
    if cs.terminal is not None:
        u_last = cs.terminal.Kf(z_end) + xi_end @ K.T
    else:
        u_last = xi_end @ K.T
    return np.concatenate([prev.u_ff[1:].ravel(), np.asarray(u_last).ravel()])


def initial_guess(est: EstimatorState, kernel: Predictor, cs: ConstraintSets,
                  N: int) -> np.ndarray:
    """Cold-start feedforward: steer midpoints with the terminal law.

    Greedy rollout applying ``clip(Kf(z_mid), U)`` as the effective input at
    each step; without terminal ingredients the effective input is zero.
    """
    m = kernel.model.nu
    zh, zl = est.box.hi.copy(), est.box.lo.copy()
    eh, el = est.point - est.box.lo, est.point - est.box.hi
    out = np.empty((N, m))
    for ell in range(N):
        z_mid = 0.5 * (zh + zl)
        xi_mid = z_mid + 0.5 * (eh + el)
        u_eff = cs.terminal.Kf(z_mid) if cs.terminal is not None else np.zeros(m)
        # Clip the feedforward into the input range left over after the
        # feedback term's interval, so the guess respects the input tube.
        bp = bound_product(-kernel.K, Interval(zl + el, zh + eh))
        lo = np.minimum(cs.U.lo - bp.lo, cs.U.hi - bp.hi)
        hi = np.maximum(cs.U.lo - bp.lo, cs.U.hi - bp.hi)
        u_ff = np.clip(u_eff + xi_mid @ kernel.K.T, lo, hi)
        out[ell] = u_ff
        zh, zl, eh, el = kernel.step_arrays(zh, zl, eh, el, u_ff)
    return out.ravel()


class _ControllerBase:
    """Measurement buffering and solve bookkeeping shared by controllers."""

    def __init__(self, model: DecomposedModel, nb: NoiseBounds, gains,
                 cs: ConstraintSets, cost: MpcCost, cfg: MpcConfig,
                 init_box: Interval, init_point=None):
        self.model = model
        self.nb = nb
        self.cs = cs
        self.cost = cost
        self.cfg = cfg
        L = np.asarray(gains.L if hasattr(gains, "L") else gains[0], dtype=float)
        K = np.asarray(gains.K if hasattr(gains, "K") else gains[1], dtype=float)
        self.L, self.K = L, K
        self.estimator = Estimator(model, nb, init_box, L, K, point=init_point)
        self.k = 0
        self._pending = None
        self._lam = None
        self._rho = None

    def step(self, y) -> MpcStepOutput:
        y = np.asarray(y, dtype=float)
        if self._pending is not None:
            u_prev, y_prev = self._pending
            self.estimator.step(u_prev, y_prev)
        self._refine()
        est = self.estimator.state
        problem, aux = self._build(est)
        warm = self._warm_start(est, aux)
        sol = minimize(problem, warm, self.cfg.solver,
                       warm_multipliers=self._lam if self.cfg.reuse_multipliers else None,
                       warm_rho=min(self._rho, self.cfg.warm_rho_cap) if self._rho else None)
        if sol.max_violation > self.cfg.solver.feas_tol:
            raise ControllerInfeasible(
                f"step {self.k}: scaled violation {sol.max_violation:.3e} "
                f"(status {sol.status})")
        out = self._finish(est, sol, aux)
        if self.cfg.reuse_multipliers:
            self._lam, self._rho = sol.multipliers, sol.rho
        self._pending = (out.u, y)
        self.k += 1
        return out

    def _refine(self):
        pass


class IrofController(_ControllerBase):
    """Interval observer/predictor MPC with feedback-parameterized inputs."""

    def __init__(self, model, nb, gains, cs, cost, cfg, init_box, init_point=None):
        super().__init__(model, nb, gains, cs, cost, cfg, init_box, init_point)
        self.kernel = Predictor(model, nb, (self.L, self.K))
        self._one_step_box = None
        self._prev_traj = None

    def _refine(self):
        if self._one_step_box is not None:
            self.estimator.refine(self._one_step_box)

    def _build(self, est):
        problem, kernel, init = build_problem(
            est, self.model, self.nb, (self.L, self.K), self.cs, self.cost,
            self.cfg, kernel=self.kernel)
        return problem, init

    def _warm_start(self, est, init):
        if self._prev_traj is None:
            return initial_guess(est, self.kernel, self.cs, self.cfg.N)
        return shift_warm_start(self._prev_traj, self.cs, self.K)

    def _finish(self, est, sol, init):
        u_ff = sol.point.reshape(self.cfg.N, self.model.nu)
        traj = self.kernel.rollout(init, u_ff)
        u = feedback_input(est, u_ff[0])
        self._one_step_box = traj.z_box(1)
        self._prev_traj = traj
        return MpcStepOutput(k=self.k, u=u, u_ff=u_ff, est_box=est.box,
                             est_point=est.point.copy(), solution=sol,
                             candidate_violation=sol.warm_violation,
                             trajectory=traj)


class NominalRollout:
    """Point predictions ``z+ = f(z) + B (u_ff - K z) + w_mid``."""

    def __init__(self, model: DecomposedModel, nb: NoiseBounds, K):
        self.model = model
        self.K = np.asarray(K, dtype=float)
        self.w_hat = nb.w_hat

    def rollout_arrays(self, z0, u_seq):
        u_seq = np.asarray(u_seq)
        z0 = np.asarray(z0)
        N = u_seq.shape[-2]
        batch = np.broadcast_shapes(u_seq.shape[:-2], z0.shape[:-1])
        dtype = np.result_type(z0.dtype, u_seq.dtype, float)
        Z = np.empty(batch + (N + 1, self.model.nx), dtype=dtype)
        Z[..., 0, :] = z0
        z = np.broadcast_to(z0, batch + (self.model.nx,))
        for ell in range(N):
            u_eff = u_seq[..., ell, :] - z @ self.K.T
            z = self.model.dynamics(z, u_eff) + self.w_hat
            Z[..., ell + 1, :] = z
        return Z


class NominalController(_ControllerBase):
    """Point-prediction MPC on the observer estimate (no tubes)."""

    def __init__(self, model, nb, gains, cs, cost, cfg, init_box, init_point=None):
        super().__init__(model, nb, gains, cs, cost, cfg, init_box, init_point)
        self.kernel = NominalRollout(model, nb, self.K)
        self._prev_plan = None

    def _build(self, est):
        N, n, m = self.cfg.N, self.model.nx, self.model.nu
        cs, cost, K = self.cs, self.cost, self.K
        z0 = est.point
        pos = list(cs.position_dims)
        ti = cs.terminal

        def fused(D):
            D = np.asarray(D)
            U = D.reshape(D.shape[0], N, m)
            Z = self.kernel.rollout_arrays(z0, U)
            u_eff = U - Z[:, :N, :] @ K.T
            f = cost.stage(Z[:, :N, :], U).sum(axis=1) + cost.terminal(Z[:, N, :])
            if cost.exploration_weight and cost.entropy_field is not None:
                p = Z[:, 1:, :][:, :, pos] + cs.position_offset
                f = f - cost.exploration_weight * cost.entropy_field(p).sum(axis=1)
            blocks = [
                (Z[:, 1:, :] - cs.X.hi).reshape(D.shape[0], -1),
                (cs.X.lo - Z[:, 1:, :]).reshape(D.shape[0], -1),
                (u_eff - cs.U.hi).reshape(D.shape[0], -1),
                (cs.U.lo - u_eff).reshape(D.shape[0], -1),
            ]
            if ti is not None:
                t = Z[:, N, :] - ti.center
                blocks.append(np.where(t.real >= 0.0, t, -t) - ti.radius)
            for ob in cs.obstacles:
                p = Z[:, 1:, :][:, :, pos] + cs.position_offset
                d2 = np.sum((p - ob.center) ** 2, axis=-1)
                blocks.append((ob.constraint_radius ** 2 - d2).reshape(D.shape[0], -1))
            return f, np.concatenate(blocks, axis=1)

        scale_blocks = [np.tile(cs.X.width, N), np.tile(cs.X.width, N),
                        np.tile(cs.U.width, N), np.tile(cs.U.width, N)]
        if ti is not None:
            scale_blocks.append(2.0 * ti.radius)
        for ob in cs.obstacles:
            scale_blocks.append(np.full(N, ob.constraint_radius ** 2))
        problem = NlpProblem(
            dim=N * m,
            objective=lambda d: float(fused(d[None, :])[0][0]),
            constraints=lambda d: fused(d[None, :])[1][0],
            eval_batch=fused,
            scale=np.concatenate(scale_blocks),
            name="nominal-mpc",
        )
        return problem, None

    def _warm_start(self, est, aux):
        N, m = self.cfg.N, self.model.nu
        if self._prev_plan is None:
            z = est.point.copy()
            out = np.empty((N, m))
            for ell in range(N):
                if self.cs.terminal is not None:
                    u_eff = np.clip(self.cs.terminal.Kf(z), self.cs.U.lo, self.cs.U.hi)
                else:
                    u_eff = np.zeros(m)
                out[ell] = u_eff + z @ self.K.T
                z = self.model.dynamics(z, u_eff) + self.nb.w_hat
            return out.ravel()
        prev_u, prev_Z = self._prev_plan
        z_end = prev_Z[-1]
        if self.cs.terminal is not None:
            u_last = self.cs.terminal.Kf(z_end) + z_end @ self.K.T
        else:
            u_last = z_end @ self.K.T
        return np.concatenate([prev_u[1:].ravel(), np.asarray(u_last).ravel()])

    def _finish(self, est, sol, aux):
        u_ff = sol.point.reshape(self.cfg.N, self.model.nu)
        Z = self.kernel.rollout_arrays(est.point, u_ff)
        u = feedback_input(est, u_ff[0])
        self._prev_plan = (u_ff, Z)
        return MpcStepOutput(k=self.k, u=u, u_ff=u_ff, est_box=est.box,
                             est_point=est.point.copy(), solution=sol,
                             candidate_violation=sol.warm_violation,
                             plan_points=Z)


def validate_terminal_sets(cs: ConstraintSets, model: DecomposedModel,
                           nb: NoiseBounds, width_bound: Optional[WidthBound],
                           grid: int = 5, tol: float = 1e-9):
    """Check the terminal set assumptions by construction-time sampling.

    Verifies on a grid over the terminal box: the terminal law lands in the
    input set, the noise-midpoint successor stays in the terminal box, and,
    when a width bound is supplied, that the box inflated by half the steady
    width stays inside the state constraints.  Pass ``width_bound=None`` when
    per-step state rows already confine the tubes (finite-horizon widths
    below the steady bound).  Raises MpcError on the worst offending sample.
    """
    ti = cs.terminal
    if ti is None:
        return
    box = ti.box
    axes = [np.linspace(box.lo[i], box.hi[i], grid) for i in range(model.nx)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m_.ravel() for m_ in mesh], axis=-1)
    u = ti.Kf(pts)
    if np.any(u > cs.U.hi + tol) or np.any(u < cs.U.lo - tol):
        worst = float(np.max(np.maximum(u - cs.U.hi, cs.U.lo - u)))
        raise MpcError(f"terminal law leaves the input set by {worst:.3e}")
    succ = model.dynamics(pts, u) + nb.w_hat
    if np.any(succ > box.hi + tol) or np.any(succ < box.lo - tol):
        worst = float(np.max(np.maximum(succ - box.hi, box.lo - succ)))
        raise MpcError(f"terminal box is not invariant: exits by {worst:.3e}")
    if width_bound is not None:
        half = 0.5 * width_bound.delta_z
        if np.any(box.hi + half > cs.X.hi + tol) or np.any(box.lo - half < cs.X.lo - tol):
            raise MpcError("terminal box plus half steady width leaves the state set")


def terminal_decrease_check(model: DecomposedModel, nb: NoiseBounds,
                            cs: ConstraintSets, cost: MpcCost,
                            samples: int = 100):
    """Evaluate the terminal decrease margin on a grid over the terminal box.

    Returns ``(worst_margin, margins, points)`` where each margin is
    ``Vf(successor) - Vf(x) + stage(x, Kf(x))`` with the input-space stage
    cost; nonpositive margins certify the decrease condition at the samples.
    """
    ti = cs.terminal
    if ti is None:
        raise MpcError("no terminal ingredients configured")
    n = model.nx
    per_dim = max(2, int(round(samples ** (1.0 / n))))
    box = ti.box
    axes = [np.linspace(box.lo[i], box.hi[i], per_dim) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m_.ravel() for m_ in mesh], axis=-1)
    u = ti.Kf(pts)
    succ = model.dynamics(pts, u) + nb.w_hat
    stage = cost.input_stage or cost.stage
    margins = ti.Vf(succ) - ti.Vf(pts) + stage(pts, u)
    return float(np.max(margins)), margins, pts


def design_terminal_linear(model: DecomposedModel, nb: NoiseBounds, gains,
                           X: Interval, U: Interval, x_r, H, R,
                           gamma: float = 1.001, reserve_frac: float = 0.04,
                           fit: float = 0.9) -> TerminalIngredients:
    """Terminal ingredients for linear dynamics tracking a setpoint.

    Chooses the admissible equilibrium closest to ``x_r`` in the ``H``
    metric, leaving room for the steady tube width and for the terminal box
    itself; the box half-widths follow the direction
    ``v = (I - |A - B K_lqr|)^-1 1`` so that box invariance holds with a
    uniform absolute margin.
    """
    if model.mu is not None:
        raise MpcError("terminal design requires linear dynamics")
    L = np.asarray(gains.L if hasattr(gains, "L") else gains[0], dtype=float)
    K = np.asarray(gains.K if hasattr(gains, "K") else gains[1], dtype=float)
    A, B = model.A, model.B
    n, m = model.nx, model.nu
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    x_r = np.asarray(x_r, dtype=float)

    wb = steady_width(model, nb, (L, K))
    half_z = 0.5 * wb.delta_z
    headroom = split(K).absolute @ (0.5 * (wb.delta_z + wb.delta_e))
    reserve_x = reserve_frac * 0.5 * X.width
    reserve_u = reserve_frac * 0.5 * U.width

    G = np.linalg.solve(np.eye(n) - A, B)
    drift = np.linalg.solve(np.eye(n) - A, nb.w_hat)
    x_lo = X.lo + half_z + reserve_x
    x_hi = X.hi - half_z - reserve_x
    u_lo = U.lo + headroom + reserve_u
    u_hi = U.hi - headroom - reserve_u
    if np.any(x_lo > x_hi) or np.any(u_lo > u_hi):
        raise MpcError("no room left for an admissible equilibrium")

    if m == 1:
        g = G[:, 0]
        num = float(g @ H @ (x_r - drift))
        den = float(g @ H @ g)
        u_star = num / den if den > 0 else 0.0
        lo, hi = float(u_lo[0]), float(u_hi[0])
        for i in range(n):
            if g[i] > 0:
                lo = max(lo, (x_lo[i] - drift[i]) / g[i])
                hi = min(hi, (x_hi[i] - drift[i]) / g[i])
            elif g[i] < 0:
                lo = max(lo, (x_hi[i] - drift[i]) / g[i])
                hi = min(hi, (x_lo[i] - drift[i]) / g[i])
            elif not (x_lo[i] <= drift[i] <= x_hi[i]):
                raise MpcError("equilibrium family misses the state box")
        if lo > hi:
            raise MpcError("admissible equilibrium interval is empty")
        u_eq = np.array([min(max(u_star, lo), hi)])
    else:
        u_ls, *_ = np.linalg.lstsq(G, x_r - drift, rcond=None)
        u_eq = np.clip(u_ls, u_lo, u_hi)
        x_chk = G @ u_eq + drift
        if np.any(x_chk > x_hi + 1e-12) or np.any(x_chk < x_lo - 1e-12):
            raise MpcError("multi-input equilibrium selection left the state "
                           "box; supply terminal ingredients explicitly")
    x_eq = G @ u_eq + drift

    P = scipy.linalg.solve_discrete_are(A, B, H, R)
    K_lqr = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    A_cl = A - B @ K_lqr
    M = split(A_cl).absolute
    if spectral_radius(M) >= 1.0:
        raise MpcError("terminal closed loop lacks a box-invariant direction")
    v = np.linalg.solve(np.eye(n) - M, np.ones(n))

    slack_hi = X.hi - half_z - x_eq
    slack_lo = x_eq - X.lo - half_z
    s = np.inf
    for i in range(n):
        s = min(s, fit * min(slack_hi[i], slack_lo[i]) / v[i])
    ku = split(K_lqr).absolute @ v
    for j in range(m):
        slack_u = min(U.hi[j] - headroom[j] - u_eq[j],
                      u_eq[j] - U.lo[j] - headroom[j])
        if ku[j] > 0:
            s = min(s, fit * slack_u / ku[j])
    if not np.isfinite(s) or s <= 0:
        raise MpcError("terminal box collapsed; relax margins or weights")
    return TerminalIngredients(center=x_eq, radius=s * v, P=P, gamma=gamma,
                               K_lqr=K_lqr, u_eq=u_eq)


def design_terminal_regulation(model: DecomposedModel, nb: NoiseBounds,
                               H, R, radius, A_lin=None, K_f=None,
                               gamma: float = 1.001) -> TerminalIngredients:
    """Terminal ingredients for regulation to the origin of a nonlinear model.

    Uses the supplied linearization ``A_lin`` (defaults to the model's linear
    part).  With ``K_f=None`` the law and cost come from the Riccati pair
    ``(H, R)``; an explicit ``K_f`` fixes the law (useful when the Riccati
    law saturates the inputs over the box) and the cost matrix solves the
    Lyapunov equation for its closed loop.  The box radius is chosen by the
    caller and should be validated with :func:`validate_terminal_sets`.
    """
    A = model.A if A_lin is None else np.asarray(A_lin, dtype=float)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if K_f is None:
        P = scipy.linalg.solve_discrete_are(A, model.B, H, R)
        K_lqr = np.linalg.solve(R + model.B.T @ P @ model.B, model.B.T @ P @ A)
    else:
        K_lqr = np.asarray(K_f, dtype=float)
        A_cl = A - model.B @ K_lqr
        if np.max(np.abs(np.linalg.eigvals(A_cl))) >= 1.0:
            raise MpcError("supplied terminal law does not stabilize the "
                           "linearization")
        P = scipy.linalg.solve_discrete_lyapunov(
            A_cl.T, H + K_lqr.T @ R @ K_lqr)
    return TerminalIngredients(center=np.zeros(model.nx),
                               radius=np.asarray(radius, dtype=float),
                               P=P, gamma=gamma, K_lqr=K_lqr,
                               u_eq=np.zeros(model.nu))
