"""Interval and point state observers for bounded-noise output feedback.

The interval observer propagates a box ``[x_lo, x_hi]`` guaranteed to contain
the true state whenever the initial box does and the noise stays inside its
bounds:

    x_hi+ = (A-LC)_plus x_hi - (A-LC)_minus x_lo + B u + L y
            + w_hi - (Lv)_lo + mu_d(x_hi, x_lo)
    x_lo+ = (A-LC)_plus x_lo - (A-LC)_minus x_hi + B u + L y
            + w_lo - (Lv)_hi + mu_d(x_lo, x_hi)

where ``(Lv)`` is the tight interval image of the measurement noise box under
L.  The companion point observer

    xhat+ = (A-LC) xhat + mu(xhat) + B u + L y + w_mid - (Lv)_mid

is the plain Luenberger estimate recentred by the noise midpoints; for linear
dynamics initialized at the box midpoint it stays the exact midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .decomposition import DecomposedModel, decomp_eval
from .intervals import Interval, IntervalError, bound_product, split


class EstimationError(RuntimeError):
    """Interval update produced inconsistent bounds (check gain and noise)."""


class NoiseBounds:
    """Noise boxes and their images under an observer gain L.

    Attributes
    ----------
    w : Interval, process noise box
    v : Interval, measurement noise box
    w_hat : midpoint of w
    v_L : Interval, tight bounds of ``L v`` over v
    v_L_hat : midpoint of v_L
    """

    __slots__ = ("w", "v", "L", "w_hat", "v_L", "v_L_hat")

    def __init__(self, w: Interval, v: Interval, L):
        self.w = w
        self.v = v
        self.L = np.asarray(L, dtype=float)
        self.w_hat = w.midpoint
        self.v_L = bound_product(self.L, v)
        self.v_L_hat = self.v_L.midpoint

    def scaled(self, alpha: float, beta: float) -> "NoiseBounds":
        """New bounds with w scaled by alpha and v by beta (about midpoints)."""
        return NoiseBounds(self.w.scale(alpha), self.v.scale(beta), self.L)


@dataclass
class EstimatorState:
    """Single-owner mutable estimator state: box, point estimate, gains."""

    box: Interval
    point: np.ndarray
    L: np.ndarray
    K: np.ndarray


def make_estimator_state(box: Interval, L, K, point=None) -> EstimatorState:
    point = box.midpoint if point is None else np.asarray(point, dtype=float)
    return EstimatorState(box=box, point=point,
                          L=np.asarray(L, dtype=float),
                          K=np.asarray(K, dtype=float))


def observer_step(state: EstimatorState, model: DecomposedModel,
                  nb: NoiseBounds, u, y) -> Interval:
    """One interval-observer update; returns the successor box."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    s = split(model.A - state.L @ model.C)
    common = u @ model.B.T + y @ state.L.T
    box = state.box
    hi = (box.hi @ s.plus.T - box.lo @ s.minus.T + common
          + nb.w.hi - nb.v_L.lo + decomp_eval(model, box.hi, box.lo))
    lo = (box.lo @ s.plus.T - box.hi @ s.minus.T + common
          + nb.w.lo - nb.v_L.hi + decomp_eval(model, box.lo, box.hi))
    try:
        return Interval(lo, hi)
    except IntervalError as exc:
        raise EstimationError(f"observer bounds crossed: {exc}") from exc


def point_observer_step(state: EstimatorState, model: DecomposedModel,
                        nb: NoiseBounds, u, y) -> np.ndarray:
    """One point-observer update; returns the successor estimate."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    xhat = state.point
    innovation = y - xhat @ model.C.T
    return (xhat @ model.A.T + model.mu_value(xhat) + u @ model.B.T
            + innovation @ state.L.T + nb.w_hat - nb.v_L_hat)


def feedback_input(state: EstimatorState, u_ff) -> np.ndarray:
    """Applied input ``u = -K xhat + u_ff``."""
    return np.asarray(u_ff, dtype=float) - state.point @ state.K.T


def refine_with_prediction(state: EstimatorState, pred_box: Interval) -> EstimatorState:
    """Intersect the observer box with a one-step-ahead predicted box.

    Both boxes contain the true state, so the intersection does too and is
    never wider than either input.  An empty intersection means a containment
    guarantee was already broken upstream.
    """
    try:
        refined = state.box.intersect(pred_box)
    except IntervalError as exc:
        raise EstimationError(f"refinement produced empty box: {exc}") from exc
    return replace(state, box=refined)


def observer_width_bound(model: DecomposedModel, nb: NoiseBounds, L,
                         spectral_radius_fn=None) -> np.ndarray:
    """Steady upper bound on observer box widths.

    Solves ``(I - (|A-LC| + F_bar)) d = delta_w + delta_vL``; requires the
    width iteration matrix to be Schur stable.
    """
    from .gains import spectral_radius

    rho_fn = spectral_radius_fn or spectral_radius
    L = np.asarray(L, dtype=float)
    M = split(model.A - L @ model.C).absolute + model.F_bar
    rho = rho_fn(M)
    if rho >= 1.0:
        raise EstimationError(
            f"observer width iteration is unstable (spectral radius {rho:.6f})")
    rhs = nb.w.width + nb.v_L.width
    return np.linalg.solve(np.eye(model.nx) - M, rhs)


class Estimator:
    """Stateful stepper bundling the interval and point observers."""

    def __init__(self, model: DecomposedModel, nb: NoiseBounds,
                 init_box: Interval, L, K, point=None):
        self.model = model
        self.nb = nb
        self.state = make_estimator_state(init_box, L, K, point=point)
        self._split = split(model.A - self.state.L @ model.C)

    def step(self, u, y) -> EstimatorState:
        """Advance both observers with the input/measurement pair (u, y)."""
        new_box = observer_step(self.state, self.model, self.nb, u, y)
        new_point = point_observer_step(self.state, self.model, self.nb, u, y)
        self.state = replace(self.state, box=new_box, point=new_point)
        return self.state

    def refine(self, pred_box: Interval) -> EstimatorState:
        self.state = refine_with_prediction(self.state, pred_box)
        return self.state
