"""Closed-loop interval predictor over an MPC horizon.

The predictor propagates two coupled boxes: ``[z_lo, z_hi]`` containing the
true state under the feedback parameterization ``u = -K xhat + u_ff``, and
``[e_lo, e_hi]`` containing the estimation error ``e = xhat - x`` of the
point observer running in the loop.  Their sum ``xi = z + e`` then bounds
``xhat`` itself, which is what the input constraint needs.

One step, with ``F = A - B K``, ``G = -B K`` and ``H = A - L C``:

    z_hi+ = F_p z_hi - F_m z_lo + G_p e_hi - G_m e_lo + B u_ff + w_hi
            + mu_d(z_hi, z_lo)
    z_lo+ = F_p z_lo - F_m z_hi + G_p e_lo - G_m e_hi + B u_ff + w_lo
            + mu_d(z_lo, z_hi)
    e_hi+ = H_p e_hi - H_m e_lo + (Lv)_hi - (Lv)_mid + w_mid - w_lo
            + mu_d(xi_hi, xi_lo) - mu_d(z_lo, z_hi)
    e_lo+ = H_p e_lo - H_m e_hi + (Lv)_lo - (Lv)_mid + w_mid - w_hi
            + mu_d(xi_lo, xi_hi) - mu_d(z_hi, z_lo)

All operations broadcast over leading axes, so a batch of feedforward
sequences rolls out in one vectorized pass (the solver prices all of its
gradient perturbations this way).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import DecomposedModel, decomp_eval_pairs
from .estimation import EstimatorState, NoiseBounds
from .intervals import Interval, split


class PredictionError(RuntimeError):
    """Predictor setup is inconsistent (e.g., unstable width iteration)."""


def _gain_pair(gains):
    if hasattr(gains, "L") and hasattr(gains, "K"):
        return np.asarray(gains.L, dtype=float), np.asarray(gains.K, dtype=float)
    L, K = gains
    return np.asarray(L, dtype=float), np.asarray(K, dtype=float)


@dataclass
class PredictorState:
    """Pair of boxes: state tube ``z`` and estimation-error tube ``e``."""

    z: Interval
    e: Interval

    @property
    def xi(self) -> Interval:
        """Box containing the point estimate (componentwise sum z + e)."""
        return self.z.sum(self.e)


def init_from_estimate(est: EstimatorState) -> PredictorState:
    """Initial predictor state from the current estimator state.

    ``z`` starts at the (refined) observer box; ``e = xhat - x`` over that
    box gives ``e in [xhat - x_hi, xhat - x_lo]``.
    """
    z = est.box
    e = Interval(est.point - est.box.hi, est.point - est.box.lo)
    return PredictorState(z=z, e=e)


class PredictionTrajectory:
    """Rollout arrays of shape (..., N+1, n) plus the feedforward sequence."""

    def __init__(self, z_hi, z_lo, e_hi, e_lo, u_ff):
        self.z_hi = z_hi
        self.z_lo = z_lo
        self.e_hi = e_hi
        self.e_lo = e_lo
        self.u_ff = u_ff

    @property
    def horizon(self) -> int:
        return self.z_hi.shape[-2] - 1

    def state(self, ell: int) -> PredictorState:
        return PredictorState(
            z=Interval(self.z_lo[..., ell, :], self.z_hi[..., ell, :]),
            e=Interval(self.e_lo[..., ell, :], self.e_hi[..., ell, :]))

    def z_box(self, ell: int) -> Interval:
        return Interval(self.z_lo[..., ell, :], self.z_hi[..., ell, :])

    @property
    def z_mid(self) -> np.ndarray:
        return 0.5 * (self.z_hi + self.z_lo)

    @property
    def xi_mid(self) -> np.ndarray:
        return 0.5 * (self.z_hi + self.z_lo + self.e_hi + self.e_lo)


class Predictor:
    """Kernel with precomputed gain splits for repeated rollouts."""

    def __init__(self, model: DecomposedModel, nb: NoiseBounds, gains):
        L, K = _gain_pair(gains)
        self.model = model
        self.nb = nb
        self.L = L
        self.K = K
        self._F = split(model.A - model.B @ K)
        self._G = split(-model.B @ K)
        self._H = split(model.A - L @ model.C)
        self._az_hi = nb.w.hi
        self._az_lo = nb.w.lo
        self._ae_hi = nb.v_L.hi - nb.v_L_hat + nb.w_hat - nb.w.lo
        self._ae_lo = nb.v_L.lo - nb.v_L_hat + nb.w_hat - nb.w.hi
        # One-matmul form of the step: the stacked vector [zh, zl, eh, el]
        # is propagated by a single 4n x 4n matrix plus affine terms, which
        # keeps the rollout loop out of Python-level small-array arithmetic.
        n = model.nx
        F, G, H = self._F, self._G, self._H
        M = np.zeros((4 * n, 4 * n))
        M[0:n, 0:n] = F.plus
        M[0:n, n:2 * n] = -F.minus
        M[0:n, 2 * n:3 * n] = G.plus
        M[0:n, 3 * n:] = -G.minus
        M[n:2 * n, 0:n] = -F.minus
        M[n:2 * n, n:2 * n] = F.plus
        M[n:2 * n, 2 * n:3 * n] = -G.minus
        M[n:2 * n, 3 * n:] = G.plus
        M[2 * n:3 * n, 2 * n:3 * n] = H.plus
        M[2 * n:3 * n, 3 * n:] = -H.minus
        M[3 * n:, 2 * n:3 * n] = -H.minus
        M[3 * n:, 3 * n:] = H.plus
        self._MT = M.T.copy()
        self._BT = np.vstack([model.B, model.B,
                              np.zeros_like(model.B), np.zeros_like(model.B)]).T.copy()
        self._affine = np.concatenate([self._az_hi, self._az_lo,
                                       self._ae_hi, self._ae_lo])

    def _step_stacked(self, s, u_ff):
        m = self.model
        n = m.nx
        out = s @ self._MT + np.asarray(u_ff) @ self._BT + self._affine
        if m.mu is not None:
            zh, zl = s[..., 0:n], s[..., n:2 * n]
            xih = zh + s[..., 2 * n:3 * n]
            xil = zl + s[..., 3 * n:]
            mzu, mzl, mxu, mxl = decomp_eval_pairs(
                m, ((zh, zl), (zl, zh), (xih, xil), (xil, xih)))
            out[..., 0:n] += mzu
            out[..., n:2 * n] += mzl
            out[..., 2 * n:3 * n] += mxu - mzl
            out[..., 3 * n:] += mxl - mzu
        return out

    def step_arrays(self, zh, zl, eh, el, u_ff):
        zh, zl, eh, el = np.broadcast_arrays(
            *(np.asarray(a) for a in (zh, zl, eh, el)))
        s = np.concatenate([zh, zl, eh, el], axis=-1)
        out = self._step_stacked(s, u_ff)
        n = self.model.nx
        return (out[..., 0:n], out[..., n:2 * n],
                out[..., 2 * n:3 * n], out[..., 3 * n:])

    def step(self, state: PredictorState, u_ff) -> PredictorState:
        zh, zl, eh, el = self.step_arrays(
            state.z.hi, state.z.lo, state.e.hi, state.e.lo, u_ff)
        return PredictorState(z=Interval(zl, zh), e=Interval(el, eh))

    def rollout_arrays(self, zh0, zl0, eh0, el0, u_seq):
        """Vectorized rollout; ``u_seq`` has shape (..., N, m).

        The dtype follows the inputs, so complex-step differentiation can
        push perturbed inputs through unchanged.
        """
        u_seq = np.asarray(u_seq)
        zh0, zl0, eh0, el0 = np.broadcast_arrays(
            *(np.asarray(a) for a in (zh0, zl0, eh0, el0)))
        N = u_seq.shape[-2]
        n = self.model.nx
        batch = np.broadcast_shapes(u_seq.shape[:-2], zh0.shape[:-1])
        dtype = np.result_type(zh0.dtype, u_seq.dtype, float)
        S = np.empty(batch + (N + 1, 4 * n), dtype=dtype)
        s = np.concatenate([zh0, zl0, eh0, el0], axis=-1)
        S[..., 0, :] = s
        s = np.broadcast_to(s, batch + (4 * n,))
        for ell in range(N):
            s = self._step_stacked(s, u_seq[..., ell, :])
            S[..., ell + 1, :] = s
        return (S[..., 0:n], S[..., n:2 * n],
                S[..., 2 * n:3 * n], S[..., 3 * n:])

    def rollout(self, init: PredictorState, u_seq) -> PredictionTrajectory:
        u_seq = np.asarray(u_seq, dtype=float)
        Zh, Zl, Eh, El = self.rollout_arrays(
            init.z.hi, init.z.lo, init.e.hi, init.e.lo, u_seq)
        return PredictionTrajectory(Zh, Zl, Eh, El, u_seq)


def predictor_step(state: PredictorState, model: DecomposedModel,
                   nb: NoiseBounds, gains, u_ff) -> PredictorState:
    """Single functional predictor step (builds a throwaway kernel)."""
    return Predictor(model, nb, gains).step(state, u_ff)


def rollout(init: PredictorState, model: DecomposedModel, nb: NoiseBounds,
            gains, u_seq) -> PredictionTrajectory:
    """Functional N-step rollout of the closed-loop interval predictor."""
    return Predictor(model, nb, gains).rollout(init, u_seq)


@dataclass(frozen=True)
class WidthBound:
    """Steady bound on stacked widths ``[delta_z; delta_e]``.

    ``delta_star`` solves ``(I - A_tilde) d = b`` for the comparison system

        A_tilde = [[|A-BK| + F_bar, |BK|], [0, |A-LC| + F_bar]]
        b       = [delta_w, |L| delta_v + delta_w]

    The zero lower-left block is exact for linear dynamics; with a nonzero
    remainder the error rows also pick up remainder-range terms from the
    state tube, so the bound is certificated only when ``F_bar = 0``.
    """

    A_tilde: np.ndarray
    b: np.ndarray
    delta_star: np.ndarray
    rho: float

    @property
    def delta_z(self) -> np.ndarray:
        n = self.delta_star.shape[0] // 2
        return self.delta_star[:n]

    @property
    def delta_e(self) -> np.ndarray:
        n = self.delta_star.shape[0] // 2
        return self.delta_star[n:]


def steady_width(model: DecomposedModel, nb: NoiseBounds, gains) -> WidthBound:
    """Solve the width comparison system for its fixed point."""
    from .gains import spectral_radius

    L, K = _gain_pair(gains)
    n = model.nx
    A11 = split(model.A - model.B @ K).absolute + model.F_bar
    A12 = split(model.B @ K).absolute
    A22 = split(model.A - L @ model.C).absolute + model.F_bar
    A_tilde = np.block([[A11, A12], [np.zeros((n, n)), A22]])
    b = np.concatenate([nb.w.width, split(L).absolute @ nb.v.width + nb.w.width])
    # Block triangular: the radius is the max of the diagonal blocks'.
    rho = max(spectral_radius(A11), spectral_radius(A22))
    if rho >= 1.0:
        raise PredictionError(
            f"width comparison system is unstable (spectral radius {rho:.6f})")
    try:
        delta_star = np.linalg.solve(np.eye(2 * n) - A_tilde, b)
    except np.linalg.LinAlgError as exc:
        # Power iteration can report a radius marginally below an exact
        # unit eigenvalue; treat the singular solve as the same failure.
        raise PredictionError(
            "width comparison system is unstable (I - A_tilde singular)") from exc
    return WidthBound(A_tilde=A_tilde, b=b, delta_star=delta_star, rho=rho)
