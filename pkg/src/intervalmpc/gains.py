"""Observer/controller gain search with certified width-contraction radii.

A gain pair (L, K) is certified when both nonnegative width-iteration
matrices

    M_obs = |A - L C| + F_bar        M_ctl = |A - B K| + F_bar

are Schur stable; their spectral radii drive the steady-state sizes of the
observer and predictor boxes.  Candidates come from Riccati designs (LQR for
K, steady-state Kalman for L) over configurable weight scalings; the winner
minimizes max(rho_obs, rho_ctl) with deterministic tie-breaking toward
smaller gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .decomposition import DecomposedModel
from .intervals import split


class GainError(RuntimeError):
    """No candidate gain achieves a certified contraction."""


def spectral_radius(M, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Spectral radius of a nonnegative matrix.

    Power iteration with a positive start vector; falls back to the dense
    eigensolver when the iteration has not settled (e.g., imprimitive or
    reducible matrices with tied moduli).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        norm = float(np.max(np.abs(w)))
        if norm == 0.0:
            return 0.0
        if abs(norm - lam) <= tol * max(1.0, norm):
            return norm
        lam = norm
        v = w / norm
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass(frozen=True)
class GainCertificate:
    """Verified gains and their width-contraction radii (both < 1)."""

    L: np.ndarray
    K: np.ndarray
    rho_obs: float
    rho_ctl: float

    @property
    def rho_max(self) -> float:
        return max(self.rho_obs, self.rho_ctl)


def contraction_radii(model: DecomposedModel, L, K) -> tuple[float, float]:
    L = np.asarray(L, dtype=float)
    K = np.asarray(K, dtype=float)
    M_obs = split(model.A - L @ model.C).absolute + model.F_bar
    M_ctl = split(model.A - model.B @ K).absolute + model.F_bar
    return spectral_radius(M_obs), spectral_radius(M_ctl)


def verify(model: DecomposedModel, L, K) -> GainCertificate:
    """Certify a gain pair; raises GainError when either radius is >= 1."""
    rho_obs, rho_ctl = contraction_radii(model, L, K)
    problems = []
    if rho_obs >= 1.0:
        problems.append(f"observer radius {rho_obs:.6f} >= 1")
    if rho_ctl >= 1.0:
        problems.append(f"controller radius {rho_ctl:.6f} >= 1")
    if problems:
        raise GainError("; ".join(problems))
    return GainCertificate(L=np.asarray(L, dtype=float),
                           K=np.asarray(K, dtype=float),
                           rho_obs=rho_obs, rho_ctl=rho_ctl)


def dlqr(A, B, Q, R) -> np.ndarray:
    """Infinite-horizon discrete LQR gain ``u = -K x``."""
    P = scipy.linalg.solve_discrete_are(A, B, Q, R)
    return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def kalman_gain(A, C, Q, R) -> np.ndarray:
    """Steady-state one-step-ahead Kalman gain ``L = A P C' (C P C' + R)^-1``."""
    P = scipy.linalg.solve_discrete_are(A.T, C.T, Q, R)
    return np.linalg.solve((C @ P @ C.T + R).T, (C @ P @ A.T)).T


@dataclass
class GainSearchConfig:
    """Candidate families for :func:`synthesize`.

    ``q_scales``/``r_scales`` multiply the base weights on a grid; fixing a
    gain restricts that side of the search to the given matrix.
    """

    Qc: Optional[np.ndarray] = None
    Rc: Optional[np.ndarray] = None
    Qo: Optional[np.ndarray] = None
    Ro: Optional[np.ndarray] = None
    q_scales: Sequence[float] = field(default_factory=lambda: (0.1, 1.0, 10.0))
    r_scales: Sequence[float] = field(default_factory=lambda: (0.1, 1.0, 10.0))
    fixed_L: Optional[np.ndarray] = None
    fixed_K: Optional[np.ndarray] = None
    include_zero_K: bool = True


def _pick(candidates, radius_fn):
    # Deterministic: minimize (radius, gain magnitude, insertion index).
    best = None
    for idx, cand in enumerate(candidates):
        rho = radius_fn(cand)
        key = (round(rho, 9), float(np.linalg.norm(cand)), idx)
        if rho < 1.0 and (best is None or key < best[0]):
            best = (key, cand, rho)
    return best


def synthesize(model: DecomposedModel, config: Optional[GainSearchConfig] = None
               ) -> GainCertificate:
    """Search the candidate families and return a certified gain pair.

    The observer and controller radii decouple, so each side is minimized
    independently; the returned pair therefore minimizes
    ``max(rho_obs, rho_ctl)`` over the candidate product set.
    """
    cfg = config or GainSearchConfig()
    n, m, p = model.nx, model.nu, model.ny
    Qc = np.eye(n) if cfg.Qc is None else np.asarray(cfg.Qc, dtype=float)
    Rc = np.eye(m) if cfg.Rc is None else np.asarray(cfg.Rc, dtype=float)
    Qo = np.eye(n) if cfg.Qo is None else np.asarray(cfg.Qo, dtype=float)
    Ro = np.eye(p) if cfg.Ro is None else np.asarray(cfg.Ro, dtype=float)

    if cfg.fixed_L is not None:
        L_cands = [np.asarray(cfg.fixed_L, dtype=float)]
    else:
        L_cands = []
        for qs in cfg.q_scales:
            for rs in cfg.r_scales:
                try:
                    L_cands.append(kalman_gain(model.A, model.C, qs * Qo, rs * Ro))
                except np.linalg.LinAlgError:
                    continue

    if cfg.fixed_K is not None:
        K_cands = [np.asarray(cfg.fixed_K, dtype=float)]
    else:
        K_cands = [np.zeros((m, n))] if cfg.include_zero_K else []
        for qs in cfg.q_scales:
            for rs in cfg.r_scales:
                try:
                    K_cands.append(dlqr(model.A, model.B, qs * Qc, rs * Rc))
                except np.linalg.LinAlgError:
                    continue

    def rho_obs_of(L):
        return spectral_radius(split(model.A - L @ model.C).absolute + model.F_bar)

    def rho_ctl_of(K):
        return spectral_radius(split(model.A - model.B @ K).absolute + model.F_bar)

    best_L = _pick(L_cands, rho_obs_of)
    best_K = _pick(K_cands, rho_ctl_of)
    if best_L is None or best_K is None:
        side = "observer" if best_L is None else "controller"
        raise GainError(f"no {side} candidate achieves spectral radius < 1")
    return verify(model, best_L[1], best_K[1])
