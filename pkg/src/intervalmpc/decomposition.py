"""Splitting nonlinear dynamics into a linear part plus a monotone remainder.

A step map ``f`` with entrywise Jacobian bounds ``J_lo <= J <= J_hi`` is
written as ``f(x) = A x + mu(x)`` where every entry of ``mu``'s Jacobian keeps
a constant sign over the domain.  Sign stability yields, for each output i, a
selector diagonal ``D_i`` with ones at the increasing coordinates, and the
two-argument remainder

    mu_d(x1, x2)_i = mu_i(D_i x1 + (I - D_i) x2)

is an exact range bound over a box: feeding ``(hi, lo)`` gives the maximum of
``mu_i`` over ``[lo, hi]`` and ``(lo, hi)`` the minimum.  The Lipschitz-style
gain ``F_bar = max(J_mu_hi, 0) + max(-J_mu_lo, 0)`` bounds the spread:
``mu_d(hi, lo) - mu_d(lo, hi) <= F_bar (hi - lo)``.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .intervals import Interval, split


class DecompositionError(ValueError):
    """Raised when Jacobian bounds are inconsistent or not sign-stable."""


class JacobianBounds:
    """Entrywise bounds ``lo <= J <= hi`` on a Jacobian over a domain box."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 2:
            raise DecompositionError("Jacobian bounds must be matrices of equal shape")
        if np.any(lo > hi):
            raise DecompositionError("Jacobian lower bound exceeds upper bound")
        self.lo = lo
        self.hi = hi

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def is_sign_stable(self) -> bool:
        return bool(np.all((self.lo >= 0.0) | (self.hi <= 0.0)))


def remainder_gain(mu_jac: JacobianBounds) -> np.ndarray:
    # F_bar = (J_hi)_plus + (J_lo)_minus; for sign-stable entries exactly
    # max(|J_lo|, |J_hi|) since one of the two terms vanishes.
    return split(mu_jac.hi).plus + split(mu_jac.lo).minus


def selectors_from(mu_jac: JacobianBounds) -> np.ndarray:
    # Row i holds the diagonal of D_i: 1 at coordinates where mu_i increases.
    return (mu_jac.hi > 0.0).astype(float)


class DecomposedModel:
    """Dynamics ``x+ = A x + mu(x) + B u`` with sign-stable remainder.

    Parameters
    ----------
    A : (n, n) linear part
    B : (n, m) input matrix
    C : (p, n) output matrix (``y = C x + v``)
    mu : callable or None
        Remainder, vectorized over leading axes (``(..., n) -> (..., n)``);
        ``None`` means identically zero (linear model).
    mu_jac : JacobianBounds or None
        Sign-stable bounds on ``d mu / d x`` over ``domain``; required when
        ``mu`` is given.
    domain : Interval or None
        Box on which the bounds are valid (informational).
    """

    def __init__(self, A, B, C, mu: Optional[Callable] = None,
                 mu_jac: Optional[JacobianBounds] = None,
                 domain: Optional[Interval] = None):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DecompositionError("A must be square")
        if self.B.ndim != 2 or self.B.shape[0] != n:
            raise DecompositionError("B must be (n, m)")
        if self.C.ndim != 2 or self.C.shape[1] != n:
            raise DecompositionError("C must be (p, n)")
        if (mu is None) != (mu_jac is None):
            raise DecompositionError("mu and mu_jac must be supplied together")
        if mu_jac is not None:
            if mu_jac.lo.shape != (n, n):
                raise DecompositionError("mu_jac must be (n, n)")
            if not mu_jac.is_sign_stable():
                raise DecompositionError(
                    "remainder Jacobian bounds must have constant sign per entry")
        self.mu = mu
        self.mu_jac = mu_jac
        self.domain = domain
        if mu_jac is None:
            self.selectors = np.zeros((n, n))
            self.F_bar = np.zeros((n, n))
        else:
            self.selectors = selectors_from(mu_jac)
            self.F_bar = remainder_gain(mu_jac)
        # All selector rows equal means every output is evaluated at the same
        # mixed point, collapsing decomp_eval to a single mu call.
        self._uniform_rows = bool(
            np.all(self.selectors == self.selectors[0:1, :]))

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    def mu_value(self, x) -> np.ndarray:
        # dtype follows the input so complex-step perturbations pass through.
        if self.mu is None:
            return np.zeros_like(np.asarray(x))
        return np.asarray(self.mu(x))

    def dynamics(self, x, u) -> np.ndarray:
        """One step ``A x + mu(x) + B u`` (noise-free), batched."""
        x = np.asarray(x)
        u = np.asarray(u)
        return x @ self.A.T + self.mu_value(x) + u @ self.B.T

    def output(self, x) -> np.ndarray:
        return np.asarray(x) @ self.C.T


def decomp_eval(model: DecomposedModel, x1, x2) -> np.ndarray:
    """Mixed-argument remainder ``mu_d(x1, x2)``, batched over leading axes.

    With ``x1 >= x2`` componentwise this is the exact componentwise maximum
    of ``mu`` over the box ``[x2, x1]``; with the arguments swapped, the
    minimum.
    """
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if model.mu is None:
        return np.zeros(np.broadcast_shapes(x1.shape, x2.shape),
                        dtype=np.result_type(x1, x2, float))
    S = model.selectors.astype(bool)
    if model._uniform_rows:
        point = np.where(S[0], x1, x2)
        return np.asarray(model.mu(point))
    # Row i of P is the evaluation point for output i.
    P = np.where(S, x1[..., None, :], x2[..., None, :])
    vals = np.asarray(model.mu(P))
    return np.diagonal(vals, axis1=-2, axis2=-1).copy()


def decomp_eval_pairs(model: DecomposedModel, pairs):
    """Evaluate ``mu_d`` at several argument pairs with one ``mu`` call.

    ``pairs`` is a sequence of ``(x1, x2)`` arrays of identical shape; the
    results match ``decomp_eval(model, x1, x2)`` pair by pair.  Stacking the
    evaluation points lets vectorized remainders amortize their call
    overhead, which matters inside rollout loops.
    """
    k = len(pairs)
    if model.mu is None:
        x1, x2 = (np.asarray(a) for a in pairs[0])
        z = np.zeros(np.broadcast_shapes(x1.shape, x2.shape),
                     dtype=np.result_type(x1, x2, float))
        return (z,) * k
    S = model.selectors.astype(bool)
    if model._uniform_rows:
        pts = np.stack([np.where(S[0], x1, x2) for x1, x2 in pairs])
        vals = np.asarray(model.mu(pts))
        return tuple(vals[i] for i in range(k))
    pts = np.stack([np.where(S, np.asarray(x1)[..., None, :],
                             np.asarray(x2)[..., None, :]) for x1, x2 in pairs])
    vals = np.asarray(model.mu(pts))
    diag = np.diagonal(vals, axis1=-2, axis2=-1)
    return tuple(diag[i].copy() for i in range(k))


def remainder_box(model: DecomposedModel, box: Interval) -> Interval:
    """Exact range box of ``mu`` over ``box``."""
    return Interval(decomp_eval(model, box.lo, box.hi),
                    decomp_eval(model, box.hi, box.lo))


def jss_decompose(f: Callable, jac: JacobianBounds, B, C,
                  domain: Optional[Interval] = None) -> DecomposedModel:
    """Choose a linear part from Jacobian bounds and return the decomposition.

    The remainder's Jacobian width ``hi - lo`` does not depend on which bound
    each ``A`` entry takes, so the spread-minimizing choice with ties toward
    the lower bound is ``A = jac.lo``; the remainder then has Jacobian in
    ``[0, hi - lo]``, which is sign-stable by construction.

    Parameters
    ----------
    f : callable
        Autonomous part of the step map (input enters separately through B).
    jac : JacobianBounds
        Bounds on ``d f / d x`` over ``domain``.
    """
    A = jac.lo.copy()

    def mu(x, _A=A, _f=f):
        x = np.asarray(x, dtype=float)
        return np.asarray(_f(x), dtype=float) - x @ _A.T

    mu_jac = JacobianBounds(np.zeros_like(A), jac.width)
    return DecomposedModel(A, B, C, mu=mu, mu_jac=mu_jac, domain=domain)
