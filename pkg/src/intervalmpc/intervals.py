"""Interval vectors and sign-split matrix arithmetic.

Conventions used throughout the package:

* ``M_plus = max(M, 0)`` and ``M_minus = M_plus - M`` elementwise, so both
  parts are nonnegative with disjoint supports and ``|M| = M_plus + M_minus``.
* Interval vectors are boxes ``[lo, hi]`` stored as two arrays of equal
  shape.  The last axis is the vector dimension; leading axes broadcast, so
  a batch of boxes is just a pair of ``(batch, n)`` arrays.
* The image of a box under a linear map is bounded by

      hi_out = M_plus @ hi - M_minus @ lo
      lo_out = M_plus @ lo - M_minus @ hi

  which is exact: both bounds are attained at vertices of the input box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class IntervalError(ValueError):
    """Raised when interval bounds are inconsistent (lo > hi)."""


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Interval:
    """Axis-aligned box ``[lo, hi]``, closed, possibly degenerate.

    Parameters
    ----------
    lo, hi : array_like
        Bounds with identical shape.  ``lo <= hi`` is enforced elementwise.

    Notes
    -----
    Instances are treated as immutable values; operations return new boxes.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = _as_float_array(lo)
        hi = _as_float_array(hi)
        if lo.shape != hi.shape:
            raise IntervalError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            worst = float(np.max(lo - hi))
            raise IntervalError(f"lower bound exceeds upper bound by {worst:g}")
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_center(cls, center, halfwidth) -> "Interval":
        center = _as_float_array(center)
        halfwidth = _as_float_array(halfwidth)
        if np.any(halfwidth < 0):
            raise IntervalError("halfwidth must be nonnegative")
        return cls(center - halfwidth, center + halfwidth)

    @classmethod
    def point(cls, x) -> "Interval":
        x = _as_float_array(x)
        return cls(x, x.copy())

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.hi + self.lo)

    @property
    def shape(self):
        return self.lo.shape

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _as_float_array(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def contains_box(self, other: "Interval", tol: float = 0.0) -> bool:
        return bool(
            np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol)
        )

    def intersect(self, other: "Interval") -> "Interval":
        """Intersection box; raises IntervalError when empty."""
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            raise IntervalError("empty intersection")
        return Interval(lo, hi)

    def scale(self, factor) -> "Interval":
        """Scale about the midpoint by a nonnegative factor (array ok)."""
        factor = _as_float_array(factor)
        if np.any(factor < 0):
            raise IntervalError("scale factor must be nonnegative")
        c, h = self.midpoint, 0.5 * self.width
        return Interval(c - factor * h, c + factor * h)

    def shift(self, offset) -> "Interval":
        offset = _as_float_array(offset)
        return Interval(self.lo + offset, self.hi + offset)

    def sum(self, other: "Interval") -> "Interval":
        """Minkowski sum."""
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Uniform sample; degenerate axes return the single point."""
        if size is None:
            return rng.uniform(self.lo, self.hi)
        if np.isscalar(size):
            size = (int(size),)
        return rng.uniform(self.lo, self.hi, size=tuple(size) + self.lo.shape)

    def __repr__(self):
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"


@dataclass(frozen=True)
class SplitMatrix:
    """Sign decomposition of a matrix: ``plus - minus = M``, both >= 0."""

    plus: np.ndarray
    minus: np.ndarray

    @property
    def absolute(self) -> np.ndarray:
        return self.plus + self.minus


def split(M) -> SplitMatrix:
    """Split ``M`` into nonnegative/nonpositive parts with disjoint supports.

    Returns
    -------
    SplitMatrix
        ``plus = max(M, 0)``, ``minus = plus - M``.  Exact in floating point
        (no rounding: each entry is either copied or negated).
    """
    M = _as_float_array(M)
    plus = np.maximum(M, 0.0)
    minus = plus - M
    return SplitMatrix(plus, minus)


def pmbox(M) -> np.ndarray:
    """Block matrix ``[[M_plus, -M_minus], [-M_minus, M_plus]]``.

    Acting on a stacked vector ``[hi; lo]`` it produces the stacked bounds of
    ``M x`` over ``x in [lo, hi]``; see :func:`bound_product` for the unstacked
    equivalent.
    """
    s = split(M)
    return np.block([[s.plus, -s.minus], [-s.minus, s.plus]])


def bound_product(M, box: Interval) -> Interval:
    """Tight interval enclosure of ``{M x : x in box}``.

    Parameters
    ----------
    M : array_like, shape (m, n)
    box : Interval with last-axis dimension n (leading axes broadcast)

    Returns
    -------
    Interval
        Componentwise exact bounds; each bound is attained at a vertex of
        ``box``, so equality holds against vertex enumeration up to roundoff.
    """
    s = split(M)
    hi = box.hi @ s.plus.T - box.lo @ s.minus.T
    lo = box.lo @ s.plus.T - box.hi @ s.minus.T
    return Interval(lo, hi)


def stack_bounds(box: Interval) -> np.ndarray:
    """Stacked ``[hi; lo]`` vector matching the :func:`pmbox` block order."""
    return np.concatenate([box.hi, box.lo], axis=-1)


def unstack_bounds(v) -> Interval:
    """Inverse of :func:`stack_bounds`."""
    v = _as_float_array(v)
    n = v.shape[-1] // 2
    return Interval(v[..., n:], v[..., :n])
