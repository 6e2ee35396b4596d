"""Vectorised interval arithmetic on numpy arrays of endpoints.

An ``Interval`` holds two arrays of the same shape (0-d for a scalar
interval, 1-d for a box). Results are widened outward by a relative 1e-12
whenever an operand has positive width; this stands in for directed
rounding. Arithmetic on degenerate operands stays exact so point inputs
reproduce ordinary (correctly rounded) float arithmetic. ``exp`` is always
widened because libm exponentials are not correctly rounded.
"""
from __future__ import annotations

import numpy as np

EPS = 1e-12


class IntervalError(ArithmeticError):
    """Enclosure failure, e.g. division by an interval containing zero."""


def _widen(lo, hi, wide):
    if not np.any(wide):
        return lo, hi
    lo = np.where(wide, lo - EPS * (1.0 + np.abs(lo)), lo)
    hi = np.where(wide, hi + EPS * (1.0 + np.abs(hi)), hi)
    return lo, hi


class Interval:
    __slots__ = ("lo", "hi")
    __array_priority__ = 100  # make ndarray * Interval dispatch to __rmul__

    def __init__(self, lo, hi=None, check: bool = True):
        lo = np.asarray(lo, dtype=float)
        hi = lo if hi is None else np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        if check and np.any(lo > hi):
            raise ValueError("interval with lo > hi")
        self.lo = lo
        self.hi = hi

    @classmethod
    def coerce(cls, x) -> "Interval":
        return x if isinstance(x, Interval) else cls(x)

    @classmethod
    def whole(cls, shape=()):
        return cls(np.full(shape, -np.inf), np.full(shape, np.inf))

    # -- basic properties ---------------------------------------------------
    @property
    def shape(self):
        return self.lo.shape

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def is_degenerate(self):
        return self.lo == self.hi

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, key):
        return Interval(self.lo[key], self.hi[key], check=False)

    def __repr__(self):
        if self.lo.ndim == 0:
            return f"[{float(self.lo)!r}, {float(self.hi)!r}]"
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (self.lo <= x) & (x <= self.hi)

    def contains_zero(self):
        return (self.lo <= 0.0) & (0.0 <= self.hi)

    def subset_of(self, other: "Interval"):
        return (other.lo <= self.lo) & (self.hi <= other.hi)

    def intersect(self, other: "Interval") -> "Interval":
        """Elementwise intersection; raises IntervalError if any component is empty."""
        other = Interval.coerce(other)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            raise IntervalError("empty intersection")
        return Interval(lo, hi, check=False)

    def hull(self, other: "Interval") -> "Interval":
        other = Interval.coerce(other)
        return Interval(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi), check=False)

    def _wide(self, other=None):
        w = self.lo < self.hi
        if other is not None:
            w = w | (other.lo < other.hi)
        return w

    # -- arithmetic -----------------------------------------------------------
    def __neg__(self):
        return Interval(-self.hi, -self.lo, check=False)

    def __add__(self, other):
        other = Interval.coerce(other)
        lo, hi = _widen(self.lo + other.lo, self.hi + other.hi, self._wide(other))
        return Interval(lo, hi, check=False)

    __radd__ = __add__

    def __sub__(self, other):
        other = Interval.coerce(other)
        lo, hi = _widen(self.lo - other.hi, self.hi - other.lo, self._wide(other))
        return Interval(lo, hi, check=False)

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        lo, hi = _widen(lo, hi, self._wide(other))
        return Interval(lo, hi, check=False)

    __rmul__ = __mul__

    def recip(self):
        if np.any(self.contains_zero()):
            raise IntervalError("reciprocal of an interval containing zero")
        with np.errstate(over="ignore"):
            lo, hi = _widen(1.0 / self.hi, 1.0 / self.lo, self._wide())
        return Interval(lo, hi, check=False)

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if np.any(other.contains_zero()):
            raise IntervalError("division by an interval containing zero")
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        with np.errstate(over="ignore"):
            q1, q2, q3, q4 = a / c, a / d, b / c, b / d
        lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        lo, hi = _widen(lo, hi, self._wide(other))
        return Interval(lo, hi, check=False)

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def exp(self):
        with np.errstate(over="ignore"):
            lo, hi = np.exp(self.lo), np.exp(self.hi)
        lo = np.maximum(lo - EPS * lo, 0.0)
        hi = hi + EPS * hi
        return Interval(lo, hi, check=False)

    def sum(self, axis=None):
        lo = self.lo.sum(axis=axis)
        hi = self.hi.sum(axis=axis)
        wide = np.any(self._wide(), axis=axis)
        if np.any(wide):
            count = self.lo.size if axis is None else self.lo.shape[axis]
            slack_lo = EPS * (count + np.abs(self.lo).sum(axis=axis))
            slack_hi = EPS * (count + np.abs(self.hi).sum(axis=axis))
            lo = np.where(wide, lo - slack_lo, lo)
            hi = np.where(wide, hi + slack_hi, hi)
        return Interval(lo, hi, check=False)


# functional spellings
def add(a, b):
    return Interval.coerce(a) + b


def sub(a, b):
    return Interval.coerce(a) - b


def mul(a, b):
    return Interval.coerce(a) * b


def div(a, b):
    return Interval.coerce(a) / b


def neg(a):
    return -Interval.coerce(a)


def recip(a):
    return Interval.coerce(a).recip()


def exp_iv(a):
    return Interval.coerce(a).exp()


def dot(a, b) -> Interval:
    """Interval inner product over the last axis."""
    return (Interval.coerce(a) * Interval.coerce(b)).sum(axis=-1)


def point_dot(box: Interval, x) -> Interval:
    """Tight enclosure of {w^T x : w in box} for a real vector x."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    lo = np.where(pos, x * box.lo, x * box.hi).sum(axis=-1)
    hi = np.where(pos, x * box.hi, x * box.lo).sum(axis=-1)
    wide = np.any(box.lo < box.hi, axis=-1)
    lo, hi = _widen(lo, hi, wide)
    return Interval(lo, hi, check=False)


IntervalBox = Interval
