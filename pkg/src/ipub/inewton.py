"""Interval Newton enclosure of all logistic-regression solutions over an interval dataset.

The baseline the sphere bound is compared against. Each step evaluates the
gradient at the box midpoint with interval data, encloses the Hessian over
the whole box, and solves the interval system by interval Gaussian
elimination, preconditioned Hansen-Sengupta style with C = mid(H(W))^-1:

    N(W) = m - IGA(C H(W), C grad(m)),   W <- N(W) & W

Preconditioning does not change the enclosed solution set {x : A x = b}
but keeps elimination from hitting pivots that contain zero when the
Hessian enclosure is wide.

Only logistic loss with an l2 penalty is supported.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bound import apply_link
from .interval import Interval, IntervalError, _widen, point_dot
from .model import IntervalMatrix, PredictionInterval, TrainingSet

log = logging.getLogger(__name__)

SHRINK_TOL = 1e-12


def _data(X: IntervalMatrix) -> Interval:
    return Interval(X.lower, X.upper, check=False)


def _scores(Xi: Interval, W: Interval, y) -> Interval:
    """Enclosure of y_i * w^T x_i for every row."""
    z = (Xi * W).sum(axis=1)
    pos = y > 0
    return Interval(np.where(pos, z.lo, -z.hi), np.where(pos, z.hi, -z.lo), check=False)


def interval_gradient(X: IntervalMatrix, y, W: Interval, lam: float) -> Interval:
    """Encloses (1/n) sum_i -y_i sigma(-y_i w^T x_i) x_i + lam w over all (X'', w)."""
    y = np.asarray(y, dtype=float)
    Xi = _data(X)
    W = Interval.coerce(W)
    n = X.n
    z = _scores(Xi, W, y)
    s = (1.0 + z.exp()).recip()                   # sigma(-z)
    coef = Interval(-y, -y) * s                   # -y_i sigma(-y_i w^T x_i)
    g = (Interval(coef.lo[:, None], coef.hi[:, None], check=False) * Xi).sum(axis=0)
    return g * (1.0 / n) + W * lam


def _logistic_curvature(s: Interval) -> Interval:
    """Range of t (1 - t) over t in s; increasing below 1/2, decreasing above."""
    f_lo, f_hi = s.lo * (1.0 - s.lo), s.hi * (1.0 - s.hi)
    lo = np.minimum(f_lo, f_hi)
    hi = np.where((s.lo <= 0.5) & (0.5 <= s.hi), 0.25, np.maximum(f_lo, f_hi))
    lo, hi = _widen(lo, hi, np.ones(lo.shape, dtype=bool))
    return Interval(np.maximum(lo, 0.0), np.minimum(hi, 0.25), check=False)


def interval_hessian(X: IntervalMatrix, y, W: Interval, lam: float) -> Interval:
    """Encloses (1/n) sum_i sigma(z_i)(1 - sigma(z_i)) x_i x_i^T + lam I over all (X'', w)."""
    y = np.asarray(y, dtype=float)
    Xi = _data(X)
    W = Interval.coerce(W)
    n, d = X.shape
    z = _scores(Xi, W, y)
    s = (1.0 + (-z).exp()).recip()                # sigma(z)
    c = _logistic_curvature(s)
    outer = Interval(Xi.lo[:, :, None], Xi.hi[:, :, None], check=False) * \
        Interval(Xi.lo[:, None, :], Xi.hi[:, None, :], check=False)
    H = (Interval(c.lo[:, None, None], c.hi[:, None, None], check=False) * outer).sum(axis=0)
    H = H * (1.0 / n)
    return H + Interval(lam * np.eye(d))


def _point_times(C: np.ndarray, A: Interval) -> Interval:
    """Real matrix C times interval matrix/vector A, widened for matmul rounding."""
    Cp = np.maximum(C, 0.0)
    Cn = np.minimum(C, 0.0)
    lo = Cp @ A.lo + Cn @ A.hi
    hi = Cp @ A.hi + Cn @ A.lo
    lo, hi = _widen(lo, hi, np.ones(lo.shape, dtype=bool))
    return Interval(lo, hi, check=False)


def interval_gauss(A: Interval, b: Interval) -> Interval:
    """Interval Gaussian elimination without pivoting; encloses {x : Ax = b, A in A, b in B}."""
    d = A.lo.shape[0]
    Alo, Ahi = A.lo.copy(), A.hi.copy()
    blo, bhi = b.lo.copy(), b.hi.copy()
    for k in range(d):
        piv = Interval(Alo[k, k], Ahi[k, k], check=False)
        if piv.contains_zero():
            raise IntervalError(f"pivot {k} contains zero")
        if k + 1 == d:
            break
        f = Interval(Alo[k + 1:, k], Ahi[k + 1:, k], check=False) * piv.recip()
        fk = Interval(f.lo[:, None], f.hi[:, None], check=False)
        row = Interval(Alo[k, k + 1:][None, :], Ahi[k, k + 1:][None, :], check=False)
        rest = Interval(Alo[k + 1:, k + 1:], Ahi[k + 1:, k + 1:], check=False) - fk * row
        Alo[k + 1:, k + 1:], Ahi[k + 1:, k + 1:] = rest.lo, rest.hi
        rb = Interval(blo[k + 1:], bhi[k + 1:], check=False) - f * Interval(blo[k], bhi[k], check=False)
        blo[k + 1:], bhi[k + 1:] = rb.lo, rb.hi
    xlo = np.empty(d)
    xhi = np.empty(d)
    for k in range(d - 1, -1, -1):
        acc = Interval(blo[k], bhi[k], check=False)
        if k + 1 < d:
            row = Interval(Alo[k, k + 1:], Ahi[k, k + 1:], check=False)
            acc = acc - (row * Interval(xlo[k + 1:], xhi[k + 1:], check=False)).sum()
        xk = acc / Interval(Alo[k, k], Ahi[k, k], check=False)
        xlo[k], xhi[k] = xk.lo, xk.hi
    return Interval(xlo, xhi, check=False)


def newton_operator(X: IntervalMatrix, y, W: Interval, lam: float) -> Interval:
    m = W.mid
    g = interval_gradient(X, y, Interval(m), lam)
    H = interval_hessian(X, y, W, lam)
    C = np.linalg.inv(H.mid)
    return Interval(m) - interval_gauss(_point_times(C, H), _point_times(C, g))


@dataclass
class INewtonResult:
    box: Interval
    iterations: int
    contracted: bool = True     # False when IGA failed before the iteration limit
    verified: bool = True       # initial box passed the N(W) within W test
    widths: list = field(default_factory=list)


def initial_box(w_prime, radius: float, margin: float = 0.1) -> Interval:
    half = radius * (1.0 + margin)
    w_prime = np.asarray(w_prime, dtype=float)
    return Interval(w_prime - half, w_prime + half)


def verify_box(X: IntervalMatrix, y, W: Interval, lam: float, max_doublings: int = 8):
    """Grow W until N(W) lies inside it. Returns (box, verified)."""
    box = W
    for _ in range(max_doublings + 1):
        try:
            N = newton_operator(X, y, box, lam)
            if np.all(N.subset_of(box)):
                return box, True
        except IntervalError:
            pass
        c, h = box.mid, box.width
        box = Interval(c - h, c + h)
    return W, False


def inewton_enclose(trainset: TrainingSet, lam: float, max_iter: int, init: Interval,
                    verify: bool = True) -> INewtonResult:
    """Contract ``init`` with interval Newton steps.

    ``init`` must contain every minimiser for every X'' in the intervals
    (the caller typically builds it from the sphere bound). Stops after
    ``max_iter`` steps or once no component shrinks by more than 1e-12.
    """
    X, y = trainset.X, np.asarray(trainset.y, dtype=float)
    W = Interval.coerce(init)
    verified = True
    if max_iter == 0:
        return INewtonResult(W, 0, True, verified, [W.width.copy()])
    if verify:
        W, verified = verify_box(X, y, W, lam)
        if not verified:
            log.warning("initial box failed the inclusion test; continuing unverified")
    widths = [W.width.copy()]
    it = 0
    contracted = True
    for it in range(1, max_iter + 1):
        try:
            N = newton_operator(X, y, W, lam)
            W_new = N.intersect(W)
        except IntervalError as exc:
            log.info("interval Newton stopped at step %d: %s", it, exc)
            contracted = False
            it -= 1
            break
        shrink = np.max(W.width - W_new.width)
        W = W_new
        widths.append(W.width.copy())
        if shrink <= SHRINK_TOL:
            break
    return INewtonResult(W, it, contracted, verified, widths)


def inewton_predict_interval(box: Interval, x, link: str = "sigmoid") -> PredictionInterval:
    z = point_dot(box, x)
    lo, hi = float(z.lo), float(z.hi)
    return PredictionInterval(lo, hi, float(apply_link(link, lo)), float(apply_link(link, hi)))


def inewton_bounds(box: Interval, X_test):
    """Vectorised linear-score bounds for each row of X_test."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    z = point_dot(Interval(box.lo[None, :], box.hi[None, :], check=False), X_test)
    return z.lo, z.hi
