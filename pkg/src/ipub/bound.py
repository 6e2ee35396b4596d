"""Duality-gap sphere bound on every model trainable from the interval data.

Given one trained pair (w', alpha') on some X' inside the intervals, the
quantity

    delta = max_{X''} P_{X''}(w') - min_{X''} D_{X''}(alpha')

is computed in O(M) from cached scores; every minimiser w'' for any X'' in
the intervals then lies in the ball ||w - w'|| <= sqrt(2 delta / lambda).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import losses as L
from .model import (IntervalMatrix, MissingIndex, ModelSpec, PredictionInterval,
                    PrimalDualSolution, TrainingSet, UncertaintyBall, build_missing_index)
from .solver import SolverConfig, impute_midpoint, train

SUMMAND_FLOOR = -1e-10
FSUM_GROUP = 64
UNKNOWN = 0


class CacheCorruptionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DeltaBreakdown:
    loss_term: float
    penalty_term: float
    residual_gap: float
    rows: np.ndarray        # rows with a missing entry
    p_minus: np.ndarray
    p_plus: np.ndarray
    cols: np.ndarray        # columns with a missing entry
    q_minus: np.ndarray
    q_plus: np.ndarray

    @property
    def delta_total(self) -> float:
        return self.loss_term + self.penalty_term + self.residual_gap

    def summary(self) -> dict:
        return {
            "loss_term": self.loss_term,
            "penalty_term": self.penalty_term,
            "residual_gap": self.residual_gap,
            "delta_total": self.delta_total,
        }


def _group_sums(values: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Sum ``values`` over consecutive groups delimited by ``ptr``.

    Groups longer than FSUM_GROUP are summed with math.fsum (correctly
    rounded) so long rows/columns do not accumulate drift.
    """
    k = ptr.size - 1
    if k == 0:
        return np.zeros(0)
    out = np.add.reduceat(values, ptr[:-1])
    sizes = np.diff(ptr)
    for g in np.flatnonzero(sizes > FSUM_GROUP):
        out[g] = math.fsum(values[ptr[g]:ptr[g + 1]])
    return out


def compute_extreme_scores(solution: PrimalDualSolution, X: IntervalMatrix, index: MissingIndex):
    """Range of w'^T x''_i over each row box and of alpha'^T x''_j over each column box.

    Returns (p_minus, p_plus, q_minus, q_plus), aligned with
    ``index.rows_with_missing`` and ``index.cols_with_missing``. Cost O(M).
    """
    if X.shape != (index.n, index.d):
        raise ValueError(f"index built for {(index.n, index.d)}, matrix is {X.shape}")
    r, c = index.rows, index.cols
    lo = X.lower[r, c]
    hi = X.upper[r, c]
    if not np.all(lo < hi):
        raise ValueError("missing index is inconsistent with the interval matrix")
    xp = solution.imputed[r, c]
    if not np.all((lo <= xp) & (xp <= hi)):
        raise ValueError("imputed matrix leaves the intervals at a missing entry")

    w = solution.w_prime[c]
    pos = w > 0
    base = w * xp
    dp_minus = np.where(pos, w * lo, w * hi) - base
    dp_plus = np.where(pos, w * hi, w * lo) - base
    rows = index.rows_with_missing
    nominal = solution.row_scores[rows]
    p_minus = nominal + _group_sums(dp_minus, index.row_ptr)
    p_plus = nominal + _group_sums(dp_plus, index.row_ptr)

    perm = index.col_order
    a = solution.alpha_prime[r[perm]]
    lo_c, hi_c, xp_c = lo[perm], hi[perm], xp[perm]
    pos = a > 0
    base = a * xp_c
    dq_minus = np.where(pos, a * lo_c, a * hi_c) - base
    dq_plus = np.where(pos, a * hi_c, a * lo_c) - base
    cols = index.cols_with_missing
    nominal = solution.col_scores[cols]
    q_minus = nominal + _group_sums(dq_minus, index.col_ptr)
    q_plus = nominal + _group_sums(dq_plus, index.col_ptr)
    return p_minus, p_plus, q_minus, q_plus


def compute_delta(spec: ModelSpec, solution: PrimalDualSolution, X: IntervalMatrix,
                  index: MissingIndex, y=None) -> DeltaBreakdown:
    y = solution.labels if y is None else np.asarray(y, dtype=float)
    if y is None:
        raise ValueError("labels are required (pass y or train with labels)")
    n = X.n
    p_minus, p_plus, q_minus, q_plus = compute_extreme_scores(solution, X, index)
    rows = index.rows_with_missing
    cols = index.cols_with_missing

    y_I = y[rows]
    nominal = L.loss_value(spec.loss, y_I, solution.row_scores[rows])
    loss_parts = np.maximum(L.loss_value(spec.loss, y_I, p_minus),
                            L.loss_value(spec.loss, y_I, p_plus)) - nominal

    pen = spec.penalty
    nominal = L.penalty_conjugate_component(pen, solution.col_scores[cols] / n)
    pen_parts = np.maximum(L.penalty_conjugate_component(pen, q_minus / n),
                           L.penalty_conjugate_component(pen, q_plus / n)) - nominal

    if loss_parts.size and loss_parts.min() < SUMMAND_FLOOR:
        raise CacheCorruptionError(f"negative loss summand {loss_parts.min():.3e}")
    if pen_parts.size and pen_parts.min() < SUMMAND_FLOOR:
        raise CacheCorruptionError(f"negative penalty summand {pen_parts.min():.3e}")

    return DeltaBreakdown(
        loss_term=float(loss_parts.sum() / n),
        penalty_term=float(pen_parts.sum()),
        residual_gap=float(solution.residual_gap),
        rows=rows, p_minus=p_minus, p_plus=p_plus,
        cols=cols, q_minus=q_minus, q_plus=q_plus,
    )


def uncertainty_ball(delta, lam: float, w_prime) -> UncertaintyBall:
    total = delta.delta_total if isinstance(delta, DeltaBreakdown) else float(delta)
    return UncertaintyBall(np.asarray(w_prime, dtype=float), total, lam)


def apply_link(link: str, v):
    v = np.asarray(v, dtype=float)
    if link == "identity":
        return v
    if link == "sigmoid":
        return expit(v)
    if link == "sign":
        return np.sign(v)
    raise ValueError(f"unknown link {link!r}")


LINK_SLOPE = {"identity": 1.0, "sigmoid": 0.25, "sign": math.inf}


def linear_bounds(ball: UncertaintyBall, X):
    """Vectorised bounds on w^T x over the ball for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != ball.center.size:
        raise ValueError(f"test points have {X.shape[1]} features, model has {ball.center.size}")
    centre = X @ ball.center
    half = np.linalg.norm(X, axis=1) * ball.radius
    return centre - half, centre + half


def predict_interval(ball: UncertaintyBall, x, link: str = "identity") -> PredictionInterval:
    lo, hi = linear_bounds(ball, np.asarray(x, dtype=float)[None, :])
    lo, hi = float(lo[0]), float(hi[0])
    label = None
    if link == "sign":
        label = _label(lo, hi)
    return PredictionInterval(lo, hi, float(apply_link(link, lo)), float(apply_link(link, hi)), label)


def _label(lo, hi):
    if lo > 0:
        return 1
    if hi < 0:
        return -1
    return UNKNOWN


def classify_interval(ball: UncertaintyBall, x) -> int:
    """+1 or -1 when the whole linear interval has one sign, else UNKNOWN (0)."""
    pi = predict_interval(ball, x)
    return _label(pi.linear_lo, pi.linear_hi)


@dataclass(frozen=True, eq=False)
class IPUBResult:
    solution: PrimalDualSolution
    breakdown: DeltaBreakdown
    ball: UncertaintyBall

    def intervals(self, X_test, link: str):
        """Arrays (linear_lo, linear_hi, value_lo, value_hi) for each test row."""
        lo, hi = linear_bounds(self.ball, X_test)
        return lo, hi, apply_link(link, lo), apply_link(link, hi)


def fit_ipub(spec: ModelSpec, trainset: TrainingSet, cfg: SolverConfig | None = None,
             imputed=None) -> IPUBResult:
    """Train on the midpoint (or the given) imputation and bound every other one."""
    X = trainset.X
    index = trainset.index if trainset.index is not None else build_missing_index(X)
    Xp = impute_midpoint(X) if imputed is None else np.asarray(imputed, dtype=float)
    sol = train(spec, Xp, trainset.y, cfg, imputed_choice="midpoint" if imputed is None else "given")
    br = compute_delta(spec, sol, X, index)
    return IPUBResult(sol, br, uncertainty_ball(br, spec.lam, sol.w_prime))
