"""Losses, penalties, their convex conjugates and (sub)derivatives.

Conventions: ``loss_conjugate(loss, y, a)`` returns l*(y, -a), the quantity
appearing in the dual objective
    D(a) = -(1/n) sum_i l*(y_i, -a_i) - sum_j rho*_j((1/n) a^T x_.j).
All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .model import DualInfeasibleError, LabelDomainError, ModelSpec, Penalty

FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class SubderivativeInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("lo > hi")

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi


def _check_labels(loss: str, y):
    if loss in ("hinge", "logistic") and not np.all(np.isin(y, (-1.0, 1.0))):
        raise LabelDomainError(f"{loss} loss needs labels in {{-1,+1}}")


def loss_value(loss: str, y, v):
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_labels(loss, y)
    if loss == "squared":
        return (y - v) ** 2
    m = y * v
    if loss == "hinge":
        return np.maximum(0.0, 1.0 - m)
    if loss == "logistic":
        return np.log1p(np.exp(-np.abs(m))) + np.maximum(0.0, -m)
    raise ValueError(f"unknown loss {loss!r}")


def dual_ratio(y, alpha):
    """Return t = alpha / y clamped into [0, 1], raising if outside by more than the slack."""
    t = np.asarray(alpha, dtype=float) / np.asarray(y, dtype=float)
    if np.any(t < -FEASIBILITY_SLACK) or np.any(t > 1.0 + FEASIBILITY_SLACK):
        bad = np.asarray(t)[(t < -FEASIBILITY_SLACK) | (t > 1.0 + FEASIBILITY_SLACK)].ravel()[0]
        raise DualInfeasibleError(f"alpha/y = {bad!r} lies outside [0, 1]")
    return np.clip(t, 0.0, 1.0)


def loss_conjugate(loss: str, y, alpha):
    """Evaluate l*(y, -alpha)."""
    y = np.asarray(y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    _check_labels(loss, y)
    if loss == "squared":
        return 0.25 * alpha * (alpha - 4.0 * y)
    t = dual_ratio(y, alpha)
    if loss == "hinge":
        return -t
    if loss == "logistic":
        # binary negative entropy, 0 log 0 := 0 at both ends
        return xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)
    raise ValueError(f"unknown loss {loss!r}")


def loss_derivative(loss: str, y, v, kink: str = "zero"):
    """Vectorised derivative of the loss in its second argument.

    For hinge at the kink (y v == 1) returns the subgradient picked by
    ``kink``: "zero" or "full" (the -y end).
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if loss == "squared":
        return 2.0 * (v - y)
    if loss == "logistic":
        return -y * expit(-y * v)
    if loss == "hinge":
        m = y * v
        full = m < 1.0 if kink == "zero" else m <= 1.0
        return np.where(full, -y, 0.0)
    raise ValueError(f"unknown loss {loss!r}")


def loss_second_derivative(loss: str, y, v):
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if loss == "squared":
        return np.full(np.broadcast(y, v).shape, 2.0)
    if loss == "logistic":
        s = expit(y * v)
        return s * (1.0 - s)
    raise ValueError(f"{loss} loss has no second derivative")


def loss_subderivative(loss: str, y: float, v: float) -> SubderivativeInterval:
    _check_labels(loss, y)
    if loss == "hinge" and y * v == 1.0:
        # [-y, 0] for y = +1, [0, -y] for y = -1
        return SubderivativeInterval(min(-y, 0.0), max(-y, 0.0))
    g = float(loss_derivative(loss, y, v))
    return SubderivativeInterval(g, g)


def penalty_value(penalty: Penalty, w):
    w = np.asarray(w, dtype=float)
    val = 0.5 * penalty.lam * float(w @ w)
    if penalty.kind == "elastic_net":
        val += penalty.kappa * float(np.abs(w).sum())
    return val


def _shrink(penalty: Penalty, s):
    s = np.asarray(s, dtype=float)
    if penalty.kind == "elastic_net":
        return np.maximum(np.abs(s) - penalty.kappa, 0.0)
    return np.abs(s)


def penalty_conjugate_component(penalty: Penalty, s):
    """rho*_j(s) for s = (1/n) alpha^T x_.j."""
    r = _shrink(penalty, s)
    return r * r / (2.0 * penalty.lam)


def penalty_conjugate_gradient(penalty: Penalty, s):
    """Maps scaled dual scores s to primal weights: w = grad rho*(s)."""
    s = np.asarray(s, dtype=float)
    if penalty.kind == "elastic_net":
        k = penalty.kappa
        return (np.maximum(s - k, 0.0) - np.maximum(-s - k, 0.0)) / penalty.lam
    return s / penalty.lam


def soft_threshold(z, k):
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - k, 0.0)


def _check_dims(X, y, v, what):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    expect = X.shape[1] if what == "w" else X.shape[0]
    if v.shape != (expect,):
        raise ValueError(f"dimension mismatch: {what} has shape {v.shape}, expected ({expect},)")
    return X, y, v


def primal_objective(spec: ModelSpec, X, y, w) -> float:
    X, y, w = _check_dims(X, y, w, "w")
    return float(np.mean(loss_value(spec.loss, y, X @ w)) + penalty_value(spec.penalty, w))


def dual_objective(spec: ModelSpec, X, y, alpha) -> float:
    X, y, alpha = _check_dims(X, y, alpha, "alpha")
    n = X.shape[0]
    s = (X.T @ alpha) / n
    return float(-np.mean(loss_conjugate(spec.loss, y, alpha))
                 - np.sum(penalty_conjugate_component(spec.penalty, s)))


def primal_gradient(spec: ModelSpec, X, y, w):
    """Gradient of the smooth part plus the l2 term (excludes the l1 term)."""
    n = X.shape[0]
    return X.T @ loss_derivative(spec.loss, y, X @ w) / n + spec.lam * w
