"""Penalized ERM on a concrete imputed matrix, with dual recovery.

Solver per problem class:

* squared / logistic loss + l2: damped Newton, Armijo backtracking, Cholesky.
* squared / logistic loss + elastic net: monotone accelerated proximal
  gradient (MFISTA) with backtracking and gradient restart.
* hinge loss (either penalty): dual coordinate ascent on t = alpha / y in
  [0, 1]^n with exact one-dimensional maximisation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import losses as L
from .model import IntervalMatrix, LabelDomainError, ModelSpec, PrimalDualSolution

log = logging.getLogger(__name__)

GAP_FLOOR = -1e-10
KINK_TOL = 1e-9


class WeakDualityError(RuntimeError):
    """P(w) - D(alpha) came out clearly negative: an implementation bug."""


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-8
    max_iter: int = 500
    line_search_shrink: float = 0.5
    armijo_c: float = 1e-4
    dcd_epochs: int = 2000
    prox_max_iter: int = 20000

    def __post_init__(self):
        if not 0 < self.grad_tol < 1:
            raise ValueError("grad_tol must lie in (0, 1)")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if min(self.max_iter, self.dcd_epochs, self.prox_max_iter) <= 0 or self.armijo_c <= 0:
            raise ValueError("iteration counts and armijo_c must be positive")


def impute_midpoint(X: IntervalMatrix) -> np.ndarray:
    return X.midpoint()


# --------------------------------------------------------------------------
# smooth loss + l2: Newton
# --------------------------------------------------------------------------

def _newton(spec, X, y, cfg, trace):
    n, d = X.shape
    w = np.zeros(d)
    obj = L.primal_objective(spec, X, y, w)
    trace.append(obj)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        v = X @ w
        g = X.T @ L.loss_derivative(spec.loss, y, v) / n + spec.lam * w
        if np.linalg.norm(g) <= cfg.grad_tol:
            converged = True
            it -= 1
            break
        h = L.loss_second_derivative(spec.loss, y, v)
        H = (X.T * h) @ X / n
        H[np.diag_indices(d)] += spec.lam
        p = -cho_solve(cho_factor(H), g)
        slope = float(g @ p)
        step = 1.0
        while True:
            w_new = w + step * p
            obj_new = L.primal_objective(spec, X, y, w_new)
            if obj_new <= obj + cfg.armijo_c * step * slope:
                break
            step *= cfg.line_search_shrink
            if step < 1e-12:
                break
        if obj_new > obj:
            # rounding floor: no representable descent left along p
            converged = np.linalg.norm(g) <= 10 * cfg.grad_tol
            break
        w, obj = w_new, obj_new
        trace.append(obj)
    else:
        g = primal_gradient_norm(spec, X, y, w)
        converged = g <= cfg.grad_tol
    alpha = -L.loss_derivative(spec.loss, y, X @ w)
    return w, alpha, converged, it


def primal_gradient_norm(spec, X, y, w):
    return float(np.linalg.norm(L.primal_gradient(spec, X, y, w)))


# --------------------------------------------------------------------------
# smooth loss + elastic net: MFISTA
# --------------------------------------------------------------------------

def _smooth_part(spec, X, y, w):
    return float(np.mean(L.loss_value(spec.loss, y, X @ w)) + 0.5 * spec.lam * (w @ w))


def _lipschitz(spec, X):
    n = X.shape[0]
    sn = np.linalg.norm(X, 2) ** 2 / n if X.size else 0.0
    curv = 2.0 if spec.loss == "squared" else 0.25
    return curv * sn + spec.lam


def _prox_gradient(spec, X, y, cfg, trace):
    n, d = X.shape
    kappa = spec.kappa
    Lip = _lipschitz(spec, X)

    def F(w):
        return _smooth_part(spec, X, y, w) + kappa * float(np.abs(w).sum())

    x = np.zeros(d)
    Fx = F(x)
    trace.append(Fx)
    yk = x.copy()
    t = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.prox_max_iter + 1):
        fy = _smooth_part(spec, X, y, yk)
        g = L.primal_gradient(spec, X, y, yk)
        while True:
            z = L.soft_threshold(yk - g / Lip, kappa / Lip)
            diff = z - yk
            if _smooth_part(spec, X, y, z) <= fy + g @ diff + 0.5 * Lip * (diff @ diff) + 1e-15 * abs(fy):
                break
            Lip /= cfg.line_search_shrink
        mapping = Lip * np.linalg.norm(diff)
        Fz = F(z)
        x_old = x
        if Fz <= Fx:
            x, Fx = z, Fz
        trace.append(Fx)
        if mapping <= cfg.grad_tol:
            converged = True
            break
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if (yk - z) @ (z - x_old) > 0:
            t_new, t = 1.0, 1.0
        yk = x + (t / t_new) * (z - x) + ((t - 1.0) / t_new) * (x - x_old)
        t = t_new
    w = x
    alpha = -L.loss_derivative(spec.loss, y, X @ w)
    return w, alpha, converged, it


# --------------------------------------------------------------------------
# hinge: dual coordinate ascent
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _grad_rho_star(s, lam, kappa, en):
    if en:
        if s > kappa:
            return (s - kappa) / lam
        if s < -kappa:
            return (s + kappa) / lam
        return 0.0
    return s / lam


@numba.njit(cache=True)
def _margin_slope(A_i, s, delta, n, lam, kappa, en):
    # 1 - a_i . w(s + a_i delta / n)
    acc = 1.0
    for j in range(A_i.shape[0]):
        acc -= A_i[j] * _grad_rho_star(s[j] + A_i[j] * delta / n, lam, kappa, en)
    return acc


@numba.njit(cache=True)
def _coordinate_step(A_i, s, t_i, n, lam, kappa, en, sq_norm):
    lo = -t_i
    hi = 1.0 - t_i
    if sq_norm == 0.0:
        return hi  # objective increases linearly in t_i
    if not en:
        g0 = _margin_slope(A_i, s, 0.0, n, lam, kappa, en)
        delta = n * lam * g0 / sq_norm
        return min(max(delta, lo), hi)
    g_lo = _margin_slope(A_i, s, lo, n, lam, kappa, en)
    if g_lo <= 0.0:
        return lo
    g_hi = _margin_slope(A_i, s, hi, n, lam, kappa, en)
    if g_hi >= 0.0:
        return hi
    # slope is piecewise linear and nonincreasing; locate its zero exactly
    d = A_i.shape[0]
    pts = np.empty(2 * d + 2)
    m = 0
    pts[m] = lo
    m += 1
    for j in range(d):
        if A_i[j] != 0.0:
            for sgn in (-1.0, 1.0):
                b = n * (sgn * kappa - s[j]) / A_i[j]
                if lo < b < hi:
                    pts[m] = b
                    m += 1
    pts[m] = hi
    m += 1
    pts = np.sort(pts[:m])
    a = pts[0]
    ga = g_lo
    for k in range(1, m):
        b = pts[k]
        gb = g_hi if k == m - 1 else _margin_slope(A_i, s, b, n, lam, kappa, en)
        if gb <= 0.0:
            if ga == gb:
                return a
            return a + ga * (b - a) / (ga - gb)
        a = b
        ga = gb
    return hi


@numba.njit(cache=True)
def _dcd(A, t, free, lam, kappa, en, tol, max_epochs):
    n, d = A.shape
    sq = np.empty(n)
    for i in range(n):
        sq[i] = A[i] @ A[i]
    s = np.empty(d)
    epoch = 0
    converged = False
    for epoch in range(1, max_epochs + 1):
        s[:] = A.T @ t / n
        for i in range(n):
            if not free[i]:
                continue
            delta = _coordinate_step(A[i], s, t[i], n, lam, kappa, en, sq[i])
            if delta != 0.0:
                new = min(max(t[i] + delta, 0.0), 1.0)
                delta = new - t[i]
                t[i] = new
                for j in range(d):
                    s[j] += A[i, j] * delta / n
        # projected-gradient optimality check in margin units
        s[:] = A.T @ t / n
        worst = 0.0
        for i in range(n):
            if not free[i]:
                continue
            g = _margin_slope(A[i], s, 0.0, n, lam, kappa, en)
            if t[i] <= 0.0:
                v = max(g, 0.0)
            elif t[i] >= 1.0:
                v = max(-g, 0.0)
            else:
                v = abs(g)
            if v > worst:
                worst = v
        if worst <= tol:
            converged = True
            break
    return epoch, converged


def _hinge_dcd(spec, X, y, cfg, t0=None, free=None):
    n, d = X.shape
    A = np.ascontiguousarray(X * y[:, None])
    t = np.zeros(n) if t0 is None else np.array(t0, dtype=float)
    free = np.ones(n, dtype=np.bool_) if free is None else np.asarray(free, dtype=np.bool_)
    en = spec.penalty.kind == "elastic_net"
    epochs, converged = _dcd(A, t, free, spec.lam, spec.kappa, en, cfg.grad_tol, cfg.dcd_epochs)
    alpha = y * t
    w = L.penalty_conjugate_gradient(spec.penalty, X.T @ alpha / n)
    return w, alpha, bool(converged), int(epochs)


def recover_dual(spec: ModelSpec, X, y, w, cfg: SolverConfig | None = None) -> np.ndarray:
    """alpha_i = -(subgradient of the loss at w^T x_i).

    At hinge kinks (|y_i w^T x_i - 1| <= 1e-9) the subgradient is chosen to
    maximise D with the other coordinates held fixed.
    """
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    v = X @ np.asarray(w, dtype=float)
    if spec.loss != "hinge":
        return -L.loss_derivative(spec.loss, y, v)
    m = y * v
    kink = np.abs(m - 1.0) <= KINK_TOL
    t = np.where(m < 1.0, 1.0, 0.0)
    t[kink] = 0.0
    if kink.any():
        _, alpha, _, _ = _hinge_dcd(spec, X, y, cfg, t0=t, free=kink)
        return alpha
    return y * t


# --------------------------------------------------------------------------

def dual_residual_gap(spec: ModelSpec, X, y, solution) -> float:
    w = solution.w_prime if hasattr(solution, "w_prime") else solution[0]
    alpha = solution.alpha_prime if hasattr(solution, "alpha_prime") else solution[1]
    gap = L.primal_objective(spec, X, y, w) - L.dual_objective(spec, X, y, alpha)
    if gap < GAP_FLOOR:
        raise WeakDualityError(f"P - D = {gap:.3e} < 0")
    return max(gap, 0.0)


def train(spec: ModelSpec, X, y, cfg: SolverConfig | None = None,
          imputed_choice: str = "midpoint", trace: list | None = None) -> PrimalDualSolution:
    """Fit w' on the concrete matrix X and return the primal/dual pair with caches."""
    cfg = cfg or SolverConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    if spec.is_classification and not np.all(np.isin(y, (-1.0, 1.0))):
        raise LabelDomainError(f"{spec.loss} loss needs labels in {{-1,+1}}")
    trace = [] if trace is None else trace
    if spec.loss == "hinge":
        w, alpha, converged, it = _hinge_dcd(spec, X, y, cfg)
        name = "dcd"
    elif spec.penalty.kind == "l2":
        w, alpha, converged, it = _newton(spec, X, y, cfg, trace)
        name = "newton"
    else:
        w, alpha, converged, it = _prox_gradient(spec, X, y, cfg, trace)
        name = "mfista"
    if not converged:
        log.warning("%s did not reach grad_tol=%g after %d iterations", name, cfg.grad_tol, it)
    gap = dual_residual_gap(spec, X, y, (w, alpha))
    return PrimalDualSolution(
        w_prime=w,
        alpha_prime=alpha,
        row_scores=X @ w,
        col_scores=X.T @ alpha,
        residual_gap=gap,
        imputed=X,
        labels=y,
        imputed_choice=imputed_choice,
        converged=converged,
        n_iter=it,
        solver=name,
    )
