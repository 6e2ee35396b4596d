import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_interval_matrix
from ipub import losses as L
from ipub.bound import (UNKNOWN, CacheCorruptionError, classify_interval, compute_delta,
                        compute_extreme_scores, fit_ipub, linear_bounds, predict_interval,
                        uncertainty_ball)
from ipub.model import IntervalMatrix, ModelSpec, Penalty, PrimalDualSolution, TrainingSet, UncertaintyBall
from ipub.oracle import oracle_delta

SPECS = [ModelSpec(loss, pen) for loss in ("squared", "hinge", "logistic")
         for pen in (Penalty.l2(0.5), Penalty.elastic_net(0.5, 0.05))]


def handmade_solution(w, Xp, alpha=None, y=None):
    Xp = np.asarray(Xp, dtype=float)
    w = np.asarray(w, dtype=float)
    alpha = np.zeros(Xp.shape[0]) if alpha is None else np.asarray(alpha, dtype=float)
    return PrimalDualSolution(w, alpha, Xp @ w, Xp.T @ alpha, 0.0, Xp, labels=y)


def problem(seed, spec, n=4, d=2, M=2):
    rng = np.random.default_rng(seed)
    X = random_interval_matrix(rng, n, d, M)
    y = rng.choice([-1.0, 1.0], n) if spec.is_classification else rng.normal(size=n)
    return TrainingSet(X, y)


def test_extreme_scores_example():
    lower = np.array([[0.5, 0.0]])
    upper = np.array([[0.5, 1.0]])
    X = IntervalMatrix(lower, upper)
    ts = TrainingSet(X, np.array([1.0]))
    sol = handmade_solution([2.0, -1.0], [[0.5, 0.5]])
    assert sol.row_scores[0] == 0.5
    pm, pp, _, _ = compute_extreme_scores(sol, X, ts.index)
    # brute force over the endpoints of the box
    vals = [2.0 * 0.5 - 1.0 * x2 for x2 in (0.0, 1.0)]
    assert (pm[0], pp[0]) == (min(vals), max(vals)) == (0.0, 1.0)


def test_extreme_scores_zero_weight_and_observed_rows():
    lower = np.array([[0.0, 1.0], [2.0, 3.0]])
    upper = np.array([[1.0, 1.0], [2.0, 3.0]])
    X = IntervalMatrix(lower, upper)
    Xp = X.midpoint()
    sol = handmade_solution([0.0, 1.0], Xp, alpha=[0.3, -0.2])
    ts = TrainingSet(X, np.array([0.0, 0.0]))
    pm, pp, qm, qp = compute_extreme_scores(sol, X, ts.index)
    assert list(ts.index.rows_with_missing) == [0]
    assert pm[0] == pp[0] == sol.row_scores[0]
    assert qm[0] == pytest.approx(sol.col_scores[0] - 0.15) and qp[0] == pytest.approx(sol.col_scores[0] + 0.15)


def test_imputed_outside_box_rejected():
    X = IntervalMatrix(np.array([[0.0]]), np.array([[1.0]]))
    ts = TrainingSet(X, np.array([1.0]))
    sol = handmade_solution([1.0], [[2.0]])
    with pytest.raises(ValueError):
        compute_extreme_scores(sol, X, ts.index)


def test_delta_zero_missing():
    spec = ModelSpec("logistic", Penalty.l2(1.0))
    ts = problem(0, spec, n=10, d=3, M=0)
    res = fit_ipub(spec, ts)
    assert res.breakdown.loss_term == 0.0 and res.breakdown.penalty_term == 0.0
    assert res.breakdown.delta_total == res.solution.residual_gap


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.loss}-{s.penalty.kind}")
def test_delta_matches_corner_oracle(spec):
    for seed in range(20):
        ts = problem(seed, spec, n=4, d=2, M=2)
        res = fit_ipub(spec, ts)
        lp, dd = oracle_delta(spec, res.solution, ts.X, ts.index)
        assert res.breakdown.loss_term == pytest.approx(lp, abs=1e-10)
        assert res.breakdown.penalty_term == pytest.approx(dd, abs=1e-10)
        br = res.breakdown
        rs = res.solution.row_scores[br.rows]
        cs = res.solution.col_scores[br.cols]
        assert np.all(br.p_minus <= rs + 1e-15) and np.all(rs <= br.p_plus + 1e-15)
        assert np.all(br.q_minus <= cs + 1e-15) and np.all(cs <= br.q_plus + 1e-15)
        assert br.loss_term >= 0 and br.penalty_term >= 0


@pytest.mark.parametrize("spec", SPECS[::2], ids=lambda s: s.loss)
def test_loss_term_row_grid_search(spec):
    """Loss term against a dense search over each row box (rows with at most 2 missing cells)."""
    for seed in range(10):
        ts = problem(100 + seed, spec, n=5, d=3, M=4)
        if any(len(c) > 2 for c in ts.index.cols_per_row.values()):
            continue
        res = fit_ipub(spec, ts)
        w, Xp, y = res.solution.w_prime, res.solution.imputed, ts.y
        total = 0.0
        for i, cols in ts.index.cols_per_row.items():
            axes = [np.linspace(ts.X.lower[i, j], ts.X.upper[i, j], 401) for j in cols]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(cols))
            xs = np.repeat(Xp[i][None, :], pts.shape[0], axis=0)
            xs[:, cols] = pts
            best = float(np.max(L.loss_value(spec.loss, y[i], xs @ w)))
            total += best - float(L.loss_value(spec.loss, y[i], Xp[i] @ w))
        assert res.breakdown.loss_term == pytest.approx(total / ts.X.n, abs=1e-8)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.sampled_from(SPECS), st.floats(1.0, 3.0))
def test_widening_nondecreasing(seed, spec, factor):
    ts = problem(seed, spec, n=6, d=3, M=4)
    sol = fit_ipub(spec, ts).solution
    base = compute_delta(spec, sol, ts.X, ts.index)
    wide = compute_delta(spec, sol, ts.X.scaled(factor), ts.index)
    assert wide.delta_total >= base.delta_total - 1e-15


def test_cache_corruption_detected(monkeypatch):
    """Extreme scores that fail to bracket the nominal score give a negative summand."""
    import ipub.bound as B
    spec = ModelSpec("squared", Penalty.l2(1.0))
    ts = problem(3, spec, n=5, d=2, M=3)
    sol = fit_ipub(spec, ts).solution
    real = B.compute_extreme_scores

    def broken(solution, X, index):
        pm, pp, qm, qp = real(solution, X, index)
        exact = ts.y[index.rows_with_missing]      # zero loss at both ends
        return exact, exact, qm, qp

    monkeypatch.setattr(B, "compute_extreme_scores", broken)
    with pytest.raises(CacheCorruptionError):
        compute_delta(spec, sol, ts.X, ts.index)


def test_ball_examples():
    assert uncertainty_ball(0.0, 1.0, np.zeros(2)).radius == 0.0
    assert uncertainty_ball(0.5, 1.0, np.zeros(2)).radius == 1.0
    assert uncertainty_ball(2.0, 4.0, np.zeros(2)).radius == 1.0


def test_predict_interval_example():
    ball = UncertaintyBall(np.array([1.0, 1.0]), 0.5, 1.0)
    pi = predict_interval(ball, np.array([3.0, 4.0]))
    assert (pi.linear_lo, pi.linear_hi) == (2.0, 12.0)
    # oracle: w^T x over many points sampled on the sphere boundary
    rng = np.random.default_rng(0)
    u = rng.normal(size=(200000, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    vals = (ball.center + u * ball.radius) @ np.array([3.0, 4.0])
    assert vals.min() >= 2.0 - 1e-12 and vals.max() <= 12.0 + 1e-12
    assert vals.min() == pytest.approx(2.0, abs=1e-6) and vals.max() == pytest.approx(12.0, abs=1e-6)


def test_predict_interval_degenerate():
    ball = UncertaintyBall(np.array([1.0, -2.0]), 0.7, 1.0)
    pi = predict_interval(ball, np.zeros(2), "sigmoid")
    assert pi.value_lo == pi.value_hi == 0.5
    ball0 = UncertaintyBall(np.array([1.0, -2.0]), 0.0, 1.0)
    pi = predict_interval(ball0, np.array([1.0, 1.0]), "identity")
    assert pi.linear_lo == pi.linear_hi == -1.0


def test_classify_examples():
    def ball_for(lo, hi):
        # x = (1,), center and radius chosen so the linear interval is [lo, hi]
        c, r = (lo + hi) / 2, (hi - lo) / 2
        return UncertaintyBall(np.array([c]), r * r / 2, 1.0)

    x = np.array([1.0])
    assert classify_interval(ball_for(0.2, 1.0), x) == 1
    assert classify_interval(ball_for(-1.0, -0.2), x) == -1
    assert classify_interval(ball_for(-0.1, 0.1), x) == UNKNOWN
    assert classify_interval(UncertaintyBall(np.array([0.0]), 0.0, 1.0), x) == UNKNOWN
    assert predict_interval(ball_for(0.2, 1.0), x, "sign").label == 1


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_interval_brackets_point_and_link_monotone(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    ball = UncertaintyBall(rng.normal(size=d), float(rng.uniform(0, 2)), float(rng.uniform(0.1, 2)))
    X = rng.normal(size=(7, d))
    lo, hi = linear_bounds(ball, X)
    point = X @ ball.center
    assert np.all(lo <= point) and np.all(point <= hi)
    for x in X:
        pi = predict_interval(ball, x, "sigmoid")
        assert pi.linear_lo <= pi.linear_hi and pi.value_lo <= pi.value_hi
        assert 0.0 <= pi.value_lo and pi.value_hi <= 1.0
