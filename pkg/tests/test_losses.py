import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipub import losses as L
from ipub.model import DualInfeasibleError, LabelDomainError, ModelSpec, Penalty

finite = dict(allow_nan=False, allow_infinity=False)


# -- values -------------------------------------------------------------------

def test_loss_value_examples():
    assert L.loss_value("squared", 1.0, 1.0) == 0.0
    assert L.loss_value("hinge", 1.0, 0.5) == 0.5
    assert L.loss_value("logistic", 1.0, 0.0) == pytest.approx(0.693147, abs=1e-6)


def test_logistic_overflow_safe():
    assert L.loss_value("logistic", 1.0, -1000.0) == pytest.approx(1000.0)
    assert L.loss_value("logistic", 1.0, 1000.0) == 0.0


def test_label_domain_error():
    with pytest.raises(LabelDomainError):
        L.loss_value("hinge", 0.5, 1.0)


def test_conjugate_examples():
    assert L.loss_conjugate("squared", 1.0, 2.0) == -1.0
    assert L.loss_conjugate("hinge", 1.0, 0.5) == -0.5
    assert L.loss_conjugate("logistic", 1.0, 1.0) == 0.0
    assert L.loss_conjugate("logistic", 1.0, 0.0) == 0.0


def test_conjugate_domain():
    with pytest.raises(DualInfeasibleError):
        L.loss_conjugate("hinge", 1.0, 1.5)
    with pytest.raises(DualInfeasibleError):
        L.loss_conjugate("logistic", -1.0, 0.5)
    # inside the slack the value is clamped
    assert L.loss_conjugate("hinge", 1.0, 1.0 + 1e-13) == -1.0


@given(st.sampled_from([-1.0, 1.0]), st.floats(1e-6, 1 - 1e-6))
def test_logistic_conjugate_matches_absolute_value_form(y, t):
    a = t * y
    table_form = (1 - a / y) * math.log(abs(y - a)) + (a / y) * math.log(abs(a)) - math.log(abs(y))
    assert L.loss_conjugate("logistic", y, a) == pytest.approx(table_form, abs=1e-12)


def test_subderivative_examples():
    s = L.loss_subderivative("squared", 1.0, 1.0)
    assert (s.lo, s.hi) == (0.0, 0.0)
    s = L.loss_subderivative("logistic", 1.0, 0.0)
    assert (s.lo, s.hi) == (-0.5, -0.5)
    s = L.loss_subderivative("hinge", 1.0, 1.0)
    assert (s.lo, s.hi) == (-1.0, 0.0)
    s = L.loss_subderivative("hinge", -1.0, -1.0)
    assert (s.lo, s.hi) == (0.0, 1.0)
    assert L.loss_subderivative("hinge", 1.0, 2.0).hi == 0.0
    assert L.loss_subderivative("hinge", 1.0, 0.0).lo == -1.0


def test_penalty_examples():
    assert L.penalty_value(Penalty.l2(2.0), [1.0, 1.0]) == 2.0
    assert L.penalty_value(Penalty.elastic_net(2.0, 1.0), [1.0, -1.0]) == 4.0
    assert L.penalty_value(Penalty.elastic_net(2.0, 1.0), [0.0, 0.0]) == 0.0
    assert L.penalty_conjugate_component(Penalty.l2(1.0), 0.5) == 0.125
    assert L.penalty_conjugate_component(Penalty.elastic_net(1.0, 1.0), 0.5) == 0.0
    assert L.penalty_conjugate_component(Penalty.elastic_net(1.0, 1.0), 3.0) == 2.0
    np.testing.assert_array_equal(L.penalty_conjugate_gradient(Penalty.l2(2.0), [4.0, -2.0]), [2.0, -1.0])
    assert L.penalty_conjugate_gradient(Penalty.elastic_net(1.0, 1.0), 0.5) == 0.0
    assert L.penalty_conjugate_gradient(Penalty.elastic_net(1.0, 1.0), -3.0) == -2.0


# -- objectives ---------------------------------------------------------------

def test_primal_examples():
    spec = ModelSpec("squared", Penalty.l2(1.0))
    y = np.array([1.0, -2.0, 3.0])
    assert L.primal_objective(spec, np.ones((3, 2)), y, np.zeros(2)) == pytest.approx(np.mean(y ** 2))
    assert L.primal_objective(spec, np.array([[2.0]]), np.array([1.0]), np.array([1.0])) == 1.5
    with pytest.raises(ValueError):
        L.primal_objective(spec, np.ones((3, 2)), y, np.zeros(3))


def test_dual_examples():
    X = np.array([[1.0]])
    y = np.array([1.0])
    assert L.dual_objective(ModelSpec("squared", Penalty.l2(1.0)), X, y, np.array([2.0])) == -1.0
    Xh = np.random.default_rng(0).normal(size=(5, 3))
    yh = np.array([1.0, -1, 1, -1, 1])
    assert L.dual_objective(ModelSpec("hinge", Penalty.l2(1.0)), Xh, yh, np.zeros(5)) == 0.0
    with pytest.raises(DualInfeasibleError):
        L.dual_objective(ModelSpec("hinge", Penalty.l2(1.0)), Xh, yh, np.full(5, 0.5))


SPECS = [ModelSpec(loss, pen) for loss in ("squared", "hinge", "logistic")
         for pen in (Penalty.l2(0.7), Penalty.elastic_net(0.7, 0.05))]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.loss}-{s.penalty.kind}")
def test_weak_duality_random_pairs(spec):
    rng = np.random.default_rng(1)
    for _ in range(50):
        n, d = rng.integers(2, 10), rng.integers(1, 5)
        X = rng.normal(size=(n, d))
        if spec.is_classification:
            y = rng.choice([-1.0, 1.0], n)
            alpha = y * rng.random(n)
        else:
            y = rng.normal(size=n)
            alpha = rng.normal(size=n)
        w = rng.normal(size=d)
        assert L.dual_objective(spec, X, y, alpha) <= L.primal_objective(spec, X, y, w) + 1e-12
        assert L.primal_objective(spec, X, y, w) >= 0


# -- oracles --------------------------------------------------------------------

GRID = np.linspace(-50.0, 50.0, 2_000_001)


def grid_conjugate(loss, y, alpha):
    """sup_u (-alpha u - l(y, u)) by brute force over a dense grid."""
    return float(np.max(-alpha * GRID - L.loss_value(loss, y, GRID)))


@pytest.mark.parametrize("loss", ["squared", "hinge", "logistic"])
def test_conjugate_grid_oracle(loss):
    rng = np.random.default_rng({"squared": 1, "hinge": 2, "logistic": 3}[loss])
    worst = 0.0
    for _ in range(100):
        if loss == "squared":
            y = rng.uniform(-3, 3)
            alpha = rng.uniform(-10, 10)
        else:
            y = float(rng.choice([-1.0, 1.0]))
            alpha = y * rng.uniform(0, 1)
        worst = max(worst, abs(float(L.loss_conjugate(loss, y, alpha)) - grid_conjugate(loss, y, alpha)))
    assert worst <= 1e-3


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_derivative_finite_differences(loss):
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(200):
        y = rng.normal() if loss == "squared" else float(rng.choice([-1.0, 1.0]))
        v = rng.uniform(-5, 5)
        g = L.loss_subderivative(loss, y, v).lo
        fd = (L.loss_value(loss, y, v + h) - L.loss_value(loss, y, v - h)) / (2 * h)
        assert abs(g - fd) <= 1e-5 * (1 + abs(g))


def test_hinge_derivative_away_from_kink():
    h = 1e-6
    for y in (-1.0, 1.0):
        for v in (-2.0, -0.3, 0.4, 1.7, 3.0):
            if abs(y * v - 1.0) < 0.01:
                continue
            g = L.loss_subderivative("hinge", y, v).lo
            fd = (L.loss_value("hinge", y, v + h) - L.loss_value("hinge", y, v - h)) / (2 * h)
            assert abs(g - fd) <= 1e-5 * (1 + abs(g))


@settings(max_examples=300)
@given(st.sampled_from([Penalty.l2(0.3), Penalty.l2(2.0), Penalty.elastic_net(1.0, 0.5),
                        Penalty.elastic_net(0.2, 0.05)]),
       st.floats(-5, 5, **finite))
def test_penalty_conjugate_gradient_is_derivative(pen, s):
    if pen.kind == "elastic_net" and abs(abs(s) - pen.kappa) < 1e-3:
        return
    h = 1e-6
    fd = (L.penalty_conjugate_component(pen, s + h) - L.penalty_conjugate_component(pen, s - h)) / (2 * h)
    g = float(L.penalty_conjugate_gradient(pen, s))
    assert abs(g - fd) <= 1e-5 * (1 + abs(g))


@settings(max_examples=200)
@given(st.sampled_from([Penalty.l2(0.5), Penalty.elastic_net(0.5, 0.2)]),
       st.floats(-3, 3, **finite), st.floats(-3, 3, **finite))
def test_penalty_fenchel_young(pen, s, w):
    """rho(w) + rho*(s) >= s w, with equality at w = grad rho*(s)."""
    assert L.penalty_value(pen, [w]) + L.penalty_conjugate_component(pen, s) >= s * w - 1e-12
    w_star = float(L.penalty_conjugate_gradient(pen, s))
    gap = L.penalty_value(pen, [w_star]) + L.penalty_conjugate_component(pen, s) - s * w_star
    assert abs(gap) <= 1e-12 * (1 + abs(s) ** 2)
