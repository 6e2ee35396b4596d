import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_interval_matrix(rng, n, d, n_missing, width=(0.05, 0.6)):
    from ipub.model import IntervalMatrix
    X = rng.uniform(-1, 1, (n, d))
    lower, upper = X.copy(), X.copy()
    if n_missing:
        cells = rng.choice(n * d, size=n_missing, replace=False)
        lower.flat[cells] -= rng.uniform(*width, n_missing)
        upper.flat[cells] += rng.uniform(*width, n_missing)
    return IntervalMatrix(lower, upper)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
