"""Brute-force ground truth: enumerate imputations, retrain, record ranges."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import losses as L
from .bound import apply_link
from .model import IntervalMatrix, MissingIndex, ModelSpec, TrainingSet, build_missing_index
from .solver import SolverConfig, train


@dataclass(frozen=True)
class OracleBudget:
    max_corner_bits: int = 10
    interior_samples: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.max_corner_bits <= 20:
            raise ValueError("max_corner_bits must lie in [0, 20]")
        if self.interior_samples < 0:
            raise ValueError("interior_samples must be nonnegative")


def _corner_bits(M: int, budget: OracleBudget, rng):
    if M <= budget.max_corner_bits:
        for bits in itertools.product((0, 1), repeat=M):
            yield np.array(bits, dtype=bool)
    else:
        for _ in range(2 ** budget.max_corner_bits):
            yield rng.random(M) < 0.5


def enumerate_imputations(X: IntervalMatrix, budget: OracleBudget, index: MissingIndex | None = None):
    """Yield (kind, matrix) pairs: corners first, then uniform interior draws.

    All 2^M corners when M <= max_corner_bits, otherwise 2^max_corner_bits
    random corners. With M = 0 the single observed matrix is emitted.
    """
    index = index or build_missing_index(X)
    r, c = index.rows, index.cols
    lo = X.lower[r, c]
    hi = X.upper[r, c]
    base = X.midpoint()
    rng = np.random.default_rng(budget.seed)
    if index.M == 0:
        yield "observed", base.copy()
        return
    for bits in _corner_bits(index.M, budget, rng):
        Xc = base.copy()
        Xc[r, c] = np.where(bits, hi, lo)
        yield "corner", Xc
    for _ in range(budget.interior_samples):
        Xc = base.copy()
        Xc[r, c] = rng.uniform(lo, hi)
        yield "interior", Xc


@dataclass
class ImputationRecord:
    position: int
    kind: str
    w: np.ndarray
    predictions: np.ndarray
    converged: bool
    residual_gap: float


@dataclass
class OracleRange:
    empirical_min: np.ndarray
    empirical_max: np.ndarray
    records: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [r for r in self.records if not r.converged]


def oracle_prediction_range(spec: ModelSpec, trainset: TrainingSet, x_test, budget: OracleBudget,
                            cfg: SolverConfig | None = None, n_jobs: int = 1) -> OracleRange:
    """Retrain on every enumerated imputation and take extremes of g(w''^T x).

    ``x_test`` may be one point or a matrix of points; the range arrays have
    one entry per point. This is an inner approximation of the true range.
    """
    cfg = cfg or SolverConfig()
    Xt = np.atleast_2d(np.asarray(x_test, dtype=float))
    y = trainset.y

    def fit(item):
        pos, (kind, Xc) = item
        sol = train(spec, Xc, y, cfg, imputed_choice=kind)
        pred = apply_link(spec.link, Xt @ sol.w_prime)
        return ImputationRecord(pos, kind, sol.w_prime, pred, sol.converged, sol.residual_gap)

    items = enumerate(enumerate_imputations(trainset.X, budget, trainset.index))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            records = list(pool.map(fit, items))
    else:
        records = [fit(it) for it in items]
    records.sort(key=lambda r: r.position)
    preds = np.array([r.predictions for r in records])
    return OracleRange(preds.min(axis=0), preds.max(axis=0), records)


def oracle_delta(spec: ModelSpec, solution, X: IntervalMatrix, index: MissingIndex | None = None,
                 budget: OracleBudget | None = None, y=None):
    """(max P_{X''}(w') - P_{X'}(w'), D_{X'}(alpha') - min D_{X''}(alpha')) over corners.

    Exact for M <= budget.max_corner_bits: with w' and alpha' fixed both
    objectives are coordinatewise convex in x'' and so attain their extremes
    on corners.
    """
    budget = budget or OracleBudget(interior_samples=0)
    budget = OracleBudget(budget.max_corner_bits, 0, budget.seed)
    y = solution.labels if y is None else np.asarray(y, dtype=float)
    w, a = solution.w_prime, solution.alpha_prime
    Xp = solution.imputed
    p0 = L.primal_objective(spec, Xp, y, w)
    d0 = L.dual_objective(spec, Xp, y, a)
    best_p = -np.inf
    worst_d = np.inf
    for _, Xc in enumerate_imputations(X, budget, index):
        best_p = max(best_p, L.primal_objective(spec, Xc, y, w))
        worst_d = min(worst_d, L.dual_objective(spec, Xc, y, a))
    return best_p - p0, d0 - worst_d
