"""End-to-end runs behind the CLI: bound a test set, compare against the
interval Newton baseline over a parameter grid, and self-check the
guarantee on random small instances."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .bound import apply_link, compute_delta, fit_ipub, linear_bounds, uncertainty_ball
from .inewton import inewton_bounds, inewton_enclose, initial_box
from .model import IntervalMatrix, ModelSpec, Penalty, TrainingSet, validate
from .oracle import OracleBudget, enumerate_imputations, oracle_delta, oracle_prediction_range
from .pipeline import PipelineConfig, PipelineResult, Table, run_pipeline
from .solver import SolverConfig, train

log = logging.getLogger(__name__)

CONTAINMENT_SLACK = 1e-7
DELTA_TOL = 1e-10


def prepare_labels(y, loss: str) -> np.ndarray:
    """Classification labels in {0, 1} are mapped to {-1, +1}."""
    y = np.asarray(y, dtype=float)
    if loss in ("hinge", "logistic"):
        vals = set(np.unique(y).tolist())
        if vals <= {0.0, 1.0}:
            return np.where(y > 0, 1.0, -1.0)
    return y


def make_spec(loss: str, penalty: str, lam: float, kappa: float = 0.0) -> ModelSpec:
    pen = Penalty.l2(lam) if penalty == "l2" else Penalty.elastic_net(lam, kappa)
    return ModelSpec(loss, pen)


# --------------------------------------------------------------------------
# bound
# --------------------------------------------------------------------------

def bound_records(spec: ModelSpec, res, X_test):
    lin_lo, lin_hi, val_lo, val_hi = res.intervals(X_test, spec.link)
    point = apply_link(spec.link, X_test @ res.solution.w_prime)
    recs = []
    for k in range(X_test.shape[0]):
        rec = {
            "point_id": k,
            "linear_lo": float(lin_lo[k]),
            "linear_hi": float(lin_hi[k]),
            "ipub_lo": float(val_lo[k]),
            "ipub_hi": float(val_hi[k]),
            "point_prediction": float(point[k]),
        }
        if spec.is_classification:
            rec["label"] = 1 if lin_lo[k] > 0 else (-1 if lin_hi[k] < 0 else "unknown")
        recs.append(rec)
    return recs


def coverage_rate(pr: PipelineResult) -> float | None:
    """Share of injected ground-truth values that fall inside their assigned interval."""
    if pr.ground_truth.size == 0:
        return None
    lo = pr.X.lower[pr.mask]
    hi = pr.X.upper[pr.mask]
    inside = (lo <= pr.ground_truth) & (pr.ground_truth <= hi)
    return float(inside.mean())


def run_bound(spec: ModelSpec, pr: PipelineResult, scfg: SolverConfig) -> dict:
    ts = TrainingSet(pr.X, prepare_labels(pr.y, spec.loss))
    report = validate(ts, spec)
    if not report.ok:
        raise ValueError("; ".join(report.violations))
    res = fit_ipub(spec, ts, scfg)
    summary = res.breakdown.summary()
    summary.update({
        "radius": res.ball.radius,
        "lambda": spec.lam,
        "center": res.solution.w_prime.tolist(),
        "M": ts.index.M,
        "solver": res.solution.solver,
        "converged": bool(res.solution.converged),
    })
    return {
        "version": __version__,
        "spec": {"loss": spec.loss, "penalty": asdict(spec.penalty), "link": spec.link},
        "solver_config": asdict(scfg),
        "ball": summary,
        "coverage_rate": coverage_rate(pr),
        "intervals": bound_records(spec, res, pr.X_test),
    }


# --------------------------------------------------------------------------
# grid experiment
# --------------------------------------------------------------------------

def histogram(lengths, bin_width: float, upper: float | None = None):
    """Normalised histogram of interval lengths as (bin_lo, bin_hi, mass) rows."""
    lengths = np.asarray(lengths, dtype=float)
    top = upper if upper is not None else max(float(lengths.max(initial=0.0)), bin_width)
    nbins = max(int(np.ceil(top / bin_width - 1e-9)), 1)
    edges = np.arange(nbins + 1) * bin_width
    counts, _ = np.histogram(np.clip(lengths, 0.0, edges[-1]), bins=edges)
    mass = counts / max(lengths.size, 1)
    return [(float(edges[k]), float(edges[k + 1]), float(mass[k])) for k in range(nbins)]


def _median_time(fn, repeats: int):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


@dataclass(frozen=True, order=True)
class CellSpec:
    b: float
    alpha: float
    lam: float

    @property
    def name(self):
        return f"b={self.b:g},alpha={self.alpha:g},lambda={self.lam:g}"


def run_cell(table: Table, cell: CellSpec, seed: int, scfg: SolverConfig, *, repeats: int = 5,
             inewton_iter: int = 20, bin_width: float = 0.02, oracle_points: int = 0,
             oracle_budget: OracleBudget | None = None) -> dict:
    """Pipeline + IPUB + INewton (+ optional oracle spot check) for one grid cell (logistic, l2)."""
    spec = make_spec("logistic", "l2", cell.lam)
    pcfg = PipelineConfig(missing_rate=cell.b, coverage_alpha=cell.alpha, seed=seed)
    pr = run_pipeline(table, pcfg)
    ts = TrainingSet(pr.X, prepare_labels(pr.y, "logistic"))
    Xt = pr.X_test

    def ipub_run():
        res = fit_ipub(spec, ts, scfg)
        return res, res.intervals(Xt, spec.link)

    t_train, (res, (lin_lo, lin_hi, ip_lo, ip_hi)) = _median_time(ipub_run, repeats)
    box0 = initial_box(res.solution.w_prime, res.ball.radius)

    def inewton_run():
        out = inewton_enclose(ts, spec.lam, inewton_iter, box0)
        return out, inewton_bounds(out.box, Xt)

    t_in, (inr, (zl, zh)) = _median_time(inewton_run, repeats)
    in_lo, in_hi = apply_link("sigmoid", zl), apply_link("sigmoid", zh)
    point = apply_link("sigmoid", Xt @ res.solution.w_prime)

    records = []
    for k in range(Xt.shape[0]):
        records.append({
            "point_id": k,
            "ipub_lo": float(ip_lo[k]), "ipub_hi": float(ip_hi[k]),
            "inewton_lo": float(in_lo[k]), "inewton_hi": float(in_hi[k]),
            "point_prediction": float(point[k]),
        })

    oracle_summary = None
    if oracle_points:
        pick = np.random.default_rng([seed, 2]).choice(Xt.shape[0], size=min(oracle_points, Xt.shape[0]),
                                                       replace=False)
        pick.sort()
        budget = oracle_budget or OracleBudget(seed=seed)
        orc = oracle_prediction_range(spec, ts, Xt[pick], budget, scfg)
        ipub_ok = (ip_lo[pick] - CONTAINMENT_SLACK <= orc.empirical_min) & \
            (orc.empirical_max <= ip_hi[pick] + CONTAINMENT_SLACK)
        in_ok = (in_lo[pick] - CONTAINMENT_SLACK <= orc.empirical_min) & \
            (orc.empirical_max <= in_hi[pick] + CONTAINMENT_SLACK)
        for k, p in enumerate(pick):
            records[p]["oracle_min"] = float(orc.empirical_min[k])
            records[p]["oracle_max"] = float(orc.empirical_max[k])
        oracle_summary = {
            "points": pick.tolist(),
            "imputations": len(orc.records),
            "non_converged": len(orc.failures),
            "ipub_contains": int(ipub_ok.sum()),
            "inewton_contains": int(in_ok.sum()),
        }

    ipub_len = ip_hi - ip_lo
    in_len = in_hi - in_lo
    hist = {
        "ipub": histogram(ipub_len, bin_width, 1.0),
        "inewton": histogram(in_len, bin_width, 1.0),
    }
    return {
        "cell": cell.name,
        "b": cell.b, "alpha": cell.alpha, "lambda": cell.lam,
        "M": ts.index.M,
        "radius": res.ball.radius,
        "delta": res.breakdown.summary(),
        "coverage_rate": coverage_rate(pr),
        "inewton": {"iterations": inr.iterations, "contracted": inr.contracted, "verified": inr.verified},
        "median_length": {"ipub": float(np.median(ipub_len)), "inewton": float(np.median(in_len))},
        "timing": {
            "train_seconds": t_train,
            "ipub_seconds": t_train,
            "inewton_seconds": t_in,
            "time_ratio": t_train / t_in if t_in > 0 else None,
            "method": f"median of {repeats} wall-clock runs; IPUB = train + delta + bounds, "
                      "INewton = enclosure + interval prediction",
        },
        "oracle": oracle_summary,
        "records": records,
        "histograms": hist,
        "manifest": pr.manifest,
    }


# --------------------------------------------------------------------------
# oracle self-check on random small instances
# --------------------------------------------------------------------------

COMBOS = [(loss, pen) for loss in ("squared", "logistic", "hinge") for pen in ("l2", "elastic_net")]


def random_instance(seed: int, combo=None, max_missing: int = 8, zero_missing: bool = False):
    """Small seeded problem: (spec, trainset, test points)."""
    rng = np.random.default_rng(seed)
    loss, pen = combo if combo is not None else COMBOS[seed % len(COMBOS)]
    n = int(rng.integers(4, 31))
    d = int(rng.integers(1, 6))
    lam = float(rng.choice([0.1, 0.5, 1.0]))
    kappa = float(rng.uniform(0.005, 0.1)) if pen == "elastic_net" else 0.0
    spec = make_spec(loss, pen, lam, kappa)
    X = rng.uniform(-1.0, 1.0, (n, d))
    if loss == "squared":
        y = X @ rng.normal(size=d) + 0.3 * rng.normal(size=n)
    else:
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    M = 0 if zero_missing else int(rng.integers(0, min(max_missing, n * d) + 1))
    lower, upper = X.copy(), X.copy()
    if M:
        cells = rng.choice(n * d, size=M, replace=False)
        lower.flat[cells] -= rng.uniform(0.05, 0.6, M)
        upper.flat[cells] += rng.uniform(0.05, 0.6, M)
    ts = TrainingSet(IntervalMatrix(lower, upper), y)
    X_test = rng.uniform(-1.5, 1.5, (5, d))
    return spec, ts, X_test


@dataclass
class CheckOutcome:
    seed: int
    combo: tuple
    M: int
    violations: list
    max_distance_ratio: float
    delta_error: float


def check_instance(seed: int, scfg: SolverConfig, budget: OracleBudget, radius_scale: float = 1.0,
                   zero_missing: bool = False, combo=None) -> CheckOutcome:
    spec, ts, X_test = random_instance(seed, combo=combo, zero_missing=zero_missing)
    res = fit_ipub(spec, ts, scfg)
    ball = res.ball.with_radius_scale(radius_scale) if radius_scale != 1.0 else res.ball
    r = ball.radius
    lin_lo, lin_hi = linear_bounds(ball, X_test)
    val_lo, val_hi = apply_link(spec.link, lin_lo), apply_link(spec.link, lin_hi)
    violations = []

    worst_ratio = 0.0
    for pos, (kind, Xc) in enumerate(enumerate_imputations(ts.X, budget, ts.index)):
        sol = train(spec, Xc, ts.y, scfg)
        dist = float(np.linalg.norm(sol.w_prime - res.solution.w_prime))
        if r > 0:
            worst_ratio = max(worst_ratio, dist / r)
        if dist > r + CONTAINMENT_SLACK:
            violations.append(f"containment: {kind} imputation {pos}: |w''-w'| = {dist:.3e} > radius {r:.3e}")
        pred = apply_link(spec.link, X_test @ sol.w_prime)
        bad = (pred < val_lo - CONTAINMENT_SLACK) | (pred > val_hi + CONTAINMENT_SLACK)
        if bad.any():
            violations.append(f"prediction: {kind} imputation {pos}: {int(bad.sum())} test points outside")

    lp, dd = oracle_delta(spec, res.solution, ts.X, ts.index, OracleBudget(budget.max_corner_bits, 0, seed))
    err = max(abs(lp - res.breakdown.loss_term), abs(dd - res.breakdown.penalty_term))
    if err > DELTA_TOL:
        violations.append(f"delta: corner oracle differs by {err:.3e}")

    prev_delta, prev_len = np.inf, np.inf
    for t in (1.0, 0.5, 0.25):
        Xs = ts.X.scaled(t)
        br = compute_delta(spec, res.solution, Xs, ts.index)
        ball_t = uncertainty_ball(br, spec.lam, res.solution.w_prime)
        lo_t, hi_t = linear_bounds(ball_t, X_test)
        length = float(np.max(hi_t - lo_t))
        if br.delta_total > prev_delta + 1e-15 or length > prev_len + 1e-12:
            violations.append(f"shrinkage: t={t} increased delta or interval length")
        prev_delta, prev_len = br.delta_total, length
    if zero_missing and res.breakdown.delta_total != res.breakdown.residual_gap:
        violations.append("zero-missing: delta_total differs from residual_gap")
    return CheckOutcome(seed, (spec.loss, spec.penalty.kind), ts.index.M, violations, worst_ratio, err)
