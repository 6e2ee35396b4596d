"""CSV ingestion and the experiment preprocessing chain.

Order is fixed: split -> clip -> normalize -> inject missing -> assign
intervals. Quantiles everywhere use linear interpolation between order
statistics (numpy's default "linear" method).
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import IntervalMatrix

DIVERSE_MIN_DISTINCT = 10


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    test_fraction: float = 0.1
    clip_lo_pct: float = 0.5
    clip_hi_pct: float = 99.5
    missing_rate: float = 0.01
    coverage_alpha: float = 0.5
    seed: int = 0
    missing_markers: tuple[str, ...] = ("NA", "", "?")
    label_col: int = -1
    header: bool = False

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if not 0 <= self.missing_rate <= 1:
            raise ValueError("missing_rate must lie in [0, 1]")
        if not 0 < self.coverage_alpha < 1:
            raise ValueError("coverage_alpha must lie in (0, 1)")
        if not self.clip_lo_pct < self.clip_hi_pct:
            raise ValueError("clip_lo_pct must be below clip_hi_pct")
        object.__setattr__(self, "missing_markers", tuple(self.missing_markers))


@dataclass
class Table:
    """Feature matrix with NaN marking natively missing cells, plus labels."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = None

    @property
    def n(self):
        return self.X.shape[0]

    def take(self, rows) -> "Table":
        return Table(self.X[rows].copy(), self.y[rows].copy(), self.feature_names)


def load_csv(path, config: PipelineConfig = PipelineConfig()) -> Table:
    markers = set(config.missing_markers)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if config.header and rows:
        header, rows = rows[0], rows[1:]
    else:
        header = None
    if not rows:
        raise PipelineError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise PipelineError(f"{path}: need at least one feature and a label column")
    data = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        if len(r) != width:
            raise PipelineError(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
        for j, cell in enumerate(r):
            cell = cell.strip()
            if cell in markers:
                data[i, j] = np.nan
                continue
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise PipelineError(f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {j + 1}") from None
    label_col = config.label_col % width
    y = data[:, label_col]
    if np.any(np.isnan(y)):
        raise PipelineError(f"{path}: missing label")
    X = np.delete(data, label_col, axis=1)
    names = None
    if header is not None:
        names = [h for k, h in enumerate(header) if k != label_col]
    return Table(X, y, names)


def write_csv(path, table: Table, header: bool = False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            names = table.feature_names or [f"x{j}" for j in range(table.X.shape[1])]
            w.writerow(list(names) + ["y"])
        for xi, yi in zip(table.X, table.y):
            w.writerow(["NA" if np.isnan(v) else repr(float(v)) for v in xi] + [repr(float(yi))])


def split(table: Table, config: PipelineConfig) -> tuple[Table, Table]:
    n = table.n
    if n < 2:
        raise PipelineError("need at least two rows to split")
    n_test = min(max(int(round(n * config.test_fraction)), 1), n - 1)
    perm = np.random.default_rng(config.seed).permutation(n)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    return table.take(train_rows), table.take(test_rows)


def _is_diverse(col: np.ndarray) -> bool:
    return np.unique(col[~np.isnan(col)]).size > DIVERSE_MIN_DISTINCT


def clip_outliers(train: Table, test: Table, config: PipelineConfig = PipelineConfig()):
    """Clip diverse features to training percentiles; returns (train, test, bounds)."""
    d = train.X.shape[1]
    bounds: list[tuple[float, float] | None] = []
    tr, te = train.X.copy(), test.X.copy()
    for j in range(d):
        col = tr[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            raise PipelineError(f"feature {j} has no observed training values")
        if not _is_diverse(col):
            bounds.append(None)
            continue
        lo, hi = np.percentile(obs, [config.clip_lo_pct, config.clip_hi_pct])
        with np.errstate(invalid="ignore"):
            tr[:, j] = np.where(np.isnan(col), np.nan, np.clip(col, lo, hi))
            te[:, j] = np.where(np.isnan(te[:, j]), np.nan, np.clip(te[:, j], lo, hi))
        bounds.append((float(lo), float(hi)))
    return Table(tr, train.y, train.feature_names), Table(te, test.y, test.feature_names), bounds


def normalize(train: Table, test: Table):
    """Affine map per feature sending the training min to 0 and max to 1.

    Constant features map to 0. Returns (train, test, [(shift, scale), ...])
    where normalized = (x - shift) * scale.
    """
    d = train.X.shape[1]
    maps = []
    tr, te = train.X.copy(), test.X.copy()
    for j in range(d):
        obs = tr[:, j][~np.isnan(tr[:, j])]
        if obs.size == 0:
            raise PipelineError(f"feature {j} has no observed training values")
        lo, hi = float(obs.min()), float(obs.max())
        scale = 1.0 / (hi - lo) if hi > lo else 0.0
        maps.append((lo, scale))
        tr[:, j] = (tr[:, j] - lo) * scale
        te[:, j] = (te[:, j] - lo) * scale
    return Table(tr, train.y, train.feature_names), Table(te, test.y, test.feature_names), maps


def inject_missing(train: Table, config: PipelineConfig):
    """Blank round(n d b) observed cells chosen uniformly; returns (table, mask, ground_truth)."""
    n, d = train.X.shape
    k = int(np.floor(n * d * config.missing_rate + 0.5))
    observed = np.flatnonzero(~np.isnan(train.X).ravel())
    if k > observed.size:
        raise PipelineError(f"cannot blank {k} cells, only {observed.size} observed")
    mask = np.zeros(n * d, dtype=bool)
    if k:
        chosen = np.random.default_rng([config.seed, 1]).choice(observed, size=k, replace=False)
        mask[chosen] = True
    mask = mask.reshape(n, d)
    X = train.X.copy()
    truth = X[mask].copy()
    X[mask] = np.nan
    return Table(X, train.y, train.feature_names), mask, truth


def assign_intervals(train: Table, config: PipelineConfig) -> IntervalMatrix:
    """Missing (NaN) cells of feature j get [Q_j((1-a)/2), Q_j((1+a)/2)] over its observed values."""
    X = train.X
    lower = X.copy()
    upper = X.copy()
    a = config.coverage_alpha
    for j in range(X.shape[1]):
        miss = np.isnan(X[:, j])
        if not miss.any():
            continue
        obs = X[~miss, j]
        if obs.size < 2:
            raise PipelineError(f"feature {j}: quantiles undefined with {obs.size} observed values")
        qlo, qhi = np.quantile(obs, [(1 - a) / 2, (1 + a) / 2])
        lower[miss, j] = qlo
        upper[miss, j] = qhi
    return IntervalMatrix(lower, upper)


@dataclass
class PipelineResult:
    X: IntervalMatrix
    y: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    mask: np.ndarray            # injected cells
    ground_truth: np.ndarray    # original values of injected cells, row-major
    manifest: dict = field(default_factory=dict)


def _impute_test(test: Table, train_norm: Table):
    X = test.X.copy()
    filled = []
    for j in range(X.shape[1]):
        miss = np.isnan(X[:, j])
        if miss.any():
            obs = train_norm.X[:, j]
            med = float(np.median(obs[~np.isnan(obs)]))
            X[miss, j] = med
            filled.append([int(j), int(miss.sum()), med])
    return X, filled


def run_pipeline(table: Table, config: PipelineConfig, test: Table | None = None) -> PipelineResult:
    """Full preprocessing. When ``test`` is given no split is made."""
    if test is None:
        train, test = split(table, config)
    else:
        train = table
    train, test, clip_bounds = clip_outliers(train, test, config)
    train, test, maps = normalize(train, test)
    injected, mask, truth = inject_missing(train, config)
    X = assign_intervals(injected, config)
    X_test, filled = _impute_test(test, train)
    manifest = {
        "config": asdict(config),
        "seed": config.seed,
        "n_train": int(train.n),
        "n_test": int(test.n),
        "clip_bounds": clip_bounds,
        "clip_rule": f"features with more than {DIVERSE_MIN_DISTINCT} distinct observed values",
        "affine_maps": [{"shift": s, "scale": k} for s, k in maps],
        "missing_mask": np.argwhere(mask).tolist(),
        "native_missing": np.argwhere(np.isnan(train.X)).tolist(),
        "test_median_fill": filled,
        "quantile_method": "linear",
    }
    return PipelineResult(X, train.y.copy(), X_test, test.y.copy(), mask, truth, manifest)


def dumps(obj) -> str:
    """Deterministic JSON used for every artifact written by the CLI."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def synthetic_logistic(n: int = 2000, d: int = 20, seed: int = 0) -> Table:
    """Seeded logistic ground truth: x ~ N(0, I), w ~ N(0, I/d) * 3, y ~ Bernoulli(sigmoid(w^T x))."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d) * 3.0 / np.sqrt(d)
    p = 1.0 / (1.0 + np.exp(-(X @ w)))
    y = np.where(rng.random(n) < p, 1.0, -1.0)
    return Table(X, y, [f"x{j}" for j in range(d)])
