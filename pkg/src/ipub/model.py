"""Shared domain types for interval-valued training data and IPUB results.

Everything here is an immutable container plus validation. Arrays handed to
the constructors are copied and marked read-only so instances can be shared
freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

LOSSES = ("squared", "hinge", "logistic")
PENALTIES = ("l2", "elastic_net")
LINKS = ("identity", "sign", "sigmoid")
DEFAULT_LINK = {"squared": "identity", "hinge": "sign", "logistic": "sigmoid"}


class LabelDomainError(ValueError):
    """Raised when an output value lies outside the loss's label domain."""


class DualInfeasibleError(ValueError):
    """Raised when a dual variable falls outside the conjugate's domain."""


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class IntervalMatrix:
    """Elementwise bounds ``lower <= X* <= upper`` on an n-by-d input matrix.

    An entry is missing exactly when ``lower < upper``; observed entries carry
    ``lower == upper``.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower)
        hi = _frozen(self.upper)
        if lo.ndim != 2 or lo.shape != hi.shape:
            raise ValueError(f"lower/upper must be matching 2-d arrays, got {lo.shape} and {hi.shape}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_observed(cls, X) -> "IntervalMatrix":
        X = np.asarray(X, dtype=float)
        return cls(X, X)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def d(self) -> int:
        return self.lower.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape

    @property
    def missing_mask(self) -> np.ndarray:
        return self.lower < self.upper

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def violations(self) -> list[str]:
        out = []
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            bad = np.argwhere(~(np.isfinite(self.lower) & np.isfinite(self.upper)))
            i, j = bad[0]
            out.append(f"non-finite value at ({i},{j})")
        for i, j in np.argwhere(self.lower > self.upper):
            out.append(f"interval ordering at ({i},{j})")
        return out

    def scaled(self, t: float, center: np.ndarray | None = None) -> "IntervalMatrix":
        """Shrink or widen every interval by factor ``t`` around ``center`` (midpoint by default)."""
        c = self.midpoint() if center is None else np.asarray(center, dtype=float)
        return IntervalMatrix(c - t * (c - self.lower), c + t * (self.upper - c))


@dataclass(frozen=True, eq=False)
class MissingIndex:
    """Positions of the missing entries, stored in O(n + d + M).

    Entries are kept twice, once sorted by row (CSR-like) and once sorted by
    column, together with the offsets into each ordering. ``rows_per_col`` and
    ``cols_per_row`` expose views of those arrays.
    """

    n: int
    d: int
    rows: np.ndarray          # M row indices, row-major order
    cols: np.ndarray          # M column indices, row-major order
    rows_with_missing: np.ndarray
    row_ptr: np.ndarray       # len(rows_with_missing) + 1 offsets into rows/cols
    cols_with_missing: np.ndarray
    col_order: np.ndarray     # permutation of 0..M-1 sorting entries by column
    col_ptr: np.ndarray

    @property
    def M(self) -> int:
        return int(self.rows.size)

    @property
    def missing_set(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def cols_per_row(self) -> dict[int, np.ndarray]:
        return {
            int(i): self.cols[self.row_ptr[k]:self.row_ptr[k + 1]]
            for k, i in enumerate(self.rows_with_missing)
        }

    @property
    def rows_per_col(self) -> dict[int, np.ndarray]:
        by_col = self.rows[self.col_order]
        return {
            int(j): by_col[self.col_ptr[k]:self.col_ptr[k + 1]]
            for k, j in enumerate(self.cols_with_missing)
        }

    def mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.d), dtype=bool)
        m[self.rows, self.cols] = True
        return m

    def storage_size(self) -> int:
        """Total number of stored integers across all containers."""
        return sum(
            a.size for a in (
                self.rows, self.cols, self.rows_with_missing, self.row_ptr,
                self.cols_with_missing, self.col_order, self.col_ptr,
            )
        )

    def consistent_with(self, X: IntervalMatrix) -> bool:
        if X.shape != (self.n, self.d):
            return False
        if self.M and not np.all(X.lower[self.rows, self.cols] < X.upper[self.rows, self.cols]):
            return False
        return True


def build_missing_index(X: IntervalMatrix) -> MissingIndex:
    rows, cols = np.nonzero(X.missing_mask)  # row-major order
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    rows_with_missing, row_counts = np.unique(rows, return_counts=True)
    row_ptr = np.concatenate(([0], np.cumsum(row_counts))).astype(np.int64)
    col_order = np.argsort(cols, kind="stable").astype(np.int64)
    cols_with_missing, col_counts = np.unique(cols, return_counts=True)
    col_ptr = np.concatenate(([0], np.cumsum(col_counts))).astype(np.int64)
    frozen = [_frozen(a, np.int64) for a in (rows, cols, rows_with_missing, row_ptr,
                                             cols_with_missing, col_order, col_ptr)]
    return MissingIndex(X.n, X.d, *frozen)


@dataclass(frozen=True)
class Penalty:
    kind: str
    lam: float
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in PENALTIES:
            raise ValueError(f"unknown penalty {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.kind == "l2" and self.kappa != 0:
            raise ValueError("l2 penalty takes no kappa")

    @classmethod
    def l2(cls, lam: float) -> "Penalty":
        return cls("l2", float(lam))

    @classmethod
    def elastic_net(cls, lam: float, kappa: float) -> "Penalty":
        return cls("elastic_net", float(lam), float(kappa))


@dataclass(frozen=True)
class ModelSpec:
    loss: str
    penalty: Penalty
    link: str | None = None
    allow_link_override: bool = False

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        link = DEFAULT_LINK[self.loss] if self.link is None else self.link
        if link not in LINKS:
            raise ValueError(f"unknown link {link!r}")
        if link != DEFAULT_LINK[self.loss] and not self.allow_link_override:
            raise ValueError(f"link {link!r} is inconsistent with {self.loss} loss")
        object.__setattr__(self, "link", link)

    @property
    def lam(self) -> float:
        return self.penalty.lam

    @property
    def kappa(self) -> float:
        return self.penalty.kappa

    @property
    def is_classification(self) -> bool:
        return self.loss in ("hinge", "logistic")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    X: IntervalMatrix
    y: np.ndarray
    index: MissingIndex = None

    def __post_init__(self):
        object.__setattr__(self, "y", _frozen(self.y))
        if self.index is None:
            object.__setattr__(self, "index", build_missing_index(self.X))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(trainset: TrainingSet, spec: ModelSpec) -> ValidationReport:
    """Collect every problem with ``trainset`` under ``spec`` without raising."""
    out = list(trainset.X.violations())
    y = np.asarray(trainset.y)
    if y.ndim != 1 or y.shape[0] != trainset.X.n:
        out.append(f"label length {y.shape} does not match n={trainset.X.n}")
    elif not np.all(np.isfinite(y)):
        out.append("non-finite label")
    elif spec.is_classification and not np.all(np.isin(y, (-1.0, 1.0))):
        out.append(f"label domain: {spec.loss} needs y in {{-1,+1}}")
    return ValidationReport(tuple(out))


@dataclass(frozen=True, eq=False)
class PrimalDualSolution:
    w_prime: np.ndarray
    alpha_prime: np.ndarray
    row_scores: np.ndarray      # X' w'
    col_scores: np.ndarray      # X'^T alpha'
    residual_gap: float
    imputed: np.ndarray         # the concrete X' the model was trained on
    labels: np.ndarray = None
    imputed_choice: str = "midpoint"
    converged: bool = True
    n_iter: int = 0
    solver: str = ""

    def __post_init__(self):
        for name in ("w_prime", "alpha_prime", "row_scores", "col_scores", "labels"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _frozen(getattr(self, name)))
        imp = np.asarray(self.imputed, dtype=float)
        if imp.flags.writeable:
            imp = _frozen(imp)
        object.__setattr__(self, "imputed", imp)


@dataclass(frozen=True, eq=False)
class UncertaintyBall:
    center: np.ndarray
    delta: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center))
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def radius(self) -> float:
        return float(np.sqrt(2.0 * self.delta / self.lam))

    def with_radius_scale(self, t: float) -> "UncertaintyBall":
        # debug hook for checker sanity: scales the radius by t
        return UncertaintyBall(self.center, self.delta * t * t, self.lam)


@dataclass(frozen=True)
class PredictionInterval:
    linear_lo: float
    linear_hi: float
    value_lo: float
    value_hi: float
    label: Any = None

    @property
    def width(self) -> float:
        return self.value_hi - self.value_lo

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.value_lo - tol <= value <= self.value_hi + tol
