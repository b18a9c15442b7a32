"""Datasets, train/test splitting, Pearson evaluation, and prediction dispatch."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ads import FeatureCase

MODEL_KINDS = ("ABR", "DTR", "MLP", "RFR")


class DegenerateSplitError(ValueError):
    """The requested split would leave the train or test side empty."""


class UndefinedCorrelationError(ValueError):
    """Pearson r is undefined: fewer than two pairs or zero variance."""


class DimensionMismatchError(ValueError):
    """Query vector length does not match the model's training case."""


@dataclass(eq=False)
class Dataset:
    """Feature rows and click targets sharing one input case."""

    X: np.ndarray
    y: np.ndarray
    case: FeatureCase | None = None
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y must have one target per row of X")
        if self.X.shape[0] == 0:
            raise ValueError("dataset must be non-empty")
        if self.case is not None and self.X.shape[1] != self.case.dimension:
            raise ValueError(
                f"case {self.case.tag} expects {self.case.dimension} columns, got {self.X.shape[1]}"
            )
        if self.ids is not None and len(self.ids) != self.X.shape[0]:
            raise ValueError("ids must align with rows")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        ids = tuple(self.ids[i] for i in rows) if self.ids is not None else None
        return Dataset(self.X[rows], self.y[rows], self.case, ids)


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle; first ceil(fraction * m) rows train, rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    m = data.n_rows
    if m < 2:
        raise DegenerateSplitError("need at least 2 rows to split")
    n_train = math.ceil(train_fraction * m)
    if n_train >= m:
        raise DegenerateSplitError(f"empty test set: {n_train} of {m} rows would train")
    order = np.random.default_rng(seed).permutation(m)
    return data.take(order[:n_train]), data.take(order[n_train:])


def pearson(y, y_hat) -> float:
    """Sample Pearson correlation between real and predicted values."""
    a = np.asarray(y, dtype=float)
    b = np.asarray(y_hat, dtype=float)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError("inputs must be 1-D arrays of equal length")
    if a.shape[0] < 2:
        raise UndefinedCorrelationError("need at least 2 pairs")
    ca = a - a.mean()
    cb = b - b.mean()
    var_a = float(ca @ ca)
    var_b = float(cb @ cb)
    if var_a == 0.0 or var_b == 0.0:
        raise UndefinedCorrelationError("zero variance on one side")
    r = float(ca @ cb) / math.sqrt(var_a * var_b)
    return min(1.0, max(-1.0, r))


def predict(model, x) -> float:
    """Kind-agnostic single-vector prediction with dimension validation."""
    values = np.asarray(getattr(x, "values", x), dtype=float)
    if values.shape != (model.n_features,):
        raise DimensionMismatchError(
            f"model {model.kind} expects {model.n_features} features, got {values.shape}"
        )
    return float(model.predict_batch(values[None, :])[0])


@dataclass(frozen=True)
class EvaluationReport:
    """Held-out (real, predicted) click pairs and their Pearson correlation."""

    y: tuple[float, ...]
    y_hat: tuple[float, ...]
    pearson: float
