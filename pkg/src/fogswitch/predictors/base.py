from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import EmptyTrainingSet

STD_FLOOR = 1e-9
PREDICTION_FLOOR_MS = 0.001


class RegressorKind(enum.Enum):
    KNN = "knn"
    SVR = "svr"
    DTREE = "dtree"
    NN = "nn"

    @classmethod
    def parse(cls, value) -> "RegressorKind":
        if isinstance(value, RegressorKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ",".join(k.value for k in cls)
            raise ValueError(f"unknown regressor kind {value!r}; choose from {{{choices}}}") from None


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stdevs: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        # exact mean for constant columns, so they standardize to 0 not rounding/1e-9
        means = np.where(np.ptp(X, axis=0) == 0, X[0], X.mean(axis=0))
        return cls(means, np.maximum(X.std(axis=0), STD_FLOOR))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stdevs


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted regressor; ``payload`` holds kind-specific arrays and scalars."""

    kind: RegressorKind
    standardizer: Standardizer
    payload: dict[str, Any]
    # training diagnostics, not persisted
    info: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n_features(self) -> int:
        return int(self.standardizer.means.shape[0])


def check_training_set(X, y, min_rows: int = 1) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0 or X.shape[0] < min_rows:
        raise EmptyTrainingSet(f"need at least {min_rows} training rows, got {X.shape[0]}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y
