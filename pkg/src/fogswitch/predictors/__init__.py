"""Response-time regressors with a shared train / predict / serialize contract.

>>> model = train(RegressorKind.KNN, [[3, 100, 1000, 3]], [42.0])
>>> predict(model, FeatureVector(2, 10, 50, 4))
42.0
"""
from __future__ import annotations

import numpy as np

from ..domain import FeatureVector
from ..errors import MalformedModel
from .base import PREDICTION_FLOOR_MS, RegressorKind, Standardizer, TrainedModel
from .dtree import predict_dtree, train_dtree
from .knn import predict_knn, train_knn
from .modelfile import dumps, load_model, loads, save_model
from .nn import predict_nn, train_nn
from .svr import predict_svr, train_svr

TRAINERS = {
    RegressorKind.KNN: train_knn,
    RegressorKind.SVR: train_svr,
    RegressorKind.DTREE: train_dtree,
    RegressorKind.NN: train_nn,
}

_PREDICTORS = {
    RegressorKind.KNN: (predict_knn, ("X", "y", "n_neighbors")),
    RegressorKind.SVR: (predict_svr, ("support_vectors", "dual_coef", "bias", "gamma")),
    RegressorKind.DTREE: (predict_dtree, ("feature", "threshold", "left", "right", "value")),
    RegressorKind.NN: (predict_nn, ("W1", "b1", "W2", "b2")),
}


def train(kind, X, y, seed: int = 0) -> TrainedModel:
    return TRAINERS[RegressorKind.parse(kind)](X, y, seed=seed)


def predict_many(model: TrainedModel, X) -> np.ndarray:
    """Predicted response times (ms) for each row of raw features ``X``."""
    try:
        fn, required = _PREDICTORS[model.kind]
    except KeyError:
        raise MalformedModel(f"unknown model kind {model.kind!r}") from None
    missing = [k for k in required if k not in model.payload]
    if missing:
        raise MalformedModel(f"{model.kind.value} model lacks payload fields {missing}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise MalformedModel(f"model expects {model.n_features} features, got {X.shape[1]}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = fn(model, model.standardizer.transform(X))
    if not np.isfinite(out).all():
        raise MalformedModel(f"{model.kind.value} model produced a non-finite prediction")
    return np.maximum(out, PREDICTION_FLOOR_MS)


def predict(model: TrainedModel, f: FeatureVector) -> float:
    return float(predict_many(model, f.as_array()[None, :])[0])


__all__ = [
    "RegressorKind", "Standardizer", "TrainedModel", "TRAINERS",
    "train", "train_knn", "train_svr", "train_dtree", "train_nn",
    "predict", "predict_many", "save_model", "load_model", "dumps", "loads",
]
