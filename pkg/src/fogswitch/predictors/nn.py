"""Three-layer LeakyReLU network [p, ceil(sqrt(p)), 1] fitted on log response times."""
import math

import numpy as np

from ..errors import NonFiniteLoss
from .base import RegressorKind, Standardizer, TrainedModel, check_training_set

LEAKY_SLOPE = 0.01
LEARNING_RATE = 0.01
EPOCHS = 2000
MIN_IMPROVEMENT = 1e-8
BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def architecture(p: int) -> list[int]:
    return [p, math.ceil(math.sqrt(p)), 1]


def init_params(sizes, rng: np.random.Generator) -> dict:
    params = {}
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), 1):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params[f"W{layer}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params[f"b{layer}"] = np.zeros(fan_out)
    return params


def forward(params: dict, Z: np.ndarray) -> np.ndarray:
    pre = Z @ params["W1"] + params["b1"]
    hidden = np.where(pre > 0, pre, params.get("leaky_slope", LEAKY_SLOPE) * pre)
    return (hidden @ params["W2"] + params["b2"]).ravel()


def loss_and_grads(params: dict, Z: np.ndarray, t: np.ndarray) -> tuple[float, dict]:
    """Mean squared error and its gradient w.r.t. every parameter."""
    pre = Z @ params["W1"] + params["b1"]
    hidden = np.where(pre > 0, pre, LEAKY_SLOPE * pre)
    out = (hidden @ params["W2"] + params["b2"]).ravel()
    err = out - t
    loss = float(np.mean(err * err))

    d_out = (2.0 / len(t)) * err[:, None]
    d_hidden = (d_out @ params["W2"].T) * np.where(pre > 0, 1.0, LEAKY_SLOPE)
    grads = {
        "W2": hidden.T @ d_out,
        "b2": d_out.sum(axis=0),
        "W1": Z.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
    }
    return loss, grads


def fit_params(Z: np.ndarray, t: np.ndarray, seed: int = 0, epochs: int = EPOCHS):
    """Full-batch Adam; returns (params, per-epoch loss history)."""
    rng = np.random.default_rng(seed)
    params = init_params(architecture(Z.shape[1]), rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v) for k, v in params.items()}
    history = []
    for epoch in range(1, epochs + 1):
        loss, grads = loss_and_grads(params, Z, t)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"training loss became {loss} at epoch {epoch}")
        if history and abs(history[-1] - loss) < MIN_IMPROVEMENT:
            history.append(loss)
            break
        history.append(loss)
        for k in PARAM_NAMES:
            m[k] = BETA1 * m[k] + (1 - BETA1) * grads[k]
            v[k] = BETA2 * v[k] + (1 - BETA2) * grads[k] ** 2
            m_hat = m[k] / (1 - BETA1**epoch)
            v_hat = v[k] / (1 - BETA2**epoch)
            params[k] = params[k] - LEARNING_RATE * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return params, history


def train_nn(X, y, seed: int = 0) -> TrainedModel:
    X, y = check_training_set(X, y)
    if (y <= 0).any():
        raise ValueError("response times must be positive")
    std = Standardizer.fit(X)
    params, history = fit_params(std.transform(X), np.log(y), seed)
    payload = {"layers": np.array(architecture(X.shape[1]), dtype=np.int64), "leaky_slope": LEAKY_SLOPE}
    payload.update(params)
    return TrainedModel(RegressorKind.NN, std, payload, info={"loss_history": history})


def predict_nn(model: TrainedModel, Z: np.ndarray) -> np.ndarray:
    return np.exp(forward(model.payload, Z))
