"""epsilon-SVR with an RBF kernel, trained by sequential minimal optimization.

The dual is solved in the 2l-variable form used by LIBSVM (Fan, Chen & Lin
2005): variables ``a[:l]`` and ``a[l:]`` are the two multiplier sets, working
pairs are chosen by the second-order rule, and the bias is the mean of
``y_t * G_t`` over free variables. Targets are fitted in log-ms space.
"""
import warnings

import numpy as np

from ..errors import NoConvergenceWarning
from .base import RegressorKind, Standardizer, TrainedModel, check_training_set

C = 1.0
EPSILON = 0.1
TOLERANCE = 1e-3
PASSES_PER_ROW = 10
TAU = 1e-12


def rbf_gamma(Z: np.ndarray) -> float:
    """1 / (number of features + variance of all standardized entries)."""
    return 1.0 / (Z.shape[1] + float(np.var(Z)))


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _rho(a, yv, G, C):
    yG = yv * G
    at_upper = a >= C
    at_lower = a <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (yv < 0)) | (at_lower & (yv > 0))
    lb_mask = (at_upper & (yv > 0)) | (at_lower & (yv < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def smo_solve(K: np.ndarray, z: np.ndarray, C: float = C, epsilon: float = EPSILON,
              tol: float = TOLERANCE, max_iter: int = None):
    """Solve the epsilon-SVR dual; returns (coef, rho, iterations, converged)."""
    l = len(z)
    if max_iter is None:
        max_iter = PASSES_PER_ROW * l
    yv = np.concatenate([np.ones(l), -np.ones(l)])
    p = np.concatenate([epsilon - z, epsilon + z])
    a = np.zeros(2 * l)
    G = p.copy()
    Kd = np.diag(K)
    QD = np.concatenate([Kd, Kd])

    converged = False
    it = 0
    for it in range(max_iter + 1):
        minus_yG = -yv * G
        up = ((yv > 0) & (a < C)) | ((yv < 0) & (a > 0))
        low = ((yv > 0) & (a > 0)) | ((yv < 0) & (a < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(minus_yG[up])])
        gmax = minus_yG[i]
        gmin = minus_yG[low].min()
        if gmax - gmin < tol:
            converged = True
            break
        if it == max_iter:
            break

        Ki = np.tile(K[i % l], 2)
        grad_diff = gmax - minus_yG
        cand = low & (grad_diff > 0)
        quad = Kd[i % l] + QD - 2.0 * Ki
        quad = np.where(quad > 0, quad, TAU)
        obj = np.full(2 * l, np.inf)
        obj[cand] = -(grad_diff[cand] ** 2) / quad[cand]
        j = int(np.argmin(obj))

        Qi = yv[i] * yv * Ki
        Qj = yv[j] * yv * np.tile(K[j % l], 2)
        ai_old, aj_old = a[i], a[j]
        if yv[i] != yv[j]:
            q = max(QD[i] + QD[j] + 2.0 * Qi[j], TAU)
            delta = (-G[i] - G[j]) / q
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            elif a[j] > C:
                a[j] = C
                a[i] = C + diff
        else:
            q = max(QD[i] + QD[j] - 2.0 * Qi[j], TAU)
            delta = (G[i] - G[j]) / q
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            elif a[j] < 0:
                a[j] = 0.0
                a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = total
        G += Qi * (a[i] - ai_old) + Qj * (a[j] - aj_old)

    coef = a[:l] - a[l:]
    return coef, _rho(a, yv, G, C), it, converged


def train_svr(X, y, seed: int = 0) -> TrainedModel:
    X, y = check_training_set(X, y, min_rows=2)
    if (y <= 0).any():
        raise ValueError("response times must be positive")
    std = Standardizer.fit(X)
    Z = std.transform(X)
    gamma = rbf_gamma(Z)
    K = rbf_kernel(Z, Z, gamma)
    coef, rho, iterations, converged = smo_solve(K, np.log(y))
    if not converged:
        warnings.warn(f"SMO stopped after {iterations} iterations without reaching tolerance {TOLERANCE}",
                      NoConvergenceWarning, stacklevel=2)
    sv = np.flatnonzero(coef != 0)
    return TrainedModel(
        RegressorKind.SVR,
        std,
        {
            "support_vectors": Z[sv],
            "dual_coef": coef[sv],
            "bias": -rho,
            "gamma": gamma,
            "variance": float(np.var(Z)),
            "C": C,
            "epsilon": EPSILON,
            "converged": int(converged),
        },
        info={"iterations": iterations, "converged": converged},
    )


def decision_function(model: TrainedModel, Z: np.ndarray) -> np.ndarray:
    """Prediction in log-ms space."""
    pl = model.payload
    if len(pl["dual_coef"]) == 0:
        return np.full(len(Z), float(pl["bias"]))
    return rbf_kernel(Z, pl["support_vectors"], float(pl["gamma"])) @ pl["dual_coef"] + float(pl["bias"])


def predict_svr(model: TrainedModel, Z: np.ndarray) -> np.ndarray:
    return np.exp(decision_function(model, Z))
