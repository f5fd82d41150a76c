"""Regression tree grown to purity with variance-reduction splits."""
import numpy as np

from .base import RegressorKind, Standardizer, TrainedModel, check_training_set

MAX_FEATURES = 4
LEAF = -1


def best_split(Z: np.ndarray, y: np.ndarray, features) -> tuple[int, float, float]:
    """Return (feature, threshold, children SSE) of the lowest-SSE split.

    Thresholds are midpoints between consecutive distinct values. Ties keep the
    first feature in ``features`` order and the smallest threshold. Returns
    feature -1 when no feature has two distinct values.
    """
    yc = y - y.mean()
    best = (LEAF, 0.0, np.inf)
    n = len(y)
    for f in features:
        order = np.argsort(Z[:, f], kind="stable")
        xs, ys = Z[order, f], yc[order]
        cut = np.flatnonzero(xs[1:] > xs[:-1])  # split after position cut
        if cut.size == 0:
            continue
        s1, s2 = np.cumsum(ys), np.cumsum(ys * ys)
        nl = cut + 1.0
        nr = n - nl
        sl, sr = s1[cut], s1[-1] - s1[cut]
        ql, qr = s2[cut], s2[-1] - s2[cut]
        sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
        i = int(np.argmin(sse))
        if sse[i] < best[2]:
            best = (int(f), float((xs[cut[i]] + xs[cut[i] + 1]) / 2.0), float(sse[i]))
    return best


def train_dtree(X, y, seed: int = 0) -> TrainedModel:
    X, y = check_training_set(X, y)
    std = Standardizer.fit(X)
    Z = std.transform(X)
    p = Z.shape[1]
    rng = np.random.default_rng(seed)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        return len(value) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)))]
    loss = [float(((y - y.mean()) ** 2).sum())]
    while stack:
        node, idx = stack.pop()
        ys = y[idx]
        if len(idx) <= 1 or np.all(ys == ys[0]):
            continue
        if p > MAX_FEATURES:
            cands = np.sort(rng.choice(p, MAX_FEATURES, replace=False))
        else:
            cands = range(p)
        f, thr, child_sse = best_split(Z[idx], ys, cands)
        if f == LEAF:
            continue
        go_left = Z[idx, f] <= thr
        if go_left.all():  # midpoint rounded onto the upper value
            continue
        li, ri = idx[go_left], idx[~go_left]
        loss.append(loss[-1] - float(((ys - ys.mean()) ** 2).sum()) + child_sse)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(li), new_node(ri)
        # push right first so nodes are numbered depth-first, left to right
        stack.append((right[node], ri))
        stack.append((left[node], li))

    return TrainedModel(
        RegressorKind.DTREE,
        std,
        {
            "feature": np.array(feature, dtype=np.int64),
            "threshold": np.array(threshold, dtype=np.float64),
            "left": np.array(left, dtype=np.int64),
            "right": np.array(right, dtype=np.int64),
            "value": np.array(value, dtype=np.float64),
        },
        info={"loss_history": loss},
    )


def predict_dtree(model: TrainedModel, Z: np.ndarray) -> np.ndarray:
    pl = model.payload
    feature, threshold = pl["feature"].tolist(), pl["threshold"].tolist()
    left, right, value = pl["left"].tolist(), pl["right"].tolist(), pl["value"]
    out = np.empty(len(Z))
    for r, z in enumerate(Z.tolist()):
        node = 0
        while feature[node] != LEAF:
            node = left[node] if z[feature[node]] <= threshold[node] else right[node]
        out[r] = value[node]
    return out


def leaf_sse(model: TrainedModel, X, y) -> float:
    """Training loss: summed squared error of the leaves the rows land in."""
    y = np.asarray(y, dtype=np.float64)
    return float(((predict_dtree(model, model.standardizer.transform(X)) - y) ** 2).sum())
