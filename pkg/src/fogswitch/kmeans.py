"""Lloyd's k-means: the analytics workload behind the ``cluster`` operation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import ClusterRequest, as_dataset
from .errors import KTooLarge, NonFinitePoint, NonPositiveParam


@dataclass(frozen=True)
class ClusterResult:
    centroids: np.ndarray = field(compare=False)
    assignments: np.ndarray = field(compare=False)
    iterations_run: int
    inertia: float
    # per-round inertia, only filled when requested
    history: tuple = field(default=(), compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "centroids": self.centroids.tolist(),
            "assignments": [int(a) for a in self.assignments],
            "iterations_run": int(self.iterations_run),
            "inertia": float(self.inertia),
        }


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _update(points, labels, centroids):
    k = centroids.shape[0]
    new = np.empty_like(centroids)
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        # empty cluster: move it onto the point farthest from its own centroid
        new[empty] = centroids[empty]
        own = np.einsum("nd,nd->n", points - new[labels], points - new[labels])
        for j in empty:
            far = int(np.argmax(own))
            new[j] = points[far]
            own[far] = -1.0
    return new


def _inertia(points, centroids, labels) -> float:
    diff = points - centroids[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def check_request(req: ClusterRequest) -> np.ndarray:
    """Validate a clustering request the way the back-end does; returns the points."""
    points = as_dataset(req.dataset)
    if req.k <= 0 or req.it <= 0:
        raise NonPositiveParam(f"k and it must be positive (k={req.k}, it={req.it})")
    if req.k > points.shape[0]:
        raise KTooLarge(f"k={req.k} exceeds the number of points n={points.shape[0]}")
    if not np.isfinite(points).all():
        raise NonFinitePoint("dataset contains NaN or infinite coordinates")
    return points


def kmeans_cluster(req: ClusterRequest, track_history: bool = False) -> ClusterResult:
    """Run Lloyd's algorithm; ``req.it`` caps the number of assign/update rounds.

    Deterministic in (dataset, k, it, seed). Stops early once assignments settle.
    """
    points = check_request(req)
    n = points.shape[0]

    rng = np.random.default_rng(req.seed)
    centroids = points[np.sort(rng.choice(n, size=req.k, replace=False))].copy()
    labels = np.argmin(_sq_dists(points, centroids), axis=1)
    history = [_inertia(points, centroids, labels)] if track_history else []

    rounds = 0
    for rounds in range(1, req.it + 1):
        centroids = _update(points, labels, centroids)
        new_labels = np.argmin(_sq_dists(points, centroids), axis=1)
        if track_history:
            history.append(_inertia(points, centroids, new_labels))
        settled = np.array_equal(new_labels, labels)
        labels = new_labels
        if settled:
            break

    return ClusterResult(
        centroids=centroids,
        assignments=labels.astype(np.int64),
        iterations_run=rounds,
        inertia=_inertia(points, centroids, labels),
        history=tuple(history),
    )
