"""K-means over target neighbor distributions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Result of :func:`kmeans`.

    ``targets`` is the sorted id order used internally; ``labels[i]`` is the
    cluster of ``targets[i]``. ``inertia`` holds the within-cluster sum of
    squares after every assignment step.
    """

    k: int
    targets: tuple[str, ...]
    labels: np.ndarray
    centroids: np.ndarray
    seed: int
    n_iter: int = 0
    inertia: tuple[float, ...] = field(default=(), repr=False)

    @property
    def assignments(self) -> dict[str, int]:
        return dict(zip(self.targets, (int(c) for c in self.labels)))

    def members(self, cluster: int) -> list[str]:
        return [t for t, c in zip(self.targets, self.labels) if c == cluster]

    def nonempty_clusters(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.labels))

    def cluster_index(self, target: str) -> int:
        try:
            return int(self.labels[self._position[target]])
        except KeyError:
            raise KeyError(f"target {target!r} was not clustered") from None

    def nearest(self, vector) -> int:
        """Index of the nearest nonempty centroid (lowest index on ties)."""
        v = np.asarray(vector, dtype=float)
        live = self.nonempty_clusters()
        d = ((self.centroids[live] - v) ** 2).sum(axis=1)
        return live[int(np.argmin(d))]

    @property
    def _position(self) -> dict[str, int]:
        try:
            return self.__dict__["_position_cache"]
        except KeyError:
            pos = {t: i for i, t in enumerate(self.targets)}
            object.__setattr__(self, "_position_cache", pos)
            return pos


def cluster_of(model: ClusterModel, target: str) -> set[str]:
    """All targets sharing ``target``'s cluster, itself included."""
    return set(model.members(model.cluster_index(target)))


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``k`` initial centers by D^2 sampling."""
    n_points = points.shape[0]
    chosen = [int(rng.integers(n_points))]
    closest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n_points, p=closest / total))
        else:
            # every point coincides with a center already
            idx = int(rng.integers(n_points))
        chosen.append(idx)
        closest = np.minimum(closest, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans(points: Mapping[str, np.ndarray], k: int, seed: int = 0, max_iter: int = MAX_ITER) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding and Euclidean distance.

    Iterates until no assignment changes or ``max_iter`` is reached. An
    emptied cluster is reseeded at the point farthest from its centroid.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    targets = tuple(sorted(points))
    if k > len(targets):
        raise ValueError(f"k={k} exceeds the number of points ({len(targets)})")
    X = np.array([np.asarray(points[t], dtype=float) for t in targets])
    if X.ndim != 2:
        raise ValueError("all points must have the same dimension")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plusplus(X, k, rng)
    labels = None
    inertia = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = _sq_dists(X, centroids)
        new_labels = np.argmin(d, axis=1)
        inertia.append(float(d[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = X[mask].mean(axis=0)
        for c in range(k):
            if (labels == c).any():
                continue
            own = ((X - centroids[labels]) ** 2).sum(axis=1)
            far = int(np.argmax(own))
            if own[far] <= 0:
                continue
            centroids[c] = X[far]
            labels = labels.copy()
            labels[far] = c
    else:
        # iteration cap: leave every point on its nearest centroid
        labels = np.argmin(_sq_dists(X, centroids), axis=1)

    return ClusterModel(k, targets, labels.astype(int), centroids, seed, n_iter, tuple(inertia))
