"""Single-pass threshold clustering of elite solutions.

Points are taken in a random order. Each one joins an existing cluster whose
centroid is strictly closer than ``delta`` (the first such cluster in a
fresh random scan order), else it opens a new cluster. Centroids are the
running member means; members are never reassigned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .core import FloatArray, InvalidArgumentError

THRESHOLD_FLOOR = 1e-12


@dataclass(frozen=True)
class Cluster:
    centroid: FloatArray
    members: FloatArray
    indices: np.ndarray
    assignment_distances: FloatArray

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def trace(self) -> float:
        """Trace of the population covariance; 0 for a singleton."""
        if self.size < 2:
            return 0.0
        centered = self.members - self.members.mean(axis=0)
        return float(np.sum(centered * centered) / self.size)


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[Cluster, ...]
    threshold_used: float
    next_threshold: float | None = None

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.clusters]


def cluster(elites: ArrayLike, delta: float, rng: np.random.Generator) -> ClusterSet:
    """Partition ``elites`` with threshold ``delta``.

    Scanning centroids in a uniformly random order and taking the first one
    within ``delta`` is the same as picking uniformly among all centroids
    within ``delta``; the latter is what is computed.
    """
    X = np.atleast_2d(np.asarray(elites, dtype=np.float64))
    if X.shape[0] == 0:
        raise InvalidArgumentError("cannot cluster an empty elite set")
    if not delta > 0:
        raise InvalidArgumentError("threshold distance must be positive")
    n, d = X.shape
    sums = np.empty((n, d))
    centroids = np.empty((n, d))
    counts = np.zeros(n, dtype=np.int64)
    label = np.empty(n, dtype=np.int64)
    dist_at_join = np.zeros(n)
    k = 0
    for i in rng.permutation(n):
        x = X[i]
        if k:
            dist = np.sqrt(np.sum((centroids[:k] - x) ** 2, axis=1))
            near = np.flatnonzero(dist < delta)
        else:
            near = ()
        if len(near):
            j = int(near[rng.integers(len(near))])
            sums[j] += x
            counts[j] += 1
            centroids[j] = sums[j] / counts[j]
            label[i] = j
            dist_at_join[i] = dist[j]
        else:
            sums[k] = x
            centroids[k] = x
            counts[k] = 1
            label[i] = k
            k += 1
    clusters = []
    for j in range(k):
        idx = np.flatnonzero(label == j)
        clusters.append(
            Cluster(
                centroid=centroids[j].copy(),
                members=X[idx],
                indices=idx,
                assignment_distances=dist_at_join[idx],
            )
        )
    return ClusterSet(tuple(clusters), float(delta))


def next_threshold(clusters: ClusterSet | list[Cluster], delta: float, shrink: float) -> float:
    """``min(sum of traces / (shrink * count), delta / shrink)``, floored at 1e-12."""
    items = clusters.clusters if isinstance(clusters, ClusterSet) else tuple(clusters)
    if not items:
        raise InvalidArgumentError("need at least one cluster")
    if not shrink > 1:
        raise InvalidArgumentError("shrink factor must exceed 1")
    traces = sum(c.trace for c in items)
    value = min(traces / (shrink * len(items)), delta / shrink)
    return max(value, THRESHOLD_FLOOR)


def with_next_threshold(cs: ClusterSet, shrink: float) -> ClusterSet:
    return ClusterSet(cs.clusters, cs.threshold_used, next_threshold(cs, cs.threshold_used, shrink))
