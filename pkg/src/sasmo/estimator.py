"""Domination-measure estimators.

Three estimators share one dominance-counting kernel, :func:`pairwise_domination_counts`:

* :func:`exact_finite` -- counting measure over a finite solution space,
* :func:`mc_uniform` -- plain Monte Carlo over uniform draws from the box,
* :func:`is_estimate` -- importance sampling under the mixture density.

The self term ``j == i`` is kept in every sum; it never counts because
dominance is irreflexive. Importance-sampling estimates are not clipped to
``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numpy.typing import ArrayLike

from .core import FloatArray, InvalidArgumentError, InvalidStateError, UnsupportedError
from .problems import Problem

if "NUMBA_THREADING_LAYER" not in __import__("os").environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@dataclass(frozen=True)
class ScoredSample:
    point: FloatArray
    objectives: FloatArray
    dmeasure: float
    density: float = 1.0


@numba.njit(parallel=True, cache=True)
def _weighted_dominators(F, w):
    n, m = F.shape
    out = np.zeros(n)
    for i in numba.prange(n):
        acc = 0.0
        for j in range(n):
            le = True
            lt = False
            for c in range(m):
                fj = F[j, c]
                fi = F[i, c]
                if fj > fi:
                    le = False
                    break
                if fj < fi:
                    lt = True
            if le and lt:
                acc += w[j]
        out[i] = acc
    return out


def _weighted_dominators_2d(F, w):
    order = np.lexsort((F[:, 1], F[:, 0]))
    f2_values, rank = np.unique(F[:, 1], return_inverse=True)
    return _sweep_2d(F, w, order, rank.astype(np.int64) + 1, f2_values.shape[0])


@numba.njit(cache=True)
def _sweep_2d(F, w, order, rank, m):
    # Row j dominates row i iff f1_j < f1_i and f2_j <= f2_i, or f1_j == f1_i
    # and f2_j < f2_i. Rows are visited in (f1, f2) order; a Fenwick tree over
    # f2 ranks holds the weight of all rows with strictly smaller f1, and a
    # running sum covers the equal-f1 group. No subtraction, so zero stays zero.
    n = F.shape[0]
    tree = np.zeros(m + 1)
    out = np.zeros(n)
    start = 0
    while start < n:
        stop = start
        f1 = F[order[start], 0]
        while stop < n and F[order[stop], 0] == f1:
            stop += 1
        below = 0.0
        k = start
        while k < stop:
            e = k
            f2 = F[order[k], 1]
            tie = 0.0
            while e < stop and F[order[e], 1] == f2:
                tie += w[order[e]]
                e += 1
            r = rank[order[k]]
            acc = 0.0
            while r > 0:
                acc += tree[r]
                r -= r & (-r)
            for q in range(k, e):
                out[order[q]] = acc + below
            below += tie
            k = e
        for k in range(start, stop):
            r = rank[order[k]]
            while r <= m:
                tree[r] += w[order[k]]
                r += r & (-r)
        start = stop
    return out


def pairwise_domination_counts(
    objectives: ArrayLike, weights: ArrayLike | None = None
) -> FloatArray:
    """For every row ``i``, the total weight of rows that dominate it.

    With ``weights=None`` each row has weight 1 and the result is an exact
    integer count (stored as float). Two objectives use an O(N log N) sweep;
    otherwise every output slot is summed in row order by a single thread.
    Either way the result does not depend on thread scheduling.
    """
    try:
        F = np.ascontiguousarray(objectives, dtype=np.float64)
    except ValueError as exc:
        raise InvalidArgumentError(f"objective vectors differ in length: {exc}") from None
    if F.ndim != 2 or F.shape[0] == 0:
        raise InvalidArgumentError("objectives must be a non-empty (N, n) array of equal-length rows")
    if weights is None:
        w = np.ones(F.shape[0])
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.shape != (F.shape[0],):
            raise InvalidArgumentError("need exactly one weight per objective vector")
    if F.shape[1] == 2:
        return _weighted_dominators_2d(F, w)
    return _weighted_dominators(F, w)


def dominator_indices(objectives: ArrayLike, i: int) -> FloatArray:
    """Indices of rows dominating row ``i`` (diagnostic helper)."""
    F = np.asarray(objectives, dtype=np.float64)
    le = np.all(F <= F[i], axis=1)
    lt = np.any(F < F[i], axis=1)
    return np.flatnonzero(le & lt)


def exact_finite(problem: Problem) -> FloatArray:
    """Exact domination measure ``|{y : f(y) dominates f(x)}| / |S|``.

    Returned in the order of ``problem.finite_space``.
    """
    if problem.finite_space is None:
        raise UnsupportedError(f"{problem.name} has no finite solution space")
    X = problem.finite_space
    if X.shape[0] == 0:
        raise InvalidArgumentError("finite space is empty")
    F = problem.objective(X)
    return pairwise_domination_counts(F) / X.shape[0]


def mc_uniform(objectives: ArrayLike, n_samples: int | None = None) -> FloatArray:
    """Monte Carlo estimate from i.i.d. uniform draws over the box.

    ``objectives`` are the images of the draws; every draw is scored against
    all the others. ``n_samples`` defaults to the number of rows.
    """
    F = np.asarray(objectives, dtype=np.float64)
    n = F.shape[0] if n_samples is None else int(n_samples)
    if n <= 0:
        raise InvalidArgumentError("sample count must be positive")
    return pairwise_domination_counts(F) / n


def importance_weights(densities: ArrayLike, volume: float) -> FloatArray:
    """Per-sample weight ``1 / (volume * g(x))``, computed as ``(1/volume) / g``.

    When ``g`` equals the uniform density exactly, the weight is exactly 1.
    """
    g = np.asarray(densities, dtype=np.float64)
    if not volume > 0:
        raise InvalidArgumentError("volume must be positive")
    if np.any(~(g > 0)):
        raise InvalidStateError("sampling densities must be strictly positive")
    return (1.0 / volume) / g


def is_estimate(objectives: ArrayLike, densities: ArrayLike, volume: float) -> FloatArray:
    """Importance-sampling estimate of the domination measure.

    ``D(x_i) = 1/(N * volume) * sum_j 1{x_j dominates x_i} / g(x_j)`` where
    ``g`` is the density the samples were drawn from.
    """
    F = np.asarray(objectives, dtype=np.float64)
    w = importance_weights(densities, volume)
    if w.shape != (F.shape[0],):
        raise InvalidArgumentError("need exactly one density per sample")
    return pairwise_domination_counts(F, w) / F.shape[0]


def score(points: ArrayLike, objectives: ArrayLike, dmeasure: ArrayLike,
          densities: ArrayLike | None = None) -> list[ScoredSample]:
    X = np.asarray(points, dtype=np.float64)
    F = np.asarray(objectives, dtype=np.float64)
    D = np.asarray(dmeasure, dtype=np.float64)
    g = np.ones(X.shape[0]) if densities is None else np.asarray(densities, dtype=np.float64)
    return [ScoredSample(X[i], F[i], float(D[i]), float(g[i])) for i in range(X.shape[0])]
