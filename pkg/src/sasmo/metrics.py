"""Convergence and diversity metrics for an approximate Pareto set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .core import FloatArray, InvalidArgumentError


@dataclass(frozen=True)
class MetricReport:
    lam: float
    upsilon: float
    reference_size: int
    front_size: int


def convergence_metric(reference: ArrayLike, front: ArrayLike) -> float:
    """Mean distance from each reference point to its nearest front point."""
    R = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if R.shape[0] == 0 or Z.shape[0] == 0:
        raise InvalidArgumentError("reference and front must be non-empty")
    if R.shape[1] != Z.shape[1]:
        raise InvalidArgumentError(
            f"objective dimension mismatch: reference {R.shape[1]}, front {Z.shape[1]}"
        )
    nearest = np.empty(R.shape[0])
    # chunk so the distance matrix stays small for large fronts
    step = max(1, 2_000_000 // max(Z.shape[0], 1))
    for lo in range(0, R.shape[0], step):
        diff = R[lo:lo + step, None, :] - Z[None, :, :]
        nearest[lo:lo + step] = np.sqrt(np.min(np.sum(diff * diff, axis=2), axis=1))
    return float(np.mean(nearest))


def diversity_metric(points: ArrayLike, left: ArrayLike, right: ArrayLike) -> float:
    """Spread of consecutive gaps, with the points sorted by first coordinate.

    ``(d_l + d_r + sum |d_i - mean(d)|) / (d_l + d_r + (|Z| - 1) mean(d))``
    where ``d_l``/``d_r`` are the distances from the true set's extreme points
    ``left``/``right`` to the first/last sorted point. Returns 0 when the
    denominator vanishes (all points coincide with both extremes).
    """
    Z = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if Z.shape[0] < 2:
        raise InvalidArgumentError("diversity needs at least two points")
    xl = np.asarray(left, dtype=np.float64).reshape(-1)
    xr = np.asarray(right, dtype=np.float64).reshape(-1)
    if xl.shape[0] != Z.shape[1] or xr.shape[0] != Z.shape[1]:
        raise InvalidArgumentError("boundary points must match the point dimension")
    Z = Z[np.lexsort(Z.T[::-1])]
    gaps = np.linalg.norm(np.diff(Z, axis=0), axis=1)
    d_l = float(np.linalg.norm(xl - Z[0]))
    d_r = float(np.linalg.norm(xr - Z[-1]))
    mean_gap = float(np.mean(gaps))
    num = d_l + d_r + float(np.sum(np.abs(gaps - mean_gap)))
    den = d_l + d_r + (Z.shape[0] - 1) * mean_gap
    if den == 0.0:
        return 0.0
    return num / den


def evaluate_front(reference: ArrayLike, front_objectives: ArrayLike,
                   front_points: ArrayLike, bounds: tuple[ArrayLike, ArrayLike],
                   space: str = "decision") -> MetricReport:
    """Both metrics at once.

    ``space="objective"`` computes the diversity metric on the objective
    vectors instead; then ``bounds`` must be the extreme front images.
    """
    R = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    FZ = np.atleast_2d(np.asarray(front_objectives, dtype=np.float64))
    XZ = np.atleast_2d(np.asarray(front_points, dtype=np.float64))
    lam = convergence_metric(R, FZ)
    target = XZ if space == "decision" else FZ
    ups = diversity_metric(target, *bounds) if target.shape[0] >= 2 else float("nan")
    return MetricReport(lam=lam, upsilon=ups, reference_size=R.shape[0], front_size=FZ.shape[0])
