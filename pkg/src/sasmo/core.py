"""Points, boxes and the Pareto dominance relation.

Decision points and objective vectors are plain 1-D float arrays. All
objectives are minimized; maximization problems are negated in the problem
layer before they reach anything in here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """A point lies outside the domain of the function it was passed to."""


class UnsupportedError(TypeError):
    """The operation is not defined for this kind of problem."""


class InvalidStateError(RuntimeError):
    """Internal quantities reached a state the computation cannot handle."""


class ProblemNotFoundError(KeyError):
    """No problem is registered under the requested name."""


def as_vector(values: ArrayLike, name: str = "vector") -> FloatArray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]`` in decision space."""

    lower: FloatArray
    upper: FloatArray

    def __post_init__(self) -> None:
        lower = as_vector(self.lower, "lower").copy()
        upper = as_vector(self.upper, "upper").copy()
        if lower.shape != upper.shape:
            raise InvalidArgumentError("lower and upper bounds differ in length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidArgumentError("box bounds must be finite")
        if not np.all(lower < upper):
            raise InvalidArgumentError("box is degenerate: need lower < upper")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> "Box":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> FloatArray:
        return self.upper - self.lower

    @property
    def center(self) -> FloatArray:
        return 0.5 * (self.lower + self.upper)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def volume(self) -> float:
        return box_volume(self)

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        """Row-wise inclusive membership test for an ``(N, d)`` array."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def clip(self, points: ArrayLike) -> FloatArray:
        return np.clip(np.asarray(points, dtype=np.float64), self.lower, self.upper)


def dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """Return True iff ``a`` Pareto-dominates ``b`` (minimization).

    Exact float comparison: ``a <= b`` everywhere and ``a < b`` somewhere.
    """
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"objective vectors differ in length: {a.shape[0]} vs {b.shape[0]}"
        )
    return bool(np.all(a <= b) and np.any(a < b))


def box_volume(box: Box) -> float:
    return float(np.prod(box.widths))


def in_box(point: ArrayLike, box: Box) -> bool:
    p = as_vector(point, "point")
    if p.shape[0] != box.dim:
        raise InvalidArgumentError(
            f"point has dimension {p.shape[0]}, box has dimension {box.dim}"
        )
    return bool(np.all((p >= box.lower) & (p <= box.upper)))


def nondominated_mask(objectives: ArrayLike) -> NDArray[np.bool_]:
    """Mask of rows not dominated by any other row.

    Duplicated vectors do not dominate each other, so all copies of a
    non-dominated vector are kept. Two objectives use an O(N log N) sweep,
    three a staircase sweep, and anything else the quadratic scan.
    """
    F = np.asarray(objectives, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise InvalidArgumentError("objectives must be a non-empty (N, n) array")
    n_obj = F.shape[1]
    if n_obj == 1:
        return F[:, 0] == F[:, 0].min()
    if n_obj == 2:
        return _nondominated_2d(F)
    if n_obj == 3:
        return _nondominated_3d(F)
    return _nondominated_bruteforce(F)


def _nondominated_2d(F: FloatArray) -> NDArray[np.bool_]:
    order = np.lexsort((F[:, 1], F[:, 0]))
    f1 = F[order, 0]
    f2 = F[order, 1]
    # Lexicographic order puts every dominator of a point before it.
    prev_min = np.minimum.accumulate(np.concatenate(([np.inf], f2[:-1])))
    keep = f2 < prev_min
    # A point equal to the running minimum survives only if it is a copy of
    # the vector that set that minimum.
    tie = f2 == prev_min
    if np.any(tie):
        for idx in np.flatnonzero(tie):
            prior = np.flatnonzero(f2[:idx] == f2[idx])
            keep[idx] = bool(np.all(f1[prior] == f1[idx]))
    mask = np.zeros(F.shape[0], dtype=bool)
    mask[order] = keep
    return mask


def _nondominated_3d(F: FloatArray) -> NDArray[np.bool_]:
    import bisect

    order = np.lexsort((F[:, 2], F[:, 1], F[:, 0]))
    # Staircase of mutually non-dominated (f2, f3) pairs seen so far:
    # f2 ascending, f3 strictly descending.
    stair_f2: list[float] = []
    stair_f3: list[float] = []
    keep = np.zeros(F.shape[0], dtype=bool)
    prev = None
    prev_kept = False
    for idx in order:
        row = F[idx]
        if prev is not None and np.array_equal(row, prev):
            keep[idx] = prev_kept
            continue
        a, b = float(row[1]), float(row[2])
        pos = bisect.bisect_right(stair_f2, a)
        dominated = pos > 0 and stair_f3[pos - 1] <= b
        keep[idx] = not dominated
        prev, prev_kept = row, not dominated
        if dominated:
            continue
        # Drop staircase entries the new pair weakly dominates.
        end = pos
        while end < len(stair_f2) and stair_f3[end] >= b:
            end += 1
        start = pos
        if start > 0 and stair_f2[start - 1] == a:
            start -= 1
        del stair_f2[start:end]
        del stair_f3[start:end]
        stair_f2.insert(start, a)
        stair_f3.insert(start, b)
    return keep


def _nondominated_bruteforce(F: FloatArray) -> NDArray[np.bool_]:
    keep = np.ones(F.shape[0], dtype=bool)
    for i in range(F.shape[0]):
        le = np.all(F <= F[i], axis=1)
        lt = np.any(F < F[i], axis=1)
        keep[i] = not np.any(le & lt)
    return keep


def nondominated_indices(objectives: Sequence[ArrayLike] | FloatArray) -> NDArray[np.intp]:
    return np.flatnonzero(nondominated_mask(np.asarray(objectives, dtype=np.float64)))
