"""Benchmark problem registry.

Every problem is exposed in minimization form. Evaluators are vectorized:
they take an ``(N, d)`` array and return ``(N, n)``; a single 1-D point is
also accepted and gives a 1-D result.

Reference fronts for the ZDT and DTLZ problems come from their parametric
forms. The MOP fronts have no closed form here and are produced by a dense
grid over the box followed by a non-dominated filter (the "brute-force
oracle"); results are cached per process.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    Box,
    DomainError,
    FloatArray,
    InvalidArgumentError,
    ProblemNotFoundError,
    UnsupportedError,
    nondominated_mask,
)

Evaluator = Callable[[FloatArray], FloatArray]

# Points per axis of the brute-force grid; every MOP oracle makes >= 1e6 evaluations.
ORACLE_GRID = {2: 1001, 3: 101}
ORACLE_REFINE_ROUNDS = 2
ORACLE_REFINE_SAMPLES = 200_000
ORACLE_SEED = 20_170_901
ZDT3_FRONT_SAMPLES = 100_000
DEFAULT_REFERENCE_SIZE = 500
THIN_CANDIDATES = 20_000


@dataclass(frozen=True)
class Problem:
    """A box-constrained multi-objective problem in minimization form."""

    name: str
    d: int
    n: int
    box: Box
    objective: Evaluator = field(repr=False)
    sense: str = "min"
    description: str = ""
    finite_space: FloatArray | None = field(default=None, repr=False)
    front: Callable[[int], FloatArray] | None = field(default=None, repr=False)
    pareto_bounds: Callable[[], tuple[FloatArray, FloatArray]] | None = field(
        default=None, repr=False
    )

    def evaluate(self, x: ArrayLike) -> FloatArray:
        """Objective vector(s) at ``x``; raises DomainError outside the box."""
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.ndim != 2 or X2.shape[1] != self.d:
            raise InvalidArgumentError(
                f"{self.name} expects points of dimension {self.d}, got shape {X.shape}"
            )
        inside = self.box.contains(X2)
        if not np.all(inside):
            bad = X2[np.flatnonzero(~inside)[0]]
            raise DomainError(f"{self.name}: point outside the box: {bad.tolist()}")
        F = self.objective(X2)
        return F[0] if single else F

    @property
    def is_finite(self) -> bool:
        return self.finite_space is not None

    def true_set_bounds(self) -> tuple[FloatArray, FloatArray]:
        """Leftmost and rightmost Pareto-optimal points by first coordinate."""
        if self.pareto_bounds is None:
            raise UnsupportedError(f"{self.name} has no known Pareto-set bounds")
        return self.pareto_bounds()

    def describe(self) -> dict:
        return {
            "name": self.name,
            "d": self.d,
            "n": self.n,
            "lower": self.box.lower.tolist(),
            "upper": self.box.upper.tolist(),
            "sense": self.sense,
            "finite": self.is_finite,
            "description": self.description,
        }


# ---------------------------------------------------------------------------
# objective functions
# ---------------------------------------------------------------------------


def zdt2(X: FloatArray) -> FloatArray:
    x1 = X[:, 0]
    g = 1.0 + 9.0 * np.sum(X[:, 1:], axis=1) / (X.shape[1] - 1)
    f2 = g * (1.0 - (x1 / g) ** 2)
    return np.column_stack([x1, f2])


def zdt3(X: FloatArray) -> FloatArray:
    x1 = X[:, 0]
    g = 1.0 + 9.0 * np.sum(X[:, 1:], axis=1) / (X.shape[1] - 1)
    h = 1.0 - np.sqrt(x1 / g) - (x1 / g) * np.sin(10.0 * np.pi * x1)
    return np.column_stack([x1, g * h])


def zdt4(X: FloatArray) -> FloatArray:
    x1 = X[:, 0]
    rest = X[:, 1:]
    g = (
        1.0
        + 10.0 * (X.shape[1] - 1)
        + np.sum(rest**2 - 10.0 * np.cos(4.0 * np.pi * rest), axis=1)
    )
    f2 = g * (1.0 - np.sqrt(x1 / g))
    return np.column_stack([x1, f2])


_MOP3_A1 = 0.5 * math.sin(1.0) - math.cos(1.0) + 2.0 * math.sin(2.0) - 1.5 * math.cos(2.0)
_MOP3_A2 = 1.5 * math.sin(1.0) - math.cos(1.0) + 2.0 * math.sin(2.0) - 0.5 * math.cos(2.0)


def mop3_max(X: FloatArray) -> FloatArray:
    """MOP3 in its native maximization form."""
    x1, x2 = X[:, 0], X[:, 1]
    b1 = 0.5 * np.sin(x1) - 2.0 * np.cos(x1) + np.sin(x2) - 1.5 * np.cos(x2)
    b2 = 1.5 * np.sin(x1) - np.cos(x1) + 2.0 * np.sin(x2) - 0.5 * np.cos(x2)
    f1 = -(1.0 + (_MOP3_A1 - b1) ** 2 + (_MOP3_A2 - b2) ** 2)
    f2 = -((x1 + 3.0) ** 2 + (x2 + 1.0) ** 2)
    return np.column_stack([f1, f2])


def mop3(X: FloatArray) -> FloatArray:
    return -mop3_max(X)


def mop4(X: FloatArray) -> FloatArray:
    f1 = np.sum(-10.0 * np.exp(-0.2 * np.sqrt(X[:, :-1] ** 2 + X[:, 1:] ** 2)), axis=1)
    f2 = np.sum(np.abs(X) ** 0.8 + 5.0 * np.sin(X) ** 3, axis=1)
    return np.column_stack([f1, f2])


def mop5(X: FloatArray) -> FloatArray:
    x1, x2 = X[:, 0], X[:, 1]
    r2 = x1**2 + x2**2
    f1 = 0.5 * r2 + np.sin(r2)
    f2 = (3.0 * x1 - 2.0 * x2 + 4.0) ** 2 / 8.0 + (x1 - x2 + 1.0) ** 2 / 27.0 + 15.0
    f3 = 1.0 / (r2 + 1.0) - 1.1 * np.exp(-r2)
    return np.column_stack([f1, f2, f3])


def mop6(X: FloatArray) -> FloatArray:
    x1, x2 = X[:, 0], X[:, 1]
    g = 1.0 + 10.0 * x2
    f2 = g * (1.0 - (x1 / g) ** 2 - (x1 / g) * np.sin(8.0 * np.pi * x1))
    return np.column_stack([x1, f2])


def dtlz1(X: FloatArray) -> FloatArray:
    tail = X[:, 2:]
    g = 100.0 * (
        tail.shape[1]
        + np.sum((tail - 0.5) ** 2 - np.cos(20.0 * np.pi * (tail - 0.5)), axis=1)
    )
    x1, x2 = X[:, 0], X[:, 1]
    scale = 0.5 * (1.0 + g)
    return np.column_stack([scale * x1 * x2, scale * x1 * (1.0 - x2), scale * (1.0 - x1)])


def dtlz2(X: FloatArray) -> FloatArray:
    g = np.sum((X[:, 2:] - 0.5) ** 2, axis=1)
    a = X[:, 0] * np.pi / 2.0
    b = X[:, 1] * np.pi / 2.0
    scale = 1.0 + g
    return np.column_stack(
        [np.cos(a) * np.cos(b) * scale, np.cos(a) * np.sin(b) * scale, np.sin(a) * scale]
    )


def discrete_objectives(X: FloatArray) -> FloatArray:
    """Integer example on Z cap [0, 100]; continuous inputs are rounded first."""
    x = np.rint(X[:, 0])
    f1 = 0.001 * x * (x - 10.0) * (x - 60.0) * (x - 100.0) + 1000.0
    f2 = 0.001 * x * (x - 70.0) * (x - 100.0) * (x - 200.0) + 6000.0
    return np.column_stack([f1, f2])


def identity2d(X: FloatArray) -> FloatArray:
    return X[:, :2].copy()


# ---------------------------------------------------------------------------
# reference fronts
# ---------------------------------------------------------------------------


def _zdt2_front(count: int) -> FloatArray:
    f1 = np.linspace(0.0, 1.0, count)
    return np.column_stack([f1, 1.0 - f1**2])


def _zdt4_front(count: int) -> FloatArray:
    f1 = np.linspace(0.0, 1.0, count)
    return np.column_stack([f1, 1.0 - np.sqrt(f1)])


@functools.lru_cache(maxsize=None)
def zdt3_front_curve() -> FloatArray:
    """Non-dominated part of the ZDT3 g=1 curve, sampled at 1e5 values of f1."""
    f1 = np.linspace(0.0, 1.0, ZDT3_FRONT_SAMPLES)
    f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)
    F = np.column_stack([f1, f2])
    F = F[nondominated_mask(F)]
    F.flags.writeable = False
    return F


def front_segments(front: ArrayLike, gap: float | None = None) -> list[FloatArray]:
    """Split a densely sampled 2-objective front into its connected pieces.

    Points are ordered by f1 and a new segment starts wherever consecutive
    points are more than ``gap`` apart (Euclidean). The default gap is 2% of
    the diagonal of the front's bounding box.
    """
    F = np.asarray(front, dtype=np.float64)
    F = F[np.lexsort(F.T[::-1])]
    if gap is None:
        gap = 0.02 * float(np.linalg.norm(F.max(axis=0) - F.min(axis=0)))
    steps = np.linalg.norm(np.diff(F, axis=0), axis=1)
    cuts = np.flatnonzero(steps > gap) + 1
    return np.split(F, cuts)


def _zdt3_front(count: int) -> FloatArray:
    return thin_maxmin(zdt3_front_curve(), count)


def _dtlz1_front(count: int) -> FloatArray:
    return 0.5 * _simplex_points(count)


def _dtlz2_front(count: int) -> FloatArray:
    P = _simplex_points(count)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _simplex_points(count: int) -> FloatArray:
    """``count`` well-spread points on the unit simplex in R^3.

    A simplex lattice fine enough to hold at least ``count`` points is thinned
    by greedy max-min selection, which keeps the three corners.
    """
    h = 1
    while (h + 1) * (h + 2) // 2 < count:
        h += 1
    pts = [(i / h, j / h, (h - i - j) / h) for i in range(h + 1) for j in range(h + 1 - i)]
    lattice = np.array(pts, dtype=np.float64)
    return thin_maxmin(lattice, count)


def thin_maxmin(points: ArrayLike, count: int) -> FloatArray:
    """Greedy max-min (farthest point) subset of size ``count``.

    Starts from the point with the smallest first coordinate and repeatedly
    adds the point farthest from everything chosen so far. Deterministic:
    ties resolve to the lowest index.
    """
    P = np.asarray(points, dtype=np.float64)
    if count < 1:
        raise InvalidArgumentError("count must be positive")
    if P.shape[0] <= count:
        return P.copy()
    if P.shape[0] > THIN_CANDIDATES:
        # Evenly strided subset in lexicographic order keeps the extremes.
        order = np.lexsort(P.T[::-1])
        pick = np.unique(np.linspace(0, P.shape[0] - 1, THIN_CANDIDATES).round().astype(int))
        P = P[order[pick]]
    first = int(np.lexsort(P.T[::-1])[0])
    chosen = [first]
    dist = np.linalg.norm(P - P[first], axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        np.minimum(dist, np.linalg.norm(P - P[nxt], axis=1), out=dist)
    out = P[np.sort(chosen)]
    return out


@dataclass(frozen=True)
class OracleFront:
    """Non-dominated subset of a dense search over a problem's box."""

    points: FloatArray
    objectives: FloatArray
    evaluations: int
    seed: int


def grid_points(box: Box, per_axis: int) -> FloatArray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


@functools.lru_cache(maxsize=None)
def bruteforce_front(name: str) -> OracleFront:
    """Dense search for the non-dominated set of a continuous problem.

    A regular grid over the box (>= 1e6 evaluations) is filtered to its
    non-dominated points, then ``ORACLE_REFINE_ROUNDS`` rounds each scatter
    ``ORACLE_REFINE_SAMPLES`` seeded uniform draws in cells around the current
    front (cell width shrinking tenfold per round) and re-filter.
    """
    problem = lookup(name)
    per_axis = ORACLE_GRID.get(problem.d)
    if per_axis is None:
        raise UnsupportedError(f"no brute-force grid configured for d={problem.d}")
    X = grid_points(problem.box, per_axis)
    F = problem.objective(X)
    evaluations = X.shape[0]
    mask = nondominated_mask(F)
    X, F = X[mask], F[mask]
    rng = np.random.default_rng(ORACLE_SEED)
    half = problem.box.widths / (per_axis - 1)
    for _ in range(ORACLE_REFINE_ROUNDS):
        centers = X[rng.integers(X.shape[0], size=ORACLE_REFINE_SAMPLES)]
        offsets = rng.uniform(-1.0, 1.0, size=centers.shape) * half
        Y = problem.box.clip(centers + offsets)
        X = np.vstack([X, Y])
        F = np.vstack([F, problem.objective(Y)])
        evaluations += Y.shape[0]
        mask = nondominated_mask(F)
        X, F = X[mask], F[mask]
        half = half / 10.0
    X.flags.writeable = False
    F.flags.writeable = False
    return OracleFront(points=X, objectives=F, evaluations=evaluations, seed=ORACLE_SEED)


def _oracle_front(name: str) -> Callable[[int], FloatArray]:
    def sampler(count: int) -> FloatArray:
        return thin_maxmin(bruteforce_front(name).objectives, count)

    return sampler


def _oracle_bounds(name: str) -> Callable[[], tuple[FloatArray, FloatArray]]:
    def bounds() -> tuple[FloatArray, FloatArray]:
        X = bruteforce_front(name).points
        order = np.lexsort(X.T[::-1])
        return X[order[0]].copy(), X[order[-1]].copy()

    return bounds


def _fixed_bounds(left: ArrayLike, right: ArrayLike) -> Callable[[], tuple[FloatArray, FloatArray]]:
    lo = np.asarray(left, dtype=np.float64)
    hi = np.asarray(right, dtype=np.float64)
    return lambda: (lo.copy(), hi.copy())


def _zdt3_bounds() -> tuple[FloatArray, FloatArray]:
    f1 = zdt3_front_curve()[:, 0]
    left = np.zeros(30)
    right = np.zeros(30)
    left[0], right[0] = f1.min(), f1.max()
    return left, right


def _finite_bounds(name: str) -> Callable[[], tuple[FloatArray, FloatArray]]:
    def bounds() -> tuple[FloatArray, FloatArray]:
        P = true_pareto_set(name)
        order = np.lexsort(P.T[::-1])
        return P[order[0]].copy(), P[order[-1]].copy()

    return bounds


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def _build_registry() -> dict[str, Problem]:
    zdt4_lower = np.zeros(10)
    zdt4_lower[1:] = -5.0
    zdt4_upper = np.full(10, 5.0)
    zdt4_upper[0] = 1.0
    dtlz1_left = np.r_[0.0, 0.5, np.full(5, 0.5)]
    dtlz1_right = np.r_[1.0, 0.5, np.full(5, 0.5)]
    dtlz2_left = np.r_[0.0, 0.5, np.full(10, 0.5)]
    dtlz2_right = np.r_[1.0, 0.5, np.full(10, 0.5)]

    problems = [
        Problem(
            "zdt2", 30, 2, Box.uniform(0.0, 1.0, 30), zdt2,
            description="ZDT2, concave front f2 = 1 - f1^2",
            front=_zdt2_front,
            pareto_bounds=_fixed_bounds(np.zeros(30), np.r_[1.0, np.zeros(29)]),
        ),
        Problem(
            "zdt3", 30, 2, Box.uniform(0.0, 1.0, 30), zdt3,
            description="ZDT3, five disconnected front segments",
            front=_zdt3_front,
            pareto_bounds=_zdt3_bounds,
        ),
        Problem(
            "zdt4", 10, 2, Box(zdt4_lower, zdt4_upper), zdt4,
            description="ZDT4, multimodal g with 21^9 local fronts",
            front=_zdt4_front,
            pareto_bounds=_fixed_bounds(np.zeros(10), np.r_[1.0, np.zeros(9)]),
        ),
        Problem(
            "mop3", 2, 2, Box.uniform(-math.pi, math.pi, 2), mop3, sense="max",
            description="MOP3 (maximization, exposed negated)",
            front=_oracle_front("mop3"), pareto_bounds=_oracle_bounds("mop3"),
        ),
        Problem(
            "mop4", 3, 2, Box.uniform(-5.0, 5.0, 3), mop4,
            description="MOP4, disconnected front",
            front=_oracle_front("mop4"), pareto_bounds=_oracle_bounds("mop4"),
        ),
        Problem(
            "mop5", 2, 3, Box.uniform(-30.0, 30.0, 2), mop5,
            description="MOP5, three objectives",
            front=_oracle_front("mop5"), pareto_bounds=_oracle_bounds("mop5"),
        ),
        Problem(
            "mop6", 2, 2, Box.uniform(0.0, 1.0, 2), mop6,
            description="MOP6, four disconnected front segments",
            front=_oracle_front("mop6"), pareto_bounds=_oracle_bounds("mop6"),
        ),
        Problem(
            "dtlz1", 7, 3, Box.uniform(0.0, 1.0, 7), dtlz1,
            description="DTLZ1, linear front sum(f) = 0.5",
            front=_dtlz1_front,
            pareto_bounds=_fixed_bounds(dtlz1_left, dtlz1_right),
        ),
        Problem(
            "dtlz2", 12, 3, Box.uniform(0.0, 1.0, 12), dtlz2,
            description="DTLZ2, spherical front",
            front=_dtlz2_front,
            pareto_bounds=_fixed_bounds(dtlz2_left, dtlz2_right),
        ),
        Problem(
            "discrete_example", 1, 2, Box.uniform(0.0, 100.0, 1), discrete_objectives,
            description="integer example on {0, ..., 100}; continuous inputs are rounded",
            finite_space=np.arange(101, dtype=np.float64).reshape(-1, 1),
            pareto_bounds=_finite_bounds("discrete_example"),
        ),
        Problem(
            "identity2d", 2, 2, Box.uniform(0.0, 1.0, 2), identity2d,
            description="f(x) = x on the unit square; D(a, b) = a * b",
            front=lambda count: np.zeros((1, 2)),
            pareto_bounds=_fixed_bounds(np.zeros(2), np.zeros(2)),
        ),
    ]
    for p in problems:
        if p.finite_space is not None:
            p.finite_space.flags.writeable = False
    return {p.name: p for p in problems}


_REGISTRY: dict[str, Problem] | None = None


def registry() -> dict[str, Problem]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build_registry()
    return _REGISTRY


def names() -> list[str]:
    return list(registry())


def lookup(name: str) -> Problem:
    try:
        return registry()[name]
    except KeyError:
        raise ProblemNotFoundError(
            f"unknown problem {name!r}; choose from {', '.join(names())}"
        ) from None


def true_pareto_set(name: str | Problem) -> FloatArray:
    """Pareto-optimal members of a finite problem, by exhaustive pairwise check."""
    problem = lookup(name) if isinstance(name, str) else name
    if problem.finite_space is None:
        raise UnsupportedError(f"{problem.name} has no finite solution space")
    X = problem.finite_space
    F = problem.objective(X)
    keep = np.ones(X.shape[0], dtype=bool)
    for i in range(X.shape[0]):
        le = np.all(F <= F[i], axis=1)
        lt = np.any(F < F[i], axis=1)
        keep[i] = not np.any(le & lt)
    return X[keep].copy()


def sample_reference_front(name: str, count: int = DEFAULT_REFERENCE_SIZE) -> FloatArray:
    """``count`` spread points on the true Pareto front (objective space)."""
    problem = lookup(name)
    if count < 2:
        raise InvalidArgumentError("reference front needs at least 2 points")
    if problem.finite_space is not None:
        P = true_pareto_set(problem)
        return thin_maxmin(problem.objective(P), count)
    if problem.front is None:
        raise UnsupportedError(f"{name} has no reference front")
    return problem.front(count)
