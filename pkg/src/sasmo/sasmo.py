"""Adaptive mixture search that drives the domination measure to zero.

One iteration:

1. draw ``N_k`` points from the current mixture,
2. estimate every point's domination measure by importance sampling,
3. keep the points at or below the ``rho`` sample quantile (ties included),
4. cluster them with the current threshold and fit one Gaussian per cluster,
5. shrink the threshold and stop once it drops below ``threshold_bound`` or
   the iteration budget is spent.

The answer is the set of component means from the last fit.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .cluster import cluster, next_threshold
from .core import FloatArray, InvalidArgumentError, nondominated_mask
from .estimator import importance_weights, is_estimate, pairwise_domination_counts
from .model import BOUNDARY_MODES, GaussianComponent, MixtureModel, fit_component, sample, variance_floor
from .problems import Problem, lookup

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class NonFiniteObjectiveError(RuntimeError):
    """An objective evaluation returned NaN or infinity."""


@dataclass(frozen=True)
class RunConfig:
    """Hyperparameters of one run. Defaults follow the published settings."""

    problem: str
    n0: int = 1000
    growth_exponent: float = 1.01
    rho: float = 0.10
    alpha: float = 0.1
    threshold_bound: float = 0.001
    initial_threshold: float | None = None
    shrink_factor: float = 1.1
    t_max: int = 100
    mu0: Sequence[float] | str = "zero"
    sigma0_scale: float = 1000.0
    seed: int = 0
    boundary: str = "reject"

    def __post_init__(self) -> None:
        if self.n0 < 1:
            raise InvalidArgumentError("n0 must be positive")
        if self.growth_exponent < 0:
            raise InvalidArgumentError("growth_exponent must be non-negative")
        if not 0 < self.rho < 1:
            raise InvalidArgumentError("rho must lie in (0, 1)")
        if not 0 < self.alpha <= 1:
            raise InvalidArgumentError("alpha must lie in (0, 1]")
        if not self.threshold_bound > 0:
            raise InvalidArgumentError("threshold_bound must be positive")
        if self.initial_threshold is not None and not self.initial_threshold > 0:
            raise InvalidArgumentError("initial_threshold must be positive")
        if not self.shrink_factor > 1:
            raise InvalidArgumentError("shrink_factor must exceed 1")
        if self.t_max < 1:
            raise InvalidArgumentError("t_max must be positive")
        if not self.sigma0_scale > 0:
            raise InvalidArgumentError("sigma0_scale must be positive")
        if self.boundary not in BOUNDARY_MODES:
            raise InvalidArgumentError(f"boundary must be one of {BOUNDARY_MODES}")
        if isinstance(self.mu0, str):
            if self.mu0 not in ("zero", "box-center"):
                raise InvalidArgumentError("mu0 must be a vector, 'zero' or 'box-center'")
        else:
            object.__setattr__(self, "mu0", tuple(float(v) for v in self.mu0))

    def sample_size(self, k: int) -> int:
        """``N_0`` at k = 0, ``ceil(k**growth * N_0)`` afterwards."""
        if k == 0:
            return self.n0
        return math.ceil(k**self.growth_exponent * self.n0)

    def resolve_threshold(self, problem: Problem) -> float:
        if self.initial_threshold is not None:
            return float(self.initial_threshold)
        return problem.box.diagonal / 10.0

    def resolve_mean(self, problem: Problem) -> FloatArray:
        if self.mu0 == "zero":
            return np.zeros(problem.d)
        if self.mu0 == "box-center":
            return problem.box.center.copy()
        mu = np.asarray(self.mu0, dtype=np.float64)
        if mu.shape != (problem.d,):
            raise InvalidArgumentError(f"mu0 must have length {problem.d}")
        return mu

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        if not isinstance(self.mu0, str):
            out["mu0"] = list(self.mu0)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class IterationRecord:
    k: int
    sample_size: int
    gamma: float
    elite_count: int
    cluster_count: int
    threshold: float
    next_threshold: float
    means: FloatArray
    traces: FloatArray
    cluster_sizes: list[int]


@dataclass
class RunHistory:
    config: RunConfig
    problem: str
    initial_threshold: float
    iterations: list[IterationRecord] = field(default_factory=list)
    components: list[GaussianComponent] = field(default_factory=list, repr=False)
    final_points: FloatArray | None = None
    final_objectives: FloatArray | None = None
    final_dmeasure: FloatArray | None = None
    clipped: np.ndarray | None = None
    stop_reason: str = ""
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "problem": self.problem,
            "config": self.config.to_dict(),
            "initial_threshold": self.initial_threshold,
            "stop_reason": self.stop_reason,
            "iterations": [
                {
                    "k": r.k,
                    "sample_size": r.sample_size,
                    "gamma": r.gamma,
                    "elite_count": r.elite_count,
                    "cluster_count": r.cluster_count,
                    "threshold": r.threshold,
                    "next_threshold": r.next_threshold,
                    "cluster_sizes": list(r.cluster_sizes),
                    "means": r.means.tolist(),
                    "covariance_traces": r.traces.tolist(),
                }
                for r in self.iterations
            ],
            "final": {
                "points": _tolist(self.final_points),
                "objectives": _tolist(self.final_objectives),
                "dmeasure": _tolist(self.final_dmeasure),
                "clipped": _tolist(self.clipped),
                "covariances": [c.covariance.tolist() for c in self.components],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)


def _tolist(arr):
    return None if arr is None else np.asarray(arr).tolist()


def _check_finite(X: FloatArray, F: FloatArray, problem: Problem) -> None:
    bad = ~np.all(np.isfinite(F), axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteObjectiveError(
            f"{problem.name}: non-finite objective {F[i].tolist()} at x = {X[i].tolist()}"
        )


def run(config: RunConfig, problem: Problem | None = None) -> RunHistory:
    """Execute one search run; deterministic for a fixed ``config.seed``."""
    started = time.perf_counter()
    problem = lookup(config.problem) if problem is None else problem
    box = problem.box
    volume = box.volume
    floor = variance_floor(box)
    rng = np.random.default_rng(config.seed)
    delta = config.resolve_threshold(problem)
    components = [GaussianComponent.isotropic(config.resolve_mean(problem), config.sigma0_scale)]
    history = RunHistory(config=config, problem=problem.name, initial_threshold=delta)

    k = 0
    while True:
        n_k = config.sample_size(k)
        model = MixtureModel(tuple(components), config.alpha, box)
        X = sample(model, rng, n_k, boundary=config.boundary)
        F = problem.objective(X)
        _check_finite(X, F, problem)
        log_g = model.log_density(X)
        D = is_estimate(F, np.exp(log_g), volume)

        rank = math.ceil(config.rho * n_k)
        gamma = float(np.sort(D, kind="stable")[rank - 1])
        elite = np.flatnonzero(D <= gamma)
        clusters = cluster(X[elite], delta, rng)
        components = [
            fit_component(c.members, log_densities=log_g[elite[c.indices]], floor=floor)
            for c in clusters.clusters
        ]
        new_delta = next_threshold(clusters, delta, config.shrink_factor)
        history.iterations.append(
            IterationRecord(
                k=k,
                sample_size=n_k,
                gamma=gamma,
                elite_count=int(elite.shape[0]),
                cluster_count=len(clusters),
                threshold=delta,
                next_threshold=new_delta,
                means=np.array([c.mean for c in components]),
                traces=np.array([c.trace for c in components]),
                cluster_sizes=clusters.sizes,
            )
        )
        log.debug(
            "k=%d N=%d gamma=%.3g elites=%d clusters=%d delta=%.3g",
            k, n_k, gamma, elite.shape[0], len(clusters), delta,
        )
        if new_delta < config.threshold_bound:
            history.stop_reason = "threshold"
            break
        if k + 1 >= config.t_max:
            history.stop_reason = "max-iterations"
            break
        delta = new_delta
        k += 1

    means = np.array([c.mean for c in components])
    clipped = ~box.contains(means)
    points = box.clip(means)
    objectives = problem.objective(points)
    _check_finite(points, objectives, problem)
    # Score the returned means against the last sample under the last mixture.
    weights = importance_weights(np.exp(log_g), volume)
    both = np.vstack([F, objectives])
    counts = pairwise_domination_counts(both, np.concatenate([weights, np.zeros(len(points))]))
    history.components = components
    history.final_points = points
    history.final_objectives = objectives
    history.final_dmeasure = counts[F.shape[0]:] / F.shape[0]
    history.clipped = clipped
    history.runtime_seconds = time.perf_counter() - started
    return history


def final_front(history: RunHistory, post_filter: bool = False) -> tuple[FloatArray, FloatArray]:
    """Returned points and their objective vectors.

    With ``post_filter`` the points whose images are dominated by another
    returned point's image are dropped.
    """
    X = history.final_points
    F = history.final_objectives
    if X is None or F is None:
        raise InvalidArgumentError("run has not completed")
    if post_filter and X.shape[0]:
        keep = nondominated_mask(F)
        return X[keep], F[keep]
    return X, F
