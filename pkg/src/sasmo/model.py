"""Gaussian components and the uniform-mixed sampling distribution.

The sampling density is

    g(x) = (1 - alpha) * mean_i N(x; mu_i, Sigma_i) + alpha / vol(box)

with equal component weights. Densities use the untruncated normal even
though draws are kept inside the box, so values near the boundary are biased;
only relative importance weights matter to the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .core import Box, DomainError, FloatArray, InvalidArgumentError, InvalidStateError

RETRY_CAP = 100
CHUNK_CELLS = 1 << 22
FLOOR_FRACTION = 1e-8
BOUNDARY_MODES = ("coordinate", "reject", "clip")


def variance_floor(box: Box) -> float:
    """Diagonal regularizer: 1e-8 times the mean squared edge length."""
    return FLOOR_FRACTION * float(np.mean(box.widths**2))


@dataclass(frozen=True)
class GaussianComponent:
    mean: FloatArray
    covariance: FloatArray
    chol: FloatArray = field(init=False, repr=False, compare=False)
    log_norm: float = field(init=False, repr=False, compare=False)
    spherical_variance: float | None = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64)
        cov = np.array(self.covariance, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise InvalidArgumentError("covariance must be d x d for a length-d mean")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise InvalidArgumentError("component parameters must be finite")
        cov = 0.5 * (cov + cov.T)
        chol = np.linalg.cholesky(cov)
        d = mean.shape[0]
        log_norm = -0.5 * d * math.log(2.0 * math.pi) - float(np.sum(np.log(np.diag(chol))))
        diag = np.diag(cov)
        spherical = None
        if np.all(diag == diag[0]) and np.count_nonzero(cov - np.diag(diag)) == 0:
            spherical = float(diag[0])
        for arr in (mean, cov, chol):
            arr.flags.writeable = False
        object.__setattr__(self, "spherical_variance", spherical)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "log_norm", log_norm)

    @classmethod
    def isotropic(cls, mean: ArrayLike, variance: float) -> "GaussianComponent":
        mean = np.asarray(mean, dtype=np.float64)
        return cls(mean, variance * np.eye(mean.shape[0]))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.covariance))

    def log_pdf(self, X: ArrayLike) -> FloatArray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = solve_triangular(self.chol, (X - self.mean).T, lower=True, check_finite=False)
        return self.log_norm - 0.5 * np.sum(z * z, axis=0)

    def pdf(self, X: ArrayLike) -> FloatArray:
        return np.exp(self.log_pdf(X))

    def draw(self, rng: np.random.Generator, count: int) -> FloatArray:
        z = rng.standard_normal((count, self.dim))
        return self.mean + z @ self.chol.T


@dataclass(frozen=True)
class MixtureModel:
    """Equal-weight Gaussian mixture blended with the uniform law on a box.

    Components with a spherical covariance ``v * I`` (every singleton
    cluster) are evaluated together through one matrix product per row
    block; the rest are whitened one at a time.
    """

    components: tuple[GaussianComponent, ...]
    alpha: float
    box: Box
    _spherical: np.ndarray = field(init=False, repr=False, compare=False)
    _means: FloatArray = field(init=False, repr=False, compare=False)
    _scales: FloatArray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise InvalidArgumentError("mixture needs at least one component")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidArgumentError("alpha must lie in [0, 1]")
        if any(c.dim != self.box.dim for c in comps):
            raise InvalidArgumentError("component dimension differs from box dimension")
        object.__setattr__(self, "components", comps)
        object.__setattr__(
            self, "_spherical", np.array([c.spherical_variance is not None for c in comps])
        )
        object.__setattr__(self, "_means", np.array([c.mean for c in comps]))
        object.__setattr__(self, "_scales", np.sqrt([c.spherical_variance or 0.0 for c in comps]))

    @property
    def size(self) -> int:
        return len(self.components)

    def _log_gauss(self, X: FloatArray) -> FloatArray:
        """``log mean_i N(x; mu_i, Sigma_i)`` for every row of ``X``."""
        comps = self.components
        sph = np.flatnonzero(self._spherical)
        full = np.flatnonzero(~self._spherical)
        parts = []
        if sph.shape[0]:
            # Center on the box so the expanded squared distance loses little precision.
            shift = self.box.center
            Xc = X - shift
            M = self._means[sph] - shift
            inv_var = 1.0 / self._scales[sph] ** 2
            norms = np.array([comps[i].log_norm for i in sph])
            m_sq = np.einsum("ij,ij->i", M, M)
            x_sq = np.einsum("ij,ij->i", Xc, Xc)
            out = np.empty(X.shape[0])
            step = max(1, CHUNK_CELLS // sph.shape[0])
            for lo in range(0, X.shape[0], step):
                cross = Xc[lo:lo + step] @ M.T
                out[lo:lo + step] = _spherical_logsumexp(cross, x_sq[lo:lo + step], m_sq, inv_var, norms)
            parts.append(out)
        if full.shape[0]:
            parts.append(logsumexp(np.stack([comps[i].log_pdf(X) for i in full]), axis=0))
        total = parts[0] if len(parts) == 1 else np.logaddexp(parts[0], parts[1])
        return total - math.log(self.size)

    def log_density(self, X: ArrayLike) -> FloatArray:
        """Log of the mixture density, without the in-box check."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        log_uniform = math.log(self.alpha) - math.log(self.box.volume) if self.alpha > 0 else -np.inf
        if self.alpha >= 1.0:
            return np.full(X.shape[0], log_uniform)
        log_gauss = math.log1p(-self.alpha) + self._log_gauss(X)
        return np.logaddexp(log_gauss, log_uniform)

    def density(self, X: ArrayLike) -> FloatArray:
        """Mixture density at in-box points (1-D input gives a scalar array).

        ``alpha == 1`` returns exactly ``1 / vol(box)`` so that importance
        weights collapse to 1 without rounding.
        """
        X = np.asarray(X, dtype=np.float64)
        X2 = np.atleast_2d(X)
        inside = self.box.contains(X2)
        if not np.all(inside):
            raise DomainError(f"density requested outside the box at {X2[~inside][0].tolist()}")
        if self.alpha >= 1.0:
            out = np.full(X2.shape[0], 1.0 / self.box.volume)
        else:
            out = (1.0 - self.alpha) * np.exp(self._log_gauss(X2)) + self.alpha / self.box.volume
        return out[0] if X.ndim == 1 else out

    def draw_components(self, rng: np.random.Generator, which: np.ndarray) -> FloatArray:
        """One unconstrained draw from component ``which[j]`` for every ``j``."""
        comps = self.components
        z = rng.standard_normal((which.shape[0], self.box.dim))
        out = np.empty_like(z)
        sph = self._spherical[which]
        rows = np.flatnonzero(sph)
        if rows.shape[0]:
            w = which[rows]
            out[rows] = self._means[w] + self._scales[w, None] * z[rows]
        for c in np.unique(which[~sph]):
            rows = np.flatnonzero(which == c)
            out[rows] = comps[c].mean + z[rows] @ comps[c].chol.T
        return out

    def sample(self, rng: np.random.Generator, count: int, boundary: str = "reject") -> FloatArray:
        return sample(self, rng, count, boundary=boundary)


@numba.njit(cache=True)
def _spherical_logsumexp(cross, x_sq, m_sq, inv_var, norms):
    n, k = cross.shape
    out = np.empty(n)
    row = np.empty(k)
    for i in range(n):
        top = -np.inf
        for j in range(k):
            sq = max(x_sq[i] + m_sq[j] - 2.0 * cross[i, j], 0.0)
            row[j] = norms[j] - 0.5 * sq * inv_var[j]
            if row[j] > top:
                top = row[j]
        acc = 0.0
        for j in range(k):
            gap = row[j] - top
            if gap > -746.0:  # exp underflows to exactly 0 below this
                acc += math.exp(gap)
        out[i] = top + math.log(acc)
    return out


def sample(
    model: MixtureModel,
    rng: np.random.Generator,
    count: int,
    boundary: str = "reject",
) -> FloatArray:
    """Draw ``count`` points from the mixture; every returned point is in the box.

    Each draw takes the uniform branch with probability ``alpha``, otherwise
    a component chosen uniformly at random. Gaussian draws that leave the box
    are handled per ``boundary``:

    ``"reject"``
        redraw up to ``RETRY_CAP`` times, then fall back to a uniform draw;
    ``"coordinate"``
        redraw only the offending coordinates (taken from fresh joint draws)
        up to ``RETRY_CAP`` times, then draw those coordinates uniformly
        within their bounds. Unlike whole-vector rejection this still works
        for narrow components sitting on a face of a high-dimensional box;
    ``"clip"``
        project onto the box.
    """
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InvalidArgumentError("count must be a positive integer")
    if boundary not in BOUNDARY_MODES:
        raise InvalidArgumentError(f"boundary must be one of {BOUNDARY_MODES}")
    box = model.box
    out = np.empty((count, box.dim))
    uniform = rng.random(count) < model.alpha
    which = rng.integers(model.size, size=count)
    n_uniform = int(np.count_nonzero(uniform))
    out[uniform] = rng.uniform(box.lower, box.upper, size=(n_uniform, box.dim))
    gauss = np.flatnonzero(~uniform)
    which = which[gauss]
    draws = model.draw_components(rng, which)
    if boundary == "clip":
        draws = box.clip(draws)
    elif boundary == "coordinate":
        bad = (draws < box.lower) | (draws > box.upper)
        for _ in range(RETRY_CAP):
            rows = np.flatnonzero(bad.any(axis=1))
            if rows.shape[0] == 0:
                break
            fresh = model.draw_components(rng, which[rows])
            block = draws[rows]
            sub = bad[rows]
            block[sub] = fresh[sub]
            draws[rows] = block
            bad[rows] = (block < box.lower) | (block > box.upper)
        rows, cols = np.nonzero(bad)
        if rows.shape[0]:
            draws[rows, cols] = rng.uniform(box.lower[cols], box.upper[cols])
    else:
        bad = ~box.contains(draws)
        for _ in range(RETRY_CAP):
            rows = np.flatnonzero(bad)
            if rows.shape[0] == 0:
                break
            draws[rows] = model.draw_components(rng, which[rows])
            bad[rows] = ~box.contains(draws[rows])
        rows = np.flatnonzero(bad)
        if rows.shape[0]:
            draws[rows] = rng.uniform(box.lower, box.upper, size=(rows.shape[0], box.dim))
    out[gauss] = draws
    return out


def _normalized_weights(densities, log_densities, n) -> FloatArray:
    if log_densities is not None:
        logg = np.asarray(log_densities, dtype=np.float64)
    elif densities is not None:
        g = np.asarray(densities, dtype=np.float64)
        if np.any(~(g > 0)):
            raise InvalidStateError("sampling densities must be strictly positive")
        logg = np.log(g)
    else:
        return np.full(n, 1.0 / n)
    if logg.shape != (n,):
        raise InvalidArgumentError("need exactly one density per elite point")
    if np.any(np.isnan(logg)) or np.any(np.isinf(logg)):
        raise InvalidStateError("sampling densities must be finite and positive")
    lw = -logg
    w = np.exp(lw - lw.max())
    return w / w.sum()


def fit_component(
    elites: ArrayLike,
    densities: ArrayLike | None = None,
    *,
    log_densities: ArrayLike | None = None,
    floor: float = 0.0,
) -> GaussianComponent:
    """Importance-weighted Gaussian fit to a cluster of elite points.

    Weights are proportional to ``1 / g(x)``; the result is the weighted mean
    and weighted population covariance, plus ``floor`` on the diagonal. If the
    regularized covariance still fails to factor, only its diagonal is kept.
    """
    X = np.atleast_2d(np.asarray(elites, dtype=np.float64))
    if X.shape[0] == 0:
        raise InvalidArgumentError("cannot fit a component to an empty elite set")
    w = _normalized_weights(densities, log_densities, X.shape[0])
    mean = w @ X
    centered = X - mean
    cov = (centered * w[:, None]).T @ centered
    cov[np.diag_indices_from(cov)] += floor
    try:
        return GaussianComponent(mean, cov)
    except np.linalg.LinAlgError:
        diag = np.diag(np.maximum(np.diag(cov), floor if floor > 0 else np.finfo(float).tiny))
        return GaussianComponent(mean, diag)


def mixture(components: Sequence[GaussianComponent], alpha: float, box: Box) -> MixtureModel:
    return MixtureModel(tuple(components), alpha, box)
