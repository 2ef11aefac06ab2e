"""Fractional binomial score model and method-of-moments DoF estimation.

A score ``HD = m / N`` counts ``m`` disagreements out of ``N`` equivalent
Bernoulli trials, each disagreeing with probability ``p``.

All combinatorial terms are evaluated in log space with ``gammaln``; the
cumulative is summed from the near end of each tail so both tails keep full
relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from ..errors import DegenerateSample, DomainError

# Grid-point tolerance when mapping a real x onto m / N.
_GRID_EPS = 1e-9


def _floor_grid(x, n: int):
    """Largest m with m / n <= x, tolerant of rounding right at grid points."""
    return np.floor(np.asarray(x, dtype=float) * n + _GRID_EPS).astype(np.int64)


def _last_below(x, n: int):
    """Largest m with m / n < x (strictly), tolerant of rounding at grid points."""
    return np.ceil(np.asarray(x, dtype=float) * n - _GRID_EPS).astype(np.int64) - 1


@dataclass(frozen=True)
class BinomialModel:
    N: int
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "p", float(self.p))

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.N + 1) / self.N

    @cached_property
    def log_pmf(self) -> np.ndarray:
        m = np.arange(self.N + 1, dtype=float)
        n = float(self.N)
        return (gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
                + m * math.log(self.p) + (n - m) * math.log1p(-self.p))

    @cached_property
    def pmf(self) -> np.ndarray:
        out = np.exp(self.log_pmf)
        out.setflags(write=False)
        return out

    @cached_property
    def cdf_grid(self) -> np.ndarray:
        """P(m' <= m) for m = 0..N."""
        out = np.cumsum(self.pmf)
        upper = self.sf_grid
        # Right of the mode the complement of the tail sum is the more accurate form.
        right = np.arange(self.N + 1) > self.N * self.p
        out[right] = 1.0 - upper[right]
        out = np.minimum(out, 1.0)
        out[-1] = 1.0
        out.setflags(write=False)
        return out

    @cached_property
    def sf_grid(self) -> np.ndarray:
        """P(m' > m) for m = 0..N."""
        out = np.empty(self.N + 1)
        out[:-1] = np.cumsum(self.pmf[::-1])[::-1][1:]
        out[-1] = 0.0
        out.setflags(write=False)
        return out

    @property
    def mean(self) -> float:
        return self.p

    @property
    def sd(self) -> float:
        return math.sqrt(self.p * (1 - self.p) / self.N)

    def cdf(self, x, continuous: bool = False):
        """P(HD <= x). ``continuous`` selects the piecewise-linear extension."""
        if continuous:
            return continuous_cdf(self.grid, self.cdf_grid, x)
        m = _floor_grid(x, self.N)
        out = np.where(m < 0, 0.0, self.cdf_grid[np.clip(m, 0, self.N)])
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, prob):
        return continuous_ppf(self.grid, self.cdf_grid, prob)

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        return rng.binomial(self.N, self.p, size) / self.N


def continuous_cdf(grid: np.ndarray, cdf_values: np.ndarray, x):
    """Monotone piecewise-linear CDF through ``(grid[m], cdf_values[m])``; 0 below the grid."""
    x = np.asarray(x, dtype=float)
    out = np.interp(x, grid, cdf_values)
    out = np.where(x < grid[0], 0.0, out)
    return float(out) if out.ndim == 0 else out


def continuous_ppf(grid: np.ndarray, cdf_values: np.ndarray, prob):
    """Inverse of :func:`continuous_cdf`; probabilities below ``cdf_values[0]`` map to ``grid[0]``."""
    prob = np.asarray(prob, dtype=float)
    # Keep only strictly increasing points so the inverse is well defined.
    keep = np.concatenate(([True], np.diff(cdf_values) > 0))
    out = np.interp(prob, cdf_values[keep], grid[keep])
    return float(out) if out.ndim == 0 else out


def binomial_pmf(model: BinomialModel, m: int) -> float:
    if int(m) != m or not (0 <= m <= model.N):
        raise DomainError(f"m must be an integer in [0, {model.N}], got {m!r}")
    return float(model.pmf[int(m)])


def binomial_cdf(model: BinomialModel, x, continuous: bool = False):
    """Cumulative ``sum(pmf[m] for m <= floor(x N))``, or its continuous extension."""
    return model.cdf(x, continuous=continuous)


@dataclass(frozen=True)
class DofFit:
    """Moment fit of a score sample; ``N_raw`` is the unrounded estimate."""

    model: BinomialModel
    N_raw: float
    mean: float
    sd: float
    n_scores: int

    @property
    def N(self) -> int:
        return self.model.N

    @property
    def p(self) -> float:
        return self.model.p


def dof_from_moments(mean: float, sd: float) -> float:
    """Equivalent number of Bernoulli trials, ``p (1 - p) / sigma**2``."""
    if not sd > 0:
        raise DegenerateSample(f"standard deviation must be positive, got {sd!r}")
    return mean * (1.0 - mean) / sd ** 2


def fit_dof(scores) -> DofFit:
    s = np.asarray(scores, dtype=float).ravel()
    if s.size < 2:
        raise DomainError(f"need at least 2 scores, got {s.size}")
    if not np.all(np.isfinite(s)) or s.min() < 0 or s.max() > 1:
        raise DomainError("scores must be finite values in [0, 1]")
    mean = float(s.mean())
    sd = float(s.std(ddof=1))
    if sd == 0 or s.min() == s.max():
        raise DegenerateSample("all scores are identical")
    n_raw = dof_from_moments(mean, sd)
    n_hat = max(1, int(round(n_raw)))
    if not (0.0 < mean < 1.0):
        raise DegenerateSample(f"sample mean {mean} leaves no valid p")
    return DofFit(BinomialModel(n_hat, mean), n_raw, mean, sd, int(s.size))


def estimate_dof(scores) -> BinomialModel:
    """Method-of-moments binomial fit: ``p = mean``, ``N = round(p (1 - p) / s**2)``."""
    return fit_dof(scores).model
