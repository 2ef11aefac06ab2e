"""Best-of-k (minimum) score distributions after a rotation search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DomainError
from .binomial import BinomialModel, _floor_grid


def _min_cdf(cdf_values, sf_values, k: int):
    """``1 - (1 - F)**k`` without cancellation in either tail."""
    cdf_values = np.asarray(cdf_values, dtype=float)
    sf_values = np.asarray(sf_values, dtype=float)
    with np.errstate(divide="ignore"):
        log_sf = np.where(cdf_values < 0.5, np.log1p(-np.minimum(cdf_values, 0.5)), np.log(sf_values))
    return -np.expm1(k * log_sf)


@dataclass(frozen=True)
class ExtremeValueModel:
    """Distribution of the minimum of ``k`` independent draws from ``base``."""

    base: BinomialModel
    k: int = 7

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def grid(self) -> np.ndarray:
        return self.base.grid

    @cached_property
    def pmf(self) -> np.ndarray:
        """Exact P(min = m) on the grid.

        ``S(m-1)**k - S(m)**k`` is expanded as
        ``pmf(m) * sum_j S(m-1)**j * S(m)**(k-1-j)`` so no tail loses precision.
        """
        base = self.base
        if self.k == 1:
            return base.pmf
        s_hi = np.concatenate(([1.0], base.sf_grid[:-1]))   # S(m - 1)
        s_lo = base.sf_grid                                  # S(m)
        acc = np.zeros_like(s_lo)
        for j in range(self.k):
            acc += s_hi ** j * s_lo ** (self.k - 1 - j)
        out = base.pmf * acc
        out.setflags(write=False)
        return out

    @cached_property
    def cdf_grid(self) -> np.ndarray:
        if self.k == 1:
            return self.base.cdf_grid
        out = _min_cdf(self.base.cdf_grid, self.base.sf_grid, self.k)
        out.setflags(write=False)
        return out

    @cached_property
    def sf_grid(self) -> np.ndarray:
        out = self.base.sf_grid ** self.k
        out.setflags(write=False)
        return out

    @property
    def mean(self) -> float:
        return float(np.dot(self.pmf, self.grid))

    @property
    def sd(self) -> float:
        mu = self.mean
        return math.sqrt(float(np.dot(self.pmf, (self.grid - mu) ** 2)))

    def cdf(self, x, continuous: bool = True):
        if continuous:
            # Same as 1 - (1 - F1(x))**k with F1 the piecewise-linear base cumulative.
            f1 = np.asarray(self.base.cdf(x, continuous=True), dtype=float)
            out = _min_cdf(f1, 1.0 - f1, self.k)
            return float(out) if out.ndim == 0 else out
        m = _floor_grid(x, self.N)
        out = np.where(m < 0, 0.0, self.cdf_grid[np.clip(m, 0, self.N)])
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, prob):
        """Exact inverse of the continuous :meth:`cdf`: invert the power, then the base."""
        prob = np.asarray(prob, dtype=float)
        with np.errstate(divide="ignore"):
            base_prob = -np.expm1(np.log1p(-np.minimum(prob, 1.0)) / self.k)
        return self.base.ppf(base_prob)

    def density_curve(self, x):
        """Continuous density ``k f1(x) (1 - F1(x))**(k-1)`` for plotting.

        Each grid atom is spread uniformly over the cell of width ``1/N``
        centred on it, so ``F1`` passes through ``F(m)`` at ``(m + 1/2) / N``
        and ``f1`` is the interpolated ``N * pmf``.
        """
        x = np.asarray(x, dtype=float)
        n = self.N
        f1 = np.interp(x, self.grid, self.base.pmf * n, left=0.0, right=0.0)
        edges = (np.arange(-1, n + 1) + 0.5) / n
        big_f = np.interp(x, edges, np.concatenate(([0.0], self.base.cdf_grid)))
        return self.k * f1 * (1.0 - big_f) ** (self.k - 1)

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        draws = rng.binomial(self.N, self.base.p, (int(size), self.k))
        return draws.min(axis=1) / self.N


def ev_cdf(model: ExtremeValueModel, x, continuous: bool = True):
    """``1 - (1 - F1(x))**k`` using the continuous extension of ``F1`` by default."""
    return model.cdf(x, continuous=continuous)


def ev_pdf(model: ExtremeValueModel, x) -> float:
    """Probability mass of the best-of-k score at the grid point ``x`` (0 off the grid)."""
    m = x * model.N
    mi = int(round(m))
    if abs(m - mi) > 1e-9 * max(1.0, abs(m)) or not (0 <= mi <= model.N):
        return 0.0
    return float(model.pmf[mi])
