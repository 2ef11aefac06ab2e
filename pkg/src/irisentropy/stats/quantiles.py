"""Quantile-quantile mapping and decision-threshold transfer between cohorts.

Empirical quantiles use linear interpolation between order statistics
(the "type 7" definition, numpy's ``method="linear"``). The matching
empirical cumulative is its exact inverse: piecewise linear through
``(x_(i), i / (n - 1))``. Analytic models use their continuous extension.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import EmptySample
from .binomial import BinomialModel
from .extreme import ExtremeValueModel

_MODELS = (BinomialModel, ExtremeValueModel)


class EmpiricalDistribution:
    """Sorted sample with type-7 quantile function and its inverse."""

    def __init__(self, scores):
        x = np.sort(np.asarray(scores, dtype=float).ravel())
        if x.size == 0:
            raise EmptySample("empty sample")
        self.sorted = x
        self.values, first = np.unique(x, return_index=True)
        self.last_index = np.concatenate((first[1:], [x.size])) - 1

    @property
    def support(self) -> tuple[float, float]:
        return float(self.sorted[0]), float(self.sorted[-1])

    def quantile(self, prob):
        return np.quantile(self.sorted, prob, method="linear")

    def cdf(self, t):
        """Interpolated cumulative: ``quantile(cdf(t)) == t`` on the support."""
        n = self.sorted.size
        if n == 1:
            return np.where(np.asarray(t) >= self.sorted[0], 1.0, 0.0)
        t = np.asarray(t, dtype=float)
        u = self.values
        k = np.clip(np.searchsorted(u, t, side="right") - 1, 0, u.size - 1)
        nxt = np.minimum(k + 1, u.size - 1)
        span = u[nxt] - u[k]
        frac = np.where(span > 0, (t - u[k]) / np.where(span > 0, span, 1.0), 0.0)
        pos = self.last_index[k] + np.clip(frac, 0.0, 1.0)
        out = np.where(t < u[0], 0.0, np.where(t >= u[-1], 1.0, pos / (n - 1)))
        return float(out) if out.ndim == 0 else out


def as_distribution(source):
    """Wrap raw scores; analytic models pass through unchanged."""
    if isinstance(source, _MODELS + (EmpiricalDistribution,)):
        return source
    return EmpiricalDistribution(source)


def _quantile(dist, prob):
    if isinstance(dist, EmpiricalDistribution):
        return dist.quantile(prob)
    return dist.ppf(prob)


def _cdf(dist, x):
    if isinstance(dist, EmpiricalDistribution):
        return dist.cdf(x)
    return dist.cdf(x, continuous=True)


def qq_map(a, b, probabilities) -> np.ndarray:
    """Rows ``(q_a, q_b)`` of matched quantiles at each probability.

    ``a`` and ``b`` may be score samples or analytic models.
    """
    probs = np.asarray(probabilities, dtype=float)
    if np.any(probs <= 0) or np.any(probs >= 1):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    if np.any(np.diff(probs) < 0):
        raise ValueError("probabilities must be sorted")
    da, db = as_distribution(a), as_distribution(b)
    qa = np.maximum.accumulate(np.atleast_1d(_quantile(da, probs)))
    qb = np.maximum.accumulate(np.atleast_1d(_quantile(db, probs)))
    return np.column_stack((qa, qb))


class Remap(NamedTuple):
    threshold: float
    cumulative: float
    out_of_support: bool


def threshold_remap(reference, target, threshold: float) -> Remap:
    """Threshold on ``target`` reaching the cumulative ``reference`` reaches at ``threshold``.

    When that cumulative lies outside what ``target`` can express the
    nearest boundary is returned with ``out_of_support`` set.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    ref, tgt = as_distribution(reference), as_distribution(target)
    c = float(_cdf(ref, threshold))
    if isinstance(ref, EmpiricalDistribution):
        lo, hi = ref.support
        outside = threshold < lo or threshold > hi
    else:
        outside = False
    if isinstance(tgt, EmpiricalDistribution):
        t = float(tgt.quantile(min(max(c, 0.0), 1.0)))
    else:
        floor = float(tgt.cdf_grid[0])
        if c < floor or c >= 1.0:
            outside = True
        t = float(tgt.ppf(c))
    return Remap(t, c, outside)
