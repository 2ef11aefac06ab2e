"""False match rates and the worst-group-over-geometric-mean equity factor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..errors import DomainError, NonPositiveRate
from .binomial import BinomialModel, _last_below
from .extreme import ExtremeValueModel, _min_cdf


def fmr_at_threshold(source, t: float) -> float:
    """Probability that an impostor score falls strictly below ``t``.

    ``source`` is a :class:`BinomialModel`, an :class:`ExtremeValueModel`
    or a sample of empirical scores.
    """
    if not math.isfinite(t):
        raise DomainError(f"threshold must be finite, got {t!r}")
    if isinstance(source, (BinomialModel, ExtremeValueModel)):
        base = source if isinstance(source, BinomialModel) else source.base
        m = int(_last_below(t, base.N))
        if m < 0:
            return 0.0
        if m >= base.N:
            return 1.0
        if isinstance(source, BinomialModel):
            return float(base.cdf_grid[m])
        return float(_min_cdf(base.cdf_grid[m], base.sf_grid[m], source.k))
    s = np.asarray(source, dtype=float).ravel()
    if s.size == 0:
        raise DomainError("no scores")
    return float(np.count_nonzero(s < t) / s.size)


@dataclass(frozen=True)
class EquityReport:
    per_group_fmr: dict
    geometric_mean: float
    worst: float
    worst_group: object
    factor: float


def equity_measure(per_group_fmr: Mapping) -> EquityReport:
    """Worst per-group FMR divided by the geometric mean over all groups.

    Evaluated as ``exp(mean(log(worst / fmr_g)))`` so the factor is exactly
    1 for equal rates and invariant to a common scale.
    """
    if not per_group_fmr:
        raise DomainError("at least one group is required")
    rates = {g: float(v) for g, v in per_group_fmr.items()}
    for g, v in rates.items():
        if not v > 0 or not math.isfinite(v):
            raise NonPositiveRate(f"FMR for group {g!r} must be positive and finite, got {v!r}")
    worst_group = max(rates, key=rates.get)
    worst = rates[worst_group]
    log_ratio = math.fsum(math.log(worst / v) for v in rates.values()) / len(rates)
    factor = math.exp(log_ratio)
    return EquityReport(rates, worst / factor, worst, worst_group, factor)
