"""Kolmogorov-Smirnov tests with the asymptotic Kolmogorov p-value."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..errors import EmptySample

_TERM_FLOOR = 1e-16


class KSResult(NamedTuple):
    D: float
    p_value: float
    n_effective: float


def kolmogorov_q(lam: float) -> float:
    """Survival function of the Kolmogorov distribution, ``2 sum (-1)**(j-1) exp(-2 j**2 lam**2)``.

    Below ``lam = 1.18`` the alternating series converges slowly, so the
    equivalent theta-function form is used there instead.
    """
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        c = math.pi ** 2 / (8.0 * lam * lam)
        total = 0.0
        j = 1
        while True:
            term = math.exp(-(2 * j - 1) ** 2 * c)
            total += term
            if term < _TERM_FLOOR:
                break
            j += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * total))
    total = 0.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < _TERM_FLOOR:
            break
        j += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b) -> KSResult:
    """Two-sample KS statistic and its asymptotic two-sided p-value."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    points = np.concatenate((a, b))
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = a.size * b.size / (a.size + b.size)
    return KSResult(d, kolmogorov_q(math.sqrt(en) * d), en)


def ks_against_model(scores, model, lattice: bool = True) -> KSResult:
    """One-sample KS test of scores against a binomial or best-of-k model.

    With ``lattice=True`` each score is snapped to the nearest model grid
    point ``m / N`` and compared with the model's step cumulative; both are
    then step functions on the same lattice, so the supremum is attained at
    grid points. (Snapping maps a block-weighted score back to its count of
    disagreeing trials.) With ``lattice=False`` the raw empirical CDF is
    compared with the model's continuous extension.

    For discrete models the asymptotic p-value is conservative.
    """
    s = np.asarray(scores, dtype=float).ravel()
    if s.size == 0:
        raise EmptySample("no scores")
    n_grid = model.N
    if lattice:
        m = np.clip(np.rint(s * n_grid).astype(np.int64), 0, n_grid)
        ecdf = np.cumsum(np.bincount(m, minlength=n_grid + 1)) / s.size
        d = float(np.max(np.abs(ecdf - model.cdf_grid)))
    else:
        s = np.sort(s)
        f = np.asarray(model.cdf(s, continuous=True), dtype=float)
        i = np.arange(1, s.size + 1)
        d = float(max(np.max(np.abs(i / s.size - f)), np.max(np.abs((i - 1) / s.size - f))))
    return KSResult(d, kolmogorov_q(math.sqrt(s.size) * d), float(s.size))
