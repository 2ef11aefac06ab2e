"""Fixed-width score histograms over [0, 1] and model-mass comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import chi2

DEFAULT_BIN_WIDTH = 0.005


def _n_bins(bin_width: float) -> int:
    ratio = 1.0 / bin_width
    nearest = round(ratio)
    return int(nearest) if abs(ratio - nearest) < 1e-9 else math.ceil(ratio)


@dataclass(frozen=True, eq=False)
class Histogram:
    """Right-open bins ``[i w, (i + 1) w)``; the last bin also holds 1.0."""

    bin_width: float
    counts: np.ndarray
    total: int

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def left_edges(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return np.minimum(self.left_edges + self.bin_width / 2, 1.0)

    def bin_of(self, x):
        return bin_index(x, self.bin_width, self.n_bins)

    def occupied_range(self) -> tuple[float, float] | None:
        nz = np.flatnonzero(self.counts)
        if nz.size == 0:
            return None
        return float(self.left_edges[nz[0]]), float(min(1.0, self.left_edges[nz[-1]] + self.bin_width))


def bin_index(x, bin_width: float, n_bins: int):
    edges = np.arange(n_bins) * bin_width
    return np.clip(np.searchsorted(edges, np.asarray(x, dtype=float), side="right") - 1, 0, n_bins - 1)


def build_histogram(scores, bin_width: float = DEFAULT_BIN_WIDTH) -> Histogram:
    if not (0.0 < bin_width <= 1.0):
        raise ValueError(f"bin_width must lie in (0, 1], got {bin_width!r}")
    s = np.asarray(scores, dtype=float).ravel()
    if s.size and (not np.all(np.isfinite(s)) or s.min() < 0 or s.max() > 1):
        raise ValueError("scores must be finite values in [0, 1]")
    n = _n_bins(bin_width)
    counts = np.bincount(bin_index(s, bin_width, n), minlength=n) if s.size else np.zeros(n, np.int64)
    counts.setflags(write=False)
    return Histogram(float(bin_width), counts, int(s.size))


def model_bin_masses(model, hist: Histogram) -> np.ndarray:
    """Probability the model assigns to each bin of ``hist`` (grid atoms binned like scores)."""
    idx = hist.bin_of(model.grid)
    return np.bincount(idx, weights=model.pmf, minlength=hist.n_bins)


class ChiSquareResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float


def chi_square_against_model(hist: Histogram, model, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square of histogram counts against model bin masses.

    Neighbouring bins are pooled from the left until each pooled cell
    expects at least ``min_expected`` counts; a short final remainder is
    folded into the last cell.
    """
    expected = model_bin_masses(model, hist) * hist.total
    observed = hist.counts.astype(float)
    cells_e, cells_o = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            cells_e.append(acc_e)
            cells_o.append(acc_o)
            acc_e = acc_o = 0.0
    if cells_e:
        cells_e[-1] += acc_e
        cells_o[-1] += acc_o
    e = np.array(cells_e)
    o = np.array(cells_o)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(e) - 1
    return ChiSquareResult(stat, dof, float(chi2.sf(stat, dof)) if dof > 0 else 1.0)
