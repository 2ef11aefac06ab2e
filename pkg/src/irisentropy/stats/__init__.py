"""Distributional mathematics for impostor score analysis."""

from .binomial import (BinomialModel, DofFit, binomial_cdf, binomial_pmf, dof_from_moments,
                       estimate_dof, fit_dof)
from .extreme import ExtremeValueModel, ev_cdf, ev_pdf
from .histogram import (DEFAULT_BIN_WIDTH, Histogram, build_histogram, chi_square_against_model,
                        model_bin_masses)
from .ks import KSResult, kolmogorov_q, ks_against_model, ks_two_sample
from .quantiles import EmpiricalDistribution, Remap, qq_map, threshold_remap
from .rates import EquityReport, equity_measure, fmr_at_threshold

__all__ = [
    "BinomialModel", "DofFit", "binomial_cdf", "binomial_pmf", "dof_from_moments",
    "estimate_dof", "fit_dof", "ExtremeValueModel", "ev_cdf", "ev_pdf", "DEFAULT_BIN_WIDTH",
    "Histogram", "build_histogram", "chi_square_against_model", "model_bin_masses", "KSResult",
    "kolmogorov_q", "ks_against_model", "ks_two_sample", "EmpiricalDistribution", "Remap",
    "qq_map", "threshold_remap", "EquityReport", "equity_measure", "fmr_at_threshold",
]
