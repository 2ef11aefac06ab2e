"""Acceptance criteria, each run at its stated tolerance.

Every test logs one ``[ACCEPT n] PASS|FAIL`` line (shown in the terminal
summary) before asserting.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from irisentropy.codes import all_pairs
from irisentropy.simgen import CohortSpec, generate_cohort
from irisentropy.stats import (BinomialModel, ExtremeValueModel, binomial_pmf, equity_measure,
                               estimate_dof, fit_dof, ks_against_model, ks_two_sample, threshold_remap)


def report(log, n, ok, detail):
    line = f"[ACCEPT {n}] {'PASS' if ok else 'FAIL'} {detail}"
    log.append(line)
    print(line)
    assert ok, line


def sample_with(mean, sd, size=1000):
    # symmetric two-point sample whose ddof=1 standard deviation is exactly sd
    half = sd * math.sqrt((size - 1) / size)
    return np.repeat([mean - half, mean + half], size // 2)


def test_1_dof_arithmetic(acceptance_log):
    results = {}
    for sd in (0.0331, 0.031009):
        for size in (2, 1000, 10**5):
            s = sample_with(0.5, sd, size)
            assert s.mean() == pytest.approx(0.5, abs=1e-15)
            assert s.std(ddof=1) == pytest.approx(sd, rel=1e-12)
            results.setdefault(sd, set()).add(estimate_dof(s).N)
    ok = results == {0.0331: {228}, 0.031009: {260}}
    report(acceptance_log, 1, ok, f"sigma 0.0331 -> N {sorted(results[0.0331])}, "
                                  f"sigma 0.031009 -> N {sorted(results[0.031009])}")


@pytest.fixture(scope="module")
def large_cohort():
    start = time.perf_counter()
    cohort = generate_cohort(CohortSpec(1648, 228, 0.5, seed=42))
    table = all_pairs(cohort, 1)
    scores = table.scores()
    fit = fit_dof(scores)
    elapsed = time.perf_counter() - start
    return table, scores, fit, elapsed


@pytest.mark.slow
def test_2_end_to_end_synthetic(large_cohort, acceptance_log):
    table, scores, fit, elapsed = large_cohort
    sd = float(scores.std(ddof=1))
    ok = (len(table) == 1_357_128 and scores.size == 1_357_128
          and abs(sd - 0.0331) <= 0.03 * 0.0331 and elapsed < 60.0)
    report(acceptance_log, 2, ok, f"{scores.size} scores, sigma={sd:.6f} "
                                  f"({(sd / 0.0331 - 1) * 100:+.2f}%), N={fit.N}, {elapsed:.1f}s")


@pytest.mark.slow
def test_3_model_fit_gate(large_cohort, acceptance_log):
    _, scores, fit, _ = large_cohort
    res = ks_against_model(scores, fit.model)
    report(acceptance_log, 3, res.p_value > 0.01,
           f"KS vs Binomial(N={fit.N}, p={fit.p:.5f}): D={res.D:.3g} p={res.p_value:.3g} (alpha 0.01)")


def test_4_extreme_value_gate(acceptance_log):
    base = BinomialModel(228, 0.5)
    ev = ExtremeValueModel(base, 7)
    # oracle: 10^5 groups of 7 independent binomial draws, keep each group's minimum
    rng = np.random.default_rng(2024)
    mins = rng.binomial(228, 0.5, size=(10**5, 7)).min(axis=1)
    ecdf = np.cumsum(np.bincount(mins, minlength=229)) / mins.size
    sup = float(np.max(np.abs(ecdf - ev.cdf_grid)))
    ok = sup < 0.01 and ev.mean < 0.5
    report(acceptance_log, 4, ok, f"sup|F_exact - F_mc|={sup:.4g} (< 0.01), EV mean={ev.mean:.6f} (< 0.5)")


def test_5_qq_remap(acceptance_log):
    start = time.perf_counter()
    nd = ExtremeValueModel(BinomialModel(260, 0.5), 7)
    af = ExtremeValueModel(BinomialModel(228, 0.5), 7)
    r = threshold_remap(nd, af, 0.39)
    elapsed = time.perf_counter() - start
    ok = 0.37 <= r.threshold <= 0.39 and elapsed < 1.0
    report(acceptance_log, 5, ok, f"HD 0.39 -> {r.threshold:.6f} in {elapsed * 1000:.1f} ms")


@pytest.mark.slow
def test_6_cross_cohort_ks(acceptance_log):
    rng = np.random.default_rng(6)
    a = BinomialModel(228, 0.5).sample(10**6, rng)
    b = BinomialModel(260, 0.5).sample(10**6, rng)
    res = ks_two_sample(a, b)
    report(acceptance_log, 6, res.p_value < 1e-10, f"D={res.D:.4g} p={res.p_value:.3g} (< 1e-10)")


def test_7_equity_measure(acceptance_log):
    equal = equity_measure({"a": 1e-6, "b": 1e-6, "c": 1e-6}).factor
    skew = equity_measure({"a": 1e-6, "b": 1e-6, "c": 4e-6}).factor
    oracle = math.exp(math.log(4e-6) - (2 * math.log(1e-6) + math.log(4e-6)) / 3)
    target = 4 ** (2 / 3)
    rel = abs(skew - target) / target
    ok = equal == 1.0 and rel < 1e-12 and abs(skew - oracle) / oracle < 1e-12
    report(acceptance_log, 7, ok, f"equal -> {equal!r}, skewed -> {skew!r} (rel err {rel:.2g})")


def test_8_pmf_kernel(acceptance_log):
    worst = 0.0
    for n in (64, 228, 260, 512):
        for p in (Fraction(3, 10), Fraction(1, 2)):
            model = BinomialModel(n, float(p))
            for m in range(n + 1):
                exact = math.comb(n, m) * p ** m * (1 - p) ** (n - m)
                want = float(exact)
                if want == 0.0:
                    # below double range; the float result must underflow too
                    assert binomial_pmf(model, m) < 1e-300
                    continue
                worst = max(worst, abs(binomial_pmf(model, m) - want) / want)
    report(acceptance_log, 8, worst < 1e-10, f"max relative error {worst:.3g} (< 1e-10)")
