import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from irisentropy.codes import all_pairs
from irisentropy.errors import IncompatibleData
from irisentropy.reports import (FigureSpec, dof_record, equity_record, ev_record, figure_table, ks_record,
                                 read_report, record, render_figure, save_figure, write_report)
from irisentropy.simgen import CohortSpec, generate_cohort
from irisentropy.stats import (BinomialModel, ExtremeValueModel, equity_measure, fit_dof, ks_two_sample)


@pytest.fixture(scope="module")
def scores():
    return BinomialModel(228, 0.5).sample(20000, np.random.default_rng(5))


def test_histogram_overlay_deterministic(scores, tmp_path):
    model = fit_dof(scores).model
    spec = FigureSpec("histogram_overlay", {"scores": "s", "model": "m"}, title="fit")
    data = {"s": scores, "m": model}
    svg = render_figure(spec, data)
    assert svg == render_figure(spec, data)
    ET.fromstring(svg)
    table = figure_table(spec, data)
    assert sum(c for _, c in table["bars"]) == scores.size
    # curve is in expected counts per bin
    assert sum(y for _, y in table["curve"]) / model.N == pytest.approx(scores.size * 0.005, rel=1e-6)
    out = save_figure(spec, data, tmp_path / "f.svg")
    assert out.read_text() == svg
    with open(out.with_suffix(".csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["series", "x", "y"]
    assert len(rows) - 1 == len(table["bars"]) + len(table["curve"])


def test_qq_identical_data_is_diagonal(scores):
    spec = FigureSpec("qq", {"a": "x", "b": "x"})
    pts = np.array(figure_table(spec, {"x": scores})["qq"])
    np.testing.assert_array_equal(pts[:, 0], pts[:, 1])
    ET.fromstring(render_figure(spec, {"x": scores}))


def test_ev_overlay_and_compare(scores):
    ev = ExtremeValueModel(BinomialModel(228, 0.5), 7)
    best = ev.sample(20000, np.random.default_rng(6))
    spec = FigureSpec("ev_overlay", {"scores": "b", "model": "ev"})
    table = figure_table(spec, {"b": best, "ev": ev})
    total_curve = sum(y for _, y in table["curve"]) / ev.N
    assert total_curve == pytest.approx(best.size * 0.005, rel=0.02)
    cmp = FigureSpec("histogram_compare", {"a": "x", "b": "y"})
    ET.fromstring(render_figure(cmp, {"x": scores, "y": best}))


def test_incompatible_inputs(scores):
    with pytest.raises(IncompatibleData):
        figure_table(FigureSpec("ev_overlay", {"scores": "s", "model": "m"}),
                     {"s": scores, "m": BinomialModel(228, 0.5)})
    with pytest.raises(IncompatibleData):
        figure_table(FigureSpec("histogram_overlay", {"scores": "s", "model": "m"}),
                     {"s": scores, "m": ExtremeValueModel(BinomialModel(228, 0.5), 7)})
    # model mass far from the data
    with pytest.raises(IncompatibleData):
        figure_table(FigureSpec("histogram_overlay", {"scores": "s", "model": "m"}),
                     {"s": scores, "m": BinomialModel(228, 0.1)})
    with pytest.raises(IncompatibleData):
        figure_table(FigureSpec("qq", {"a": "s", "b": "missing"}), {"s": scores})
    with pytest.raises(ValueError):
        FigureSpec("pie", {})
    with pytest.raises(ValueError):
        FigureSpec("qq", {"a": "s"})


def test_empty_bundle(tmp_path):
    bundle = write_report([], tmp_path / "r")
    assert bundle.n_records == 0
    assert read_report(bundle.jsonl) == []
    assert bundle.csv.read_text() == "kind,subject,field,value\n"


def test_record_nan_becomes_null(tmp_path):
    bundle = write_report([record("x", "s", a=float("nan"), b=0.25)], tmp_path)
    (rec,) = read_report(bundle.jsonl)
    assert rec == {"kind": "x", "subject": "s", "a": None, "b": 0.25}


def test_bundle_cardinality_and_values(tmp_path):
    rng = np.random.default_rng(7)
    a = BinomialModel(228, 0.5).sample(50000, rng)
    b = BinomialModel(260, 0.5).sample(50000, rng)
    fa, fb = fit_dof(a), fit_dof(b)
    results = [dof_record("A", fa), dof_record("B", fb),
               ev_record("A", ExtremeValueModel(fa.model, 7)), ev_record("B", ExtremeValueModel(fb.model, 7)),
               ks_record("A", "B", ks_two_sample(a, b)),
               equity_record("g", equity_measure({"A": 1e-6, "B": 4e-6}))]
    bundle = write_report(results, tmp_path)
    back = read_report(bundle.jsonl)
    assert len(back) == bundle.n_records == 6
    kinds = [r["kind"] for r in back]
    assert kinds.count("dof") == 2 and kinds.count("ks") == 1
    assert back[0]["N_raw"] == fa.N_raw
    with open(bundle.csv) as fh:
        rows = list(csv.DictReader(fh))
    n_fields = sum(len(r) - 2 for r in back)
    assert len(rows) == n_fields
    # every line of the JSONL is valid JSON on its own
    for line in bundle.jsonl.read_text().splitlines():
        json.loads(line)


@pytest.mark.parametrize("dof,seed", [(228, 42), (260, 7)])
def test_end_to_end_dof_recovery(dof, seed):
    table = all_pairs(generate_cohort(CohortSpec(500, dof, seed=seed)), 1)
    rec = dof_record("c", fit_dof(table.scores()))
    assert abs(rec["N"] - dof) <= 0.05 * dof
