"""Report bundles: one JSON-lines file plus a long-format CSV summary.

Each result is a flat record ``{"kind": ..., "subject": ..., <fields>}``.
Field names are stable; see ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from ..stats.binomial import DofFit
from ..stats.extreme import ExtremeValueModel
from ..stats.ks import KSResult
from ..stats.quantiles import Remap
from ..stats.rates import EquityReport


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


def record(kind: str, subject: str, **fields) -> dict:
    out = {"kind": kind, "subject": subject}
    out.update({k: _clean(v) for k, v in fields.items()})
    return out


def dof_record(subject: str, fit: DofFit) -> dict:
    return record("dof", subject, N=fit.N, N_raw=fit.N_raw, p=fit.p, mean=fit.mean, sd=fit.sd,
                  n_scores=fit.n_scores)


def ev_record(subject: str, model: ExtremeValueModel, empirical_mean=None, empirical_sd=None) -> dict:
    return record("ev", subject, N=model.N, p=model.base.p, k=model.k, mean=model.mean, sd=model.sd,
                  empirical_mean=empirical_mean, empirical_sd=empirical_sd)


def ks_record(subject_a: str, subject_b: str, result: KSResult, test: str = "two_sample") -> dict:
    return record("ks", f"{subject_a}|{subject_b}", test=test, D=result.D, p_value=result.p_value,
                  n_effective=result.n_effective)


def remap_record(reference: str, target: str, threshold: float, remap: Remap, mode: str) -> dict:
    return record("remap", f"{reference}->{target}", mode=mode, threshold=threshold,
                  remapped=remap.threshold, cumulative=remap.cumulative,
                  out_of_support=remap.out_of_support)


def fmr_record(subject: str, threshold: float, fmr: float, source: str) -> dict:
    return record("fmr", subject, threshold=threshold, fmr=fmr, source=source)


def equity_record(subject: str, report: EquityReport) -> dict:
    fields = {f"fmr[{g}]": v for g, v in sorted(report.per_group_fmr.items(), key=lambda kv: str(kv[0]))}
    return record("equity", subject, factor=report.factor, geometric_mean=report.geometric_mean,
                  worst=report.worst, worst_group=str(report.worst_group), **fields)


@dataclass(frozen=True)
class ReportBundle:
    jsonl: Path
    csv: Path
    n_records: int


def write_report(results: Iterable[Mapping], out_dir, stem: str = "report") -> ReportBundle:
    """Write ``<stem>.jsonl`` and ``<stem>.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    results = [dict(r) for r in results]
    jsonl = out_dir / f"{stem}.jsonl"
    csv_path = out_dir / f"{stem}.csv"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(jsonl, "w") as fh:
            for r in results:
                fh.write(json.dumps(r, allow_nan=False) + "\n")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "subject", "field", "value"])
            for r in results:
                for key, value in r.items():
                    if key in ("kind", "subject"):
                        continue
                    w.writerow([r["kind"], r["subject"], key,
                                "" if value is None else (repr(value) if isinstance(value, float) else value)])
    except OSError as exc:
        raise OSError(f"cannot write report in {out_dir}: {exc}") from exc
    return ReportBundle(jsonl, csv_path, len(results))


def read_report(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
