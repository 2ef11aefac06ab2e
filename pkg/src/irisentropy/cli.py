"""Command-line pipeline: generate, match, fit, extreme-value, KS, QQ, equity, report.

Exit codes: 0 success, 1 I/O or file-format error, 2 invalid flags or a
statistical-domain error. ``--json`` prints one machine-readable summary
object on standard output.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from pathlib import Path

from . import codes as codes_mod
from .errors import FormatError, IrisEntropyError
from .formats import read_scores, read_templates, write_scores, write_templates
from .reports import (FigureSpec, dof_record, equity_record, ev_record, fmr_record, ks_record,
                      remap_record, save_figure, write_report)
from .simgen import CohortSpec, generate_cohort, generate_masks
from .stats import (ExtremeValueModel, equity_measure, fit_dof, fmr_at_threshold,
                    ks_against_model, ks_two_sample, threshold_remap)

THREADS_ENV = "IRISENTROPY_THREADS"


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _flag(flag: str, exc: Exception) -> CliError:
    return CliError(f"{flag}: {exc}", 2)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _odd_int(text):
    v = _positive_int(text)
    if v % 2 == 0:
        raise argparse.ArgumentTypeError(f"expected an odd integer, got {text}")
    return v


def _unit_interval(text):
    v = float(text)
    if not (0.0 < v < 1.0):
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return v


def _labelled(text):
    if "=" in text:
        label, path = text.split("=", 1)
    else:
        label, path = Path(text).stem, text
    return label, path


def _emit(args, summary: dict, lines: list[str]):
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _load_scores(path):
    s = read_scores(path).scores()
    if s.size < 2:
        raise CliError(f"{path}: need at least two valid scores, found {s.size}", 2)
    return s


# --- subcommands ---------------------------------------------------------

def cmd_gen(args):
    from .codes import CodeLayout

    try:
        layout = CodeLayout(args.angular, args.radial, args.phase)
    except ValueError as exc:
        raise _flag("--angular/--radial/--phase", exc)
    try:
        spec = CohortSpec(args.n, args.dof, args.mean_hd, layout, args.seed, args.id_prefix)
    except IrisEntropyError as exc:
        flag = next((f for k, f in (("n_codes", "--n"), ("dof", "--dof"), ("mean_hd", "--mean-hd"),
                                    ("seed", "--seed")) if str(exc).startswith(k)), "--n/--dof")
        raise _flag(flag, exc)
    cohort = generate_cohort(spec)
    if args.occlusion:
        cohort = generate_masks(cohort, args.occlusion, args.mask_seed)
    write_templates(args.out, cohort, layout)
    _emit(args, {"codes": len(cohort), "seed": spec.seed, "dof": spec.dof, "mean_hd": spec.mean_hd,
                 "out": str(args.out)},
          [f"wrote {len(cohort)} codes (seed {spec.seed}) to {args.out}"])


def cmd_match(args):
    _, cohort = read_templates(args.codes)
    if len(cohort) < 2:
        raise CliError(f"{args.codes}: need at least two codes, found {len(cohort)}", 2)
    try:
        codes_mod.rotation_offsets(args.rotations, cohort[0].layout)
    except ValueError as exc:
        raise _flag("--rotations", exc)
    table = codes_mod.all_pairs(cohort, args.rotations, args.min_overlap, args.threads)
    print(f"compared {len(table)} pairs", file=sys.stderr)
    write_scores(args.out, table)
    s = table.summary()
    _emit(args, dict(s, rotations=args.rotations, out=str(args.out)),
          [f"pairs={s['pairs']} valid={s['valid_pairs']} mean={s['mean']:.6f} sd={s['sd']:.6f}"])


def cmd_fit(args):
    results, lines, summary = [], [], {}
    for label, path in args.scores:
        fit = fit_dof(_load_scores(path))
        results.append(dof_record(label, fit))
        summary[label] = {"N": fit.N, "N_raw": fit.N_raw, "p": fit.p, "sd": fit.sd, "n_scores": fit.n_scores}
        lines.append(f"{label}: N={fit.N} (raw {fit.N_raw:.3f}) p={fit.p:.6f} sd={fit.sd:.6f} "
                     f"n={fit.n_scores}")
        if args.figure_dir:
            out = Path(args.figure_dir) / f"{label}_fit.svg"
            Path(args.figure_dir).mkdir(parents=True, exist_ok=True)
            save_figure(FigureSpec("histogram_overlay", {"scores": "scores", "model": "model"},
                                   title=f"{label}: N={fit.N}, p={fit.p:.4f}", output=str(out)),
                        {"scores": _load_scores(path), "model": fit.model})
    _finish(args, results, summary, lines)


def cmd_ev(args):
    results, lines, summary = [], [], {}
    label, path = args.scores
    fit = fit_dof(_load_scores(path))
    ev = ExtremeValueModel(fit.model, args.rotations)
    entry = {"N": ev.N, "p": fit.p, "k": ev.k, "mean": ev.mean, "sd": ev.sd}
    emp_mean = emp_sd = None
    if args.best:
        best = _load_scores(args.best)
        emp_mean, emp_sd = float(best.mean()), float(best.std(ddof=1))
        ks = ks_against_model(best, ev)
        results.append(ks_record(label, f"{Path(args.best).stem}", ks, test="model_lattice"))
        entry.update(empirical_mean=emp_mean, empirical_sd=emp_sd, ks_D=ks.D, ks_p=ks.p_value)
        if args.figure_dir:
            Path(args.figure_dir).mkdir(parents=True, exist_ok=True)
            save_figure(FigureSpec("ev_overlay", {"scores": "best", "model": "ev"},
                                   title=f"{label}: best of {ev.k} rotations",
                                   output=str(Path(args.figure_dir) / f"{label}_ev.svg")),
                        {"best": best, "ev": ev})
    results.append(dof_record(label, fit))
    results.append(ev_record(label, ev, emp_mean, emp_sd))
    summary[label] = entry
    lines.append(f"{label}: N={ev.N} p={fit.p:.6f} k={ev.k} ev_mean={ev.mean:.6f} ev_sd={ev.sd:.6f}")
    if emp_mean is not None:
        lines.append(f"  empirical best-of-k mean={emp_mean:.6f} sd={emp_sd:.6f} "
                     f"KS D={entry['ks_D']:.6g} p={entry['ks_p']:.6g}")
    _finish(args, results, summary, lines)


def cmd_ks(args):
    a, b = _load_scores(args.a), _load_scores(args.b)
    res = ks_two_sample(a, b)
    _finish(args, [ks_record(Path(args.a).stem, Path(args.b).stem, res)],
            {"D": res.D, "p_value": res.p_value, "n_effective": res.n_effective},
            [f"D={res.D!r} p={res.p_value!r}"])


def _remaps(ref_scores, tgt_scores, threshold, k, mode):
    out = {}
    if mode in ("analytic", "both"):
        ref_m = ExtremeValueModel(fit_dof(ref_scores).model, k)
        tgt_m = ExtremeValueModel(fit_dof(tgt_scores).model, k)
        out["analytic"] = threshold_remap(ref_m, tgt_m, threshold)
    if mode in ("empirical", "both"):
        out["empirical"] = threshold_remap(ref_scores, tgt_scores, threshold)
    return out


def cmd_qq(args):
    ref_label, ref_path = args.ref
    tgt_label, tgt_path = args.target
    ref, tgt = _load_scores(ref_path), _load_scores(tgt_path)
    results, lines, summary = [], [], {}
    for mode, r in _remaps(ref, tgt, args.threshold, args.rotations, args.mode).items():
        results.append(remap_record(ref_label, tgt_label, args.threshold, r, mode))
        summary[mode] = {"threshold": args.threshold, "remapped": r.threshold,
                         "cumulative": r.cumulative, "out_of_support": r.out_of_support}
        flag = " (out of support)" if r.out_of_support else ""
        lines.append(f"{mode}: {ref_label} HD={args.threshold} -> {tgt_label} HD={r.threshold:.6f}"
                     f" (cumulative {r.cumulative:.6g}){flag}")
    if args.figure:
        a = ExtremeValueModel(fit_dof(ref).model, args.rotations) if args.mode == "analytic" else ref
        b = ExtremeValueModel(fit_dof(tgt).model, args.rotations) if args.mode == "analytic" else tgt
        save_figure(FigureSpec("qq", {"a": "ref", "b": "target"}, title="Quantile-quantile",
                               xlabel=f"{ref_label} HD", ylabel=f"{tgt_label} HD", output=args.figure),
                    {"ref": a, "target": b})
    _finish(args, results, summary, lines)


def cmd_equity(args):
    rates = {}
    for text in args.rate or []:
        group, value = text.split("=", 1)
        rates[group] = float(value)
    for label, path in args.scores or []:
        s = _load_scores(path)
        if args.analytic:
            model = fit_dof(s).model
            if args.rotations > 1:
                model = ExtremeValueModel(model, args.rotations)
            rates[label] = fmr_at_threshold(model, args.threshold)
        else:
            rates[label] = fmr_at_threshold(s, args.threshold)
    if not rates:
        raise CliError("--rate/--scores: no groups given", 2)
    try:
        rep = equity_measure(rates)
    except IrisEntropyError as exc:
        raise _flag("--threshold" if args.scores else "--rate", exc)
    lines = [f"{g}: FMR={v!r}" for g, v in rep.per_group_fmr.items()]
    lines.append(f"factor={rep.factor!r} (worst {rep.worst_group}, geometric mean {rep.geometric_mean!r})")
    _finish(args, [equity_record("groups", rep)],
            {"factor": rep.factor, "geometric_mean": rep.geometric_mean, "worst": rep.worst,
             "worst_group": str(rep.worst_group), "per_group_fmr": rep.per_group_fmr}, lines)


def cmd_report(args):
    labelled = list(args.scores)
    if not labelled:
        raise CliError("no score files given", 2)
    data = {label: _load_scores(path) for label, path in labelled}
    fits = {label: fit_dof(s) for label, s in data.items()}
    k = args.rotations
    results = []
    for label, fit in fits.items():
        results.append(dof_record(label, fit))
        ev = ExtremeValueModel(fit.model, k)
        results.append(ev_record(label, ev))
        results.append(ks_record(label, "model", ks_against_model(data[label], fit.model),
                                 test="model_lattice"))
        for t in args.fmr_thresholds:
            results.append(fmr_record(label, t, fmr_at_threshold(data[label], t), "empirical"))
            results.append(fmr_record(label, t, fmr_at_threshold(ev, t), f"ev_k{k}"))
    for (la, sa), (lb, sb) in itertools.combinations(data.items(), 2):
        results.append(ks_record(la, lb, ks_two_sample(sa, sb)))
    reference = args.reference or labelled[0][0]
    if reference not in data:
        raise CliError(f"--reference: unknown label {reference!r}", 2)
    for label in data:
        if label == reference:
            continue
        for mode, r in _remaps(data[reference], data[label], args.threshold, k, "both").items():
            results.append(remap_record(reference, label, args.threshold, r, mode))
    if len(data) > 1 and args.fmr_thresholds:
        t = args.fmr_thresholds[0]
        rates = {label: fmr_at_threshold(ExtremeValueModel(f.model, k), t) for label, f in fits.items()}
        results.append(equity_record(f"ev_k{k}@{t!r}", equity_measure(rates)))
    out_dir = Path(args.out_dir)
    bundle = write_report(results, out_dir)
    if args.figures:
        for label, s in data.items():
            save_figure(FigureSpec("histogram_overlay", {"scores": label, "model": "model"},
                                   title=f"{label}: N={fits[label].N}",
                                   output=str(out_dir / f"{label}_fit.svg")),
                        {label: s, "model": fits[label].model})
        for label in data:
            if label == reference:
                continue
            save_figure(FigureSpec("histogram_compare", {"a": label, "b": reference},
                                   title=f"{label} vs {reference}",
                                   output=str(out_dir / f"{label}_vs_{reference}.svg")), data)
            models = {"ref": ExtremeValueModel(fits[reference].model, k),
                      "tgt": ExtremeValueModel(fits[label].model, k)}
            save_figure(FigureSpec("qq", {"a": "ref", "b": "tgt"}, title=f"QQ best of {k}",
                                   xlabel=f"{reference} HD", ylabel=f"{label} HD",
                                   output=str(out_dir / f"qq_{reference}_{label}.svg")), models)
    _emit(args, {"records": bundle.n_records, "jsonl": str(bundle.jsonl), "csv": str(bundle.csv)},
          [f"wrote {bundle.n_records} records to {bundle.jsonl} and {bundle.csv}"]
          + [f"{label}: N={f.N} (raw {f.N_raw:.3f}) p={f.p:.6f}" for label, f in fits.items()])


def _finish(args, results, summary, lines):
    if getattr(args, "report_dir", None):
        write_report(results, args.report_dir, stem=args.command)
    _emit(args, summary, lines)


# --- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON summary on stdout")
    common.add_argument("--config", help="key=value file overriding flag defaults")

    p = argparse.ArgumentParser(prog="irisentropy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version="irisentropy 0.1.0")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic cohort (ICB1 file)")
    g.add_argument("--n", type=_positive_int, required=True, help="number of codes")
    g.add_argument("--dof", type=_positive_int, required=True, help="target degrees of freedom")
    g.add_argument("--mean-hd", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--angular", type=_positive_int, default=128)
    g.add_argument("--radial", type=_positive_int, default=8)
    g.add_argument("--phase", type=_positive_int, default=2)
    g.add_argument("--occlusion", type=float, default=0.0, help="fraction of angular arc masked")
    g.add_argument("--mask-seed", type=int, default=0)
    g.add_argument("--id-prefix", default="c")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("match", parents=[common], help="all-against-all comparison")
    m.add_argument("--codes", required=True, help="ICB1 template file")
    m.add_argument("--rotations", type=_odd_int, default=codes_mod.DEFAULT_ROTATIONS)
    m.add_argument("--min-overlap", type=int, default=None)
    m.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker hint (default ${THREADS_ENV}); results do not depend on it")
    m.add_argument("--out", required=True, help="score CSV")
    m.set_defaults(func=cmd_match)

    f = sub.add_parser("fit", parents=[common], help="binomial DoF fit of score files")
    f.add_argument("scores", nargs="+", type=_labelled, metavar="[LABEL=]SCORES")
    f.add_argument("--figure-dir")
    f.add_argument("--report-dir")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("ev", parents=[common], help="best-of-k model from single-rotation scores")
    e.add_argument("scores", type=_labelled, metavar="[LABEL=]SCORES")
    e.add_argument("--rotations", type=_odd_int, default=codes_mod.DEFAULT_ROTATIONS)
    e.add_argument("--best", help="observed best-of-k score CSV to compare against")
    e.add_argument("--figure-dir")
    e.add_argument("--report-dir")
    e.set_defaults(func=cmd_ev)

    k = sub.add_parser("ks", parents=[common], help="two-sample Kolmogorov-Smirnov test")
    k.add_argument("a")
    k.add_argument("b")
    k.add_argument("--report-dir")
    k.set_defaults(func=cmd_ks)

    q = sub.add_parser("qq", parents=[common], help="transfer a decision threshold between cohorts")
    q.add_argument("--ref", type=_labelled, required=True, metavar="[LABEL=]SCORES")
    q.add_argument("--target", type=_labelled, required=True, metavar="[LABEL=]SCORES")
    q.add_argument("--threshold", type=_unit_interval, default=0.39)
    q.add_argument("--rotations", type=_odd_int, default=codes_mod.DEFAULT_ROTATIONS,
                   help="rotation count of the analytic best-of-k models")
    q.add_argument("--mode", choices=("analytic", "empirical", "both"), default="analytic")
    q.add_argument("--figure")
    q.add_argument("--report-dir")
    q.set_defaults(func=cmd_qq)

    q = sub.add_parser("equity", parents=[common], help="worst-group FMR over geometric mean")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--rate", action="append", metavar="GROUP=FMR")
    src.add_argument("--scores", action="append", type=_labelled, metavar="GROUP=SCORES")
    q.add_argument("--threshold", type=float, default=0.33)
    q.add_argument("--analytic", action="store_true", help="use fitted-model tails, not counts")
    q.add_argument("--rotations", type=_odd_int, default=1)
    q.add_argument("--report-dir")
    q.set_defaults(func=cmd_equity)

    r = sub.add_parser("report", parents=[common], help="full analysis bundle for several cohorts")
    r.add_argument("scores", nargs="+", type=_labelled, metavar="LABEL=SCORES")
    r.add_argument("--out-dir", required=True)
    r.add_argument("--reference", help="label whose threshold is transferred to the others")
    r.add_argument("--rotations", type=_odd_int, default=codes_mod.DEFAULT_ROTATIONS)
    r.add_argument("--threshold", type=_unit_interval, default=0.39)
    r.add_argument("--fmr-thresholds", type=float, nargs="*", default=[0.33, 0.30])
    r.add_argument("--figures", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def load_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"--config: {path}:{lineno}: expected key=value", 2)
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    config = load_config(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        return
    subparser = sub_action.choices[command]
    actions = {a.dest: a for a in subparser._actions}
    for key, raw in config.items():
        action = actions.get(key)
        if action is None:
            raise CliError(f"--config: unknown key {key!r} for {command}", 2)
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            value = action.type(raw) if action.type else raw
        if action.nargs in ("*", "+"):
            value = [action.type(v) if action.type else v for v in raw.split()]
        subparser.set_defaults(**{key: value})
        action.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            # argparse already printed usage; hand back its status instead of exiting
            return exc.code if isinstance(exc.code, int) else 2
        if getattr(args, "threads", None) is None and os.environ.get(THREADS_ENV):
            args.threads = int(os.environ[THREADS_ENV])
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IrisEntropyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
