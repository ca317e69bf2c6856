"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 computation degeneracy, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .agreement import agreement_heatmap, write_heatmap
from .data import DatasetError, distinct_values, load_dataset, tie_ratio
from .dp import ORIENTATION, curve_export, discriminative_power
from .measures import evaluate_all, parse_measures
from .rc import RCConfig, ranking_consistency, write_taus
from .sigtest import PermTestConfig, write_pvalue_matrix
from .sim import (
    SimulationParams,
    estimate_params,
    read_params,
    simulate_sweep,
    write_params,
    write_sweep,
)

EXIT_OK, EXIT_VALIDATION, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3


def _fmt(v) -> str:
    return "undef" if v is None else repr(float(v))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _outdir(args) -> str:
    if not args.out:
        raise ValueError(f"{args.command} needs --out DIR")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_run_manifest(args, outputs, started, extra=None):
    record = {
        "command": args.command,
        "manifest": os.path.abspath(args.manifest) if getattr(args, "manifest", None) else None,
        "measures": [m.token for m in getattr(args, "measure_list", [])],
        "seed": getattr(args, "seed", None),
        "iterations": getattr(args, "iterations", None),
        "workers": args.workers,
        "versions": {
            "metacorr": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "outputs": sorted(outputs),
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        record.update(extra)
    with open(os.path.join(args.out, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


def cmd_validate(args):
    ds = load_dataset(args.manifest)
    print(f"manifest: {args.manifest}")
    print(f"N={ds.N} M={ds.M} K={ds.K}")
    print("matrix\ttie_ratio\tdistinct_values\tscale")
    rows = [("human", ds.human)] + list(ds.metrics)
    for name, m in rows:
        scale = ds.scale(name)
        scale_txt = "-" if scale is None else f"{scale[0]:g}..{scale[1]:g}"
        print(f"{name}\t{tie_ratio(m):.6f}\t{distinct_values(m)}\t{scale_txt}")
    return EXIT_OK


def cmd_measures(args):
    ds = load_dataset(args.manifest)
    measures = args.measure_list
    table = {m.token: dict(evaluate_all(ds, m, strict=False)) for m in measures}
    out = sys.stdout
    path = None
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "measures.csv")
        out = open(path, "w", newline="", encoding="utf-8")
    try:
        w = _writer(out)
        w.writerow(["metric", *(m.token for m in measures)])
        for name in ds.metric_names:
            w.writerow([name, *(_fmt(table[m.token][name].value) for m in measures)])
    finally:
        if path:
            out.close()
    return EXIT_OK


def cmd_dp(args):
    started = time.perf_counter()
    out = _outdir(args)
    ds = load_dataset(args.manifest)
    cfg = PermTestConfig(args.iterations, args.seed)
    outputs = ["dp_summary.csv"]
    summary = []
    for m in args.measure_list:
        rep = discriminative_power(ds, m, cfg, workers=args.workers)
        write_pvalue_matrix(rep.pair_pvalues, os.path.join(out, f"pvalues_{m.token}.csv"))
        curve_export(rep, os.path.join(out, f"curve_{m.token}.csv"))
        outputs += [f"pvalues_{m.token}.csv", f"curve_{m.token}.csv"]
        degenerate = ";".join(f"{a}|{b}" for a, b in rep.degenerate_pairs)
        summary.append([m.token, repr(rep.dp_value), rep.pair_count, degenerate])
        if rep.degenerate_pairs:
            print(
                f"warning: {m.token}: {len(rep.degenerate_pairs)} pair(s) with zero "
                "correlation difference; their p = 0 does not indicate significance",
                file=sys.stderr,
            )
    with open(os.path.join(out, "dp_summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["measure", "dp_value", "pairs", "degenerate_pairs"])
        w.writerows(summary)
    _write_run_manifest(args, outputs, started, {"orientation": ORIENTATION})
    return EXIT_OK


def cmd_rc(args):
    started = time.perf_counter()
    out = _outdir(args)
    ds = load_dataset(args.manifest)
    cfg = RCConfig(args.iterations, args.seed)
    outputs = ["rc_summary.csv"]
    summary = []
    for m in args.measure_list:
        rep = ranking_consistency(ds, m, cfg, workers=args.workers)
        summary.append([m.token, repr(rep.rc_value), rep.iterations, rep.undefined_iterations])
        if args.dump_taus:
            write_taus(rep, os.path.join(out, f"taus_{m.token}.csv"))
            outputs.append(f"taus_{m.token}.csv")
    with open(os.path.join(out, "rc_summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["measure", "rc_value", "iterations", "undefined_iterations"])
        w.writerows(summary)
    _write_run_manifest(args, outputs, started, {"orientation": "higher rc_value means more stable rankings"})
    return EXIT_OK


def cmd_agreement(args):
    started = time.perf_counter()
    out = _outdir(args)
    ds = load_dataset(args.manifest)
    am = agreement_heatmap(ds, args.measure_list, workers=args.workers)
    write_heatmap(am, os.path.join(out, "agreement.csv"))
    _write_run_manifest(args, ["agreement.csv"], started)
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if lo > hi:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",")]


def cmd_simulate(args):
    started = time.perf_counter()
    out = _outdir(args)
    params = read_params(args.params) if args.params else SimulationParams()
    changes = {"seed": args.seed}
    if args.gh is not None:
        changes["G_h"] = args.gh
    if args.iterations is not None:
        changes["T1"] = changes["T2"] = args.iterations
    if args.t1 is not None:
        changes["T1"] = args.t1
    if args.t2 is not None:
        changes["T2"] = args.t2
    params = params.replace(**changes)
    gm_values = _parse_range(args.sweep_gm) if args.sweep_gm else [params.G_m]
    sweep = simulate_sweep(params, gm_values, args.measure_list, workers=args.workers)
    write_sweep(sweep, os.path.join(out, "sweep.csv"))
    write_params(params, os.path.join(out, "params.json"))
    skipped = {
        str(g): {tok: n for tok, n in res.undefined.items() if n}
        for g, res in sweep
    }
    _write_run_manifest(
        args, ["sweep.csv", "params.json"], started,
        {"params": os.path.abspath(args.params) if args.params else None,
         "sweep_gm": gm_values, "skipped_evaluations": skipped},
    )
    return EXIT_OK


ESTIMATE_FIELDS = ("metric", "mu_m", "sigma_m", "mu_h", "sigma_h", "rho_sys",
                   "mu_rho_item", "sigma_rho_item", "N", "M", "skipped_rows")


def cmd_estimate(args):
    started = time.perf_counter()
    ds = load_dataset(args.manifest)
    names = args.metric or ds.metric_names
    rows = [estimate_params(ds, name) for name in names]
    out = sys.stdout
    path = None
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "estimates.csv")
        out = open(path, "w", newline="", encoding="utf-8")
    try:
        w = _writer(out)
        w.writerow(ESTIMATE_FIELDS)
        for est in rows:
            w.writerow([
                v if isinstance(v, (str, int)) else repr(v)
                for v in (getattr(est, f) for f in ESTIMATE_FIELDS)
            ])
    finally:
        if path:
            out.close()
    if args.out:
        _write_run_manifest(args, ["estimates.csv"], started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacorr",
        description="Meta-evaluate correlation measures between metric and human scores.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help, manifest=True, stochastic=False, default_iters=None):
        p = sub.add_parser(name, help=help)
        if manifest:
            p.add_argument("--manifest", required=True, help="dataset manifest JSON")
        p.add_argument("--measures", default="all",
                       help="comma-separated measure tokens, e.g. global-pearson,system-kendall")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (results do not depend on it)")
        if stochastic:
            p.add_argument("--seed", type=int, required=True, help="master seed (64-bit unsigned)")
            p.add_argument("--iterations", type=int, default=default_iters)
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, "validate a dataset and print summary statistics")
    add("measures", cmd_measures, "table of measure values per metric")
    add("dp", cmd_dp, "discriminative power via pairwise permutation tests",
        stochastic=True, default_iters=1000)
    p = add("rc", cmd_rc, "ranking consistency via split-half resampling",
            stochastic=True, default_iters=1000)
    p.add_argument("--dump-taus", action="store_true", help="also write per-iteration taus")
    add("agreement", cmd_agreement, "ranking agreement between all pairs of measures")
    p = add("simulate", cmd_simulate, "granularity simulation", manifest=False, stochastic=True)
    p.add_argument("--params", help="SimulationParams JSON (defaults: SummEval-like settings)")
    p.add_argument("--sweep-gm", help="metric granularities, 'lo..hi' or comma list")
    p.add_argument("--gh", type=int, help="human granularity G_h")
    p.add_argument("--t1", type=int, help="outer iterations (overrides --iterations)")
    p.add_argument("--t2", type=int, help="inner iterations (overrides --iterations)")
    p = add("estimate", cmd_estimate, "estimate simulation parameters per metric")
    p.add_argument("--metric", action="append", help="metric name (repeatable; default all)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.measure_list = parse_measures(args.measures)
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DatasetError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
