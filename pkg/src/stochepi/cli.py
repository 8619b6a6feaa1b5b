"""Command-line interface.

Every subcommand reads a YAML config file plus ``--set key=value``
overrides.  Results go to CSV (``--out``) and optionally SVG (``--svg``); a
one-line JSON summary is printed to stdout.  Failures exit with status 2
and print one JSON error line to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import burden as burden_mod
from .composer import SubpopulationPlan, compose, peak_prevalence
from .distributions import ParameterError
from .engine import align_to_threshold
from .ensemble import SweepGrid, run_replicates, run_sweep, sensitivity_k, summarize, sweep_rows
from .io import ConfigSyntaxError, parse_config, write_csv, write_rows
from .model import ConfigError, ConfigValidationError, InterventionPolicy, ScenarioConfig, UnknownKeyError
from .oracle import compare, mean_field_run
from .plotting import prevalence_bundle, render_svg, scenario_curves


class UsageError(Exception):
    pass


def _expect(obj, kind, command):
    if not isinstance(obj, kind):
        raise UsageError(f"'{command}' needs a {kind.__name__} config, got a {type(obj).__name__}")
    return obj


def _seeded(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["base_seed"] = args.seed
    if getattr(args, "replicates", None) is not None:
        changes["replicates"] = args.replicates
    return replace(cfg, **changes) if changes else cfg


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def cmd_run(args) -> int:
    cfg = _seeded(_expect(parse_config(args.config, args.set), ScenarioConfig, "run"), args)
    ens = run_replicates(cfg, workers=args.workers, aligned=not args.raw)
    if args.out:
        write_csv(ens, args.out, normalized=args.normalize)
    if args.per_replicate:
        outdir = Path(args.per_replicate)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, tr in enumerate(ens.trajectories):
            write_csv(tr, outdir / f"replicate_{i:04d}.csv", normalized=args.normalize)
    if args.svg:
        baseline = None
        if args.baseline and cfg.policy.phases:
            free = replace(cfg, policy=InterventionPolicy())
            baseline = run_replicates(free, workers=args.workers, aligned=not args.raw).mean
        if cfg.policy.phases:
            curves = scenario_curves(baseline, ens.mean)
        else:
            curves = scenario_curves(ens.mean)
        render_svg(curves, args.svg)
    _emit({
        "replicates": ens.replicates,
        "not_reached_threshold": ens.not_reached,
        "mean_peak_I": ens.mean_peak(),
        "mean_peak_I_G": ens.mean_peak_g(),
        "mean_attack_rate": float(ens.attack_rate.mean()),
    })
    return 0


def cmd_compose(args) -> int:
    plan = _expect(parse_config(args.config, args.set), SubpopulationPlan, "compose")
    base = _seeded(plan.base, args)
    aggs = compose(plan, base.base_seed, base.replicates, workers=args.workers)
    ens = summarize(base, aggs, aligned=False)
    if args.out:
        write_csv(ens, args.out, normalized=args.normalize)
    if args.svg:
        render_svg(prevalence_bundle([ens.mean]), args.svg)
    peaks = [peak_prevalence(a)[1] for a in aggs]
    _emit({"replicates": len(aggs), "subpopulations": len(plan.subpopulations), "mean_peak_I": float(np.mean(peaks))})
    return 0


def cmd_sweep(args) -> int:
    grid = _expect(parse_config(args.config, args.set), SweepGrid, "sweep")
    results = run_sweep(grid, args.seed, workers=args.workers)
    rows = sweep_rows(results)
    if args.out:
        write_rows(rows, args.out)
    _emit({"cells": len(rows)})
    return 0


def cmd_sensitivity(args) -> int:
    cfg = _seeded(_expect(parse_config(args.config, args.set), ScenarioConfig, "sensitivity-k"), args)
    ens = sensitivity_k(cfg, args.k_min, args.k_max, args.trajectories, rescale_rate=not args.fixed_rate,
                        workers=args.workers)
    rows = [
        {"trajectory": i, "k": int(k), "peak_I": float(p), "peak_I_G": float(pg), "peak_day": int(d)}
        for i, (k, p, pg, d) in enumerate(zip(ens.k_values, ens.peak_prevalence, ens.peak_prevalence_g, ens.peak_day))
    ]
    if args.out:
        write_rows(rows, args.out)
    if args.svg:
        aligned = [align_to_threshold(t, cfg.plot_threshold_fraction) for t in ens.trajectories]
        render_svg(prevalence_bundle([a for a in aligned if len(a)]), args.svg)
    _emit({
        "trajectories": len(rows),
        "peak_I_spread": float(ens.peak_prevalence.max() - ens.peak_prevalence.min()),
        "mean_peak_I": ens.mean_peak(),
    })
    return 0


def cmd_burden(args) -> int:
    cfg = _seeded(_expect(parse_config(args.config, args.set), ScenarioConfig, "burden"), args)
    rates = burden_mod.rates_for(cfg.burden)
    beds = cfg.burden.beds_per_death if cfg.burden else 1.0
    sigma = cfg.disease.sigma_per_day
    ens = run_replicates(cfg, workers=args.workers, aligned=not args.raw)
    series = burden_mod.expected_deaths(ens.mean, rates, sigma, beds)
    if args.out:
        write_csv(ens, args.out, normalized=args.normalize, burden=series)
    peaks = [burden_mod.expected_deaths(t, rates, sigma).ed_total.max() for t in ens.trajectories]
    _emit({
        "scale_factor": rates.scale_factor,
        "r_G": rates.r_g,
        "r_other": rates.r_other,
        "alpha_table": rates.alpha,
        "mean_peak_ED_total": float(np.mean(peaks)),
    })
    return 0


def cmd_oracle(args) -> int:
    cfg = _expect(parse_config(args.config, args.set), ScenarioConfig, "oracle")
    traj = mean_field_run(cfg, depletion=args.depletion)
    if args.align:
        traj = align_to_threshold(traj, cfg.plot_threshold_fraction)
    if args.out:
        write_csv(traj, args.out, normalized=args.normalize)
    if args.svg and len(traj):
        render_svg(scenario_curves(traj), args.svg)
    day, peak = peak_prevalence(traj) if len(traj) else (None, 0.0)
    _emit({"deterministic": True, "peak_I": peak, "peak_day": day, "days": len(traj)})
    return 0


def cmd_compare(args) -> int:
    cfg = _seeded(_expect(parse_config(args.config, args.set), ScenarioConfig, "compare"), args)
    ens = run_replicates(cfg, workers=args.workers, aligned=True, keep=False)
    ref = align_to_threshold(mean_field_run(cfg, depletion=args.depletion), cfg.plot_threshold_fraction)
    n = min(len(ens.mean), len(ref))
    report = compare(ens.mean.prevalence()[:n], ref.prevalence()[:n], args.tolerance)
    _emit({**report.as_dict(), "days": n, "replicates": ens.replicates})
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochepi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, ensemble=True):
        p.add_argument("config", help="YAML scenario file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. disease.r0=2.0 (repeatable)")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--svg", help="SVG chart output path")
        p.add_argument("--normalize", action="store_true", help="write fractions instead of counts")
        if ensemble:
            p.add_argument("--seed", type=int, help="override run.seed")
            p.add_argument("--replicates", type=int, help="override run.replicates")
            p.add_argument("--workers", type=int, default=1, help="worker processes for replicates")

    p = sub.add_parser("run", help="replicate ensemble of one scenario")
    common(p)
    p.add_argument("--raw", action="store_true", help="do not align replicates to the plotting threshold")
    p.add_argument("--per-replicate", metavar="DIR", help="also write one CSV per replicate")
    p.add_argument("--baseline", action="store_true", help="overlay the no-intervention run in the SVG")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compose", help="aggregate of time-shifted subpopulation epidemics")
    common(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("sweep", help="ensembles over a parameter grid")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity-k", help="ensemble with random Erlang shape per trajectory")
    common(p)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--fixed-rate", action="store_true", help="keep the Erlang rate instead of the mean")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("burden", help="expected deaths and bed demand")
    common(p)
    p.add_argument("--raw", action="store_true", help="do not align replicates to the plotting threshold")
    p.set_defaults(func=cmd_burden)

    p = sub.add_parser("oracle", help="deterministic mean-field trajectory")
    common(p, ensemble=False)
    p.add_argument("--align", action="store_true", help="start at the plotting threshold")
    p.add_argument("--depletion", choices=("linear", "exact"), default="linear")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", help="ensemble mean vs mean-field oracle")
    common(p)
    p.add_argument("--tolerance", type=float, default=0.01)
    p.add_argument("--depletion", choices=("linear", "exact"), default="linear")
    p.set_defaults(func=cmd_compare)
    return parser


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, ConfigSyntaxError):
        return "syntax"
    if isinstance(exc, UnknownKeyError):
        return "unknown_key"
    if isinstance(exc, ConfigValidationError):
        return "invalid"
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, UsageError):
        return "usage"
    if isinstance(exc, OSError):
        return "io"
    return "parameter"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, OSError, ParameterError, ValueError) as exc:
        err = {"error": _error_kind(exc), "message": str(exc)}
        if isinstance(exc, ConfigValidationError):
            err["violations"] = [
                {"path": v.path, "message": v.message, "line": v.line, "kind": v.kind} for v in exc.violations
            ]
        if isinstance(exc, ConfigSyntaxError):
            err["line"], err["column"] = exc.line, exc.column
        print(json.dumps(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
