"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 tolerance violation.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .entanglement import GridTooCoarseError
from .experiments import (
    PRESET_INFO,
    PRESETS,
    SMOKE_RUNS,
    ConfigError,
    load_config,
    parse_engines,
    parse_scan_config,
    preset,
    run_experiment,
    run_phase_scan,
)

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE = 0, 2, 3


def _add_run_flags(p):
    p.add_argument("--engines", help="comma-separated subset of analytic, quasi_hamiltonian, monte_carlo")
    p.add_argument("--runs", type=int, help="Monte Carlo trajectories")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tolerance-tier", choices=("full", "smoke"), default="full",
                   help="smoke: %d runs unless --runs is given, tolerance 0.07" % SMOKE_RUNS)
    p.add_argument("--workers", type=int, default=None, help="Monte Carlo worker processes")


def build_parser():
    ap = argparse.ArgumentParser(prog="rtnsim", description="Two-qubit entanglement under telegraph noise")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment from an INI config file")
    p.add_argument("config")
    _add_run_flags(p)
    p = sub.add_parser("preset", help="run a builtin figure preset")
    p.add_argument("name")
    _add_run_flags(p)
    p = sub.add_parser("phase-scan", help="classify a (theta, g/gamma) grid")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    sub.add_parser("list-presets", help="show builtin presets")
    return ap


def _override(cfg, args):
    kw = {}
    if args.engines:
        kw["engines"] = parse_engines(args.engines)
    if args.runs is not None:
        kw["mc_runs"] = args.runs
    elif args.tolerance_tier == "smoke":
        kw["mc_runs"] = SMOKE_RUNS
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out:
        kw["out_dir"] = args.out
    return replace(cfg, **kw).validate()


def _run(configs, args) -> int:
    status = EXIT_OK
    for cfg in configs:
        cfg = _override(cfg, args)
        res = run_experiment(cfg, tier=args.tolerance_tier, workers=args.workers)
        for c in res.comparisons:
            mark = "ok" if c.passed else "FAIL"
            print(f"{cfg.name}: {c.first} vs {c.second} [{c.quantity}] "
                  f"max dev {c.max_deviation:.3g} (tol {c.tolerance:.3g}) {mark}")
        if res.esd:
            desc = ", ".join(
                f"{iv.death:.4g}" + ("" if iv.point else f"-{'inf' if iv.terminal else f'{iv.revival:.4g}'}")
                for iv in res.esd[:8]
            )
            more = "" if len(res.esd) <= 8 else f" (+{len(res.esd) - 8} more)"
            print(f"{cfg.name}: concurrence zero at {desc}{more}")
        else:
            print(f"{cfg.name}: no entanglement sudden death on [0, {cfg.t_max:g}]")
        for path in res.files:
            print(f"  wrote {path}")
        if not res.passed:
            status = EXIT_TOLERANCE
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in PRESETS:
                panels = ", ".join(c.name for c in PRESETS[name])
                print(f"{name:6s} {PRESET_INFO[name]} [{panels}]")
            return EXIT_OK
        if args.command == "run":
            return _run([load_config(args.config)], args)
        if args.command == "preset":
            return _run(preset(args.name), args)
        if args.command == "phase-scan":
            try:
                with open(args.config) as fh:
                    cfg = parse_scan_config(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            if args.out:
                cfg = replace(cfg, out_dir=args.out)
            rows, path = run_phase_scan(cfg)
            agree = sum(r["result"].agrees for r in rows if not r["result"].in_band)
            outside = sum(not r["result"].in_band for r in rows)
            print(f"{len(rows)} points; {agree}/{outside} outside the boundary band agree with g/gamma = sec(theta)")
            print(f"  wrote {path}")
            return EXIT_OK
    except (ConfigError, GridTooCoarseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
