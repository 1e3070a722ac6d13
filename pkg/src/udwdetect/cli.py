"""Command-line front end: ``udw <subcommand> [options]``.

Exit status is 0 when every point converged, 1 when some point did not (or a
KMS check failed), and 2 on configuration or usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from typing import Optional

from .config import ExperimentConfig, parse_config
from .detector import is_particle
from .errors import ConfigError
from .sweep import (FIGURE_IDS, PLOT_RECIPES, PRESET_IDS, Row, Series, figure_preset, fit_summary,
                    run_sweep, write_series)

EXIT_OK, EXIT_UNCONVERGED, EXIT_CONFIG = 0, 1, 2

# reference parameters quoted alongside the fits
FIT_REFERENCES = {(0, 1): (1.66, 1.0 / math.sqrt(0.89)), (0, 3): (2.5, 1.0)}

DEFAULT_PRESETS = {"window": "fig1", "rate": "fig4", "particle-rate": "particle-unruh",
                   "kms-check": "fig7"}


def _env_workers() -> Optional[int]:
    raw = os.environ.get("UDW_WORKERS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([f"UDW_WORKERS must be a positive integer, got {raw!r}"]) from None
    if n < 1:
        raise ConfigError([f"UDW_WORKERS must be a positive integer, got {raw!r}"])
    return n


def _common(p):
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--preset", help=f"built-in experiment ({', '.join(PRESET_IDS)})")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--workers", type=int, help="worker processes (default: UDW_WORKERS or 1)")
    p.add_argument("--tol", type=float, help="quadrature tolerance (overrides quad_tol)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="udw", description="Transition rates of extended Unruh-DeWitt detectors.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("window", "frequency window on a grid of k"),
                       ("rate", "vacuum transition rate over a grid of gaps"),
                       ("particle-rate", "rate in a one-particle state over a grid of times"),
                       ("kms-check", "check rate(D) = exp(-2 pi D / a) rate(-D) on the sweep grid")):
        _common(sub.add_parser(name, help=text))
    fp = sub.add_parser("figure", help="emit the data behind one figure")
    fp.add_argument("id", choices=FIGURE_IDS)
    _common(fp)
    hp = sub.add_parser("fit-hermite", help="fit a double Gaussian to an oscillator coupling")
    hp.add_argument("--n", type=int, default=0)
    hp.add_argument("--m", type=int, default=1)
    hp.add_argument("--preset", choices=("fig2", "fig3"))
    hp.add_argument("--out")
    hp.add_argument("--format", choices=("csv", "json"), default="csv")
    return ap


def load_config(args, default_preset: str) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError(["give either --config or --preset, not both"])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from None
    else:
        cfg = figure_preset(args.preset or default_preset)
    kw = {}
    if args.format:
        kw["format"] = args.format
    if args.out:
        kw["path"] = args.out
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError(["--tol must be positive"])
        kw["quad_tol"] = args.tol
    workers = args.workers if args.workers is not None else _env_workers()
    if workers is not None:
        if workers < 1:
            raise ConfigError(["--workers must be at least 1"])
        kw["workers"] = workers
    return replace(cfg, **kw) if kw else cfg


def _check_mode(cfg, command):
    spec = cfg.model(**cfg.series()[0][1])
    problems = []
    if command == "window" and cfg.axis != "k":
        problems.append("window needs a config with [sweep] axis = k")
    if command == "rate" and (cfg.axis != "delta" or is_particle(spec)):
        problems.append("rate needs a vacuum config with [sweep] axis = delta")
    if command == "particle-rate" and not is_particle(spec):
        problems.append("particle-rate needs a particle state in [state]")
    if command == "kms-check" and not (spec.accelerated and cfg.axis == "delta" and not is_particle(spec)):
        problems.append("kms-check needs an accelerated vacuum config with [sweep] axis = delta")
    if problems:
        raise ConfigError(problems)


def kms_series(cfg: ExperimentConfig) -> tuple:
    """Relative KMS residual for each positive gap whose mirror is on the grid."""
    ok = True
    out = []
    members = dict(cfg.series())
    for s in run_sweep(cfg):
        a = cfg.model(**members[s.label]).trajectory.a
        # linspace grids are symmetric only up to rounding, so pair gaps on a rounded key
        by_axis = {round(r.axis, 9): r for r in s.rows}
        rows = []
        for r in s.rows:
            neg = by_axis.get(round(-r.axis, 9))
            if r.axis <= 0 or neg is None:
                continue
            expected = math.exp(-2.0 * math.pi * r.axis / a) * neg.rate
            scale = max(abs(expected), abs(r.rate))
            resid = abs(r.rate - expected) / scale if scale > 0 else 0.0
            limit = 1e-9 if r.path == "closed_form" and neg.path == "closed_form" else 1e-4
            good = bool(r.converged and neg.converged and resid <= limit)
            ok &= good
            rows.append(Row(r.axis, resid, r.est_error + neg.est_error, r.path, good))
        out.append(Series(s.label, rows))
    return out, ok


def _run(args, command) -> int:
    cfg = load_config(args, DEFAULT_PRESETS.get(command, getattr(args, "id", "fig1")))
    if command != "figure":
        _check_mode(cfg, command)
    if command == "kms-check":
        series, ok = kms_series(cfg)
        write_series(series, cfg.format, cfg.path, sys.stdout)
        if not ok:
            print("KMS check failed", file=sys.stderr)
        return EXIT_OK if ok else EXIT_UNCONVERGED
    series = run_sweep(cfg)
    written = write_series(series, cfg.format, cfg.path, sys.stdout)
    if command == "figure" and written:
        print(f"{cfg.name}: wrote {', '.join(written)}; {PLOT_RECIPES.get(cfg.name, '')}", file=sys.stderr)
    bad = sum(not r.converged for s in series for r in s.rows)
    if bad:
        print(f"{bad} point(s) did not converge", file=sys.stderr)
    return EXIT_OK if bad == 0 else EXIT_UNCONVERGED


def _fit(args) -> int:
    n, m = (0, 1) if args.preset == "fig2" else (0, 3) if args.preset == "fig3" else (args.n, args.m)
    try:
        summary = fit_summary(n, m, FIT_REFERENCES.get((n, m)))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    if args.format == "json":
        text = json.dumps(summary, indent=1) + "\n"
    else:
        keys = list(summary)
        text = ",".join(keys) + "\n" + ",".join(repr(summary[k]) if not isinstance(summary[k], bool)
                                                else str(summary[k]).lower() for k in keys) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"lambda={summary['lambda']:.6f} sigma={summary['sigma']:.6f} residual={summary['residual']:.6g}",
          file=sys.stderr)
    return EXIT_OK if summary["converged"] else EXIT_UNCONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit-hermite":
            return _fit(args)
        return _run(args, args.command)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader closed early (e.g. `| head`); silence the flush at exit too
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
