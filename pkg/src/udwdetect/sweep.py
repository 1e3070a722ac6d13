"""Sweeps over the gap, the time or the window argument, figure presets and output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ExperimentConfig, parse_config
from .detector import ModelSpec, is_particle, particle_rate, vacuum_rate
from .errors import ConfigError, UDWError
from .profiles import fit_residual

COLUMNS = ("axis", "rate", "est_error", "path", "converged")


@dataclass(frozen=True)
class Row:
    axis: float
    rate: float
    est_error: float
    path: str
    converged: bool


@dataclass(frozen=True)
class Series:
    label: str
    rows: list


def sweep_grid(cfg: ExperimentConfig, accelerated_vacuum: bool) -> np.ndarray:
    """Ascending axis values; the infrared band is dropped for accelerated vacuum gap sweeps."""
    grid = np.linspace(cfg.start, cfg.stop, cfg.points)
    if accelerated_vacuum and cfg.axis == "delta":
        grid = grid[np.abs(grid) >= cfg.ir_band]
    return grid


def evaluate_point(spec: ModelSpec, axis: str, value: float, tau: float, quad_tol: float,
                   tail_tol: float) -> Row:
    """One sweep row. Library errors are recorded in the row, never raised."""
    try:
        if axis == "k":
            win = spec.window
            w = complex(win(value))
            err = 0.0 if win.evaluation_path == "closed_form" else quad_tol
            return Row(value, w.real, err, win.evaluation_path, True)
        if axis == "x":
            return Row(value, float(spec.profile(value)), 0.0, "closed_form", True)
        if is_particle(spec):
            if axis == "tau":
                r = particle_rate(spec, value, spec.gap, quad_tol, tail_tol)
            else:
                r = particle_rate(spec, tau, value, quad_tol, tail_tol)
        else:
            r = vacuum_rate(spec if axis == "tau" else spec.with_gap(value))
        return Row(value, float(r.rate), float(r.est_error), r.path, bool(r.converged))
    except (UDWError, ArithmeticError):
        return Row(value, math.nan, math.inf, "numeric", False)


def _chunk(args):
    spec, axis, values, tau, qt, tt = args
    return [evaluate_point(spec, axis, float(v), tau, qt, tt) for v in values]


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> list:
    """Evaluate every series of ``cfg``; returns a list of Series with rows in axis order.

    With ``workers > 1`` points are spread over a process pool; results are
    reassembled in grid order, so output does not depend on the worker count.
    """
    workers = cfg.workers if workers is None else workers
    out = []
    for label, overrides in cfg.series():
        spec = cfg.model(**overrides)
        grid = sweep_grid(cfg, spec.accelerated and not is_particle(spec))
        if cfg.axis == "x" and cfg.overlay is not None:
            out.append(Series(label or "profile", _chunk((spec, "x", grid, cfg.tau, cfg.quad_tol,
                                                          cfg.tail_tol))))
            out.append(Series("overlay", _overlay_rows(spec, grid, cfg.overlay)))
            continue
        if workers > 1 and grid.size > 1:
            chunks = np.array_split(grid, min(workers * 4, grid.size))
            jobs = [(spec, cfg.axis, c, cfg.tau, cfg.quad_tol, cfg.tail_tol) for c in chunks if c.size]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = [r for part in pool.map(_chunk, jobs) for r in part]
        else:
            rows = _chunk((spec, cfg.axis, grid, cfg.tau, cfg.quad_tol, cfg.tail_tol))
        out.append(Series(label, rows))
    return out


def _overlay_rows(spec, grid, overlay):
    """Double Gaussian with the given (lambda, sigma), rescaled to best match the profile."""
    lam, sigma = overlay
    target = np.asarray(spec.profile(grid), dtype=float)
    g = np.exp(-0.5 * (grid / sigma) ** 2) * 2.0 * np.cos(lam * grid)
    amp = float(g @ target) / float(g @ g)
    return [Row(float(x), float(amp * v), 0.0, "closed_form", True) for x, v in zip(grid, g)]


# ---------------------------------------------------------------- output


def format_rows(rows, fmt: str) -> str:
    if fmt == "json":
        recs = [{"axis": r.axis, "rate": r.rate, "est_error": r.est_error, "path": r.path,
                 "converged": r.converged} for r in rows]
        return json.dumps(recs, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        # repr gives the shortest string that reads back to the same double
        w.writerow([repr(float(r.axis)), repr(float(r.rate)), repr(float(r.est_error)), r.path,
                    "true" if r.converged else "false"])
    return buf.getvalue()


def read_rows(text: str, fmt: str = "csv") -> list:
    """Inverse of format_rows."""
    if fmt == "json":
        return [Row(float(d["axis"]), float(d["rate"]), float(d["est_error"]), d["path"],
                    bool(d["converged"])) for d in json.loads(text)]
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    return [Row(float(a), float(b), float(c), d, e == "true") for a, b, c, d, e in reader]


def series_path(path: str, label: str, many: bool) -> str:
    if not many or not label:
        return path
    root, ext = os.path.splitext(path)
    safe = label.replace("=", "_").replace(" ", "")
    return f"{root}_{safe}{ext}"


def write_series(series, fmt: str, path: Optional[str], stream) -> list:
    """Write each series to its own file (or to ``stream`` with ``#`` headers). Returns paths."""
    many = len(series) > 1
    written = []
    for s in series:
        text = format_rows(s.rows, fmt)
        if path:
            p = series_path(path, s.label, many)
            with open(p, "w", encoding="utf-8") as fh:
                fh.write(text)
            written.append(p)
        else:
            if many and fmt == "csv":
                stream.write(f"# series {s.label}\n")
            stream.write(text)
    return written


# ---------------------------------------------------------------- presets


_PRESETS = {
    "fig1": """
        # window of the double Gaussian profile, sigma = 1, lambda = 5
        [profile]
        kind = double_gaussian
        sigma = 1
        lambda = 5
        [sweep]
        axis = k
        start = -10
        stop = 10
        points = 2001
    """,
    "fig2": """
        # (0,1) oscillator coupling with its double Gaussian look-alike
        [profile]
        kind = hermite
        n = 0
        m = 1
        [sweep]
        axis = x
        start = -8
        stop = 8
        points = 4001
        [overlay]
        lambda = 1.66
        sigma = 1.0599978800063599   # 1/sqrt(0.89)
    """,
    "fig3": """
        # (0,3) oscillator coupling with its double Gaussian look-alike
        [profile]
        kind = hermite
        n = 0
        m = 3
        [sweep]
        axis = x
        start = -8
        stop = 8
        points = 4001
        [overlay]
        lambda = 2.5
        sigma = 1.0
    """,
    "fig4": """
        # inertial point-like detector in 3+1, three masses
        [model]
        spacetime = 3p1
        [profile]
        kind = pointlike
        [sweep]
        axis = delta
        start = -4
        stop = 4
        points = 801
        series = mass
        values = 0, 1, 1.5
    """,
    "fig5": """
        # inertial double Gaussian detector in 3+1, three masses
        [model]
        spacetime = 3p1
        [profile]
        kind = double_gaussian
        sigma = 1
        lambda = 5
        [sweep]
        axis = delta
        start = -12
        stop = 12
        points = 1201
        series = mass
        values = 0, 1, 1.5
    """,
    "fig6": """
        # accelerated point-like detector, massless 1+1, three accelerations
        [profile]
        kind = pointlike
        [trajectory]
        kind = accelerated
        [sweep]
        axis = delta
        start = -3
        stop = 3
        points = 601
        series = acceleration
        values = 0.1, 1, 1.5
        ir_band = 1e-3
    """,
    "fig7": """
        # accelerated Rindler double Gaussian detector, massless 1+1, three accelerations
        [profile]
        kind = rindler_double_gaussian
        sigma = 1
        lambda = 5
        [trajectory]
        kind = accelerated
        [sweep]
        axis = delta
        start = -10
        stop = 10
        points = 1001
        series = acceleration
        values = 0.1, 1, 1.5
        ir_band = 1e-3
    """,
    "particle-minkowski": """
        # inertial detector meeting a Minkowski wave packet, rate against time
        [model]
        gap = -5
        [profile]
        kind = double_gaussian
        sigma = 1
        lambda = 5
        [state]
        kind = minkowski
        center = 5
        width = 0.5
        [sweep]
        axis = tau
        start = -20
        stop = 20
        points = 41
    """,
    "particle-unruh": """
        # accelerated detector meeting a right-wedge Unruh packet, rate against time
        [model]
        gap = -5
        [profile]
        kind = rindler_double_gaussian
        sigma = 1
        lambda = 5
        [trajectory]
        kind = accelerated
        acceleration = 1
        [state]
        kind = unruh
        center = 5
        width = 0.4
        wedge = R
        [sweep]
        axis = tau
        start = -20
        stop = 20
        points = 41
    """,
}

FIGURE_IDS = tuple(f"fig{i}" for i in range(1, 8))
PRESET_IDS = tuple(_PRESETS)

# one-line plotting recipes for the emitted data files
PLOT_RECIPES = {
    "fig1": "plot column rate against axis (window against k)",
    "fig2": "plot both series (profile, overlay) against axis (x)",
    "fig3": "plot both series (profile, overlay) against axis (x)",
    "fig4": "plot rate against axis (gap) for each mass file",
    "fig5": "plot rate against axis (gap) for each mass file",
    "fig6": "plot rate against axis (gap) for each acceleration file",
    "fig7": "plot rate against axis (gap) for each acceleration file",
}


def preset_text(name: str) -> str:
    try:
        raw = _PRESETS[name]
    except KeyError:
        raise ConfigError([f"unknown preset {name!r}; choose from {', '.join(_PRESETS)}"]) from None
    return "\n".join(line.strip() for line in raw.strip().splitlines()) + "\n"


def figure_preset(name: str) -> ExperimentConfig:
    """Experiment reproducing one of the figures (``fig1`` .. ``fig7``) or a particle demo."""
    cfg = parse_config(preset_text(name))
    return cfg.with_overrides(name=name)


def fit_summary(n: int, m: int, reference: Optional[tuple] = None) -> dict:
    """Fit report plus, when given, the residual at reference parameters."""
    from .profiles import FIT_GRID, HermiteCoupling, hermite_fit_report
    fit = hermite_fit_report(n, m)
    out = {"n": n, "m": m, "lambda": fit.lam, "sigma": fit.sigma, "residual": fit.residual,
           "converged": fit.converged}
    if reference is not None:
        target = HermiteCoupling(n, m)(FIT_GRID)
        out["reference_lambda"], out["reference_sigma"] = reference
        out["reference_residual"] = fit_residual(target, *reference)
    return out


__all__ = ["COLUMNS", "Row", "Series", "run_sweep", "evaluate_point", "format_rows", "read_rows",
           "write_series", "figure_preset", "preset_text", "FIGURE_IDS", "PRESET_IDS", "PLOT_RECIPES",
           "fit_summary"]
