"""Experiment configuration files.

The format is line oriented: ``key = value`` pairs under ``[section]``
headers, ``#`` starting a comment (whole-line or trailing). Example::

    [model]
    spacetime = 3p1      # 1p1 (massless) or 3p1
    mass = 1.0
    [profile]
    kind = double_gaussian
    sigma = 1
    lambda = 5
    [trajectory]
    kind = inertial
    [sweep]
    axis = delta
    start = -10
    stop = 10
    points = 401

Every problem found is reported together in one ConfigError.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from typing import Optional

from .detector import (GaussianPacket, Inertial, Massive3p1, Massless1p1, MinkowskiParticle,
                       ModelSpec, UniformlyAccelerated, UnruhParticle, Vacuum)
from .errors import ConfigError
from .profiles import DoubleGaussian, HermiteCoupling, PointLike, RindlerDoubleGaussian
from .specfun import EPS_IR

DEFAULT_QUAD_TOL = 1e-8
DEFAULT_TAIL_TOL = 1e-10

# section -> key -> converter
_FLOAT, _INT, _STR = float, int, str
SCHEMA = {
    "model": {"spacetime": _STR, "mass": _FLOAT, "gap": _FLOAT, "rindler_norm": _STR},
    "profile": {"kind": _STR, "sigma": _FLOAT, "lambda": _FLOAT, "n_sigma": _FLOAT, "n": _INT,
                "m": _INT, "norm": _FLOAT, "acceleration": _FLOAT, "transverse_sigma": _FLOAT},
    "trajectory": {"kind": _STR, "acceleration": _FLOAT},
    "state": {"kind": _STR, "center": _FLOAT, "width": _FLOAT, "transverse_width": _FLOAT,
              "wedge": _STR},
    "sweep": {"axis": _STR, "start": _FLOAT, "stop": _FLOAT, "points": _INT, "tau": _FLOAT,
              "series": _STR, "values": _STR, "ir_band": _FLOAT},
    "overlay": {"lambda": _FLOAT, "sigma": _FLOAT},
    "tolerances": {"quad_tol": _FLOAT, "tail_tol": _FLOAT},
    "output": {"format": _STR, "path": _STR},
    "run": {"workers": _INT},
}

SPACETIMES = ("1p1", "3p1")
PROFILE_KINDS = ("pointlike", "double_gaussian", "hermite", "rindler_double_gaussian")
TRAJECTORY_KINDS = ("inertial", "accelerated")
STATE_KINDS = ("vacuum", "minkowski", "unruh")
AXES = ("delta", "tau", "k", "x")
SERIES_KEYS = ("mass", "acceleration", "gap")
FORMATS = ("csv", "json")


def unit_norm(omega: float, a: float) -> float:
    """Alternative Rindler normalisation N = 1 (module level so models stay picklable)."""
    return 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed, validated experiment.

    ``sections`` keeps the raw typed values; ``model(**overrides)`` builds the
    ModelSpec for one series member.
    """

    sections: dict
    axis: str = "delta"
    start: float = -5.0
    stop: float = 5.0
    points: int = 101
    tau: float = 0.0
    series_key: Optional[str] = None
    series_values: tuple = ()
    ir_band: float = EPS_IR
    quad_tol: float = DEFAULT_QUAD_TOL
    tail_tol: float = DEFAULT_TAIL_TOL
    format: str = "csv"
    path: Optional[str] = None
    workers: int = 1
    overlay: Optional[tuple] = None
    name: str = ""

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def series(self):
        """(label, overrides) for each curve; a single unlabeled curve without a series."""
        if not self.series_key:
            return [("", {})]
        return [(f"{self.series_key}={v!r}", {self.series_key: v}) for v in self.series_values]

    def model(self, **overrides) -> ModelSpec:
        return build_model(self.sections, overrides, self.quad_tol)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def _profile(sec, accel):
    kind = sec.get("kind", "pointlike")
    if kind == "pointlike":
        return PointLike()
    if kind == "double_gaussian":
        return DoubleGaussian(sec.get("sigma", 1.0), sec.get("lambda", 0.0), sec.get("n_sigma"))
    if kind == "hermite":
        return HermiteCoupling(sec.get("n", 0), sec.get("m", 1))
    a = sec.get("acceleration", accel)
    if a is None:
        raise ValueError("rindler_double_gaussian needs an acceleration")
    return RindlerDoubleGaussian(sec.get("sigma", 1.0), sec.get("lambda", 0.0), a, sec.get("norm"))


def build_model(sections, overrides=None, tol=DEFAULT_QUAD_TOL) -> ModelSpec:
    overrides = overrides or {}
    model = dict(sections.get("model", {}))
    traj = dict(sections.get("trajectory", {}))
    prof = dict(sections.get("profile", {}))
    state = dict(sections.get("state", {}))
    if "mass" in overrides:
        model["mass"] = overrides["mass"]
    if "gap" in overrides:
        model["gap"] = overrides["gap"]
    if "acceleration" in overrides:
        traj["acceleration"] = overrides["acceleration"]
        prof.pop("acceleration", None)
    st = model.get("spacetime", "1p1")
    spacetime = Massive3p1(model.get("mass", 0.0)) if st == "3p1" else Massless1p1(model.get("mass", 0.0))
    accel = traj.get("kind", "inertial") == "accelerated"
    trajectory = UniformlyAccelerated(traj.get("acceleration", 1.0)) if accel else Inertial()
    profile = _profile(prof, trajectory.a if accel else None)
    skind = state.get("kind", "vacuum")
    if skind == "vacuum":
        fstate = Vacuum()
    else:
        pk = GaussianPacket(state.get("center", 5.0), state.get("width", 0.4), state.get("transverse_width"))
        fstate = MinkowskiParticle(pk) if skind == "minkowski" else UnruhParticle(pk, state.get("wedge", "R"))
    norm = unit_norm if model.get("rindler_norm", "standard") == "unit" else None
    return ModelSpec(spacetime, profile, trajectory, fstate, model.get("gap", 0.0),
                     prof.get("transverse_sigma"), norm, tol)


def _convert(section, key, raw, conv, errors, lineno):
    where = f"[{section}] {key} (line {lineno})"
    try:
        if conv is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if conv is int:
            return int(raw)
        return raw.strip()
    except ValueError:
        errors.append(f"{where}: cannot read {raw!r} as {conv.__name__}")
        return None


def _line_numbers(text):
    """Map (section, key) to the line it was defined on."""
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and section is not None:
            out[(section, s.split("=", 1)[0].strip().lower())] = i
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Carrying every syntax and validation problem found.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                       interpolation=None, strict=True, empty_lines_in_values=False)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"line {exc.lineno}: key outside of any [section]: {exc.line.strip()!r}"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError([f"line {ln}: cannot parse {line.strip()!r}" for ln, line in exc.errors]) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.message}" if hasattr(exc, "message") else str(exc)]) from None

    lines = _line_numbers(text)
    errors = []
    sections = {}
    for sec in parser.sections():
        if sec not in SCHEMA:
            errors.append(f"unknown section [{sec}]")
            continue
        sections[sec] = {}
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"[{sec}] line {lines.get((sec, key), '?')}: unknown key {key!r}")
                continue
            v = _convert(sec, key, raw, SCHEMA[sec][key], errors, lines.get((sec, key), "?"))
            if v is not None:
                sections[sec][key] = v

    def choice(sec, key, allowed, default):
        v = sections.get(sec, {}).get(key, default)
        if v not in allowed:
            errors.append(f"[{sec}] {key}: {v!r} is not one of {', '.join(allowed)}")
        return v

    st = choice("model", "spacetime", SPACETIMES, "1p1")
    choice("profile", "kind", PROFILE_KINDS, "pointlike")
    choice("trajectory", "kind", TRAJECTORY_KINDS, "inertial")
    skind = choice("state", "kind", STATE_KINDS, "vacuum")
    choice("model", "rindler_norm", ("standard", "unit"), "standard")
    axis = choice("sweep", "axis", AXES, "delta")
    fmt = choice("output", "format", FORMATS, "csv")
    if st == "1p1" and "mass" in sections.get("model", {}):
        errors.append("[model] mass: the 1p1 spacetime is massless; remove the mass key")

    sw = sections.get("sweep", {})
    start, stop, points = sw.get("start", -5.0), sw.get("stop", 5.0), sw.get("points", 101)
    if points < 2:
        errors.append(f"[sweep] points must be at least 2, got {points}")
    if not start < stop:
        errors.append(f"[sweep] start ({start}) must be below stop ({stop})")
    ir_band = sw.get("ir_band", EPS_IR)
    if ir_band < EPS_IR:
        errors.append(f"[sweep] ir_band must be at least {EPS_IR}")
    series_key, series_values = sw.get("series"), ()
    if series_key is not None:
        if series_key not in SERIES_KEYS:
            errors.append(f"[sweep] series: {series_key!r} is not one of {', '.join(SERIES_KEYS)}")
        raw = sw.get("values")
        if raw is None:
            errors.append("[sweep] series needs a values list")
        else:
            try:
                series_values = tuple(float(v) for v in raw.replace(",", " ").split())
            except ValueError:
                errors.append(f"[sweep] values: cannot read {raw!r} as numbers")
            if not series_values:
                errors.append("[sweep] values list is empty")
    elif "values" in sw:
        errors.append("[sweep] values given without a series key")
    if axis in ("k", "x") and skind != "vacuum":
        errors.append(f"[sweep] axis {axis} evaluates the profile or window; use the vacuum state")

    tols = sections.get("tolerances", {})
    quad_tol, tail_tol = tols.get("quad_tol", DEFAULT_QUAD_TOL), tols.get("tail_tol", DEFAULT_TAIL_TOL)
    for name, v in (("quad_tol", quad_tol), ("tail_tol", tail_tol)):
        if not v > 0:
            errors.append(f"[tolerances] {name} must be positive")
    workers = sections.get("run", {}).get("workers", 1)
    if workers < 1:
        errors.append("[run] workers must be at least 1")
    ov = sections.get("overlay")
    overlay = None
    if ov is not None:
        if "lambda" not in ov or "sigma" not in ov:
            errors.append("[overlay] needs both lambda and sigma")
        else:
            overlay = (ov["lambda"], ov["sigma"])

    if not errors:
        # model-level invariants, checked for every series member
        members = [{}] if not series_key else [{series_key: v} for v in series_values]
        for ov_ in members:
            try:
                build_model(sections, ov_, quad_tol)
            except ValueError as exc:
                label = f" ({next(iter(ov_))}={next(iter(ov_.values()))})" if ov_ else ""
                errors.extend(f"model{label}: {m}" for m in str(exc).split("; "))
    if errors:
        raise ConfigError(errors)
    out = sections.get("output", {})
    return ExperimentConfig(sections, axis, start, stop, points, sw.get("tau", 0.0), series_key,
                            series_values, ir_band, quad_tol, tail_tol, fmt, out.get("path"),
                            workers, overlay)
