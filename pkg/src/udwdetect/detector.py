"""Trajectories, field states and transition rates.

Conventions
-----------
Every vacuum Wightman function is written through a spectral density S,

    W(s) = (1/2pi) int dnu S(nu) exp(-i nu s),   s = tau - tau',

so the rate 2 Re int_0^inf ds exp(-i Delta s) W(s) equals S(-Delta), which
is the closed form. For an inertial detector S(nu) = Theta(nu - m)
sqrt(nu^2 - m^2) |f~(nu)|^2. For a uniformly accelerated detector the Unruh
modes give S(Omega) = Xi_+(Omega) cosh^2 r and S(-Omega) = Xi_+(Omega) sinh^2 r,
where Xi_+ is the normalised window weight N^2 |f~|^2 (integrated over k_perp
in 3+1).

A single-particle state adds (c/2pi) * 2 Re[I*(tau) I(tau')] to W, with c = 1
for Unruh packets (the normalisation N sits inside I) and c = 1/(4 pi) for
Minkowski packets (the 1/sqrt(omega) sits inside I).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Optional, Union

import numpy as np

from . import kernels
from .errors import DistributionalProfileError, InfraredDivergenceError, QuadratureError
from .profiles import (FrequencyWindow, PointLike, RindlerDoubleGaussian, SpatialProfile,
                       longitudinal_window_3p1)
from .quadrature import IntegrandSpec, integrate_adaptive, oscillatory_halfline
from .specfun import EPS_IR, heaviside, planck_factor

# ---------------------------------------------------------------- domain types


@dataclass(frozen=True)
class Inertial:
    pass


@dataclass(frozen=True)
class UniformlyAccelerated:
    """Right-wedge worldline with proper acceleration ``a``."""

    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"proper acceleration must be positive, got {self.a!r}")


Trajectory = Union[Inertial, UniformlyAccelerated]


@dataclass(frozen=True)
class Massless1p1:
    mass: float = 0.0

    def __post_init__(self):
        if self.mass != 0.0:
            raise ValueError("the 1+1 spacetime is massless; a mass parameter is not allowed")


@dataclass(frozen=True)
class Massive3p1:
    mass: float = 0.0

    def __post_init__(self):
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be non-negative, got {self.mass!r}")


Spacetime = Union[Massless1p1, Massive3p1]


@dataclass(frozen=True)
class GaussianPacket:
    """Envelope exp(-(w - center)^2 / (4 width^2)) over the positive frequency axis.

    ``transverse_width`` adds a Gaussian factor exp(-k_perp^2 / (4 tw^2)) for
    Unruh packets in 3+1. The overall constant is fixed when the packet is
    bound to a model, from the measure of that model's mode family.
    """

    center: float
    width: float
    transverse_width: Optional[float] = None

    def __post_init__(self):
        if not self.center > 0:
            raise ValueError("packet center must be positive")
        if not self.width > 0:
            raise ValueError("packet width must be positive")
        if self.transverse_width is not None and not self.transverse_width > 0:
            raise ValueError("transverse width must be positive")

    def shape(self, w):
        w = np.asarray(w, dtype=float)
        return np.exp(-0.25 * ((w - self.center) / self.width) ** 2)

    def transverse_shape(self, kp):
        if self.transverse_width is None:
            return np.ones_like(np.asarray(kp, dtype=float))
        return np.exp(-0.25 * (np.asarray(kp, dtype=float) / self.transverse_width) ** 2)

    def support(self, reach: float = 12.0):
        return max(self.center - reach * self.width, 0.0), self.center + reach * self.width


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class MinkowskiParticle:
    packet: GaussianPacket


@dataclass(frozen=True)
class UnruhParticle:
    packet: GaussianPacket
    wedge: Literal["R", "L"] = "R"

    def __post_init__(self):
        if self.wedge not in ("R", "L"):
            raise ValueError(f"wedge must be 'R' or 'L', got {self.wedge!r}")


FieldState = Union[Vacuum, MinkowskiParticle, UnruhParticle]

_RINDLER_PROFILES = (PointLike, RindlerDoubleGaussian)


@dataclass(frozen=True)
class ModelSpec:
    """A validated detector model. Immutable; safe to share between workers.

    Parameters
    ----------
    spacetime, profile, trajectory, state, gap
        The physical model.
    transverse_sigma
        Width of the Gaussian transverse profile (3+1 accelerated only);
        ``None`` means point-like in the transverse directions.
    norm
        Optional replacement for the Rindler normalisation, called as
        ``norm(omega, a)``.
    tol
        Absolute tolerance handed to window quadratures.
    """

    spacetime: Spacetime = field(default_factory=Massless1p1)
    profile: SpatialProfile = field(default_factory=PointLike)
    trajectory: Trajectory = field(default_factory=Inertial)
    state: FieldState = field(default_factory=Vacuum)
    gap: float = 0.0
    transverse_sigma: Optional[float] = None
    norm: Optional[Callable[[float, float], float]] = None
    tol: float = 1e-10

    def __post_init__(self):
        errors = validate_model(self)
        if errors:
            raise ValueError("; ".join(errors))
        object.__setattr__(self, "_packet_scale", _packet_scale(self) if is_particle(self) else 1.0)

    @property
    def mass(self) -> float:
        return self.spacetime.mass

    @property
    def accelerated(self) -> bool:
        return isinstance(self.trajectory, UniformlyAccelerated)

    @property
    def is_3p1(self) -> bool:
        return isinstance(self.spacetime, Massive3p1)

    @property
    def window(self) -> FrequencyWindow:
        if not self.accelerated:
            return FrequencyWindow(self.profile, "minkowski", tol=self.tol)
        kind = "rindler_3p1" if self.is_3p1 else "rindler_1p1"
        return FrequencyWindow(self.profile, kind, a=self.trajectory.a, mass=self.mass,
                               transverse_sigma=self.transverse_sigma, tol=self.tol)

    def with_gap(self, gap: float) -> "ModelSpec":
        return _replace(self, gap=gap)


def _replace(spec, **changes):
    kw = {k: getattr(spec, k) for k in ("spacetime", "profile", "trajectory", "state", "gap",
                                        "transverse_sigma", "norm", "tol")}
    kw.update(changes)
    return ModelSpec(**kw)


def is_particle(spec) -> bool:
    return isinstance(spec.state, (MinkowskiParticle, UnruhParticle))


def validate_model(spec) -> list:
    """All consistency problems of a model, as messages. Empty when valid."""
    errs = []
    if not isinstance(spec.spacetime, (Massless1p1, Massive3p1)):
        errs.append(f"unknown spacetime {spec.spacetime!r}")
    if not isinstance(spec.trajectory, (Inertial, UniformlyAccelerated)):
        errs.append(f"unknown trajectory {spec.trajectory!r}")
    if not isinstance(spec.profile, SpatialProfile):
        errs.append(f"unknown profile {spec.profile!r}")
    if not math.isfinite(spec.gap):
        errs.append("gap must be finite")
    accel = isinstance(spec.trajectory, UniformlyAccelerated)
    if accel and not isinstance(spec.profile, _RINDLER_PROFILES):
        errs.append(f"{type(spec.profile).__name__} has a Minkowski window; an accelerated "
                    "trajectory needs PointLike or RindlerDoubleGaussian")
    if not accel and isinstance(spec.profile, RindlerDoubleGaussian):
        errs.append("RindlerDoubleGaussian has a Rindler window; it needs an accelerated trajectory")
    if isinstance(spec.state, UnruhParticle) and not accel:
        errs.append("Unruh particle states need an accelerated trajectory")
    if isinstance(spec.state, MinkowskiParticle) and accel:
        errs.append("Minkowski particle states are supported for inertial trajectories only")
    if spec.transverse_sigma is not None:
        if not (accel and isinstance(spec.spacetime, Massive3p1)):
            errs.append("transverse_sigma applies to 3+1 accelerated models only")
        elif not spec.transverse_sigma > 0:
            errs.append("transverse_sigma must be positive")
    if isinstance(spec.state, UnruhParticle) and isinstance(spec.spacetime, Massive3p1) \
            and spec.state.packet.transverse_width is None:
        errs.append("a 3+1 Unruh packet needs a transverse_width")
    if not spec.tol > 0:
        errs.append("tol must be positive")
    return errs


@dataclass(frozen=True)
class RateResult:
    rate: float
    path: Literal["closed_form", "numeric"]
    est_error: float
    tau: Optional[float] = None
    converged: bool = True


# ---------------------------------------------------------------- mode weights


def rindler_norm(omega: float, a: float, spacetime: Spacetime = Massless1p1()) -> float:
    """Rindler mode normalisation N_{Omega/a}.

    1/sqrt(4 pi Omega) in massless 1+1, sqrt(sinh(pi Omega/a)) / (2 pi^2 sqrt(a)) in 3+1.
    """
    if not a > 0:
        raise ValueError("acceleration must be positive")
    if omega < a * EPS_IR:
        raise InfraredDivergenceError(f"Rindler frequency {omega!r} below the infrared cutoff")
    if isinstance(spacetime, Massive3p1):
        # sqrt(sinh x) = exp(x/2) sqrt((1 - exp(-2x)) / 2), finite up to x ~ 1419
        x = math.pi * omega / a
        if x > 1400.0:
            raise OverflowError(f"3+1 Rindler normalisation overflows for omega/a = {omega / a!r} (limit ~445)")
        root = math.exp(0.5 * x) * math.sqrt(-0.5 * math.expm1(-2.0 * x))
        return root / (2.0 * math.pi ** 2 * math.sqrt(a))
    return 1.0 / math.sqrt(4.0 * math.pi * omega)


def unruh_weights(omega: float, a: float):
    """(cosh r, sinh r) with tanh r = exp(-pi Omega / a)."""
    if not (omega > 0 and a > 0):
        raise ValueError("frequency and acceleration must be positive")
    q = math.exp(-2.0 * math.pi * omega / a)
    sh = math.sqrt(q / -math.expm1(-2.0 * math.pi * omega / a)) if q > 0 else 0.0
    ch = math.sqrt(1.0 / -math.expm1(-2.0 * math.pi * omega / a))
    return ch, sh


def _norm(spec, omega):
    a = spec.trajectory.a
    if spec.norm is not None:
        return float(spec.norm(omega, a))
    return rindler_norm(omega, a, spec.spacetime)


# ---------------------------------------------------------------- vacuum rates


def vacuum_rate_inertial(spec: ModelSpec) -> RateResult:
    """Theta(-Delta - m) sqrt(Delta^2 - m^2) |f~(-Delta)|^2."""
    if spec.accelerated:
        raise ValueError("vacuum_rate_inertial needs an inertial trajectory")
    if not isinstance(spec.state, Vacuum):
        raise ValueError("vacuum_rate_inertial needs the vacuum state")
    d, m = spec.gap, spec.mass
    if -d < m or heaviside(-d - m) == 0.0:
        return RateResult(0.0, "closed_form", 0.0)
    win = spec.window
    value = complex(win(-d))
    err = 0.0 if win.evaluation_path == "closed_form" else spec.tol
    k = math.sqrt(d * d - m * m)
    return RateResult(k * abs(value) ** 2, "closed_form", 2.0 * k * abs(value) * err)


def window_weight_1p1(spec: ModelSpec, omega: float) -> float:
    """N^2 |f~(Omega)|^2 for the massless 1+1 Rindler window."""
    return _norm(spec, omega) ** 2 * abs(complex(spec.window(omega))) ** 2


def _transverse_cutoff(integrand, tol):
    """Radius beyond which a decaying radial integrand is negligible."""
    probe = np.linspace(0.0, 4.0, 41)
    peak = float(np.max(np.abs(integrand(probe)))) or 1.0
    r = 4.0
    for _ in range(30):
        if float(np.max(np.abs(integrand(np.linspace(r, 2 * r, 9))))) * r <= 1e-3 * tol * peak:
            return r
        r *= 2.0
    raise QuadratureError("transverse integrand does not decay")


def window_weight_3p1(spec: ModelSpec, omega: float) -> QuadratureResultLike:
    """N^2 int d^2k_perp |f~(Omega, k_perp)|^2 in polar form."""
    a, m = spec.trajectory.a, spec.mass
    nrm2 = _norm(spec, omega) ** 2
    ts = spec.transverse_sigma

    def radial(k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        big_m = np.sqrt(k * k + m * m)
        if np.any(big_m == 0.0):
            if m == 0.0:
                # the k_perp = 0 endpoint of the massless radial integral carries weight k = 0
                out = np.zeros_like(k)
                nz = big_m > 0
                out[nz] = radial(k[nz])
                return out
        lw = _longitudinal_many(spec.profile, omega, big_m, a, spec.tol)
        tf = 1.0 if ts is None else np.exp(-0.5 * ts ** 2 * k * k)
        return 2.0 * math.pi * k * (tf * lw) ** 2

    if m == 0.0 and isinstance(spec.profile, PointLike) and ts is None:
        # closed radial integral: int_0^inf x K_{i mu}(x)^2 dx = pi mu / (2 sinh(pi mu))
        mu = omega / a
        val = nrm2 * 2.0 * math.pi * a * a * (math.pi * mu / (2.0 * math.sinh(math.pi * mu)))
        return QuadratureResultLike(val, 4.0 * np.finfo(float).eps * val, True)
    k_max = _transverse_cutoff(radial, spec.tol)
    spec_int = IntegrandSpec(radial, "finite", 0.0, k_max)
    peak_scale = max(1.0, nrm2)
    res = integrate_adaptive(spec_int, spec.tol / peak_scale, rtol=1e-10)
    return QuadratureResultLike(nrm2 * res.value.real, float(nrm2 * res.est_error), res.converged)


@dataclass(frozen=True)
class QuadratureResultLike:
    value: float
    est_error: float
    converged: bool


def _longitudinal_many(profile, omega, big_m, a, tol):
    if isinstance(profile, PointLike):
        from .specfun import bessel_k_imag_array
        return bessel_k_imag_array(omega / a, big_m / a)
    return np.array([longitudinal_window_3p1(profile, omega, float(mm), a, tol) for mm in big_m])


def vacuum_rate_accelerated(spec: ModelSpec) -> RateResult:
    """Planck factor times Xi(Delta).

    Xi(Delta) = +W(Delta) for Delta > 0 and -W(-Delta) for Delta < 0, with W
    the window weight: N^2 |f~|^2 in 1+1 (closed form), and its k_perp
    integral in 3+1 (numeric).
    """
    if not spec.accelerated:
        raise ValueError("vacuum_rate_accelerated needs an accelerated trajectory")
    if not isinstance(spec.state, Vacuum):
        raise ValueError("vacuum_rate_accelerated needs the vacuum state")
    d, a = spec.gap, spec.trajectory.a
    n = planck_factor(d, a)
    sign = 1.0 if d > 0 else -1.0
    if not spec.is_3p1:
        w = window_weight_1p1(spec, abs(d))
        path = "closed_form" if spec.window.evaluation_path == "closed_form" else "numeric"
        err = 0.0 if path == "closed_form" else abs(n) * 2.0 * math.sqrt(w) * spec.tol
        return RateResult(n * sign * w, path, err)
    res = window_weight_3p1(spec, abs(d))
    return RateResult(n * sign * res.value, "numeric", abs(n) * res.est_error, converged=res.converged)


def vacuum_rate(spec: ModelSpec) -> RateResult:
    vac = spec if isinstance(spec.state, Vacuum) else _replace(spec, state=Vacuum())
    if vac.accelerated:
        return vacuum_rate_accelerated(vac)
    return vacuum_rate_inertial(vac)


# ---------------------------------------------------------------- Wightman function


def spectral_density(spec: ModelSpec, nu):
    """S(nu) such that W(s) = (1/2pi) int dnu S(nu) e^{-i nu s}. Vectorised over ``nu``."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if not spec.accelerated:
        m = spec.mass
        out = np.zeros_like(nu)
        live = nu >= m
        if np.any(live):
            win = np.asarray(spec.window(nu[live]), dtype=complex)
            out[live] = np.sqrt(nu[live] ** 2 - m * m) * np.abs(win) ** 2
        return out
    a = spec.trajectory.a
    out = np.empty_like(nu)
    for i, v in enumerate(nu):
        om = abs(v)
        if om < a * EPS_IR:
            raise InfraredDivergenceError("spectral density evaluated inside the infrared band")
        ch, sh = unruh_weights(om, a)
        w = window_weight_3p1(spec, om).value if spec.is_3p1 else window_weight_1p1(spec, om)
        out[i] = w * (ch * ch if v > 0 else sh * sh)
    return out


def _spectral_support(spec, tol):
    """Frequency interval carrying the spectral density above tol (relative)."""
    if isinstance(spec.profile, PointLike):
        raise DistributionalProfileError(
            "the point-like window never decays; the numeric Wightman path needs a smooth profile")
    lo = spec.mass if not spec.accelerated else -np.inf
    top = 4.0
    probe = np.linspace(max(lo, 0.0), top, 65)
    peak = float(np.max(np.abs(spectral_density(spec, probe))))
    for _ in range(20):
        edge = np.linspace(top, 2 * top, 17)
        if peak > 0 and float(np.max(np.abs(spectral_density(spec, edge)))) * top <= tol * peak:
            break
        peak = max(peak, float(np.max(np.abs(spectral_density(spec, edge)))))
        top *= 2.0
    else:
        raise QuadratureError("spectral density does not decay")
    return max(lo, -top), top


def wightman_vacuum(spec: ModelSpec, tau: float, tau_prime: float, tol: float = 1e-10) -> complex:
    """Vacuum Wightman function W(tau, tau') along the detector worldline.

    Computed by adaptive quadrature of the spectral density over its support.
    The massless 1+1 accelerated case is infrared divergent and raises
    InfraredDivergenceError.
    """
    if spec.accelerated and not spec.is_3p1:
        raise InfraredDivergenceError(
            "the massless 1+1 Wightman function diverges in the infrared; only rates are finite")
    s = float(tau) - float(tau_prime)
    lo, hi = _spectral_support(spec, tol)
    spans = [(lo, hi)] if lo >= 0 else [(lo, -spec.trajectory.a * EPS_IR),
                                         (spec.trajectory.a * EPS_IR, hi)]
    total = 0.0 + 0.0j
    for a_, b_ in spans:
        integ = IntegrandSpec(lambda v: spectral_density(spec, v) * np.exp(-1j * v * s),
                              "finite", a_, b_, oscillation=abs(s))
        res = integrate_adaptive(integ, tol)
        if not res.converged:
            raise QuadratureError(f"Wightman function at s={s} did not converge", res)
        total += res.value
    return total / (2.0 * math.pi)


# ---------------------------------------------------------------- spectral grids


@lru_cache(maxsize=8)
def _gl(order):
    return np.polynomial.legendre.leggauss(order)


def _composite_nodes(lo, hi, panels, order=16):
    x, w = _gl(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@dataclass(frozen=True)
class SpectralGrid:
    """Discrete representation X(t) = sum_j amps_j exp(sign * i * freqs_j * t)."""

    freqs: np.ndarray
    amps: np.ndarray
    sign: int
    t_max: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = kernels.fourier_sum(self.freqs, self.amps, np.atleast_1d(t), self.sign)
        return out if t.ndim else complex(out[0])


def _panel_count(span, slope, t_max, min_panels):
    # powers of two times min_panels, so grids for nearby t_max share their samples
    need = span * slope * t_max / 16.0
    panels = min_panels
    while panels < need:
        panels *= 2
    return panels


def _build_grid(lo, hi, amp_fn, freq_fn, sign, t_max, tol, min_panels=8, max_panels=1 << 12,
                sampler=None):
    """Composite Gauss-Legendre grid, doubled until sums at 0 and +-t_max agree to ``tol``.

    ``sampler(panels)``, when given, replaces the direct evaluation and returns
    ``(freqs, weighted_amps)``; it lets callers cache expensive amplitudes.
    """
    x0 = np.linspace(lo, hi, 257)
    slope = float(np.max(np.abs(np.gradient(freq_fn(x0), x0))))
    panels = _panel_count(hi - lo, slope, t_max, min_panels)
    probe_t = np.array([0.0, 0.5 * t_max, t_max, -0.5 * t_max, -t_max])
    if sampler is None:
        def sampler(n):
            x, w = _composite_nodes(lo, hi, n)
            return freq_fn(x), w * amp_fn(x)
    prev = None
    while panels <= max_panels:
        freqs, amps = sampler(panels)
        grid = SpectralGrid(freqs, amps, sign, t_max)
        vals = grid(probe_t)
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(vals))))
            if float(np.max(np.abs(vals - prev))) <= tol * scale:
                return grid
        prev = vals
        panels *= 2
    raise QuadratureError("spectral grid failed to resolve the packet integral")


def vacuum_rate_numeric(spec: ModelSpec, tol: float = 1e-8, tail_tol: float = 1e-10) -> RateResult:
    """Rate from 2 Re int_0^inf ds e^{-i Delta s} W(s) with a numeric Wightman function."""
    vac = spec if isinstance(spec.state, Vacuum) else _replace(spec, state=Vacuum())
    if vac.accelerated and not vac.is_3p1:
        raise InfraredDivergenceError("massless 1+1 accelerated Wightman function is infrared divergent")
    lo, hi = _spectral_support(vac, tail_tol)
    horizon = 16.0
    for _ in range(12):
        if vac.accelerated:
            # split at the origin; both branches stay clear of the infrared band
            eps = vac.trajectory.a * EPS_IR
            g1 = _build_grid(lo, -eps, lambda v: spectral_density(vac, v) / (2 * math.pi),
                             lambda v: v, -1, horizon, tol)
            g2 = _build_grid(eps, hi, lambda v: spectral_density(vac, v) / (2 * math.pi),
                             lambda v: v, -1, horizon, tol)
            grid = SpectralGrid(np.concatenate([g1.freqs, g2.freqs]),
                                np.concatenate([g1.amps, g2.amps]), -1, horizon)
        else:
            grid = _build_grid(lo, hi, lambda v: spectral_density(vac, v) / (2 * math.pi),
                               lambda v: v, -1, horizon, tol)
        w0 = abs(grid(0.0))
        edge = np.abs(grid(np.linspace(0.75 * horizon, horizon, 33)))
        if float(edge.max()) <= tail_tol * max(w0, 1.0):
            break
        horizon *= 2.0
    res = oscillatory_halfline(grid, vac.gap, tol=tol, horizon=horizon, tail_tol=tail_tol * max(w0, 1.0))
    return RateResult(2.0 * res.value.real, "numeric", float(2.0 * res.est_error), converged=res.converged)


# ---------------------------------------------------------------- particle states


def _packet_measure(spec):
    """Radial weight of the frequency measure the packet is normalised in."""
    if isinstance(spec.state, MinkowskiParticle) and spec.is_3p1:
        return lambda k: 4.0 * math.pi * k * k
    return lambda w: np.ones_like(w)


def _packet_scale(spec) -> float:
    """Constant making int |Phi|^2 over the model's mode measure equal to one."""
    pk = spec.state.packet
    lo, hi = pk.support()
    meas = _packet_measure(spec)
    integ = IntegrandSpec(lambda w: meas(w) * pk.shape(w) ** 2, "finite", lo, hi)
    res = integrate_adaptive(integ, 1e-14, rtol=1e-13)
    total = res.value.real
    if isinstance(spec.state, UnruhParticle) and spec.is_3p1:
        tw = pk.transverse_width
        total *= 2.0 * math.pi * tw * tw          # int d^2k exp(-k^2 / (2 tw^2))
    if not (res.converged and total > 0):
        raise QuadratureError("packet normalisation failed", res)
    return 1.0 / math.sqrt(total)


def packet_norm_check(spec: ModelSpec) -> float:
    """int |Phi|^2 over the mode measure for a bound packet (should be 1)."""
    pk = spec.state.packet
    c = spec._packet_scale
    meas = _packet_measure(spec)
    integ = IntegrandSpec(lambda w: meas(w) * (c * pk.shape(w)) ** 2, "halfline", 0.0)
    total = integrate_adaptive(integ, 1e-13, rtol=1e-13).value.real
    if isinstance(spec.state, UnruhParticle) and spec.is_3p1:
        integ2 = IntegrandSpec(lambda k: 2 * math.pi * k * pk.transverse_shape(k) ** 2, "halfline", 0.0)
        total *= integrate_adaptive(integ2, 1e-13, rtol=1e-13).value.real
    return total


def _particle_prefactor(spec) -> float:
    return 1.0 / (2.0 * math.pi) * (1.0 if isinstance(spec.state, UnruhParticle) else 1.0 / (4.0 * math.pi))


def _unruh_amp(spec, omega):
    """Phi(Omega) N (cosh r or sinh r) integrated against the window (and over k_perp in 3+1)."""
    pk = spec.state.packet
    a = spec.trajectory.a
    omega = np.asarray(omega, dtype=float)
    out = np.empty_like(omega)
    for i, om in enumerate(omega):
        ch, sh = unruh_weights(om, a)
        weight = ch if spec.state.wedge == "R" else sh
        base = spec._packet_scale * float(pk.shape(om)) * _norm(spec, om) * weight
        if base == 0.0:
            out[i] = 0.0
            continue
        if not spec.is_3p1:
            out[i] = base * complex(spec.window(om)).real
            continue
        ts, m = spec.transverse_sigma, spec.mass

        def radial(k, om=om):
            big_m = np.sqrt(k * k + m * m)
            good = big_m > 0
            vals = np.zeros_like(k)
            if np.any(good):
                lw = _longitudinal_many(spec.profile, om, big_m[good], a, spec.tol)
                tf = 1.0 if ts is None else np.exp(-0.5 * ts ** 2 * k[good] ** 2)
                vals[good] = 2 * math.pi * k[good] * pk.transverse_shape(k[good]) * tf * lw
            return vals
        k_max = _transverse_cutoff(radial, 1e-12)
        res = integrate_adaptive(IntegrandSpec(radial, "finite", 0.0, k_max), 1e-13, rtol=1e-11)
        out[i] = base * res.value.real
    return out


def _packet_parts(spec):
    """(lo, hi, amp_fn, freq_fn, sign) of the spectral representation of I(t)."""
    pk = spec.state.packet
    lo, hi = pk.support()
    c = spec._packet_scale
    if isinstance(spec.state, MinkowskiParticle):
        m = spec.mass
        if spec.is_3p1:
            # isotropic packet over |k|: int d^3k -> 4 pi k^2 dk, omega = sqrt(k^2 + m^2)
            def amp(k):
                om = np.sqrt(k * k + m * m)
                win = np.asarray(spec.window(k), dtype=complex)
                safe = np.where(om > 0, om, 1.0)
                return np.where(om > 0, 4 * math.pi * k * k * c * pk.shape(k) * win / np.sqrt(safe), 0.0)
            return lo, hi, amp, lambda k: np.sqrt(k * k + m * m), -1

        # right-moving 1+1 packet; u = sqrt(omega) removes the 1/sqrt(omega) endpoint singularity
        def amp_u(u):
            om = u * u
            return 2.0 * c * pk.shape(om) * np.asarray(spec.window(om), dtype=complex)
        return math.sqrt(lo), math.sqrt(hi), amp_u, lambda u: u * u, -1
    if lo <= 0.0:
        # in 1+1 the mode amplitude is not integrable at Omega = 0; in 3+1 a packet cut at
        # Omega = 0 has a sharp edge and I(t) loses its fast decay
        raise InfraredDivergenceError(
            "Unruh packet does not vanish at Omega = 0 (center - 12 width <= 0); "
            "narrow the packet or move its center up")
    sign = -1 if spec.state.wedge == "R" else +1
    return lo, hi, lambda om: _unruh_amp(spec, om), lambda om: om, sign


@lru_cache(maxsize=32)
def _packet_samples(spec, panels):
    lo, hi, amp, freq, _ = _packet_parts(spec)
    x, w = _composite_nodes(lo, hi, panels)
    freqs, amps = freq(x), w * amp(x)
    freqs.flags.writeable = False
    amps.flags.writeable = False
    return freqs, amps


def packet_grid(spec: ModelSpec, t_max: float, tol: float = 1e-10) -> SpectralGrid:
    """Spectral grid for I(t) valid on |t| <= t_max."""
    if not is_particle(spec):
        raise ValueError("packet_overlap_I needs a particle state")
    lo, hi, amp, freq, sign = _packet_parts(spec)
    return _build_grid(lo, hi, amp, freq, sign, max(float(t_max), 1.0), tol,
                       sampler=lambda n: _packet_samples(spec, n))


def packet_overlap_I(spec: ModelSpec, tau, tol: float = 1e-10):
    """Overlap I(tau) of the packet, the detector window and the mode functions.

    Minkowski: int d^dk Phi f~ omega^{-1/2} e^{-i omega tau}.
    Unruh R: int dOmega Phi f~ N cosh(r) e^{-i Omega tau}; L: N sinh(r) e^{+i Omega tau}.
    """
    t = np.asarray(tau, dtype=float)
    grid = packet_grid(spec, float(np.max(np.abs(t))) if t.size else 1.0, tol)
    return grid(t)


def _decay_time(grid, tail_tol, t_cap):
    """Smallest T with |I(t)| <= tail_tol * max|I| for all |t| >= T (within t_cap)."""
    t = np.linspace(-t_cap, t_cap, 4001)
    mag = np.abs(grid(t))
    big = mag > tail_tol * mag.max()
    if not np.any(big):
        return 0.0
    return float(np.max(np.abs(t[big]))) + 2.0 * (t[1] - t[0])


@dataclass(frozen=True)
class ParticleTerms:
    I: complex
    iota: complex
    kappa: complex
    correction: float
    est_error: float
    converged: bool


def particle_terms(spec: ModelSpec, tau: float, delta: Optional[float] = None,
                   tol: float = 1e-8, tail_tol: float = 1e-10) -> ParticleTerms:
    """I(tau), iota_tau(Delta), kappa_tau(Delta) and the assembled correction.

    iota = int_0^inf ds e^{-i s Delta} I(tau - s),
    kappa = int_0^inf ds e^{-i s Delta} I*(tau - s),
    correction = c/(2 pi) * 2 Re[I*(tau) iota + I(tau) kappa].
    """
    delta = spec.gap if delta is None else float(delta)
    tau = float(tau)
    # a generous window for the packet's temporal support, then the actual decay time
    width_t = 30.0 / spec.state.packet.width
    grid = packet_grid(spec, width_t, tol * 1e-2)
    t_dec = _decay_time(grid, tail_tol, width_t)
    i_peak = float(np.max(np.abs(grid(np.linspace(-t_dec, t_dec, 2001)))))
    # the tail probe of oscillatory_halfline looks up to 2 time units inside the horizon
    horizon = max(tau + t_dec + 2.5, 2.5)
    grid = packet_grid(spec, max(abs(tau) + horizon, width_t), tol * 1e-2)
    i_tau = complex(grid(tau))

    tail = tail_tol * max(i_peak, 1.0)
    res_i = oscillatory_halfline(lambda s: grid(tau - s), delta, tol=tol, horizon=horizon, tail_tol=tail)
    res_k = oscillatory_halfline(lambda s: np.conj(grid(tau - s)), delta, tol=tol, horizon=horizon,
                                 tail_tol=tail)
    pref = _particle_prefactor(spec)
    raw = np.conj(i_tau) * res_i.value + i_tau * res_k.value
    corr = pref * 2.0 * raw.real
    err = pref * 2.0 * abs(i_tau) * (res_i.est_error + res_k.est_error)
    return ParticleTerms(i_tau, res_i.value, res_k.value, float(corr), float(err),
                         res_i.converged and res_k.converged)


def particle_rate(spec: ModelSpec, tau: float, delta: Optional[float] = None,
                  tol: float = 1e-8, tail_tol: float = 1e-10) -> RateResult:
    """Vacuum rate plus the single-particle correction at time ``tau``."""
    if not is_particle(spec):
        raise ValueError("particle_rate needs a particle state")
    delta = spec.gap if delta is None else float(delta)
    vac = vacuum_rate(_replace(spec, state=Vacuum(), gap=delta))
    terms = particle_terms(spec, tau, delta, tol, tail_tol)
    return RateResult(vac.rate + terms.correction, "numeric", vac.est_error + terms.est_error,
                      tau=float(tau), converged=vac.converged and terms.converged)
