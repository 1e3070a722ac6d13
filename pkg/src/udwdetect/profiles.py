"""Spatial profiles and their frequency windows.

A profile f is the position-dependent coupling strength of the detector.
Its window is the transform of f onto the mode labels the detector couples
to: a Fourier transform for inertial motion, and for uniform acceleration a
transform carrying the conformal factor e^{2 a xi} (and, in 3+1, the Rindler
mode function K_{i Omega/a}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.optimize import minimize

from .errors import DistributionalProfileError, KernelDegeneracyError, QuadratureError
from .quadrature import IntegrandSpec, fourier_window_1d, integrate_adaptive
from .specfun import bessel_k_imag, bessel_k_imag_array, oscillator_wavefunction, \
    oscillator_wavefunction_derivative

WindowKind = Literal["minkowski", "rindler_1p1", "rindler_3p1"]
WindowPath = Literal["closed_form", "quadrature"]


def unit_peak_norm(sigma: float) -> float:
    """Amplitude giving a unit-peak window: (2 pi sigma^2)^{-1/2}."""
    return 1.0 / (math.sqrt(2.0 * math.pi) * sigma)


class SpatialProfile:
    """Base class; concrete profiles are frozen dataclasses."""

    closed_form_kinds: tuple = ()

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        raise NotImplementedError

    def support_halfwidth(self, tol: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class PointLike(SpatialProfile):
    """Delta-function profile. Its window is identically one."""

    def evaluate(self, x):
        raise DistributionalProfileError("the point-like profile is a distribution; it has no pointwise values")

    def support_halfwidth(self, tol):
        return 0.0


def _gauss_halfwidth(sigma, amplitude, tol):
    # |f| <= amplitude * exp(-x^2 / 2 sigma^2); keep the dropped tail well under tol
    ratio = max(amplitude * sigma * 10.0, 1.0) / (1e-3 * tol)
    return sigma * math.sqrt(2.0 * math.log(ratio)) + sigma


@dataclass(frozen=True)
class DoubleGaussian(SpatialProfile):
    """n_sigma * exp(-x^2 / (2 sigma^2)) * 2 cos(lam x).

    ``n_sigma=None`` selects the unit-peak normalisation.
    """

    sigma: float
    lam: float = 0.0
    n_sigma: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.n_sigma is not None and not self.n_sigma > 0:
            raise ValueError("n_sigma must be positive")

    @property
    def amplitude(self) -> float:
        return unit_peak_norm(self.sigma) if self.n_sigma is None else self.n_sigma

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-0.5 * (x / self.sigma) ** 2) * 2.0 * np.cos(self.lam * x)

    def support_halfwidth(self, tol):
        return _gauss_halfwidth(self.sigma, 2 * self.amplitude, tol)

    def window_closed_form(self, k):
        k = np.asarray(k, dtype=float)
        s2 = self.sigma ** 2
        scale = self.amplitude / unit_peak_norm(self.sigma)
        out = scale * (np.exp(-0.5 * s2 * (k - self.lam) ** 2) + np.exp(-0.5 * s2 * (k + self.lam) ** 2))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class HermiteCoupling(SpatialProfile):
    """phi_n(x) * d/dx phi_m(x) for oscillator eigenfunctions, n even and m odd."""

    n: int = 0
    m: int = 1

    def __post_init__(self):
        if self.n < 0 or self.n % 2 != 0:
            raise ValueError(f"n must be a non-negative even integer, got {self.n}")
        if self.m % 2 != 1 or self.m <= self.n:
            raise ValueError(f"m must be an odd integer greater than n, got m={self.m}, n={self.n}")

    def evaluate(self, x):
        return (np.asarray(oscillator_wavefunction(self.n, x))
                * np.asarray(oscillator_wavefunction_derivative(self.m, x)))

    def support_halfwidth(self, tol):
        # classical turning point of the highest level involved, plus a Gaussian margin
        return math.sqrt(2 * (self.m + 1) + 1) + math.sqrt(2.0 * math.log(1e3 / tol)) + 1.0


@dataclass(frozen=True)
class RindlerDoubleGaussian(SpatialProfile):
    """N * exp(-2 a xi) * exp(-xi^2 / (2 sigma^2)) * 2 cos(lam xi).

    The exp(-2 a xi) factor cancels the conformal factor of the Rindler
    transform, so the window is an a-independent double Gaussian.
    ``norm=None`` selects the unit-peak normalisation.
    """

    sigma: float
    lam: float
    a: float
    norm: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if not self.a > 0:
            raise ValueError("acceleration must be positive")

    @property
    def amplitude(self) -> float:
        return unit_peak_norm(self.sigma) if self.norm is None else self.norm

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return (self.amplitude * np.exp(-2.0 * self.a * x - 0.5 * (x / self.sigma) ** 2)
                * 2.0 * np.cos(self.lam * x))

    def support_halfwidth(self, tol):
        return _gauss_halfwidth(self.sigma, 2 * self.amplitude, tol)

    def window_closed_form(self, omega):
        return DoubleGaussian(self.sigma, self.lam, self.amplitude).window_closed_form(omega)


def evaluate_profile(p: SpatialProfile, x):
    """Pointwise value f(x). PointLike raises DistributionalProfileError."""
    return p(x)


def _as_complex(v):
    v = np.asarray(v)
    return v.astype(complex) if v.ndim else complex(v)


def minkowski_window(p: SpatialProfile, k, tol: float = 1e-10, path: str = "auto"):
    """Fourier window int f(x) e^{ikx} dx.

    ``path`` is ``"auto"`` (closed form where one exists), ``"closed_form"``
    or ``"quadrature"``. Closed forms accept arrays of ``k``.
    """
    if isinstance(p, RindlerDoubleGaussian):
        raise TypeError("RindlerDoubleGaussian is defined for the Rindler transform only")
    if isinstance(p, PointLike):
        return _as_complex(np.ones_like(np.asarray(k, dtype=float)))
    if path in ("auto", "closed_form") and isinstance(p, DoubleGaussian):
        return _as_complex(p.window_closed_form(k))
    if path == "closed_form":
        raise ValueError(f"no closed form for {type(p).__name__}")
    return _vector_quadrature(lambda kk: fourier_window_1d(p, kk, tol), k)


def _vector_quadrature(fn, k):
    k_arr = np.asarray(k, dtype=float)
    if k_arr.ndim == 0:
        return fn(float(k_arr))
    return np.array([fn(float(kk)) for kk in k_arr.ravel()], dtype=complex).reshape(k_arr.shape)


def rindler_window_1p1(p: SpatialProfile, omega, a: float, tol: float = 1e-10, path: str = "auto"):
    """Massless 1+1 Rindler window int d xi e^{2 a xi} f(xi) e^{i omega xi}."""
    if not a > 0:
        raise ValueError("acceleration must be positive")
    if isinstance(p, PointLike):
        return _as_complex(np.ones_like(np.asarray(omega, dtype=float)))
    closed = isinstance(p, RindlerDoubleGaussian) and p.a == a
    if path in ("auto", "closed_form") and closed:
        return _as_complex(p.window_closed_form(omega))
    if path == "closed_form":
        raise ValueError("closed form needs a RindlerDoubleGaussian built for the same acceleration")
    half = p.support_halfwidth(tol)
    if isinstance(p, RindlerDoubleGaussian):
        half += 2.0 * p.a * p.sigma ** 2

    def one(w):
        spec = IntegrandSpec(lambda x: np.exp(2.0 * a * x) * p(x) * np.exp(1j * w * x),
                             "finite", -half, half, oscillation=abs(w))
        res = integrate_adaptive(spec, tol)
        if not res.converged:
            raise QuadratureError(f"Rindler window at omega={w} did not converge", res)
        return res.value
    return _vector_quadrature(one, omega)


def transverse_factor(k_perp, transverse_sigma: Optional[float]) -> float:
    """2-D Fourier factor of a unit-normalised Gaussian transverse profile."""
    kp = np.asarray(k_perp, dtype=float)
    k2 = float(kp @ kp) if kp.ndim else float(kp) ** 2
    if transverse_sigma is None:
        return 1.0
    return math.exp(-0.5 * transverse_sigma ** 2 * k2)


def longitudinal_window_3p1(p: SpatialProfile, omega: float, big_m: float, a: float,
                            tol: float = 1e-10) -> float:
    """int d xi e^{2 a xi} f(xi) K_{i omega/a}(M e^{a xi} / a)."""
    if not big_m > 0:
        raise KernelDegeneracyError("transverse mass M = 0: the Rindler kernel degenerates")
    nu = omega / a
    if isinstance(p, PointLike):
        return bessel_k_imag(nu, big_m / a, tol=min(tol, 1e-12)).value
    half = p.support_halfwidth(tol)
    if isinstance(p, RindlerDoubleGaussian):
        half += 2.0 * p.a * p.sigma ** 2

    def integrand(xi):
        return np.exp(2.0 * a * xi) * p(xi) * bessel_k_imag_array(nu, big_m * np.exp(a * xi) / a)
    spec = IntegrandSpec(integrand, "finite", -half, half, oscillation=nu * a)
    res = integrate_adaptive(spec, tol)
    if not res.converged:
        raise QuadratureError(f"3+1 Rindler window at omega={omega}, M={big_m} did not converge", res)
    return res.value.real


def rindler_window_3p1(p: SpatialProfile, omega: float, k_perp, a: float, m: float = 0.0,
                       tol: float = 1e-10, transverse_sigma: Optional[float] = None) -> complex:
    """Massive 3+1 Rindler window for a separable profile f(xi) g(y, z).

    ``p`` is the longitudinal factor; the transverse factor is a unit-normalised
    Gaussian of width ``transverse_sigma`` (``None`` means point-like).
    """
    if not a > 0:
        raise ValueError("acceleration must be positive")
    if m < 0:
        raise ValueError("mass must be non-negative")
    kp = np.atleast_1d(np.asarray(k_perp, dtype=float))
    big_m = math.sqrt(float(kp @ kp) + m * m)
    return complex(transverse_factor(kp, transverse_sigma)
                   * longitudinal_window_3p1(p, omega, big_m, a, tol))


@dataclass(frozen=True)
class FrequencyWindow:
    """A profile bound to a transform kind, evaluated as ``window(nu)``.

    ``mass`` and ``transverse_sigma`` apply to ``rindler_3p1`` only; there the
    call signature is ``window(omega, k_perp_magnitude)``.
    """

    profile: SpatialProfile
    kind: WindowKind = "minkowski"
    a: Optional[float] = None
    mass: float = 0.0
    transverse_sigma: Optional[float] = None
    tol: float = 1e-10
    path: str = "auto"

    def __post_init__(self):
        if self.kind != "minkowski" and not (self.a and self.a > 0):
            raise ValueError(f"{self.kind} window needs a positive acceleration")
        if self.kind == "minkowski" and isinstance(self.profile, RindlerDoubleGaussian):
            raise TypeError("RindlerDoubleGaussian needs a Rindler window kind")

    @property
    def evaluation_path(self) -> WindowPath:
        p = self.profile
        if self.path == "quadrature":
            return "quadrature"
        if isinstance(p, PointLike):
            return "closed_form"
        if self.kind == "minkowski" and isinstance(p, DoubleGaussian):
            return "closed_form"
        if self.kind == "rindler_1p1" and isinstance(p, RindlerDoubleGaussian) and p.a == self.a:
            return "closed_form"
        return "quadrature"

    def __call__(self, nu, k_perp=0.0):
        if self.kind == "minkowski":
            return minkowski_window(self.profile, nu, self.tol, self.path)
        if self.kind == "rindler_1p1":
            return rindler_window_1p1(self.profile, nu, self.a, self.tol, self.path)
        return rindler_window_3p1(self.profile, nu, [k_perp], self.a, self.mass, self.tol,
                                  self.transverse_sigma)


# fit grid: uniform, 4001 points on [-8, 8]
FIT_GRID = np.linspace(-8.0, 8.0, 4001)


def fit_residual(target, lam, sigma, grid=FIT_GRID):
    """Relative L2 distance between ``target`` and the best rescaled double Gaussian."""
    if sigma <= 0:
        return math.inf
    g = np.exp(-0.5 * (grid / sigma) ** 2) * 2.0 * np.cos(lam * grid)
    gg = g @ g
    if gg == 0:
        return math.inf
    amp = (g @ target) / gg
    return float(np.linalg.norm(target - amp * g) / np.linalg.norm(target))


@dataclass
class HermiteFit:
    lam: float
    sigma: float
    residual: float
    converged: bool = True
    message: str = field(default="", repr=False)

    def __iter__(self):
        return iter((self.lam, self.sigma, self.residual))


def hermite_fit_report(n: int, m: int) -> HermiteFit:
    """Least-squares fit of an amplitude-rescaled double Gaussian to a Hermite coupling.

    A coarse scan over (lam, sigma) seeds a Nelder-Mead polish. On optimiser
    failure the best point found so far is returned with ``converged=False``.
    """
    target = HermiteCoupling(n, m)(FIT_GRID)
    lams = np.arange(0.0, 8.0001, 0.1)
    sigmas = np.arange(0.2, 3.0001, 0.1)
    scan = np.array([[fit_residual(target, lam, s) for s in sigmas] for lam in lams])
    i, j = np.unravel_index(np.argmin(scan), scan.shape)
    start = np.array([lams[i], sigmas[j]])
    opt = minimize(lambda v: fit_residual(target, v[0], v[1]), start, method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
    lam, sigma = float(abs(opt.x[0])), float(opt.x[1])
    res = fit_residual(target, lam, sigma)
    if res > scan[i, j]:
        lam, sigma, res = float(lams[i]), float(sigmas[j]), float(scan[i, j])
    return HermiteFit(lam, sigma, res, bool(opt.success), str(opt.message))
