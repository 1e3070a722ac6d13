"""Special functions: Hermite polynomials, oscillator eigenfunctions, the
Heaviside gate, the Planck occupation factor and modified Bessel functions
of the second kind with purely imaginary order, K_{i nu}(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import rgamma

from . import kernels
from .errors import InfraredDivergenceError, QuadratureError, UnsupportedOrderError

HERMITE_MAX_ORDER = 64
# |gap| below this (in units of the relevant energy scale) is treated as divergent
EPS_IR = 1e-8
EULER_GAMMA = 0.5772156649015329

BesselMethod = Literal["integral_representation", "series_smallx", "asymptotic_largex"]


def heaviside(x):
    """Step function with the convention Theta(0) = 1."""
    return np.where(np.asarray(x) >= 0, 1.0, 0.0) if np.ndim(x) else (1.0 if x >= 0 else 0.0)


def _check_order(n):
    if int(n) != n or n < 0 or n > HERMITE_MAX_ORDER:
        raise UnsupportedOrderError(
            f"Hermite order must be an integer in [0, {HERMITE_MAX_ORDER}], got {n!r}")
    return int(n)


def hermite(n, x):
    """Physicists' Hermite polynomial H_n(x) by upward recurrence."""
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def oscillator_wavefunction(n, x):
    r"""L2-normalised harmonic-oscillator eigenfunction.

    .. math:: \varphi_n(x) = (2^n n! \sqrt{\pi})^{-1/2} e^{-x^2/2} H_n(x)

    Evaluated with the normalised three-term recurrence, which avoids the
    overflow of ``2^n n!`` and the growth of ``H_n`` at large order.
    """
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    psi_prev = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n == 0:
        return psi_prev if psi_prev.ndim else float(psi_prev)
    psi = math.sqrt(2.0) * x * psi_prev
    for k in range(1, n):
        psi_prev, psi = psi, (math.sqrt(2.0 / (k + 1)) * x * psi
                              - math.sqrt(k / (k + 1)) * psi_prev)
    return psi if psi.ndim else float(psi)


def oscillator_wavefunction_derivative(n, x):
    """d/dx phi_n = sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}."""
    n = _check_order(n)
    out = -math.sqrt((n + 1) / 2.0) * np.asarray(oscillator_wavefunction(n + 1, x))
    if n > 0:
        out = out + math.sqrt(n / 2.0) * np.asarray(oscillator_wavefunction(n - 1, x))
    return out if np.ndim(out) else float(out)


def planck_factor(delta, a):
    """Thermal occupation 1 / (exp(2 pi delta / a) - 1).

    Raises
    ------
    InfraredDivergenceError
        If ``|delta| < EPS_IR``.
    """
    if a <= 0:
        raise ValueError("acceleration must be positive")
    if abs(delta) < EPS_IR:
        raise InfraredDivergenceError(f"gap {delta!r} inside the infrared band |delta| < {EPS_IR}")
    x = 2.0 * math.pi * delta / a
    if x > 0:
        # written in exp(-x) so large gaps underflow to 0 instead of overflowing
        e = math.exp(-x)
        return e / -math.expm1(-x)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class BesselEvalReport:
    value: float
    est_error: float
    method: BesselMethod


def _k_integral(nu, x, tol):
    value, err, ok, _ = kernels.k_imag_trapz(nu, x, tol)
    # an exact-looking halving difference still carries rounding error
    err = max(err, 4.0 * np.finfo(float).eps * max(abs(value), math.exp(-x)))
    report = BesselEvalReport(float(value), float(err), "integral_representation")
    if not ok:
        raise QuadratureError(
            f"K_i{nu}({x}) did not reach tol={tol} (estimate {value}, error {err})", report)
    return report


def _k_series(nu, x):
    """Small-argument power series.

    nu > 0: K_{i nu}(x) = -pi Im I_{i nu}(x) / sinh(pi nu).
    nu = 0: the logarithmic series for K_0.
    """
    q = 0.25 * x * x
    if nu == 0.0:
        term = 1.0
        i0 = 1.0
        tail = 0.0
        harmonic = 0.0
        scale = 1.0
        for k in range(1, 400):
            term *= q / (k * k)
            harmonic += 1.0 / k
            i0 += term
            tail += term * harmonic
            scale += abs(term) * (1.0 + harmonic)
            if term < 1e-18 * i0:
                break
        log_part = -(math.log(0.5 * x) + EULER_GAMMA)
        value = log_part * i0 + tail
        err = 8.0 * np.finfo(float).eps * (abs(log_part) * i0 + scale)
        return value, err
    term = complex(rgamma(1.0 + 1j * nu))
    total = term
    abs_total = abs(term)
    for k in range(1, 400):
        term *= q / (k * (k + 1j * nu))
        total += term
        abs_total += abs(term)
        if abs(term) < 1e-18 * abs_total:
            break
    total *= np.exp(1j * nu * math.log(0.5 * x))
    scale = math.pi / math.sinh(math.pi * nu)
    value = -scale * total.imag
    err = 8.0 * np.finfo(float).eps * scale * abs_total
    return value, err


def _k_asymptotic(nu, x):
    """Hankel expansion sqrt(pi/2x) e^{-x} sum_k a_k(i nu) / x^k, cut at its smallest term."""
    four_mu2 = -4.0 * nu * nu
    term = 1.0
    total = 1.0
    smallest = 1.0
    for k in range(1, 200):
        nxt = term * (four_mu2 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= smallest:
            break
        term = nxt
        total += term
        smallest = abs(term)
    pref = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
    return pref * total, pref * (smallest + 4.0 * np.finfo(float).eps * abs(total))


def bessel_k_imag(nu, x, tol=1e-10, method="auto"):
    r"""Modified Bessel function of the second kind with imaginary order.

    .. math:: K_{i\nu}(x) = \int_0^\infty e^{-x\cosh t}\cos(\nu t)\,dt

    Parameters
    ----------
    nu : float
        Real order parameter; the result is even in ``nu``.
    x : float
        Positive argument.
    tol : float
        Absolute error target.
    method : {"auto", "integral_representation", "series_smallx", "asymptotic_largex"}
        ``auto`` uses the large-argument expansion when it already meets
        ``tol`` and the integral representation otherwise. The series is
        offered for cross-checks at small ``x``.

    Returns
    -------
    BesselEvalReport
    """
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"argument must be positive and finite, got {x!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    nu = abs(float(nu))
    x = float(x)
    if method == "auto":
        if x >= 30.0 + nu * nu:
            value, err = _k_asymptotic(nu, x)
            if err <= tol:
                return BesselEvalReport(value, err, "asymptotic_largex")
        return _k_integral(nu, x, tol)
    if method == "integral_representation":
        return _k_integral(nu, x, tol)
    if method == "series_smallx":
        value, err = _k_series(nu, x)
        method_name = "series_smallx"
    elif method == "asymptotic_largex":
        value, err = _k_asymptotic(nu, x)
        method_name = "asymptotic_largex"
    else:
        raise ValueError(f"unknown method {method!r}")
    report = BesselEvalReport(float(value), float(err), method_name)
    if err > tol:
        raise QuadratureError(
            f"{method_name} cannot reach tol={tol} at nu={nu}, x={x} (error {err:.3g})", report)
    return report


def bessel_k_imag_array(nu, xs, rtol=1e-12, atol=0.0):
    """Vectorised K_{i nu} over an array of arguments via the integral representation.

    Uses a relative criterion by default; callers multiply these values by
    normalisations that can be exponentially large in ``nu``.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("arguments must be positive")
    vals, errs, ok = kernels.k_imag_trapz_array(abs(float(nu)), xs, atol, rtol)
    if not ok:
        bad = np.argmax(errs)
        raise QuadratureError(
            f"K_i{nu} failed to converge at x={xs.flat[bad]}",
            BesselEvalReport(float(vals.flat[bad]), float(errs.flat[bad]), "integral_representation"))
    return vals
