"""Adaptive and oscillatory quadrature.

Integrands are vectorised: they receive a 1-D float array of nodes and
return an array (real or complex) of the same length.

Two rules share one global-adaptive driver:

* 21-point Gauss-Kronrod panels, with rational maps for half-line and
  full-line domains.
* Filon-Legendre panels for integrands carrying a known phase
  ``exp(-1j*delta*s)``: the slowly varying factor is projected onto Legendre
  polynomials on Gauss nodes and the phase is integrated exactly using
  int_{-1}^{1} P_n(x) e^{-i w x} dx = 2 (-i)^n j_n(w).

The refinement sequence does not depend on the tolerance (every panel whose
error is within a fixed factor of the worst one is bisected), so a tighter
tolerance only ever continues the same sequence further.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Optional

import numpy as np
from scipy.special import eval_legendre, roots_legendre, spherical_jn

from .errors import QuadratureError

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21)
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # ascending, 21 nodes
_W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W_G = np.zeros(21)
_W_G[np.searchsorted(_NODES, -_XGK[1:10:2])] = _WG
_W_G[np.searchsorted(_NODES, _XGK[1:10:2])] = _WG

_SPLIT_FRACTION = 0.25
_FILON_ORDER = 20


@dataclass
class QuadratureResult:
    value: complex
    est_error: float
    evaluations: int
    converged: bool

    @property
    def real(self):
        return self.value.real


@dataclass(frozen=True)
class IntegrandSpec:
    """An integrand together with its domain.

    ``domain`` is ``"finite"`` ([lower, upper]), ``"halfline"`` ([lower, inf))
    or ``"full"`` (the real line). ``oscillation`` is an optional angular
    frequency used to pre-partition the domain so no initial panel spans more
    than about half a period.
    """

    func: Callable[[np.ndarray], np.ndarray]
    domain: Literal["finite", "halfline", "full"] = "finite"
    lower: float = 0.0
    upper: float = 1.0
    oscillation: Optional[float] = None

    def __post_init__(self):
        if self.domain not in ("finite", "halfline", "full"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "finite" and not self.upper > self.lower:
            raise ValueError("finite domain needs upper > lower")


def _gk21_panels(func, a, b):
    """Kronrod value and QUADPACK-style error estimate on each [a_i, b_i]."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    with np.errstate(over="ignore"):
        fx = np.asarray(func(x.ravel())).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand returned non-finite values")
    res_k = h * (fx @ _W_K)
    res_g = h * (fx @ _W_G)
    abs_h = np.abs(h)
    resabs = abs_h * (np.abs(fx) @ _W_K)
    mean = res_k / np.where(h == 0, 1.0, 2.0 * h)
    resasc = abs_h * (np.abs(fx - mean[:, None]) @ _W_K)
    err = np.abs(res_k - res_g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(resasc > 0, np.minimum(1.0, (200.0 * err / resasc) ** 1.5), 1.0)
    err = np.where(resasc > 0, resasc * scale, err)
    err = np.where(resabs > _TINY / (50 * _EPS), np.maximum(50 * _EPS * resabs, err), err)
    return res_k, err, fx.size


def _adaptive(rule, a, b, tol, rtol, budget):
    """Global adaptive bisection driven by ``rule(a, b) -> (values, errors, nevals)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    vals, errs, nev = rule(a, b)
    vals = np.asarray(vals, dtype=complex)
    evals = nev
    per_panel = nev / max(1, a.size)
    while True:
        total = vals.sum()
        total_err = float(errs.sum())
        target = max(tol, rtol * abs(total))
        if total_err <= target:
            return QuadratureResult(complex(total), total_err, evals, True)
        split = errs >= _SPLIT_FRACTION * errs.max()
        n_split = int(split.sum())
        # each split panel costs two new rule applications
        cost = 2 * n_split * per_panel
        if evals + cost > budget:
            return QuadratureResult(complex(total), total_err, evals, False)
        mid = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], mid])
        nb = np.concatenate([mid, b[split]])
        if np.any(nb - na <= 4 * _EPS * np.maximum(np.abs(na), np.abs(nb))):
            return QuadratureResult(complex(total), total_err, evals, False)
        nv, ne, nev = rule(na, nb)
        evals += nev
        per_panel = max(per_panel, nev / na.size)
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[keep], np.asarray(nv, dtype=complex)])
        errs = np.concatenate([errs[keep], ne])


def _mapped(spec: IntegrandSpec):
    """Return (integrand on t, t_lower, t_upper) for the spec's domain."""
    f = spec.func
    if spec.domain == "finite":
        return f, spec.lower, spec.upper
    if spec.domain == "halfline":
        lo = spec.lower

        def g(t):
            one_m = 1.0 - t
            return f(lo + t / one_m) / (one_m * one_m)
        return g, 0.0, 1.0

    def g(t):
        d = 1.0 - t * t
        return f(t / d) * (1.0 + t * t) / (d * d)
    return g, -1.0, 1.0


def integrate_adaptive(spec: IntegrandSpec, tol: float = 1e-10, rtol: float = 0.0,
                       budget: int = 400_000) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integration.

    ``est_error`` is an absolute error estimate. When the evaluation budget is
    exhausted the best estimate is returned with ``converged=False``.
    """
    if not tol > 0 and not rtol > 0:
        raise ValueError("need a positive tol or rtol")
    g, lo, hi = _mapped(spec)
    n0 = 8
    if spec.oscillation and spec.domain == "finite":
        n0 = max(n0, int(math.ceil(abs(spec.oscillation) * (hi - lo) / math.pi)))
    edges = np.linspace(lo, hi, n0 + 1)
    return _adaptive(lambda a, b: _gk21_panels(g, a, b), edges[:-1], edges[1:],
                     tol, rtol, budget)


def _support_halfwidth(profile, tol):
    hint = getattr(profile, "support_halfwidth", None)
    if callable(hint):
        return float(hint(tol))
    probe = np.linspace(-1.0, 1.0, 257)
    peak = float(np.max(np.abs(profile(0.25 * probe))))
    half = 1.0
    for _ in range(40):
        outer = np.concatenate([np.linspace(half, 2 * half, 64), -np.linspace(half, 2 * half, 64)])
        if float(np.max(np.abs(profile(outer)))) * 2 * half <= 1e-3 * tol * max(peak, 1.0):
            return half
        half *= 2.0
    raise QuadratureError("profile does not decay; cannot bound its support")


def fourier_window_1d(profile, k: float, tol: float = 1e-10) -> complex:
    r"""Fourier transform :math:`\int f(x) e^{+ikx} dx` of a decaying 1-D profile.

    Raises
    ------
    QuadratureError
        If the adaptive rule does not reach ``tol``.
    """
    half = _support_halfwidth(profile, tol)
    spec = IntegrandSpec(lambda x: profile(x) * np.exp(1j * k * x), "finite", -half, half,
                         oscillation=abs(k))
    res = integrate_adaptive(spec, tol)
    if not res.converged:
        raise QuadratureError(f"window at k={k} did not converge", res)
    return res.value


@lru_cache(maxsize=None)
def _legendre_rule(order):
    x, w = roots_legendre(order)
    n = np.arange(order)
    p = eval_legendre(n[:, None], x[None, :])               # (order, order)
    return x, w, p


def _filon_panels(func, delta, a, b, order):
    """Filon-Legendre integral of func(s) * exp(-1j*delta*s) on each panel."""
    x, w, p = _legendre_rule(order)
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    s = c[:, None] + h[:, None] * x[None, :]
    gx = np.asarray(func(s.ravel()), dtype=complex).reshape(s.shape)
    n = np.arange(order)
    omega = delta * h
    moments = (2 * n + 1)[:, None] * ((-1j) ** n)[:, None] * spherical_jn(n[:, None], np.abs(omega)[None, :])
    # j_n(-w) = (-1)^n j_n(w)
    moments = np.where((n[:, None] % 2 == 1) & (omega[None, :] < 0), -moments, moments)
    weights = w[None, :] * (moments.T @ p)                   # (panels, order)
    return h * np.exp(-1j * delta * c) * np.einsum("ij,ij->i", weights, gx), gx.size


def _halfline_rule(func, delta, order=_FILON_ORDER):
    def plain(s):
        return np.asarray(func(s), dtype=complex) * np.exp(-1j * delta * s)

    def rule(a, b):
        vals = np.empty(a.size, dtype=complex)
        errs = np.empty(a.size)
        nev = 0
        osc = np.abs(delta) * (b - a) > 1.0
        if np.any(~osc):
            v, e, n = _gk21_panels(plain, a[~osc], b[~osc])
            vals[~osc], errs[~osc] = v, e
            nev += n
        if np.any(osc):
            hi, n1 = _filon_panels(func, delta, a[osc], b[osc], order)
            lo, n2 = _filon_panels(func, delta, a[osc], b[osc], order // 2)
            vals[osc] = hi
            errs[osc] = np.abs(hi - lo)
            nev += n1 + n2
        return vals, errs, nev
    return rule


def oscillatory_halfline(g, delta: float, tol: float = 1e-10, horizon: float = 50.0,
                         tail_tol: float = 1e-10, budget: int = 400_000) -> QuadratureResult:
    r"""Truncated oscillatory integral :math:`\int_0^{H} e^{-i s\Delta} g(s)\,ds`.

    Panels where ``|delta| * width > 1`` use the Filon-Legendre rule; the
    rest use Gauss-Kronrod on the full product. The truncation error beyond
    ``horizon`` is estimated from the decay of ``|g|`` over the last stretch
    and added to ``est_error``. If ``|g|`` near the horizon exceeds
    ``tail_tol`` the result is flagged ``converged=False``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    edges = np.linspace(0.0, horizon, 17)
    n_probe = 33
    # the envelope probe is charged to the same budget
    res = _adaptive(_halfline_rule(g, float(delta)), edges[:-1], edges[1:], tol, 0.0, budget - n_probe)

    stretch = min(0.05 * horizon, 1.0)
    probe = np.linspace(horizon - 2 * stretch, horizon, n_probe)
    env = np.abs(np.asarray(g(probe)))
    res.evaluations += probe.size
    inner, outer = env[:17].max(), env[16:].max()
    if outer == 0.0:
        tail = 0.0
    elif inner > outer:
        rate = math.log(inner / outer) / stretch
        tail = outer / rate
    else:
        tail = outer * horizon
    res.est_error += tail
    if outer > tail_tol:
        res.converged = False
    return res
