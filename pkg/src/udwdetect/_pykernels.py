"""Pure-Python (numpy) implementations of the hot numerical kernels.

These mirror ``_ckernels.pyx`` one for one and are used whenever the compiled
extension is unavailable or ``UDW_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

_EPS = np.finfo(float).eps
# exp(-46) ~ 1e-20: the truncated tail of e^{-x cosh t} is below this fraction of e^{-x}
_TAIL_LOG = 46.0


def _k_imag_start(nu, x):
    big_t = math.acosh(1.0 + _TAIL_LOG / x)
    h = min(0.5, 1.0 / math.sqrt(x))
    if nu > 0:
        h = min(h, 1.0 / nu)
    return big_t, h


def k_imag_trapz(nu, x, tol, rtol=0.0, max_level=16):
    """Trapezoid rule for the even integrand e^{-x cosh t} cos(nu t) on [0, inf).

    Returns ``(value, est_error, converged, evaluations)``.
    """
    big_t, h = _k_imag_start(nu, x)
    n = int(math.ceil(big_t / h))
    t = h * np.arange(1, n + 1)
    f = np.exp(-x * np.cosh(t)) * np.cos(nu * t)
    f0 = math.exp(-x)
    prev = h * (0.5 * f0 + f.sum())
    abs_sum = h * (0.5 * f0 + np.abs(f).sum())
    evals = n + 1
    diff = math.inf
    for level in range(1, max_level + 1):
        h *= 0.5
        n = int(math.ceil(big_t / h))
        t = h * np.arange(1, n + 1, 2)
        f = np.exp(-x * np.cosh(t)) * np.cos(nu * t)
        evals += t.size
        cur = 0.5 * prev + h * f.sum()
        abs_sum = 0.5 * abs_sum + h * np.abs(f).sum()
        diff = abs(cur - prev)
        floor = max(tol, rtol * abs(cur), 64.0 * _EPS * abs_sum)
        if level >= 2 and diff <= floor:
            return cur, diff, True, evals
        prev = cur
    return prev, diff, False, evals


def k_imag_trapz_array(nu, xs, tol, rtol=0.0, max_level=16):
    """Vectorised ``k_imag_trapz`` over an array of arguments.

    Returns ``(values, errors, all_converged)``.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    vals = np.empty_like(xs)
    errs = np.empty_like(xs)
    ok = True
    for i, x in enumerate(xs.flat):
        v, e, c, _ = k_imag_trapz(nu, x, tol, rtol, max_level)
        vals.flat[i] = v
        errs.flat[i] = e
        ok = ok and c
    return vals, errs, ok


def fourier_sum(freqs, amps, times, sign=-1):
    """out[t] = sum_j amps[j] * exp(sign * 1j * freqs[j] * times[t])."""
    freqs = np.asarray(freqs, dtype=float)
    amps = np.asarray(amps, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(times.shape, dtype=complex)
    flat_t = times.ravel()
    flat_out = out.ravel()
    # chunk over times to bound the (n_t, n_freq) phase matrix at ~4M entries
    chunk = max(1, 4_000_000 // max(1, freqs.size))
    for start in range(0, flat_t.size, chunk):
        tt = flat_t[start:start + chunk]
        phase = np.exp((sign * 1j) * np.outer(tt, freqs))
        flat_out[start:start + chunk] = phase @ amps
    return out
