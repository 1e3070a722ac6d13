"""Compiled vs pure-Python kernel timings.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel under both backends on the same inputs, checks the two
agree, then times one end-to-end workload per backend in a subprocess (the
backend is fixed at import, so ``UDW_PURE_PYTHON=1`` needs a fresh interpreter).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from udwdetect import _pykernels

try:
    from udwdetect import _ckernels
except ImportError:
    _ckernels = None

END_TO_END = (
    "import time, numpy as np\n"
    "from udwdetect.detector import *\n"
    "from udwdetect.profiles import RindlerDoubleGaussian\n"
    "from udwdetect.specfun import bessel_k_imag_array\n"
    "spec = ModelSpec(Massless1p1(), RindlerDoubleGaussian(1, 5, 1.0), UniformlyAccelerated(1.0),\n"
    "                 UnruhParticle(GaussianPacket(5.0, 0.4)), gap=-5.0)\n"
    "t0 = time.perf_counter()\n"
    "for tau in (-4.0, 0.0, 4.0):\n"
    "    particle_rate(spec, tau)\n"
    "bessel_k_imag_array(1.0, np.exp(np.linspace(-10, 3, 20001)))\n"
    "print(time.perf_counter() - t0)\n"
)


def cases():
    rng = np.random.default_rng(1)
    xs = np.exp(rng.uniform(-6, 2.5, 2000))
    freqs = rng.uniform(0, 12, 4096)
    amps = rng.normal(size=4096) + 1j * rng.normal(size=4096)
    times = np.linspace(-40, 40, 257)
    return [
        ("k_imag_trapz (200 scalar calls)",
         lambda m: [m.k_imag_trapz(1.5, float(x), 1e-14) for x in xs[:200]],
         lambda r: np.array([v[0] for v in r])),
        ("k_imag_trapz_array (2000 args)",
         lambda m: m.k_imag_trapz_array(1.5, xs, 1e-14),
         lambda r: r[0]),
        ("fourier_sum (4096 freqs x 257 times)",
         lambda m: m.fourier_sum(freqs, amps, times, -1),
         lambda r: r),
    ]


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def end_to_end(pure):
    env = dict(os.environ)
    env.pop("UDW_PURE_PYTHON", None)
    if pure:
        env["UDW_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True,
                         check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace` first")
        return 1
    print(f"{'kernel':40s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s} {'max diff':>9s}")
    for name, run, pick in cases():
        tp = best_of(lambda: run(_pykernels), args.repeat)
        tc = best_of(lambda: run(_ckernels), args.repeat)
        diff = float(np.max(np.abs(np.asarray(pick(run(_pykernels))) - np.asarray(pick(run(_ckernels))))))
        print(f"{name:40s} {tp:11.4f} {tc:13.4f} {tp / tc:8.1f} {diff:9.1e}")
    tp, tc = end_to_end(True), end_to_end(False)
    print(f"{'end to end (3 particle rates + Bessel grid)':40s} {tp:11.4f} {tc:13.4f} {tp / tc:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
