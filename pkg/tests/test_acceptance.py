"""Acceptance criteria 1-11, one test each.

Every test records a PASS/FAIL verdict with its measured numbers and runtime;
the conftest terminal-summary hook prints one line per criterion. Running
this file directly (``python tests/test_acceptance.py``) prints the same
lines without pytest.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from udwdetect.cli import main
from udwdetect.detector import (GaussianPacket, Massless1p1, ModelSpec, UniformlyAccelerated, UnruhParticle,
                                packet_overlap_I, particle_rate, particle_terms, vacuum_rate,
                                vacuum_rate_numeric)
from udwdetect.profiles import DoubleGaussian, PointLike, RindlerDoubleGaussian, hermite_fit_report, \
    minkowski_window, rindler_window_1p1
from udwdetect.specfun import bessel_k_imag
from udwdetect.sweep import figure_preset, format_rows, read_rows, run_sweep

ORACLES = json.loads(Path(__file__).with_name("oracles.json").read_text())
RESULTS = {}


def record(n, ok, detail, seconds):
    RESULTS[n] = (bool(ok), detail, seconds)
    return ok


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def unruh_model(a):
    return ModelSpec(Massless1p1(), RindlerDoubleGaussian(1.0, 5.0, a), UniformlyAccelerated(a),
                     UnruhParticle(GaussianPacket(5.0, 0.4)), gap=-5.0)


def test_criterion_01_window():
    with Timer() as t:
        rows = run_sweep(figure_preset("fig1"))[0].rows
    k = np.array([r.axis for r in rows])
    w = np.array([r.rate for r in rows])
    closed = np.exp(-0.5 * (k - 5) ** 2) + np.exp(-0.5 * (k + 5) ** 2)
    err = float(np.max(np.abs(w - closed)))
    interior = (w[1:-1] > w[:-2]) & (w[1:-1] > w[2:])
    peaks = np.sort(k[1:-1][interior])
    step = k[1] - k[0]
    ok = (len(rows) == 2001 and err <= 1e-12 and len(peaks) == 2
          and np.all(np.abs(peaks - [-5, 5]) <= step) and t.seconds < 1.0)
    assert record(1, ok, f"max |window - closed form| = {err:.1e}, peaks {peaks.tolist()}", t.seconds)


def test_criterion_02_hermite_fits():
    targets = {(0, 1): ((1.66, 1 / math.sqrt(0.89)), "fit_01"), (0, 3): ((2.5, 1.0), "fit_03")}
    parts, ok = [], True
    with Timer() as t:
        for nm, ((lam, sig), key) in targets.items():
            fit = hermite_fit_report(*nm)
            good = (abs(fit.lam - lam) <= 0.05 and abs(fit.sigma - sig) <= 0.05
                    and fit.residual <= ORACLES[key]["residual"])
            ok &= good
            parts.append(f"{nm}: lambda {fit.lam:.3f} (want {lam:.3f}), sigma {fit.sigma:.3f} "
                         f"(want {sig:.3f}), residual {fit.residual:.4g} <= {ORACLES[key]['residual']:.4g}")
    ok &= t.seconds < 30
    assert record(2, ok, "; ".join(parts), t.seconds)


def test_criterion_03_pointlike_inertial():
    with Timer() as t:
        cfg = figure_preset("fig4")
        series = run_sweep(cfg)
    ok = True
    for (_, ov), s in zip(cfg.series(), series):
        m = ov["mass"]
        for r in s.rows:
            d = r.axis
            expected = math.sqrt(d * d - m * m) if -d >= m else 0.0
            ok &= r.rate == expected and r.path == "closed_form"
            if m == 0.0:
                ok &= r.rate == (abs(d) if d < 0 else 0.0)
    assert record(3, ok, "exact equality on 801 gaps x 3 masses", t.seconds)


def test_criterion_04_double_gaussian_shape():
    with Timer() as t:
        cfg = figure_preset("fig5")
        series = run_sweep(cfg)
    lam, sigma = 5.0, 1.0
    edge = lam + 6 / sigma * sigma ** 2
    ok, parts = True, []
    for (label, _), s in zip(cfg.series(), series):
        d = np.array([r.axis for r in s.rows])
        rate = np.array([r.rate for r in s.rows])
        peak = rate.max()
        outside = float(rate[-d > edge].max() / peak)
        near = float(rate[np.argmin(np.abs(d + lam))])
        ok &= outside <= 1e-6 and near > 0
        parts.append(f"{label}: tail/max {outside:.1e}, rate(-lambda) {near:.3g}")
    assert record(4, ok, "; ".join(parts), t.seconds)


def test_criterion_05_kms():
    worst = 0.0
    with Timer() as t:
        for a in (0.1, 1.0, 1.5):
            for prof in (PointLike(), RindlerDoubleGaussian(1.0, 5.0, a)):
                spec = ModelSpec(Massless1p1(), prof, UniformlyAccelerated(a))
                for d in (0.25, 0.5, 1.0, 2.0, 4.0):
                    up = vacuum_rate(spec.with_gap(d)).rate
                    down = vacuum_rate(spec.with_gap(-d)).rate
                    expected = math.exp(-2 * math.pi * d / a) * down
                    worst = max(worst, abs(up - expected) / expected)
    ok = worst <= 1e-9 and t.seconds < 5
    assert record(5, ok, f"max relative KMS residual {worst:.1e}", t.seconds)


def test_criterion_06_numeric_oracle():
    spec = ModelSpec(Massless1p1(), DoubleGaussian(1.0, 5.0))
    worst, conv = 0.0, True
    with Timer() as t:
        for d in (-6.0, -5.0, -4.0):
            closed = vacuum_rate(spec.with_gap(d)).rate
            num = vacuum_rate_numeric(spec.with_gap(d))
            conv &= num.converged
            worst = max(worst, abs(num.rate - closed) / closed)
    ok = conv and worst <= 1e-4 and t.seconds < 60
    assert record(6, ok, f"max relative difference {worst:.1e}", t.seconds)


def test_criterion_07_bessel():
    with Timer() as t:
        worst = max(abs(bessel_k_imag(nu, x).value - v) for nu, x, v in ORACLES["bessel_grid"])
        k0 = bessel_k_imag(0.0, 1.0, tol=1e-10).value
    ok = worst <= 1e-10 and abs(k0 - 0.4210244382) <= 1e-9
    assert record(7, ok, f"grid max error {worst:.1e}, K_i0(1) = {k0:.12f}", t.seconds)


def test_criterion_08_metric_cancellation():
    om = np.linspace(0.25, 10, 40)
    worst = 0.0
    with Timer() as t:
        for a in (0.1, 1.0, 1.5):
            p = RindlerDoubleGaussian(1.0, 5.0, a)
            q = rindler_window_1p1(p, om, a, 1e-12, path="quadrature")
            worst = max(worst, float(np.max(np.abs(q - p.window_closed_form(om)))))
        a = 1e-4
        q = rindler_window_1p1(RindlerDoubleGaussian(1.0, 5.0, a), om, a, 1e-12, path="quadrature")
        limit = float(np.max(np.abs(q - minkowski_window(DoubleGaussian(1.0, 5.0), om))))
    ok = worst <= 1e-8 and limit < 1e-6
    assert record(8, ok, f"quadrature vs closed form {worst:.1e}, a=1e-4 vs Minkowski {limit:.1e}", t.seconds)


def test_criterion_09_decay():
    spec = unruh_model(1.0)
    with Timer() as t:
        ts = np.linspace(-50, 50, 2001)
        mags = np.abs(packet_overlap_I(spec, ts))
        edge_ratio = float(max(mags[0], mags[-1]) / mags.max())
        vac = vacuum_rate(spec).rate
        edges = [particle_rate(spec, tau) for tau in (-50.0, 50.0)]
        rel = max(abs(r.rate - vac) / vac for r in edges)
    ok = edge_ratio < 1e-3 and rel <= 1e-3 and all(r.converged for r in edges)
    assert record(9, ok, f"|I(+-50)|/max|I| = {edge_ratio:.1e}, edge rate vs vacuum {rel:.1e}", t.seconds)


def test_criterion_10_high_acceleration():
    taus = np.arange(-10.0, 10.1, 1.0)
    with Timer() as t:
        peak = {a: max(abs(particle_terms(unruh_model(a), tau).correction) for tau in taus) for a in (1.0, 20.0)}
    ratio = peak[20.0] / peak[1.0]
    ok = ratio < 0.05
    assert record(10, ok, f"max|correction| a=20: {peak[20.0]:.4g}, a=1: {peak[1.0]:.4g}, ratio {ratio:.3f} "
                          f"(need < 0.05)", t.seconds)


def test_criterion_11_cli(tmp_path, capsys):
    runs = [["window"], ["rate"], ["particle-rate"], ["kms-check"], ["fit-hermite"], ["figure", "fig1"]]
    codes = {}
    with Timer() as t:
        for args in runs:
            out = tmp_path / f"{args[-1]}.csv"
            codes[" ".join(args)] = main([*args, "--out", str(out)])
        capsys.readouterr()
        files = sorted(p for p in tmp_path.iterdir() if p.suffix == ".csv" and not p.name.startswith("fit"))
        round_trip = all(format_rows(read_rows(p.read_text()), "csv") == p.read_text() for p in files)
        again = tmp_path / "again"
        again.mkdir()
        main(["rate", "--out", str(again / "rate.csv")])
        capsys.readouterr()
        same = all((again / p.name).read_bytes() == (tmp_path / p.name).read_bytes()
                   for p in again.iterdir())
    ok = all(c == 0 for c in codes.values()) and round_trip and same
    assert record(11, ok, f"exit codes {codes}, round trip {round_trip}, byte-identical {same}", t.seconds)


def summary_lines():
    lines = []
    for n in range(1, 12):
        if n not in RESULTS:
            lines.append(f"criterion {n:2d}: NOT RUN")
            continue
        ok, detail, seconds = RESULTS[n]
        lines.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s) {detail}")
    return lines


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
