import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from udwdetect.cli import kms_series, main
from udwdetect.config import parse_config
from udwdetect.errors import ConfigError
from udwdetect.sweep import FIGURE_IDS, Row, figure_preset, format_rows, preset_text, read_rows, run_sweep

MINIMAL = """
[profile]
kind = pointlike
[sweep]
axis = delta
start = -3
stop = 3
points = 7
"""

PARTICLE_SHORT = """
[model]
gap = -3
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
[sweep]
axis = tau
start = -2
stop = 2
points = 5
"""


def run_cli(args, tmp_path, env=None):
    """Run ``udw`` in a subprocess; returns (exit code, stdout, stderr)."""
    e = dict(os.environ)
    e.update(env or {})
    p = subprocess.run([sys.executable, "-m", "udwdetect", *args], cwd=tmp_path, env=e,
                       capture_output=True, text=True, timeout=600)
    return p.returncode, p.stdout, p.stderr


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.axis == "delta" and cfg.points == 7
        assert cfg.quad_tol == 1e-8 and cfg.tail_tol == 1e-10
        assert cfg.format == "csv" and cfg.workers == 1
        spec = cfg.model()
        assert spec.gap == 0.0 and not spec.accelerated

    def test_comments(self):
        cfg = parse_config("# header\n[sweep]\npoints = 5   # five\n\n[profile]\nkind = pointlike\n")
        assert cfg.points == 5

    def test_accelerated_minkowski_profile_rejected(self):
        text = "[trajectory]\nkind = accelerated\n[profile]\nkind = double_gaussian\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert any("accelerated trajectory" in m for m in info.value.errors)

    def test_mass_in_1p1_rejected(self):
        with pytest.raises(ConfigError) as info:
            parse_config("[model]\nspacetime = 1p1\nmass = 1\n")
        assert any("massless" in m for m in info.value.errors)

    def test_all_errors_reported(self):
        text = "[model]\nmass = 1\ncolour = red\n[sweep]\npoints = 1\nstart = 2\nstop = 1\n[bogus]\nx = 1\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        errs = info.value.errors
        assert len(errs) >= 5
        assert any("line 3" in m and "colour" in m for m in errs)

    def test_syntax_error_line_number(self):
        with pytest.raises(ConfigError) as info:
            parse_config("[sweep]\npoints = 3\nthis line has no equals sign\n")
        assert "line 3" in info.value.errors[0]

    def test_key_outside_section(self):
        with pytest.raises(ConfigError) as info:
            parse_config("points = 3\n")
        assert "line 1" in info.value.errors[0]

    def test_bad_numbers(self):
        with pytest.raises(ConfigError) as info:
            parse_config("[sweep]\nstart = abc\npoints = 2.5\n")
        assert len(info.value.errors) == 2

    def test_series_members_validated(self):
        text = "[model]\nspacetime = 3p1\n[sweep]\nseries = mass\nvalues = 0, -1\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert any("mass=-1.0" in m for m in info.value.errors)

    def test_window_axis_needs_vacuum(self):
        text = "[state]\nkind = minkowski\n[sweep]\naxis = k\n"
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_ir_band_excluded(self):
        cfg = figure_preset("fig6")
        rows = run_sweep(cfg)[0].rows
        assert all(abs(r.axis) >= 1e-3 for r in rows)
        assert len(rows) == 600

    @pytest.mark.parametrize("name", FIGURE_IDS + ("particle-minkowski", "particle-unruh"))
    def test_presets_parse(self, name):
        assert parse_config(preset_text(name)).points >= 2


class TestOutput:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False),
                              st.floats(allow_nan=False), st.floats(0, 1e300),
                              st.sampled_from(["closed_form", "numeric", "quadrature"]), st.booleans()),
                    max_size=20),
           st.sampled_from(["csv", "json"]))
    def test_round_trip(self, raw, fmt):
        rows = [Row(*r) for r in raw]
        back = read_rows(format_rows(rows, fmt), fmt)
        assert back == rows

    def test_nan_row(self):
        rows = [Row(1.0, math.nan, math.inf, "numeric", False)]
        back = read_rows(format_rows(rows, "csv"))
        assert math.isnan(back[0].rate) and back[0].est_error == math.inf and not back[0].converged

    def test_sweep_deterministic(self):
        cfg = figure_preset("fig4")
        a = [format_rows(s.rows, "csv") for s in run_sweep(cfg)]
        b = [format_rows(s.rows, "csv") for s in run_sweep(cfg)]
        assert a == b

    def test_rows_ascending(self):
        for s in run_sweep(figure_preset("fig7")):
            axis = [r.axis for r in s.rows]
            assert axis == sorted(axis)

    def test_fig4_zero_below_mass(self):
        cfg = figure_preset("fig4")
        for (label, ov), s in zip(cfg.series(), run_sweep(cfg)):
            m = ov["mass"]
            for r in s.rows:
                if -r.axis < m:
                    assert r.rate == 0.0
                else:
                    assert r.rate == pytest.approx(math.sqrt(r.axis ** 2 - m * m), rel=1e-14, abs=1e-300)

    def test_fig1_even(self):
        rows = run_sweep(figure_preset("fig1"))[0].rows
        by = {round(r.axis, 9): r.rate for r in rows}
        assert by[-5.0] == by[5.0]

    def test_fig5_resonance_band(self):
        cfg = figure_preset("fig5")
        for s in run_sweep(cfg):
            rates = np.array([r.rate for r in s.rows])
            axis = np.array([r.axis for r in s.rows])
            peak = rates.max()
            assert np.all(rates[-axis > 11.0] <= 1e-6 * peak)
            assert rates[np.argmin(abs(axis + 5.0))] > 0.5 * peak

    def test_kms_rows(self):
        series, ok = kms_series(figure_preset("fig7"))
        assert ok
        assert all(r.rate <= 1e-9 for s in series for r in s.rows)

    def test_failed_point_recorded(self):
        cfg = parse_config("[state]\nkind = unruh\ncenter = 1\nwidth = 0.4\n[trajectory]\nkind = accelerated\n"
                           "[model]\ngap = -1\n[sweep]\naxis = tau\nstart = 0\nstop = 1\npoints = 2\n")
        rows = run_sweep(cfg)[0].rows
        assert len(rows) == 2 and not any(r.converged for r in rows)

    def test_worker_invariance(self):
        cfg = parse_config(PARTICLE_SHORT)
        one = [format_rows(s.rows, "csv") for s in run_sweep(cfg, workers=1)]
        two = [format_rows(s.rows, "csv") for s in run_sweep(cfg, workers=2)]
        assert one == two


class TestCommandLine:
    def test_window(self, tmp_path, capsys):
        assert main(["window", "--out", str(tmp_path / "w.csv")]) == 0
        rows = read_rows((tmp_path / "w.csv").read_text())
        assert len(rows) == 2001

    def test_rate_json(self, capsys):
        assert main(["rate", "--format", "json"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("[")

    def test_kms_check(self, capsys):
        assert main(["kms-check"]) == 0

    def test_fit_hermite(self, tmp_path, capsys):
        assert main(["fit-hermite", "--preset", "fig3", "--format", "json", "--out", str(tmp_path / "f.json")]) == 0
        data = json.loads((tmp_path / "f.json").read_text())
        assert abs(data["lambda"] - 2.5) < 0.05 and "reference_residual" in data

    def test_particle_rate_config(self, tmp_path, capsys):
        cfg = tmp_path / "p.cfg"
        cfg.write_text(PARTICLE_SHORT)
        assert main(["particle-rate", "--config", str(cfg)]) == 0

    @pytest.mark.parametrize("fig", ["fig2", "fig4"])
    def test_figure(self, tmp_path, capsys, fig):
        assert main(["figure", fig, "--out", str(tmp_path / f"{fig}.csv")]) == 0
        err = capsys.readouterr().err
        assert "plot" in err
        assert len(list(tmp_path.iterdir())) >= 2

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[model]\nmass = 1\n")
        assert main(["rate", "--config", str(cfg)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_mode_mismatch(self, capsys):
        assert main(["particle-rate", "--preset", "fig4"]) == 2
        assert main(["kms-check", "--preset", "fig4"]) == 2

    def test_bad_flags(self, capsys):
        assert main(["rate", "--tol", "-1"]) == 2
        assert main(["rate", "--workers", "0"]) == 2
        assert main(["rate", "--config", "/nonexistent/x.cfg"]) == 2

    def test_unconverged_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "ir.cfg"
        cfg.write_text("[state]\nkind = unruh\ncenter = 1\nwidth = 0.4\n[trajectory]\nkind = accelerated\n"
                       "[model]\ngap = -1\n[sweep]\naxis = tau\nstart = 0\nstop = 1\npoints = 2\n")
        assert main(["particle-rate", "--config", str(cfg)]) == 1

    def test_env_workers(self, tmp_path):
        code, out, err = run_cli(["rate", "--preset", "fig4"], tmp_path, {"UDW_WORKERS": "2"})
        assert code == 0
        code1, out1, _ = run_cli(["rate", "--preset", "fig4"], tmp_path, {"UDW_WORKERS": "1"})
        assert out == out1
        code, _, err = run_cli(["rate"], tmp_path, {"UDW_WORKERS": "many"})
        assert code == 2 and "UDW_WORKERS" in err

    def test_byte_identical_runs(self, tmp_path):
        a = run_cli(["figure", "fig7"], tmp_path)
        b = run_cli(["figure", "fig7"], tmp_path)
        assert a[0] == 0 and a[1] == b[1]
