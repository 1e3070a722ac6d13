import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from udwdetect.errors import DistributionalProfileError, KernelDegeneracyError
from udwdetect.profiles import (FIT_GRID, DoubleGaussian, FrequencyWindow, HermiteCoupling, PointLike,
                                RindlerDoubleGaussian, evaluate_profile, fit_residual, hermite_fit_report,
                                longitudinal_window_3p1, minkowski_window, rindler_window_1p1,
                                rindler_window_3p1, transverse_factor, unit_peak_norm)
from udwdetect.specfun import bessel_k_imag


class TestEvaluate:
    def test_pointlike_rejected(self):
        with pytest.raises(DistributionalProfileError):
            evaluate_profile(PointLike(), 0.0)

    def test_double_gaussian_formula(self):
        p = DoubleGaussian(1.0, 5.0)
        x = np.linspace(-4, 4, 17)
        expected = np.exp(-x * x / 2) * 2 * np.cos(5 * x) / math.sqrt(2 * math.pi)
        np.testing.assert_allclose(evaluate_profile(p, x), expected, rtol=0, atol=1e-15)

    @given(st.floats(-20, 20))
    def test_double_gaussian_even(self, x):
        p = DoubleGaussian(1.0, 5.0)
        assert p(x) == p(-x)

    def test_hermite_03_shape(self):
        x = np.linspace(-4, 4, 41)
        ratio = HermiteCoupling(0, 3)(x) / ((2 * x ** 4 - 9 * x ** 2 + 3) * np.exp(-x * x))
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)

    @pytest.mark.parametrize("n,m", [(0, 2), (1, 3), (2, 4), (1, 2), (0, 0), (3, 1), (-2, 1)])
    def test_parity_rejected(self, n, m):
        with pytest.raises(ValueError):
            HermiteCoupling(n, m)

    def test_rindler_double_gaussian_formula(self):
        p = RindlerDoubleGaussian(1.0, 5.0, 0.7, norm=2.0)
        xi = np.linspace(-3, 3, 13)
        expected = 2.0 * np.exp(-1.4 * xi - xi * xi / 2) * 2 * np.cos(5 * xi)
        np.testing.assert_allclose(p(xi), expected, rtol=1e-14)

    @pytest.mark.parametrize("args", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0)])
    def test_bad_double_gaussian(self, args):
        with pytest.raises(ValueError):
            DoubleGaussian(*args)

    def test_bad_rindler_profile(self):
        with pytest.raises(ValueError):
            RindlerDoubleGaussian(1.0, 5.0, 0.0)


class TestMinkowskiWindow:
    def test_peak_value(self):
        assert minkowski_window(DoubleGaussian(1.0, 5.0), 5.0) == pytest.approx(1 + math.exp(-50), abs=1e-15)

    def test_pointlike(self):
        np.testing.assert_array_equal(minkowski_window(PointLike(), np.array([-3.0, 0.0, 7.0])), 1.0)

    def test_quadrature_matches_closed_form(self):
        p = DoubleGaussian(1.0, 5.0)
        for k in range(11):
            q = minkowski_window(p, float(k), 1e-12, path="quadrature")
            assert abs(q - p.window_closed_form(k)) <= 1e-8

    def test_explicit_n_sigma_scales(self):
        p = DoubleGaussian(1.0, 5.0, n_sigma=2 * unit_peak_norm(1.0))
        assert minkowski_window(p, 5.0) == pytest.approx(2.0, rel=1e-14)

    def test_double_peaking(self):
        p = DoubleGaussian(1.0, 5.0)
        k = np.arange(-7, 7, 1e-4)
        w = p.window_closed_form(k)
        interior = (w[1:-1] > w[:-2]) & (w[1:-1] > w[2:])
        peaks = k[1:-1][interior]
        assert len(peaks) == 2
        np.testing.assert_allclose(np.sort(peaks), [-5, 5], atol=1e-3)

    @pytest.mark.parametrize("n,m", [(0, 1), (0, 3), (2, 5)])
    def test_hermite_window_real(self, n, m):
        for k in (0.0, 1.3, 2.5, 4.0):
            w = minkowski_window(HermiteCoupling(n, m), k, 1e-12)
            assert abs(w.imag) < 1e-10

    def test_conjugation_symmetry(self):
        p = HermiteCoupling(0, 3)
        for k in (0.5, 2.0, 3.5):
            assert abs(minkowski_window(p, -k) - np.conj(minkowski_window(p, k))) < 1e-10

    def test_rindler_profile_rejected(self):
        with pytest.raises(TypeError):
            minkowski_window(RindlerDoubleGaussian(1.0, 5.0, 1.0), 1.0)


class TestRindlerWindow:
    def test_peak_value(self):
        w = rindler_window_1p1(RindlerDoubleGaussian(1.0, 5.0, 1.0), 5.0, 1.0)
        assert w == pytest.approx(1 + math.exp(-50), abs=1e-15)

    @pytest.mark.parametrize("a", [0.1, 1.0, 1.5])
    def test_metric_cancellation(self, a):
        p = RindlerDoubleGaussian(1.0, 5.0, a)
        om = np.linspace(0.25, 10, 40)
        q = rindler_window_1p1(p, om, a, 1e-12, path="quadrature")
        assert np.max(np.abs(q - p.window_closed_form(om))) <= 1e-8
        assert np.max(np.abs(q.imag)) < 1e-10

    def test_small_acceleration_limit(self):
        a = 1e-4
        om = np.linspace(0.25, 10, 40)
        q = rindler_window_1p1(RindlerDoubleGaussian(1.0, 5.0, a), om, a, 1e-12, path="quadrature")
        m = minkowski_window(DoubleGaussian(1.0, 5.0), om)
        assert np.max(np.abs(q - m)) < 1e-6

    def test_closed_form_needs_matching_acceleration(self):
        p = RindlerDoubleGaussian(1.0, 5.0, 1.0)
        with pytest.raises(ValueError):
            rindler_window_1p1(p, 1.0, 2.0, path="closed_form")

    def test_pointlike(self):
        assert rindler_window_1p1(PointLike(), 3.0, 1.0) == 1.0


class TestRindler3p1:
    def test_against_oracle(self, oracles):
        w = rindler_window_3p1(DoubleGaussian(1.0, 0.0), 1.0, [0.0], 1.0, m=1.0, tol=1e-12)
        assert abs(w - oracles["rindler_3p1_window_gauss"]) <= 1e-6

    def test_massless_zero_kperp_degenerate(self):
        with pytest.raises(KernelDegeneracyError):
            rindler_window_3p1(DoubleGaussian(1.0, 0.0), 1.0, [0.0, 0.0], 1.0, m=0.0)

    def test_transverse_factor_zero_frequency(self):
        assert transverse_factor([0.0, 0.0], 0.8) == 1.0
        assert transverse_factor([0.3, 0.4], 2.0) == pytest.approx(math.exp(-0.5 * 4 * 0.25), rel=1e-15)
        assert transverse_factor([3.0], None) == 1.0

    def test_narrow_profile_delta_limit(self):
        omega, big_m, a = 1.0, 1.0, 1.0
        limit = 2.0 * bessel_k_imag(omega / a, big_m / a).value   # area of the unit-peak profile is 2
        errs = [abs(longitudinal_window_3p1(DoubleGaussian(w, 0.0), omega, big_m, a, 1e-12) - limit)
                for w in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-3 * abs(limit)

    def test_pointlike_is_bessel(self):
        w = rindler_window_3p1(PointLike(), 2.0, [0.5], 1.0, m=1.0)
        assert w == pytest.approx(bessel_k_imag(2.0, math.sqrt(1.25)).value, rel=1e-12)


class TestFrequencyWindow:
    def test_paths(self):
        assert FrequencyWindow(DoubleGaussian(1.0, 5.0)).evaluation_path == "closed_form"
        assert FrequencyWindow(HermiteCoupling(0, 1)).evaluation_path == "quadrature"
        assert FrequencyWindow(PointLike(), "rindler_3p1", a=1.0).evaluation_path == "closed_form"
        assert FrequencyWindow(RindlerDoubleGaussian(1, 5, 1.0), "rindler_1p1", a=1.0).evaluation_path == \
            "closed_form"
        assert FrequencyWindow(RindlerDoubleGaussian(1, 5, 1.0), "rindler_1p1", a=2.0).evaluation_path == \
            "quadrature"

    def test_rindler_kind_needs_acceleration(self):
        with pytest.raises(ValueError):
            FrequencyWindow(PointLike(), "rindler_1p1")

    def test_minkowski_rejects_rindler_profile(self):
        with pytest.raises(TypeError):
            FrequencyWindow(RindlerDoubleGaussian(1, 5, 1.0))

    def test_callable(self):
        w = FrequencyWindow(DoubleGaussian(1.0, 5.0))
        assert w(5.0) == pytest.approx(1.0)


class TestHermiteFit:
    @pytest.mark.parametrize("nm,key", [((0, 1), "fit_01"), ((0, 3), "fit_03")])
    def test_fit_beats_grid_oracle(self, oracles, nm, key):
        fit = hermite_fit_report(*nm)
        ref = oracles[key]
        assert fit.converged
        assert fit.residual <= ref["residual"] + 1e-12
        # the oracle grid has step 0.01, so the optimum lies within a step of it
        assert abs(fit.lam - ref["lambda"]) <= 0.02
        assert abs(fit.sigma - ref["sigma"]) <= 0.02

    def test_03_near_reference_parameters(self):
        fit = hermite_fit_report(0, 3)
        assert abs(fit.lam - 2.5) <= 0.05
        assert abs(fit.sigma - 1.0) <= 0.05

    @pytest.mark.parametrize("nm,key,lam,sigma", [
        ((0, 1), "fit_01_reference_residual", 1.66, 1 / math.sqrt(0.89)),
        ((0, 3), "fit_03_reference_residual", 2.5, 1.0)])
    def test_reference_residual_matches_oracle(self, oracles, nm, key, lam, sigma):
        target = HermiteCoupling(*nm)(FIT_GRID)
        assert fit_residual(target, lam, sigma) == pytest.approx(oracles[key], rel=1e-9)

    def test_fit_is_iterable(self):
        lam, sigma, res = hermite_fit_report(0, 3)
        assert res < 0.1 and lam > 0 and sigma > 0

    def test_bad_sigma_residual(self):
        assert fit_residual(FIT_GRID, 1.0, 0.0) == math.inf
