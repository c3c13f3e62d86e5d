import math

import numpy as np
import pytest

from mlrsa.kinetics2d import (CUBE_ARG, JAMMING_COVERAGE, RetentionModel, coverage_per_color,
                              lens_area, monolayer_table, multilayer_2d, phi_fit, phi_series,
                              series_coefficients, series_integrals, solve_monolayer_2d)

KAPPA = math.pi / 4


class TestLensArea:
    def test_values(self):
        assert lens_area(0.0) == pytest.approx(math.pi)
        assert lens_area(2.0) == pytest.approx(0.0, abs=1e-15)
        # 2 acos(1/2) - sqrt(3)/2 = 2 pi / 3 - sqrt(3) / 2
        assert lens_area(1.0) == pytest.approx(2 * math.pi / 3 - math.sqrt(3) / 2, rel=1e-14)
        assert lens_area(1.0) == pytest.approx(1.22836969860876, rel=1e-12)
        assert lens_area(2.0, sigma=3.0) == pytest.approx(9 * lens_area(2.0 / 3.0))

    def test_monte_carlo(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1, 1, (400_000, 2))
        inside = (pts**2).sum(1) < 1
        other = ((pts - [1.3, 0.0]) ** 2).sum(1) < 1
        est = 4 * np.mean(inside & other)
        sd = 4 * math.sqrt(est / 4 * (1 - est / 4) / pts.shape[0])
        assert abs(est - lens_area(1.3)) < 3 * sd

    def test_range(self):
        with pytest.raises(ValueError):
            lens_area(2.5)


class TestSeries:
    def test_integrals_two_ways(self):
        a, g = series_integrals("adaptive"), series_integrals("gauss")
        np.testing.assert_allclose(a, g, rtol=1e-12)

    def test_low_orders(self):
        c = series_coefficients()
        assert c[0] == 1.0
        assert c[1] == pytest.approx(-math.pi)
        assert phi_series(0.0) == 1.0

    def test_theta_coefficients_low_orders_match_fit(self):
        series = series_coefficients() / KAPPA ** np.arange(4)
        fit = RetentionModel().theta_coefficients()[:4]
        np.testing.assert_allclose(series[:2], fit[:2], rtol=1e-3)

    def test_theta_coefficients_high_orders_match_native_normalisation(self):
        # the fit coefficients were produced with the jamming coverage rounded
        # to 0.547; at that normalisation orders 2 and 3 agree to 1e-3
        series = series_coefficients() / KAPPA ** np.arange(4)
        fit = RetentionModel(jamming=0.547).theta_coefficients()[:4]
        np.testing.assert_allclose(series, fit, rtol=1e-3)

    @pytest.mark.xfail(strict=True, reason="with theta_inf = 0.5474 the theta^2 and theta^3 "
                                           "coefficients differ by 1.4e-3 and 2.7e-3 relative")
    def test_theta_coefficients_all_orders_default_normalisation(self):
        series = series_coefficients() / KAPPA ** np.arange(4)
        fit = RetentionModel().theta_coefficients()[:4]
        np.testing.assert_allclose(series, fit, rtol=1e-3)

    @pytest.mark.xfail(strict=True, reason="series and fit differ by 0.015 at theta = 0.35; "
                                           "agreement within 0.01 holds only up to theta ~ 0.29")
    def test_series_close_to_fit_up_to_035(self):
        th = np.linspace(0, 0.35, 36)
        assert np.max(np.abs(phi_series(th / KAPPA) - phi_fit(th))) <= 0.01

    def test_series_close_to_fit_low_coverage(self):
        th = np.linspace(0, 0.25, 26)
        assert np.max(np.abs(phi_series(th / KAPPA) - phi_fit(th))) <= 0.01


class TestFit:
    def test_value(self):
        x = 0.5
        expected = (1 + 0.8120 * x + 0.4258 * x**2 + 0.0716 * x**3) * (1 - x) ** 3
        assert phi_fit(x * JAMMING_COVERAGE) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.190175, rel=1e-12)

    def test_bounds(self):
        assert phi_fit(0.0) == 1.0
        assert phi_fit(JAMMING_COVERAGE) == pytest.approx(0.0, abs=1e-15)
        th = np.linspace(0, JAMMING_COVERAGE, 200)
        assert np.all(np.diff(phi_fit(th)) < 0)
        with pytest.raises(ValueError):
            phi_fit(0.6)


class TestMonolayer:
    # values of the ODE solution checked against an RK45 integration here
    @pytest.mark.parametrize("tau", [0.5, 2.0, 10.0, 100.0])
    def test_against_independent_integration(self, tau):
        from scipy.integrate import solve_ivp
        ref = solve_ivp(lambda t, y: [phi_fit(min(y[0], JAMMING_COVERAGE))], (0, tau), [0.0],
                        method="RK45", rtol=1e-10, atol=1e-13).y[0, -1]
        assert monolayer_table()(tau) == pytest.approx(ref, rel=1e-6)

    def test_small_tau_slope(self):
        assert monolayer_table()(1e-3) == pytest.approx(1e-3, rel=3e-3)

    def test_monotone_below_jamming(self):
        tab = monolayer_table()
        th = tab(np.geomspace(1e-3, 1e8, 400))
        assert np.all(np.diff(th) >= 0)
        assert th[-1] <= JAMMING_COVERAGE
        assert th[-1] == pytest.approx(JAMMING_COVERAGE, abs=2e-4)

    def test_cube_arg_bracket_jams_early(self):
        sol = solve_monolayer_2d(10.0, RetentionModel(bracket=CUBE_ARG))
        assert sol(3.0) == pytest.approx(JAMMING_COVERAGE, abs=1e-3)

    def test_kinetic_constant_rescales_time(self):
        a = solve_monolayer_2d(10.0, kinetic_constant=2.0)
        assert a(3.0) == pytest.approx(monolayer_table()(6.0), rel=1e-6)

    def test_errors(self):
        with pytest.raises(ValueError):
            monolayer_table()(-1.0)
        with pytest.raises(ValueError):
            RetentionModel(bracket="square")


class TestMultilayer:
    def test_recursion(self):
        tab = monolayer_table()
        m = multilayer_2d(8.0, 3)
        assert m.per_layer[0] == pytest.approx(tab(8.0))
        assert m.per_layer[1] == pytest.approx(tab(8.0 - m.per_layer[0]))
        assert m.per_layer[2] == pytest.approx(tab(8.0 - m.per_layer[:2].sum()))
        assert m.per_color == pytest.approx(m.per_layer.mean())

    def test_layers_shrink_and_sum(self):
        for k in (2, 3, 4):
            m = multilayer_2d(12.0, k)
            assert np.all(np.diff(m.per_layer) <= 0)
            assert k * m.per_color == pytest.approx(m.per_layer.sum(), rel=1e-15)

    def test_rate_time_rescaling(self):
        from mlrsa.core import Params2D
        a = Params2D(rate=2.0, horizon=3.0)
        b = Params2D(rate=0.5, horizon=12.0)
        assert a.tau_max == pytest.approx(b.tau_max)
        assert coverage_per_color(a.tau_max, 3) == coverage_per_color(b.tau_max, 3)

    def test_k1_is_monolayer(self):
        assert coverage_per_color(4.0, 1) == pytest.approx(monolayer_table()(4.0))

    def test_monotone(self):
        tau = np.linspace(0, 40, 81)
        for k in (1, 2, 4):
            assert np.all(np.diff(coverage_per_color(tau, k)) >= 0)
