import math

import numpy as np
import pytest

from mlrsa.core import (ArrivalBudgetError, DensityCurve, Params1D, Params2D, QuadratureError,
                        quadrature, seeded_rng, slab_bounds, stack_replications)


class TestQuadrature:
    def test_linear(self):
        assert quadrature(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_empty_interval(self):
        assert quadrature(math.exp, 2.0, 2.0) == 0.0

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            quadrature(math.exp, 1.0, 0.0)

    def test_ein_integral_against_series(self):
        # int_0^1 (1 - e^-x)/x dx = sum_{n>=1} (-1)^(n+1) / (n * n!)
        series = sum((-1) ** (n + 1) / (n * math.factorial(n)) for n in range(1, 30))
        got = quadrature(lambda x: -math.expm1(-x) / x if x else 1.0, 0.0, 1.0)
        assert got == pytest.approx(series, abs=1e-9)
        assert series == pytest.approx(0.7965995992970531, abs=1e-15)

    def test_split_invariance(self):
        f = lambda x: math.sin(3 * x) * math.exp(-x)
        whole = quadrature(f, 0.0, 4.0)
        assert quadrature(f, 0.0, 1.3) + quadrature(f, 1.3, 4.0) == pytest.approx(whole, abs=1e-9)

    def test_nonconvergence_raises_with_estimate(self):
        with pytest.raises(QuadratureError) as info:
            quadrature(lambda x: 1.0 / x, 0.0, 1.0, limit=5)
        assert math.isfinite(info.value.estimate)


class TestRng:
    def test_deterministic(self):
        a = seeded_rng(7, 3).random(5)
        b = seeded_rng(7, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        assert not np.allclose(seeded_rng(7, 0).random(5), seeded_rng(7, 1).random(5))

    def test_seeds_differ(self):
        assert not np.allclose(seeded_rng(1, 0).random(5), seeded_rng(2, 0).random(5))

    def test_uniform_mean(self):
        # mean of 1e6 uniforms has sd 2.9e-4; 0.002 is about 7 sd
        assert seeded_rng(0, 0).random(1_000_000).mean() == pytest.approx(0.5, abs=0.002)


class TestParams:
    def test_tau_mapping_1d(self):
        p = Params1D(sigma=2.0, rate=0.5, horizon=3.0)
        assert p.tau_max == pytest.approx(3.0)
        assert float(p.from_tau(p.to_tau(1.7))) == pytest.approx(1.7)

    def test_tau_mapping_2d(self):
        p = Params2D.from_tau_horizon(10.0, sigma=2.0)
        assert p.tau_max == pytest.approx(10.0)
        assert p.kappa == pytest.approx(math.pi)

    @pytest.mark.parametrize("kw", [dict(sigma=0), dict(rate=-1), dict(num_colors=0),
                                    dict(domain_length=5.0), dict(horizon=-1.0),
                                    dict(horizon=math.inf), dict(num_colors=1.5)])
    def test_invalid_1d(self, kw):
        with pytest.raises(ValueError):
            Params1D(**kw)

    def test_invalid_2d(self):
        with pytest.raises(ValueError):
            Params2D(domain_side=9.0)


def test_slab_budget():
    with pytest.raises(ArrivalBudgetError):
        slab_bounds(1e12, 10.0)
    b = slab_bounds(5e6, 10.0)
    assert b[0] == 0.0 and b[-1] == 10.0 and b.size == 4


def test_stack_replications():
    mean, err = stack_replications([np.array([1.0, 2.0]), np.array([3.0, 2.0])])
    np.testing.assert_allclose(mean, [2.0, 2.0])
    np.testing.assert_allclose(err, [1.0, 0.0])


def test_density_curve_shapes():
    c = DensityCurve(np.arange(3.0), np.array([[0.1, 0.2], [0.2, 0.3], [0.3, 0.3]]))
    assert c.num_colors == 2
    assert c.is_monotone()
    np.testing.assert_allclose(c.mean_over_colors(), [0.15, 0.25, 0.3])
    with pytest.raises(ValueError):
        DensityCurve(np.arange(3.0), np.zeros((4, 2)))
