import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlrsa.core import Params2D
from mlrsa.sim2d import (DepositionState2D, available_colors_2d, available_colors_bruteforce,
                         deposit_2d, min_same_color_distance, replicate_2d, run_sim_2d)


@pytest.fixture(scope="module")
def dense_state():
    p = Params2D.from_tau_horizon(8.0, num_colors=3, domain_side=20.0, sigma=1.0, seed=5)
    _, state = run_sim_2d(p, [p.horizon])
    return state


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 20, exclude_max=True), st.floats(0, 20, exclude_max=True))
def test_grid_query_matches_bruteforce(dense_state, x, y):
    assert available_colors_2d(dense_state, (x, y)) == available_colors_bruteforce(dense_state, (x, y))


def test_grid_query_near_admitted_centers(dense_state):
    # points just inside / outside sigma of real centers, including across the seam
    rng = np.random.default_rng(0)
    for c in dense_state.centers()[:200]:
        for r in (0.999, 1.001):
            a = rng.uniform(0, 2 * math.pi)
            p = np.mod(c + r * np.array([math.cos(a), math.sin(a)]), 20.0)
            p = np.minimum(p, np.nextafter(20.0, 0))
            assert available_colors_2d(dense_state, p) == available_colors_bruteforce(dense_state, p)


def test_hard_core_pair_scan():
    p = Params2D.from_tau_horizon(40.0, num_colors=2, domain_side=30.0, sigma=1.0)
    _, state = run_sim_2d(p, [p.horizon])
    assert min_same_color_distance(state) >= 1.0 - 1e-12


def test_hard_core_scaled_sigma():
    p = Params2D.from_tau_horizon(10.0, num_colors=2, domain_side=40.0, sigma=2.0)
    _, state = run_sim_2d(p, [p.horizon])
    assert min_same_color_distance(state) >= 2.0 * (1 - 1e-12)
    assert state.centers().max() < 40.0


def test_deposit_rules(rng):
    s = DepositionState2D(Params2D(num_colors=2, domain_side=10.0, horizon=1.0))
    c0 = deposit_2d(s, ((5.0, 5.0), 0.1), rng)
    assert available_colors_2d(s, (5.5, 5.0)) == {1 - c0}
    assert available_colors_2d(s, (6.0, 5.0)) == {0, 1}
    assert deposit_2d(s, ((5.0, 5.5), 0.2), rng) == 1 - c0
    assert deposit_2d(s, ((5.2, 5.2), 0.3), rng) is None
    c = s.counters
    assert (c.attempted, c.admitted, c.rejected) == (3, 2, 1)
    with pytest.raises(ValueError):
        deposit_2d(s, ((1.0, 1.0), 0.05), rng)
    with pytest.raises(ValueError):
        deposit_2d(s, ((10.0, 1.0), 0.5), rng)


def test_periodic_seam(rng):
    s = DepositionState2D(Params2D(num_colors=1, domain_side=10.0, horizon=1.0))
    deposit_2d(s, ((0.1, 0.1), 0.1), rng)
    assert available_colors_2d(s, (9.8, 9.8)) == set()
    assert available_colors_2d(s, (9.0, 9.0)) == {0}


def test_runs_reproducible_and_monotone():
    p = Params2D.from_tau_horizon(5.0, num_colors=2, domain_side=30.0, seed=2)
    times = np.linspace(0, p.horizon, 11)
    a = replicate_2d(p, times, replications=4, jobs=1)
    b = replicate_2d(p, times, replications=4, jobs=3)
    np.testing.assert_array_equal(a.values, b.values)
    curve, _ = run_sim_2d(p, times, stream=1)
    assert curve.is_monotone()
    assert np.all(curve.values < 0.5474 + 0.02)


def test_color_exchangeability(jobs):
    p = Params2D.from_tau_horizon(6.0, num_colors=3, domain_side=60.0)
    curve = replicate_2d(p, [p.horizon], replications=10, jobs=jobs)
    v, e = curve.values[0], curve.stderr[0]
    assert np.all(np.abs(v - v.mean()) <= 3 * e)


def test_small_tau_slope(jobs):
    # early on every arrival is admitted: coverage per color is tau / K
    p = Params2D.from_tau_horizon(0.02, num_colors=2, domain_side=300.0)
    curve = replicate_2d(p, [p.horizon], replications=10, jobs=jobs)
    assert np.all(np.abs(curve.values[0] - 0.01) < 3 * curve.stderr[0] + 2e-4)


@pytest.mark.xfail(strict=True, reason="simulated theta(500) is 0.5348 +- 0.0002; the jamming "
                                       "value 0.5474 is only approached for tau >> 500")
def test_jamming_proxy_at_tau_500(jobs):
    p = Params2D.from_tau_horizon(500.0, num_colors=1, domain_side=100.0)
    curve = replicate_2d(p, [p.horizon], replications=10, jobs=jobs)
    assert curve.values[0, 0] == pytest.approx(0.5474, abs=0.008)
