import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinching_ee.model import LN2, Scenario, ValidationError, energy_efficiency
from pinching_ee.power import (
    DinkelbachConfig,
    allocate_power,
    allocate_power_batch,
    allocate_power_tdma,
    clamp_power,
    dinkelbach_user,
    stationary_power,
    tdma_energy_efficiency,
    tdma_per_user_rates,
)

from oracles import random_power_instance, single_user_grid, tdma_coordinate_descent

SC = Scenario()
H1 = 8.06609078393346155e-8  # gain directly under the antenna at d = 3 m


def test_stationary_power_closed_form():
    h = 2e-9
    beta = h / (SC.noise_power_w * 2 * LN2)
    assert stationary_power(h, 0.0, beta, SC) == pytest.approx(SC.noise_power_w / h, rel=1e-12)


def test_stationary_power_large_beta_negative():
    assert stationary_power(1e-9, 0.0, 1e12, SC) < 0


def test_stationary_power_matches_grid_argmax():
    h, prefix_h, prefix_p, cap = 5e-9, 5e-12, 0.01, 0.02
    beta = 300.0
    p_star = stationary_power(h, prefix_h, beta, SC)
    assert 0 < p_star < cap  # interior for this beta
    grid = np.linspace(-cap, 2 * cap, 10**6)
    arg = (grid * h + prefix_h + SC.noise_power_w) / SC.noise_power_w
    ok = arg > 0
    f = np.full_like(grid, -np.inf)
    f[ok] = np.log2(arg[ok]) - beta * (grid[ok] + prefix_p + SC.fixed_power_w)
    step = grid[1] - grid[0]
    assert abs(grid[np.argmax(f)] - p_star) <= step


@pytest.mark.parametrize("p, cap, expected", [(-0.5, 1.0, 0.0), (0.3, 1.0, 0.3), (1.7, 1.0, 1.0)])
def test_clamp_power(p, cap, expected):
    assert clamp_power(p, cap) == expected


def test_dinkelbach_tiny_cap_saturates():
    cap = 1e-6
    res = dinkelbach_user(0, [H1], [cap], SC)
    assert res.power == cap
    assert res.beta == pytest.approx(math.log2(1 + cap * H1 / 1e-12) / (0.01 + cap), rel=1e-12)
    assert res.converged


def test_dinkelbach_single_user_vs_grid():
    res = dinkelbach_user(0, [H1], [0.01], SC)
    p_grid, ee_grid = single_user_grid(H1, 0.01, 1e-12, 0.01)
    assert res.beta == pytest.approx(ee_grid, rel=1e-6)
    assert res.beta >= ee_grid * (1 - 1e-12)
    # the grid resolves the power only to its own spacing
    assert abs(res.power - p_grid) <= 0.01 / (10**6 - 1)
    assert res.converged
    assert all(b2 >= b1 for b1, b2 in zip(res.betas, res.betas[1:]))


def test_dinkelbach_second_user_with_first_saturated():
    h = [4e-9, 1e-9]
    caps = [1e-4, 0.05]
    res = dinkelbach_user(1, h, caps, SC)
    p2 = np.linspace(0, caps[1], 10**6)
    ee = np.log2(1 + (caps[0] * h[0] + p2 * h[1]) / 1e-12) / (0.01 + caps[0] + p2)
    k = np.argmax(ee)
    assert res.beta == pytest.approx(ee[k], rel=1e-6)
    assert abs(res.power - p2[k]) <= caps[1] / (10**6 - 1)


def test_dinkelbach_non_convergence_is_flagged():
    res = dinkelbach_user(0, [H1], [0.01], SC, DinkelbachConfig(max_iterations=1, tolerance=1e-300))
    assert not res.converged
    assert res.power > 0  # best-so-far, not garbage


def test_dinkelbach_warm_start_same_answer():
    h, caps, sc = [4e-9, 1e-9], [1e-4, 0.05], SC
    a = allocate_power(h, caps, sc)
    b = allocate_power(h, caps, sc, DinkelbachConfig(warm_start=True))
    np.testing.assert_allclose(a.powers, b.powers, rtol=1e-6)


def test_config_validation():
    with pytest.raises(ValidationError):
        DinkelbachConfig(tolerance=0)
    with pytest.raises(ValidationError):
        DinkelbachConfig(max_iterations=0)


def test_allocate_single_user_equals_dinkelbach_user():
    res = allocate_power([H1], [0.01], SC)
    du = dinkelbach_user(0, [H1], [0.01], SC)
    assert res.powers[0] == du.power
    assert res.beta == du.beta


def test_allocate_interior_first_user_silences_rest():
    res = allocate_power([1e-9, H1], [0.01, 0.01], SC)
    assert 0 < res.powers[1] < 0.01
    assert res.powers[0] == 0.0
    assert res.active_users == 1
    assert len(res.iterations_per_user) == 1


def test_allocate_validation():
    with pytest.raises(ValidationError):
        allocate_power([1e-9], [0.01, 0.01], SC)
    with pytest.raises(ValidationError):
        allocate_power([1e-9], [0.0], SC)


def _sorted(res, h, caps):
    order = np.argsort(-np.asarray(h), kind="stable")
    return res.powers[order], np.asarray(caps)[order]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_saturated_prefix_structure(seed, n):
    h, caps, sc = random_power_instance(np.random.default_rng(seed), n)
    res = allocate_power(h, caps, sc)
    p, c = _sorted(res, h, caps)
    for i in range(n):
        for j in range(i + 1, n):
            assert not (p[i] < c[i] and p[j] > 0)
    assert res.ee == pytest.approx(energy_efficiency(h, res.powers, sc), rel=1e-9)
    assert res.ee == pytest.approx(res.beta, rel=1e-9)
    assert res.ee >= energy_efficiency(h, caps, sc) * (1 - 1e-12)
    assert res.ee >= 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_local_perturbations_do_not_improve(seed, n):
    h, caps, sc = random_power_instance(np.random.default_rng(seed), n)
    res = allocate_power(h, caps, sc)
    base = res.ee
    eps = 1e-6 * caps.min()
    p = res.powers
    for k in range(n):
        for delta in (eps, -eps):
            q = p.copy()
            q[k] = min(max(q[k] + delta, 0.0), caps[k])
            assert energy_efficiency(h, q, sc) <= base * (1 + 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_idempotent(seed, n):
    h, caps, sc = random_power_instance(np.random.default_rng(seed), n)
    a = allocate_power(h, caps, sc)
    b = allocate_power(h, caps, sc)
    np.testing.assert_allclose(a.powers, b.powers, rtol=1e-9, atol=0)


def test_batch_matches_scalar():
    rng = np.random.default_rng(7)
    for n in (1, 3, 5):
        _, caps, sc = random_power_instance(rng, n)
        G = 10 ** rng.uniform(-11, -7, (200, n))
        powers, ee, conv = allocate_power_batch(G, caps, sc)
        assert conv.all()
        for row in range(0, 200, 17):
            ref = allocate_power(G[row], caps, sc)
            np.testing.assert_allclose(powers[row], ref.powers, rtol=1e-9, atol=1e-18)
            assert ee[row] == pytest.approx(ref.ee, rel=1e-12)


def test_equal_gains_fill_in_stable_order():
    h = [2e-11, 2e-11, 2e-11]
    caps = [1e-3, 1e-3, 1e-3]
    res = allocate_power(h, caps, SC)
    p = res.powers
    # any saturated users precede the partial one in index order
    seen_partial = False
    for k in range(3):
        if p[k] < caps[k]:
            seen_partial = True
        else:
            assert not seen_partial


# --- TDMA -------------------------------------------------------------------

def test_tdma_single_user_equals_noma():
    t = allocate_power_tdma([H1], [0.01], SC)
    n = allocate_power([H1], [0.01], SC)
    assert t.powers[0] == pytest.approx(n.powers[0], rel=1e-9)
    assert t.ee == pytest.approx(n.ee, rel=1e-12)


def test_tdma_equal_users_equal_power():
    res = allocate_power_tdma([3e-9] * 4, [0.01] * 4, SC)
    assert np.ptp(res.powers) == 0.0


def test_tdma_rates_interference_free():
    h = np.array([3e-9, 1e-9, 5e-10])
    p = np.array([0.003, 0.002, 0.001])
    r = tdma_per_user_rates(h, p, SC)
    q = p.copy()
    q[1] = 0.009
    r2 = tdma_per_user_rates(h, q, SC)
    assert r2[0] == r[0] and r2[2] == r[2] and r2[1] != r[1]


def test_tdma_matches_coordinate_descent():
    rng = np.random.default_rng(21)
    h = 10 ** rng.uniform(-11, -8, 5)
    caps = np.full(5, 0.01)
    res = allocate_power_tdma(h, caps, SC)
    _, best = tdma_coordinate_descent(h, caps, 1e-12, 0.01)
    assert res.ee == pytest.approx(best, rel=1e-3)
    assert res.ee >= best * (1 - 1e-9)
    assert res.ee == pytest.approx(tdma_energy_efficiency(h, res.powers, SC), rel=1e-12)
