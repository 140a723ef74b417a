import math

import numpy as np
import pytest

from uavroute.economics import (
    PowerModel,
    RewardModel,
    edge_cost,
    geometry_key,
    hexagon_vertices,
    hop_cost,
    hop_costs,
    hover_charge,
    in_hexagon,
    integrate_hexagon,
    propulsion_power,
)
from uavroute.errors import QuadratureError
from uavroute.scenario import PhysicsParams, make_scenario, task_index

import oracles

PHYS = PhysicsParams()
MODEL = PowerModel.from_physics(PHYS)


def test_hover_power_is_exact():
    assert float(propulsion_power(0.0, MODEL)) == 580.65 + 790.67


@pytest.mark.parametrize("kmh, watts", [
    # [DERIVED] frozen from the independent propulsion oracle
    (30, 1164.2402995755278),
    (50, 999.1325472668564),
    (70, 923.9821089192326),
    (100, 925.9025318998193),
    (140, 1086.8790581343094),
])
def test_propulsion_power_values(kmh, watts):
    assert float(propulsion_power(kmh / 3.6, MODEL)) == pytest.approx(watts, rel=1e-12)
    assert oracles.power_w(kmh / 3.6, PHYS) == pytest.approx(watts, rel=1e-12)


def test_power_curve_is_u_shaped():
    v = np.linspace(0, 40, 401)
    p = propulsion_power(v, MODEL)
    k = int(np.argmin(p))
    assert 0 < k < len(v) - 1
    with pytest.raises(ValueError):
        propulsion_power(-1.0, MODEL)


def test_hop_costs():
    v = 70 / 3.6
    assert hover_charge(make_scenario(9, 1, 4)) == pytest.approx(0.822792, rel=1e-12)
    assert float(hop_cost(1, v, PHYS)) == pytest.approx(0.822792, rel=1e-12)
    assert float(hop_cost(3, v, PHYS)) == pytest.approx(oracles.hop_cost(3, v, PHYS), rel=1e-12)
    table = hop_costs(make_scenario(9, 1, 6), 0)
    assert table.shape == (6,)
    assert table[4] == pytest.approx(oracles.hop_cost(4, v, PHYS), rel=1e-12)


def test_edge_cost_splits_time():
    sc = make_scenario(9, 1, 6)
    k1, k2 = task_index(3, 1, 9), task_index(3, 3, 9)
    ec = edge_cost(k1, k2, 0, sc)
    assert ec.moving_time == 60.0 and ec.hovering_time == 60.0
    assert ec.cost == pytest.approx(oracles.hop_cost(2, 70 / 3.6, PHYS), rel=1e-12)
    with pytest.raises(ValueError):
        edge_cost(k2, k1, 0, sc)


def test_membership_matches_halfplane_oracle():
    rng = np.random.default_rng(7)
    R, c = 150.0, (30.0, -40.0)
    x, y = rng.uniform(-200, 200, (2, 10_000)) + np.array(c)[:, None]
    ours = in_hexagon(x, y, c, R)
    ref = oracles.halfplane_in_hexagon(x, y, c, R)
    assert np.array_equal(ours, ref)


def test_vertices_lie_on_the_boundary():
    v = hexagon_vertices((0.0, 0.0), 2.0)
    assert np.allclose(np.hypot(v[:, 0], v[:, 1]), 2.0)
    assert np.all(in_hexagon(v[:, 0] * (1 - 1e-9), v[:, 1] * (1 - 1e-9), (0, 0), 2.0))


def test_quadrature_is_exact_on_polynomials():
    R = 3.0
    area = 1.5 * math.sqrt(3) * R * R
    one = integrate_hexagon(lambda x, y: np.ones_like(x), (1.0, 2.0), R)
    assert one.value == pytest.approx(area, rel=1e-12)
    # [DERIVED] second moment of a regular hexagon: 5 sqrt(3) R^4 / 16 per axis
    xx = integrate_hexagon(lambda x, y: x * x, (0.0, 0.0), R)
    assert xx.value == pytest.approx(5 * math.sqrt(3) * R**4 / 16, rel=1e-12)


def test_quadrature_failure_is_reported():
    with pytest.raises(QuadratureError):
        integrate_hexagon(lambda x, y: (x * x + y * y < 0.3).astype(float), (0, 0), 1.0,
                          rtol=1e-12, fail_rtol=1e-12, max_depth=1)


@pytest.mark.parametrize("region, power, interferers", [
    (5, 0.4, []),
    (1, 0.01, []),
    (5, 0.4, [(2, 0.4)]),
    (3, 10.0, [(2, 10.0), (6, 1.0)]),
])
def test_rate_integral_matches_monte_carlo(region, power, interferers):
    sc = make_scenario(9, 1, 2)
    model = RewardModel(sc, np.ones((9, 2)))
    ref = oracles.mc_rate_integral(sc, region, power, interferers, 400_000, np.random.default_rng(region))
    assert model.rate_integral(region, power, interferers) == pytest.approx(ref, rel=5e-3)


def test_reward_tables():
    sc = make_scenario(9, 2, 3)
    dens = np.random.default_rng(0).uniform(1e-4, 1e-3, (9, 3))
    model = RewardModel(sc, dens)
    table = model.no_interference_table(0)
    assert table.shape == (9, 3)
    k = task_index(4, 2, 9)
    assert model.reward_no_interference(k, 0) == pytest.approx(table[3, 1])
    assert model.reward_with_interference(k, 0, (4, 0)) == pytest.approx(table[3, 1])
    assert model.reward_with_interference(k, 0, (4, 5)) < table[3, 1]
    # rewards are linear in beta
    big = RewardModel(sc.with_physics(beta=2 * sc.physics.beta), dens)
    assert np.allclose(big.no_interference_table(0), 2 * table)


def test_shared_cache_is_reused():
    sc = make_scenario(9, 1, 2)
    cache = {}
    a = RewardModel(sc, np.ones((9, 2)), cache=cache)
    a.rate_integral(1, 0.4)
    b = RewardModel(sc, 2 * np.ones((9, 2)), cache=cache)
    assert len(cache) == 1 and b.rate_integral(1, 0.4) == a.rate_integral(1, 0.4)
    assert geometry_key(sc) == geometry_key(sc.with_physics(beta=1.0))
    assert geometry_key(sc) != geometry_key(sc.with_physics(zeta=0.2))


def test_density_shape_checked():
    with pytest.raises(ValueError):
        RewardModel(make_scenario(9, 1, 2), np.ones((9, 3)))
