from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavroute.demand import MobilityChain, propagate_demand, scenario_demand
from uavroute.scenario import load_scenario, make_scenario, tomllib

from oracles import simulate_walkers

SCENARIOS = Path(__file__).parents[1] / "scenarios"


def random_chain(rng, L, leave=0.02):
    p = rng.uniform(0, 1, size=(L + 1, L + 1))
    np.fill_diagonal(p, 0)
    p *= rng.uniform(0.1, 0.9, size=(L + 1, 1)) / p.sum(axis=1, keepdims=True)
    p[:L, L] = leave
    p[L] = 0.0
    return MobilityChain(p, rng.uniform(50, 150, L))


def test_static_demand_is_constant():
    sc = make_scenario(9, 2, 6)
    table = scenario_demand(sc)
    assert np.all(table.counts[:-1] == 100.0)
    assert table.density[4, 5] == pytest.approx(100.0 / sc.topology.region_area)


def test_two_region_closed_form():
    # [DERIVED] N(t+1) = N(t) + arrivals - departures, worked by hand
    chain = MobilityChain([[0.0, 0.5], [0.25, 0.0]], [100.0, 0.0])
    c = propagate_demand(chain, 3, 1.0).counts
    assert c[:2, 0].tolist() == [100.0, 0.0]
    assert c[:2, 1].tolist() == [50.0, 50.0]
    assert c[:2, 2].tolist() == [37.5, 62.5]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10_000))
def test_mass_is_conserved(L, seed):
    chain = random_chain(np.random.default_rng(seed), L)
    c = propagate_demand(chain, 20, 1.0).counts
    total = c.sum(axis=0)
    assert np.all(np.abs(total - total[0]) <= 1e-9 * total[0])
    assert np.all(c >= 0)


def test_matches_walker_simulation():
    sc = load_scenario({
        "topology": {"regions": 9}, "fleet": {"count": 1, "speed_kmh": 70}, "horizon": {"slots": 6},
        "demand": tomllib.loads((SCENARIOS / "table1.toml").read_text())["demand"],
    })
    expected = scenario_demand(sc).counts
    n0 = sc.demand.initial_counts
    users = 400_000
    sim = simulate_walkers(sc.demand.transition, n0, 6, users, np.random.default_rng(1))
    sim *= n0.sum() / users
    # binomial noise: a few standard errors of each compartment
    sd = np.sqrt(np.maximum(expected, 1.0) * n0.sum() / users)
    assert np.all(np.abs(sim - expected) < 6 * sd)


def test_step_matrix_rows_sum_to_one():
    chain = random_chain(np.random.default_rng(3), 5)
    assert np.allclose(chain.step_matrix().sum(axis=1), 1.0)


def test_bad_chains_are_rejected():
    with pytest.raises(ValueError):
        MobilityChain([[0.0, 1.5], [0.0, 0.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        MobilityChain([[0.0, 0.7, 0.6], [0, 0, 0], [0, 0, 0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        MobilityChain(np.zeros((3, 3)), [-1.0, 1.0])
    with pytest.raises(ValueError):
        propagate_demand(MobilityChain(np.zeros((2, 2)), [1.0, 1.0]), 0, 1.0)


def test_csv_dump(tmp_path):
    table = scenario_demand(make_scenario(4, 1, 3))
    path = tmp_path / "d.csv"
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("region,slot,task")
    assert len(lines) == 1 + 5 * 3
    assert lines[1].split(",")[:3] == ["1", "1", "1"]
