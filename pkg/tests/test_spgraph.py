import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavroute.errors import InfeasibleError
from uavroute.scenario import make_scenario
from uavroute.spgraph import (
    Route,
    as_route,
    bellman_ford_route,
    build_graph,
    convert,
    enumerate_routes,
    min_cost_route,
    min_gap_matrix,
    random_route,
    route_cost,
    route_payoff,
    route_problems,
    solve_sp,
)

import oracles


def instance(seed, L=None, T=None):
    rng = np.random.default_rng(seed)
    L = L or int(rng.integers(2, 10))
    T = T or int(rng.integers(2, 7))
    sc = make_scenario(L, 1, T, speed_kmh=float(rng.uniform(20, 140)),
                       sources=[int(rng.integers(1, L + 1))],
                       destinations=[int(rng.integers(1, L + 1))])
    rho = rng.uniform(0, 5, (L, T))
    return sc, build_graph(sc, rho), rho


def test_min_gap_matrix():
    c = np.array([[0.0, 0.0], [100.0, 0.0], [1000.0, 0.0]])
    g = min_gap_matrix(c, 10.0, 5.0)
    # [DERIVED] 10 s of flight needs 2 slots in between, 100 s needs 20
    assert g.tolist() == [[1, 3, 21], [3, 1, 19], [21, 19, 1]]
    # exactly on the boundary: 10 s of flight fits in 2 slots of 5 s
    assert min_gap_matrix(c[:2], 20.0, 5.0)[0, 1] == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_edges_match_geometry(seed):
    sc, g, _ = instance(seed)
    centers, v, e = sc.topology.centers, float(sc.fleet.speeds[0]), sc.physics.slot_s
    for t in range(1, sc.T + 1):
        for l in range(1, sc.L + 1):
            ours = set(g.successors((l, t)))
            ref = {(l2, t2) for t2 in range(t + 1, sc.T + 1) for l2 in range(1, sc.L + 1)
                   if oracles.flyable((l, t), (l2, t2), centers, v, e)}
            assert ours == ref
    assert g.edge_count() == sum(1 for _ in g.edges())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_sp_equals_enumeration(seed, literal):
    sc, g, rho = instance(seed)
    s, d = sc.fleet.sources[0], sc.fleet.destinations[0]
    routes = oracles.all_routes(sc.topology.centers, float(sc.fleet.speeds[0]), sc.physics.slot_s,
                                sc.T, s, d)
    if not routes:
        with pytest.raises(InfeasibleError):
            solve_sp(g, s, d, literal)
        return
    best = max(oracles.route_payoff(r, rho, float(sc.fleet.speeds[0]), sc.physics, literal)
               for r in routes)
    route, payoff = solve_sp(g, s, d, literal)
    assert payoff == pytest.approx(best, abs=1e-9)
    assert route_payoff(route, g, literal) == pytest.approx(payoff, abs=1e-9)
    assert not route_problems(route, g, s, d)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_bellman_ford_agrees(seed):
    sc, g, _ = instance(seed)
    cg = convert(g, sc.fleet.sources[0], sc.fleet.destinations[0])
    try:
        _, a = bellman_ford_route(cg)
    except InfeasibleError:
        return
    _, b = solve_sp(g, cg.source, cg.destination)
    assert a == pytest.approx(b, abs=1e-9)


def test_enumerate_routes_matches_oracle():
    sc, g, _ = instance(11, L=4, T=5)
    s, d = sc.fleet.sources[0], sc.fleet.destinations[0]
    ours = {r.vertices for r in enumerate_routes(g, s, d)}
    ref = set(oracles.all_routes(sc.topology.centers, float(sc.fleet.speeds[0]),
                                 sc.physics.slot_s, sc.T, s, d))
    assert ours == ref and ours


def test_hover_route_costs():
    sc = make_scenario(9, 1, 4)
    g = build_graph(sc, np.zeros((9, 4)))
    r = as_route([(3, 1), (3, 2), (3, 3), (3, 4)])
    # [DERIVED] four hover slots at 0.822792 each
    assert route_cost(r, g) == pytest.approx(4 * 0.822792, rel=1e-12)
    assert route_cost(r, g, literal_virtual_edge=True) == pytest.approx(3 * 0.822792, rel=1e-12)
    # cruising is cheaper than hovering, so the cheapest route flies between the ends
    cheapest = min(oracles.route_cost(list(x), 70 / 3.6, sc.physics) for x in
                   oracles.all_routes(sc.topology.centers, 70 / 3.6, 60.0, 4, 3, 3))
    assert route_cost(min_cost_route(g, 3, 3), g) == pytest.approx(cheapest, rel=1e-12)
    assert min_cost_route(g, 3, 3).vertices == ((3, 1), (3, 4))


def test_sp_prefers_rich_region():
    sc = make_scenario(9, 1, 6, speed_kmh=70)
    rho = np.zeros((9, 6))
    rho[5, 1:5] = 50.0
    route, payoff = solve_sp(build_graph(sc, rho), 3, 3)
    # the neighbor is one slot of flight away in each direction
    assert route.vertices == ((3, 1), (6, 3), (6, 4), (3, 6))
    assert payoff > 0


def test_infeasible_endpoint():
    sc = make_scenario(36, 1, 2, speed_kmh=10)
    g = build_graph(sc, np.zeros((36, 2)))
    with pytest.raises(InfeasibleError):
        solve_sp(g, 1, 36)
    with pytest.raises(ValueError):
        solve_sp(g, 0, 1)


def test_route_problems_flag_everything():
    sc = make_scenario(9, 1, 4, speed_kmh=10)
    g = build_graph(sc, np.zeros((9, 4)))
    bad = as_route([(1, 1), (9, 2), (2, 3)])
    problems = route_problems(bad, g, 3, 3)
    assert len(problems) == 4  # wrong start, wrong end, two unflyable hops


def test_random_routes_are_feasible():
    sc, g, _ = instance(3, L=9, T=6)
    s, d = sc.fleet.sources[0], sc.fleet.destinations[0]
    rng = np.random.default_rng(0)
    for _ in range(50):
        try:
            r = random_route(g, s, d, rng)
        except InfeasibleError:
            return
        assert not route_problems(r, g, s, d)


def test_route_helpers():
    r = Route(((1, 1), (2, 3)), 0)
    assert r.edges() == [((1, 1), (2, 3))]
    assert r.slots() == {1: 1, 3: 2}
    assert r.to_list() == [[1, 1], [2, 3]]
    assert math.isclose(len(r), 2)
