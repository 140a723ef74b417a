import numpy as np
import pytest

from uavroute.drs import (
    RouteGame,
    best_response,
    game_reward,
    improvement_tol,
    is_nash,
    nash_gaps,
    occupancy,
    player_payoff,
    potential,
    run_drs,
)
from uavroute.errors import ConvergenceError
from uavroute.scenario import make_scenario, task_index
from uavroute.spgraph import Route, random_route, solve_sp

import oracles
from helpers import random_model


def game_for(seed, L=9, M=3, T=8, **kw):
    rng = np.random.default_rng(seed)
    ends = rng.integers(1, L + 1, (2, M))
    sc = make_scenario(L, M, T, sources=ends[0].tolist(), destinations=ends[1].tolist(), **kw)
    model = random_model(sc, seed)
    return sc, model, RouteGame.from_model(sc, model)


def random_profile(game, rng):
    return [random_route(game.graphs[m], game.sources[m], game.destinations[m], rng)
            for m in range(game.M)]


def test_game_reward():
    sc, model, _ = game_for(0)
    k = task_index(2, 3, 9)
    assert game_reward(k, 1, 0, model) == model.reward_no_interference(k, 0)
    assert game_reward(k, 0, 0, model) == 0.0 and game_reward(k, 2, 0, model) == 0.0
    with pytest.raises(ValueError):
        game_reward(k, -1, 0, model)


@pytest.mark.parametrize("seed", range(10))
def test_payoff_matches_hand_evaluation(seed):
    sc, _, game = game_for(seed)
    routes = random_profile(game, np.random.default_rng(seed))
    speeds = [float(s) for s in sc.fleet.speeds]
    for m in range(game.M):
        ref = oracles.game_payoff(m, routes, game.tables, speeds, sc.physics)
        assert player_payoff(m, routes, game) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_single_player_is_sp():
    sc, _, game = game_for(4, M=1)
    res = run_drs(sc, game=game)
    _, sp = solve_sp(game.graphs[0], game.sources[0], game.destinations[0])
    assert res.total_payoff == pytest.approx(sp)


@pytest.mark.parametrize("seed", range(10))
def test_best_response_beats_every_route(seed):
    sc, _, game = game_for(seed, L=4, M=2, T=5)
    rng = np.random.default_rng(seed)
    routes = random_profile(game, rng)
    speeds = [float(s) for s in sc.fleet.speeds]
    m = int(rng.integers(game.M))
    br, value = best_response(m, routes, game)
    options = oracles.all_routes(sc.topology.centers, speeds[m], sc.physics.slot_s, sc.T,
                                 game.sources[m], game.destinations[m])
    best = max(oracles.game_payoff(m, routes[:m] + [r] + routes[m + 1:], game.tables, speeds, sc.physics)
               for r in options)
    assert value == pytest.approx(best, abs=1e-9)
    trial = list(routes)
    trial[m] = br
    assert player_payoff(m, trial, game) == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_potential_tracks_unilateral_deviations(seed):
    sc, _, game = game_for(seed, M=4, T=10)
    rng = np.random.default_rng(seed)
    routes = random_profile(game, rng)
    for _ in range(20):
        m = int(rng.integers(game.M))
        new = list(routes)
        new[m] = random_route(game.graphs[m], game.sources[m], game.destinations[m], rng)
        d_psi = potential(new, game) - potential(routes, game)
        d_u = player_payoff(m, new, game) - player_payoff(m, routes, game)
        assert abs(d_psi - d_u) <= 1e-9
        routes = new


def test_potential_needs_equal_tables():
    sc, model, _ = game_for(0, M=2, power_dbm=[10.0, 20.0])
    game = RouteGame.from_model(sc, model)
    with pytest.raises(ValueError):
        potential(random_profile(game, np.random.default_rng(0)), game)


@pytest.mark.parametrize("order", ["roundrobin", "random"])
@pytest.mark.parametrize("seed", range(5))
def test_converges_to_nash(order, seed):
    sc, _, game = game_for(seed, L=16, M=4, T=12)
    res = run_drs(sc, game=game, order=order, seed=seed)
    assert res.is_nash and is_nash(res.routes, game)
    assert all(g <= improvement_tol(1.0) * 1e3 for g in nash_gaps(res.routes, game))
    psi = res.potential_trace
    assert all(b > a for a, b in zip(psi, psi[1:]))
    assert res.total_payoff == pytest.approx(sum(player_payoff(m, res.routes, game) for m in range(4)))


def test_random_order_is_seeded():
    sc, _, game = game_for(1, L=16, M=4, T=12)
    a = run_drs(sc, game=game, order="random", seed=7)
    b = run_drs(sc, game=game, order="random", seed=7)
    assert [r.vertices for r in a.routes] == [r.vertices for r in b.routes]
    assert [(s.uav, s.switched) for s in a.trace] == [(s.uav, s.switched) for s in b.trace]


def test_equilibrium_start_stops_after_one_round():
    sc, _, game = game_for(2, L=9, M=2, T=6)
    first = run_drs(sc, game=game)
    again = run_drs(sc, game=game, initial=first.routes)
    assert again.rounds == 1 and again.switches == 0


def test_round_cap():
    sc, _, game = game_for(3, L=16, M=4, T=12)
    if run_drs(sc, game=game).rounds > 1:
        with pytest.raises(ConvergenceError):
            run_drs(sc, game=game, max_rounds=1)


def test_bad_arguments():
    sc, model, game = game_for(0)
    with pytest.raises(ValueError):
        run_drs(sc, game=game, order="sideways")
    with pytest.raises(ValueError):
        run_drs(sc)


def test_occupancy():
    routes = [Route(((1, 1), (2, 2)), 0), Route(((1, 1), (1, 2)), 1)]
    z = occupancy(routes, 2, 2)
    assert z.tolist() == [[2, 1], [0, 1]]
    assert occupancy(routes, 2, 2, skip=0).tolist() == [[1, 1], [0, 0]]
