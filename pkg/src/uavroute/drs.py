"""Route-selection game and distributed best-response planning.

Players are UAVs, strategies are feasible routes. A task pays its
interference-free reward only when exactly one UAV serves it; shared tasks pay
nothing. UAV ``m``'s payoff is what it collects minus its own flight cost.
With a common reward table for all players the game has an exact potential,
so best-response updates always stop at a pure Nash equilibrium.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .economics import RewardModel
from .errors import ConvergenceError
from .scenario import Scenario
from .spgraph import (
    Route,
    TrajectoryGraph,
    build_graph,
    min_cost_route,
    route_cost,
    solve_sp,
)

ORDERS = ("roundrobin", "random")


def improvement_tol(value: float) -> float:
    """Smallest payoff gain counted as a strict improvement."""
    return 1e-9 * max(1.0, abs(value))


@dataclass
class RouteGame:
    """Reward tables, graphs and endpoints of one route-selection game."""

    scenario: Scenario
    tables: np.ndarray  # (M, L, T) interference-free rewards per player
    graphs: list[TrajectoryGraph]
    sources: tuple[int, ...]
    destinations: tuple[int, ...]

    @classmethod
    def from_model(cls, scenario: Scenario, model: RewardModel,
                   sources=None, destinations=None) -> "RouteGame":
        tables = np.stack([model.no_interference_table(m) for m in range(scenario.M)])
        graphs = [build_graph(scenario, tables[m], m) for m in range(scenario.M)]
        return cls(
            scenario, tables, graphs,
            tuple(sources or scenario.fleet.sources),
            tuple(destinations or scenario.fleet.destinations),
        )

    @property
    def M(self) -> int:
        return len(self.graphs)

    @property
    def literal(self) -> bool:
        return self.scenario.options.literal_virtual_edge

    def cost(self, m: int, route: Route) -> float:
        return route_cost(route, self.graphs[m], self.literal)


def occupancy(routes: Sequence[Route], L: int, T: int, skip: int | None = None) -> np.ndarray:
    """``(L, T)`` count of UAVs serving each task, optionally leaving one UAV out."""
    z = np.zeros((L, T), dtype=np.int64)
    for m, r in enumerate(routes):
        if m == skip:
            continue
        for l, t in r:
            z[l - 1, t - 1] += 1
    return z


def game_reward(k: int, z: int, m: int, model: RewardModel) -> float:
    """Reward UAV ``m`` collects on task ``k`` when ``z`` UAVs serve it."""
    if z < 0:
        raise ValueError("occupancy cannot be negative")
    return model.reward_no_interference(k, m) if z == 1 else 0.0


def player_payoff(m: int, routes: Sequence[Route], game: RouteGame) -> float:
    L, T = game.tables.shape[1:]
    z = occupancy(routes, L, T)
    table = game.tables[m]
    reward = sum(table[l - 1, t - 1] for l, t in routes[m] if z[l - 1, t - 1] == 1)
    return reward - game.cost(m, routes[m])


def best_response(m: int, routes: Sequence[Route], game: RouteGame) -> tuple[Route, float]:
    """Exact payoff-maximizing route of UAV ``m`` against the others' routes.

    Tasks already served by another UAV are worth nothing to ``m``, so their
    rewards are zeroed before the shortest-path solve; the returned payoff is
    ``m``'s game payoff for the returned route.
    """
    L, T = game.tables.shape[1:]
    taken = occupancy(routes, L, T, skip=m) > 0
    g = game.graphs[m].with_rewards(np.where(taken, 0.0, game.tables[m]))
    return solve_sp(g, game.sources[m], game.destinations[m], game.literal)


def potential(routes: Sequence[Route], game: RouteGame) -> float:
    """Exact potential: rewards of every served task, counted once, minus all costs.

    This is the Rosenthal sum of ``rho(1) + rho(2) + ... + rho(z)`` per task;
    only the first term is nonzero, so a task held by several UAVs still
    counts its reward once. The identity with payoff differences needs every
    player to see the same reward table, so unequal tables are rejected.
    """
    if not np.all(game.tables == game.tables[0]):
        raise ValueError(
            "the potential needs one reward table for all UAVs; fleet powers differ"
        )
    L, T = game.tables.shape[1:]
    z = occupancy(routes, L, T)
    reward = float(np.sum(game.tables[0][z >= 1]))
    return reward - sum(game.cost(m, r) for m, r in enumerate(routes))


@dataclass
class TraceStep:
    round: int
    uav: int
    switched: bool
    gain: float
    payoffs: list[float]
    potential: float | None


@dataclass
class DRSResult:
    routes: list[Route]
    payoffs: list[float]
    rounds: int
    is_nash: bool
    trace: list[TraceStep] = field(default_factory=list)
    initial_payoffs: list[float] = field(default_factory=list)
    initial_potential: float | None = None
    runtime_ms: float = 0.0

    @property
    def total_payoff(self) -> float:
        return float(sum(self.payoffs))

    @property
    def switches(self) -> int:
        return sum(s.switched for s in self.trace)

    @property
    def potential_trace(self) -> list[float]:
        if self.initial_potential is None:
            return []
        return [self.initial_potential] + [s.potential for s in self.trace if s.switched]

    def to_json(self) -> dict:
        return {
            "routes": [r.to_list() for r in self.routes],
            "payoffs": self.payoffs,
            "total_payoff": self.total_payoff,
            "potential_trace": self.potential_trace,
            "rounds": self.rounds,
            "is_nash": self.is_nash,
            "runtime_ms": self.runtime_ms,
        }


def nash_gaps(routes: Sequence[Route], game: RouteGame) -> list[float]:
    """Best-response gain available to each UAV (all <= tolerance at an equilibrium)."""
    gaps = []
    for m in range(game.M):
        current = player_payoff(m, routes, game)
        _, best = best_response(m, routes, game)
        gaps.append(best - current)
    return gaps


def is_nash(routes: Sequence[Route], game: RouteGame) -> bool:
    return all(
        gap <= improvement_tol(player_payoff(m, routes, game))
        for m, gap in enumerate(nash_gaps(routes, game))
    )


def run_drs(
    scenario: Scenario,
    model: RewardModel | None = None,
    *,
    game: RouteGame | None = None,
    initial: Sequence[Route] | None = None,
    order: str = "roundrobin",
    seed: int | None = None,
    max_rounds: int = 10_000,
) -> DRSResult:
    """Best-response dynamics from the cheapest routes until nobody can improve.

    Each round visits every UAV once (by index, or in a fresh random
    permutation when ``order="random"``). A UAV switches only when its best
    response beats its current payoff by more than :func:`improvement_tol`.
    """
    t0 = time.perf_counter()
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    if game is None:
        if model is None:
            raise ValueError("pass a reward model or a prepared game")
        game = RouteGame.from_model(scenario, model)
    M = game.M
    if initial is None:
        routes = [
            min_cost_route(game.graphs[m], game.sources[m], game.destinations[m])
            for m in range(M)
        ]
    else:
        routes = [Route(r.vertices, m) for m, r in enumerate(initial)]
    common = bool(np.all(game.tables == game.tables[0]))
    rng = np.random.default_rng(seed)

    def snapshot():
        return [player_payoff(m, routes, game) for m in range(M)]

    result = DRSResult(routes, [], 0, False, initial_payoffs=snapshot())
    if common:
        result.initial_potential = potential(routes, game)
    for rnd in range(1, max_rounds + 1):
        sequence = rng.permutation(M) if order == "random" else range(M)
        changed = False
        for m in sequence:
            m = int(m)
            current = player_payoff(m, routes, game)
            candidate, value = best_response(m, routes, game)
            gain = value - current
            switched = gain > improvement_tol(current) and candidate.vertices != routes[m].vertices
            if switched:
                routes[m] = Route(candidate.vertices, m)
                changed = True
            result.trace.append(TraceStep(
                rnd, m, switched, gain, snapshot(),
                potential(routes, game) if common and switched else None,
            ))
        if not changed:
            result.rounds = rnd
            break
    else:
        raise ConvergenceError(
            f"best-response dynamics did not settle within {max_rounds} rounds"
        )
    result.routes = routes
    result.payoffs = snapshot()
    result.is_nash = is_nash(routes, game)
    result.runtime_ms = (time.perf_counter() - t0) * 1e3
    return result

