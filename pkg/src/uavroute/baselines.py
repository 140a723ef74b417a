"""Benchmark planners: greedy one-hop (GP) and periodic circular (CP)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .drs import RouteGame, player_payoff
from .economics import RewardModel
from .errors import InfeasibleError
from .scenario import Scenario
from .spgraph import Route, TrajectoryGraph, min_gap_matrix, route_problems

Vertex = tuple[int, int]


@dataclass
class PlanResult:
    """Routes from a heuristic planner with their game payoffs."""

    routes: list[Route]
    payoffs: list[float]

    @property
    def total_payoff(self) -> float:
        return float(sum(self.payoffs))

    def to_json(self) -> dict:
        return {
            "routes": [r.to_list() for r in self.routes],
            "payoffs": self.payoffs,
            "total_payoff": self.total_payoff,
        }


def hop_candidates(v: Vertex, g: TrajectoryGraph, reach: np.ndarray) -> list[Vertex]:
    """Earliest arrival in every region from ``v`` that can still make the destination."""
    l, t = v
    out = []
    for l2 in range(1, g.L + 1):
        t2 = t + int(g.gap_min[l - 1, l2 - 1])
        if t2 <= g.T and reach[l2 - 1, t2 - 1]:
            out.append((l2, t2))
    return out


def greedy_step(v: Vertex, g: TrajectoryGraph, taken: np.ndarray, reach: np.ndarray) -> Vertex:
    """Next vertex maximizing reward minus hop cost; ties go to the lower region.

    ``taken[l-1, t-1]`` marks tasks another UAV has already committed to;
    they are worth nothing, as in the route-selection game.
    """
    best, arg = -math.inf, None
    for w in hop_candidates(v, g, reach):
        rho = 0.0 if taken[w[0] - 1, w[1] - 1] else g.reward(w)
        score = rho - g.edge_cost(v, w)
        if score > best:
            best, arg = score, w
    if arg is None:
        raise InfeasibleError(f"no way to reach the destination from {v}")
    return arg


def run_gp(scenario: Scenario, model: RewardModel | None = None, *,
           game: RouteGame | None = None) -> PlanResult:
    """Greedy planning, one hop at a time.

    UAVs take turns in slot order: whichever has the earliest current slot
    commits its next hop (lower index first on ties), seeing the hops the
    others have committed so far.
    """
    if game is None:
        game = RouteGame.from_model(scenario, model)
    M = game.M
    L, T = game.tables.shape[1:]
    reach = [g.reachable_to(game.destinations[m]) for m, g in enumerate(game.graphs)]
    for m in range(M):
        if not reach[m][game.sources[m] - 1, 0]:
            raise InfeasibleError(
                f"UAV {m}: ({game.destinations[m]}, {T}) unreachable from ({game.sources[m]}, 1)"
            )
    paths = [[(game.sources[m], 1)] for m in range(M)]
    occupied = np.zeros((M, L, T), dtype=bool)
    for m in range(M):
        occupied[m, game.sources[m] - 1, 0] = True
    while True:
        active = [m for m in range(M) if paths[m][-1][1] < T]
        if not active:
            break
        m = min(active, key=lambda i: (paths[i][-1][1], i))
        taken = occupied.any(axis=0) & ~occupied[m]
        w = greedy_step(paths[m][-1], game.graphs[m], taken, reach[m])
        paths[m].append(w)
        occupied[m, w[0] - 1, w[1] - 1] = True
    routes = [Route(tuple(p), m) for m, p in enumerate(paths)]
    return PlanResult(routes, [player_payoff(m, routes, game) for m in range(M)])


def circular_route(m: int, cycle: Sequence[int], g: TrajectoryGraph, destination: int) -> Route:
    """Fly ``cycle`` repeatedly, serving each stop for one slot, then head home.

    ``cycle`` starts at the UAV's source; a trailing repeat of the first
    region is optional. Hops take the fewest slots the flight allows. Once
    the next stop would leave no time to reach ``destination`` by the last
    slot, the UAV flies there and hovers until the end. At least one full
    lap must fit, otherwise the cycle is rejected.
    """
    stops = [int(r) for r in cycle]
    if len(stops) > 1 and stops[-1] == stops[0]:
        stops = stops[:-1]
    if not stops:
        raise ValueError("cycle is empty")
    reach = g.reachable_to(destination)
    T = g.T
    v = (stops[0], 1)
    if not reach[v[0] - 1, 0]:
        raise InfeasibleError(f"({destination}, {T}) unreachable from {v}")
    path = [v]
    hops = 0
    while True:
        nxt = stops[(hops + 1) % len(stops)]
        t2 = v[1] + int(g.gap_min[v[0] - 1, nxt - 1])
        if t2 > T or not reach[nxt - 1, t2 - 1]:
            break
        v = (nxt, t2)
        path.append(v)
        hops += 1
    # the flight home closes the lap when home is the cycle's start
    closes = destination == stops[0]
    if hops < len(stops) - (1 if closes else 0):
        raise InfeasibleError(f"cycle {list(cycle)} does not fit in {T} slots at this speed")
    l, t = v
    if l != destination:
        t += int(g.gap_min[l - 1, destination - 1])
        path.append((destination, t))
    while t < T:
        t += 1
        path.append((destination, t))
    return Route(tuple(path), m)


def default_cycles(scenario: Scenario, sources: Sequence[int] | None = None,
                   destinations: Sequence[int] | None = None) -> list[list[int]]:
    """Split regions among UAVs by angular sector around the control station.

    Each UAV's cycle starts at its source and visits its sector in
    nearest-neighbor order. The tour is cut short so one lap, plus the flight
    to the destination, fits in the horizon.
    """
    sources = list(sources or scenario.fleet.sources)
    destinations = list(destinations or scenario.fleet.destinations)
    centers = scenario.topology.centers
    cs = scenario.control_station
    origin = centers[cs - 1]
    others = [l for l in range(1, scenario.L + 1) if l != cs]
    angle = {l: math.atan2(*(centers[l - 1] - origin)[::-1]) % (2 * math.pi) for l in others}
    others.sort(key=lambda l: (angle[l], l))
    sectors = [list(part) for part in np.array_split(np.array(others, dtype=int), len(sources))]
    cycles = []
    for m, (src, sector) in enumerate(zip(sources, sectors)):
        gap = min_gap_matrix(centers, float(scenario.fleet.speeds[m]), scenario.physics.slot_s)
        todo = [int(l) for l in sector if l != src]
        cycle = [src]
        while todo:
            here = centers[cycle[-1] - 1]
            nxt = min(todo, key=lambda l: (float(np.hypot(*(centers[l - 1] - here))), l))
            if _lap_slots(cycle + [nxt], destinations[m], gap) > scenario.T:
                break
            cycle.append(nxt)
            todo.remove(nxt)
        cycle.append(src)
        cycles.append(cycle)
    return cycles


def _lap_slots(stops: list[int], destination: int, gap: np.ndarray) -> int:
    """Slots used by one lap over ``stops`` that ends at ``destination``."""
    legs = list(zip(stops, stops[1:] + [stops[0]]))
    t = 1 + sum(int(gap[a - 1, b - 1]) for a, b in legs)
    if destination != stops[0]:
        t += int(gap[stops[0] - 1, destination - 1])
    return t


def run_cp(scenario: Scenario, model: RewardModel | None = None, *,
           game: RouteGame | None = None, cycles: Sequence[Sequence[int]] | None = None) -> PlanResult:
    if game is None:
        game = RouteGame.from_model(scenario, model)
    if cycles is None:
        cycles = default_cycles(scenario, game.sources, game.destinations)
    routes = []
    for m, cycle in enumerate(cycles):
        if cycle[0] != game.sources[m]:
            raise ValueError(f"cycle of UAV {m} must start at its source {game.sources[m]}")
        routes.append(circular_route(m, cycle, game.graphs[m], game.destinations[m]))
    for m, r in enumerate(routes):
        problems = route_problems(r, game.graphs[m], game.sources[m], game.destinations[m])
        if problems:
            raise InfeasibleError(f"UAV {m}: {problems[0]}")
    return PlanResult(routes, [player_payoff(m, routes, game) for m in range(len(routes))])
