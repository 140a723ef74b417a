"""Single-UAV time-expanded trajectory graph and its exact shortest-path solver.

A vertex ``(l, t)`` means "serve region ``l`` during slot ``t``". An edge
``(l, t) -> (l2, t2)`` exists when the flight between the two region centers
fits in the ``t2 - t - 1`` slots in between; staying put (``l2 == l``,
``t2 == t + 1``) is always allowed. Every edge points forward in time, so the
graph is a DAG and one relaxation sweep in slot order finds shortest paths
even though rewards make edge weights negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .economics import hop_costs
from .errors import InfeasibleError
from .scenario import Scenario

Vertex = tuple[int, int]


@dataclass(frozen=True)
class Route:
    """Vertices ``(region, slot)`` (1-based) visited by one UAV, in slot order."""

    vertices: tuple[Vertex, ...]
    uav: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple((int(l), int(t)) for l, t in self.vertices))

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def edges(self) -> list[tuple[Vertex, Vertex]]:
        v = self.vertices
        return list(zip(v[:-1], v[1:]))

    def slots(self) -> dict[int, int]:
        """Slot -> region served in that slot."""
        return {t: l for l, t in self.vertices}

    def to_list(self) -> list[list[int]]:
        return [[l, t] for l, t in self.vertices]


def min_gap_matrix(centers: np.ndarray, speed: float, slot_s: float) -> np.ndarray:
    """Smallest slot gap ``g >= 1`` with flight time ``<= (g - 1) * slot_s``."""
    diff = centers[:, None, :] - centers[None, :, :]
    sigma = np.hypot(diff[..., 0], diff[..., 1]) / speed
    g = 1 + np.ceil(sigma / slot_s).astype(np.int64)
    # guard the float boundary so that g matches the inequality exactly
    g = np.where(sigma > (g - 1) * slot_s, g + 1, g)
    g = np.where((g > 1) & (sigma <= (g - 2) * slot_s), g - 1, g)
    return g


@dataclass(frozen=True)
class TrajectoryGraph:
    """Vertex rewards and implicit edge set of one UAV's trajectory graph."""

    rewards: np.ndarray  # (L, T)
    gap_min: np.ndarray  # (L, L) int
    hop_cost: np.ndarray  # (T,) cost of an edge by slot gap
    start_charge: float  # hover cost of the first served slot
    speed: float
    uav: int = 0

    @property
    def L(self) -> int:
        return self.rewards.shape[0]

    @property
    def T(self) -> int:
        return self.rewards.shape[1]

    def has_edge(self, a: Vertex, b: Vertex) -> bool:
        (l, t), (l2, t2) = a, b
        return t2 > t and t2 - t >= self.gap_min[l - 1, l2 - 1]

    def edge_cost(self, a: Vertex, b: Vertex) -> float:
        return float(self.hop_cost[b[1] - a[1]])

    def reward(self, v: Vertex) -> float:
        return float(self.rewards[v[0] - 1, v[1] - 1])

    def successors(self, v: Vertex) -> Iterator[Vertex]:
        l, t = v
        for t2 in range(t + 1, self.T + 1):
            for l2 in range(1, self.L + 1):
                if t2 - t >= self.gap_min[l - 1, l2 - 1]:
                    yield (l2, t2)

    def edges(self) -> Iterator[tuple[Vertex, Vertex]]:
        for t in range(1, self.T + 1):
            for l in range(1, self.L + 1):
                for w in self.successors((l, t)):
                    yield (l, t), w

    def edge_count(self) -> int:
        gaps = np.arange(1, self.T)
        per_gap = (gaps[:, None, None] >= self.gap_min[None]).sum(axis=(1, 2))
        return int(np.sum(per_gap * (self.T - gaps)))

    def with_rewards(self, rewards: np.ndarray) -> "TrajectoryGraph":
        return TrajectoryGraph(
            np.asarray(rewards, dtype=float), self.gap_min, self.hop_cost,
            self.start_charge, self.speed, self.uav,
        )

    def reachable_to(self, destination: int) -> np.ndarray:
        """Boolean ``(L, T)``: vertices from which ``(destination, T)`` is reachable."""
        L, T = self.L, self.T
        reach = np.zeros((L, T), dtype=bool)
        reach[destination - 1, T - 1] = True
        for t in range(T - 2, -1, -1):
            gaps = np.arange(1, T - t)
            # any later reachable vertex whose gap clears the flight time
            later = reach[:, t + 1:]  # (l2, gap-1)
            ok = gaps[None, None, :] >= self.gap_min[:, :, None]  # (l, l2, gap-1)
            reach[:, t] = np.any(ok & later[None, :, :], axis=(1, 2))
        return reach


def build_graph(scenario: Scenario, rewards, m: int = 0) -> TrajectoryGraph:
    """Trajectory graph of UAV ``m`` (0-based) with caller-supplied ``(L, T)`` rewards."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != (scenario.L, scenario.T):
        raise ValueError(f"rewards must have shape {(scenario.L, scenario.T)}, got {rewards.shape}")
    speed = float(scenario.fleet.speeds[m])
    costs = hop_costs(scenario, m)
    return TrajectoryGraph(
        rewards=rewards,
        gap_min=min_gap_matrix(scenario.topology.centers, speed, scenario.physics.slot_s),
        hop_cost=costs,
        start_charge=float(costs[0]),
        speed=speed,
        uav=m,
    )


@dataclass(frozen=True)
class ConvertedGraph:
    """Edge-weighted form: ``w = cost - reward(head)`` plus a virtual start vertex.

    The virtual edge into ``(source, 1)`` weighs ``-reward(source, 1)`` plus
    the first slot's hover charge, so every served slot carries exactly one
    hover charge. ``literal_virtual_edge`` drops that charge.
    """

    graph: TrajectoryGraph
    source: int
    destination: int
    literal_virtual_edge: bool = False

    @property
    def virtual_weight(self) -> float:
        w = -self.graph.reward((self.source, 1))
        return w if self.literal_virtual_edge else w + self.graph.start_charge

    def weight(self, a: Vertex, b: Vertex) -> float:
        return self.graph.edge_cost(a, b) - self.graph.reward(b)

    @property
    def vertex_count(self) -> int:
        return self.graph.L * self.graph.T + 1

    @property
    def edge_count(self) -> int:
        return self.graph.edge_count() + 1


def convert(g: TrajectoryGraph, source: int, destination: int,
            literal_virtual_edge: bool = False) -> ConvertedGraph:
    for name, r in (("source", source), ("destination", destination)):
        if not 1 <= r <= g.L:
            raise ValueError(f"{name} region {r} outside 1..{g.L}")
    return ConvertedGraph(g, source, destination, literal_virtual_edge)


def shortest_route(cg: ConvertedGraph) -> tuple[Route, float]:
    """Minimum-weight route from the virtual start to ``(destination, T)``.

    Returns the route and its payoff (minus the path weight). Ties go to the
    predecessor with the smallest region index, then the earliest slot.
    """
    g = cg.graph
    dist, pred_l, pred_t = _kernels.dag_relax(
        g.gap_min, g.hop_cost, g.rewards, cg.source - 1, cg.virtual_weight
    )
    dl, T = cg.destination - 1, g.T
    if not np.isfinite(dist[dl, T - 1]):
        raise InfeasibleError(
            f"vertex (destination={cg.destination}, T={T}) is unreachable from "
            f"(source={cg.source}, 1)"
        )
    path = []
    l, t = dl, T - 1
    while t >= 0 and l >= 0:
        path.append((l + 1, t + 1))
        l, t = pred_l[l, t], pred_t[l, t]
    return Route(tuple(reversed(path)), g.uav), -float(dist[dl, T - 1])


def bellman_ford_route(cg: ConvertedGraph) -> tuple[Route, float]:
    """Same problem solved by textbook Bellman-Ford over an explicit edge list.

    Node 0 is the virtual start and node ``a(l, t)`` is vertex ``(l, t)``.
    """
    g = cg.graph
    L = g.L
    tails, heads, weights = [0], [cg.source], [cg.virtual_weight]
    for a, b in g.edges():
        tails.append(a[0] + L * (a[1] - 1))
        heads.append(b[0] + L * (b[1] - 1))
        weights.append(cg.weight(a, b))
    dist, pred = _kernels.bellman_ford(
        L * g.T + 1,
        np.array(tails, dtype=np.int64),
        np.array(heads, dtype=np.int64),
        np.array(weights, dtype=float),
        0,
    )
    target = cg.destination + L * (g.T - 1)
    if not np.isfinite(dist[target]):
        raise InfeasibleError(f"vertex (destination={cg.destination}, T={g.T}) is unreachable")
    path = []
    node = target
    while node > 0:
        path.append(((node - 1) % L + 1, (node - 1) // L + 1))
        node = pred[node]
    return Route(tuple(reversed(path)), g.uav), -float(dist[target])


def route_cost(route: Route, g: TrajectoryGraph, literal_virtual_edge: bool = False) -> float:
    c = sum(g.edge_cost(a, b) for a, b in route.edges())
    return c if literal_virtual_edge else c + g.start_charge


def route_payoff(route: Route, g: TrajectoryGraph, literal_virtual_edge: bool = False) -> float:
    """Total rewards minus total costs of ``route``, evaluated on the original graph."""
    return sum(g.reward(v) for v in route) - route_cost(route, g, literal_virtual_edge)


def route_problems(route: Route, g: TrajectoryGraph, source: int, destination: int) -> list[str]:
    """Reasons ``route`` is not a feasible source-to-destination route (empty if feasible)."""
    v = route.vertices
    if not v:
        return ["route is empty"]
    out = []
    if v[0] != (source, 1):
        out.append(f"starts at {v[0]}, expected ({source}, 1)")
    if v[-1] != (destination, g.T):
        out.append(f"ends at {v[-1]}, expected ({destination}, {g.T})")
    for l, t in v:
        if not (1 <= l <= g.L and 1 <= t <= g.T):
            out.append(f"vertex {(l, t)} outside the graph")
    for a, b in route.edges():
        if not g.has_edge(a, b):
            out.append(f"edge {a} -> {b} is not flyable")
    return out


def solve_sp(g: TrajectoryGraph, source: int, destination: int,
             literal_virtual_edge: bool = False) -> tuple[Route, float]:
    return shortest_route(convert(g, source, destination, literal_virtual_edge))


def min_cost_route(g: TrajectoryGraph, source: int, destination: int) -> Route:
    """Cheapest feasible route, ignoring rewards."""
    route, _ = solve_sp(g.with_rewards(np.zeros_like(g.rewards)), source, destination)
    return route


def random_route(g: TrajectoryGraph, source: int, destination: int, rng) -> Route:
    """A feasible route drawn by walking to uniformly chosen viable successors."""
    reach = g.reachable_to(destination)
    if not reach[source - 1, 0]:
        raise InfeasibleError(f"({destination}, {g.T}) unreachable from ({source}, 1)")
    v = (source, 1)
    path = [v]
    while v != (destination, g.T):
        options = [w for w in g.successors(v) if reach[w[0] - 1, w[1] - 1]]
        v = options[rng.integers(len(options))]
        path.append(v)
    return Route(tuple(path), g.uav)


def enumerate_routes(g: TrajectoryGraph, source: int, destination: int,
                     limit: int | None = None) -> Iterator[Route]:
    """Every feasible route, depth first; stops after ``limit`` routes if given."""
    reach = g.reachable_to(destination)
    if not reach[source - 1, 0]:
        return
    count = 0
    stack: list[tuple[Vertex, ...]] = [((source, 1),)]
    while stack:
        path = stack.pop()
        v = path[-1]
        if v == (destination, g.T):
            yield Route(path, g.uav)
            count += 1
            if limit is not None and count >= limit:
                return
            continue
        nxt = [w for w in g.successors(v) if reach[w[0] - 1, w[1] - 1]]
        for w in reversed(nxt):
            stack.append(path + (w,))


def as_route(vertices: Sequence[Sequence[int]], uav: int = 0) -> Route:
    return Route(tuple((int(l), int(t)) for l, t in vertices), uav)
