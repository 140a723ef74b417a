"""Exact centralized multi-UAV planning on the joint state graph.

A joint state ``q = (q_1, ..., q_M)`` lists the region each UAV serves in a
slot, with 0 for "moving". Serving regions must be pairwise distinct. Whether
a UAV may land in a region depends on where it last served and how many slots
it has been flying, which the plain ``(q, t)`` vertex does not record. The
solver therefore runs its dynamic program over extended states that also carry
``(last region, slots moving)`` for each moving UAV. The moving count is
capped at the longest flight any pair of regions needs, which keeps the
search exact.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .economics import PowerModel, RewardModel, propulsion_power
from .errors import InfeasibleError, ResourceLimitError
from .scenario import Scenario, task_index
from .spgraph import Route, min_gap_matrix, route_cost, build_graph


def count_states(M: int, L: int) -> int:
    """Number of joint state vectors: choose who moves, place the rest injectively."""
    return sum(
        math.comb(M, m) * math.perm(L, M - m) for m in range(M + 1) if M - m <= L
    )


def enumerate_states(M: int, L: int, cap: int = 1_000_000) -> list[tuple[int, ...]]:
    if M < 1 or L < 1:
        raise ValueError("need M >= 1 and L >= 1")
    B = count_states(M, L)
    if B > cap:
        raise ResourceLimitError(
            f"{B} joint states exceed the cap of {cap}; use the distributed solver instead"
        )
    out = []

    def extend(prefix, used):
        if len(prefix) == M:
            out.append(tuple(prefix))
            return
        for r in range(L + 1):
            if r == 0 or r not in used:
                extend(prefix + [r], used | {r} if r else used)

    extend([], frozenset())
    return out


def joint_reward(q: Sequence[int], t: int, model: RewardModel) -> float:
    """Sum of every serving UAV's interference-coupled reward in slot ``t``."""
    L = model.scenario.L
    return sum(
        model.reward_with_interference(task_index(r, t, L), m, q)
        for m, r in enumerate(q) if r != 0
    )


def feasible_edge(
    q_next: Sequence[int],
    last_region: Sequence[int],
    moving_slots: Sequence[int],
    scenario: Scenario,
) -> tuple[bool, tuple[int, ...], tuple[int, ...]]:
    """Check the step into ``q_next`` and return the updated trackers.

    ``last_region[m]`` is the region UAV ``m`` last served and
    ``moving_slots[m]`` how many consecutive slots it has been flying. A UAV
    may land in region ``r`` when the flight from its last region fits in
    those slots. Starting or continuing a flight is always allowed.
    """
    slot = scenario.physics.slot_s
    centers = scenario.topology.centers
    new_last, new_moving = [], []
    ok = True
    for m, r in enumerate(q_next):
        if r == 0:
            new_last.append(last_region[m])
            new_moving.append(moving_slots[m] + 1)
            continue
        a = centers[last_region[m] - 1]
        b = centers[r - 1]
        sigma = math.hypot(*(a - b)) / scenario.fleet.speeds[m]
        if sigma > moving_slots[m] * slot:
            ok = False
        new_last.append(r)
        new_moving.append(0)
    return ok, tuple(new_last), tuple(new_moving)


def state_cost(q: Sequence[int], scenario: Scenario, legacy: bool | None = None) -> float:
    """Cost of one slot spent in state ``q``: each UAV either flies or hovers."""
    phys = scenario.physics
    legacy = scenario.options.legacy_crs_cost if legacy is None else legacy
    e = phys.slot_s
    if legacy:
        return sum(phys.gamma_move * e if r == 0 else phys.gamma_hover * e for r in q)
    model = PowerModel.from_physics(phys)
    hover = phys.gamma_hover * float(propulsion_power(0.0, model)) * e
    total = 0.0
    for m, r in enumerate(q):
        if r == 0:
            total += phys.gamma_move * float(propulsion_power(scenario.fleet.speeds[m], model)) * e
        else:
            total += hover
    return total


@dataclass
class CRSResult:
    routes: list[Route]
    total_payoff: float
    joint_route: list[tuple[int, ...]]
    states: int
    extended_states: int
    runtime_ms: float

    def to_json(self) -> dict:
        return {
            "routes": [r.to_list() for r in self.routes],
            "total_payoff": self.total_payoff,
            "states": self.states,
            "extended_states": self.extended_states,
            "joint_route": [list(q) for q in self.joint_route],
            "runtime_ms": self.runtime_ms,
        }


@dataclass
class _LocalSpace:
    """Per-UAV local states: serve region 0..L-1, or fly with (last region, slots)."""

    L: int
    cap: int
    step_ok: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.L * (1 + self.cap)

    def region(self, s: np.ndarray) -> np.ndarray:
        """1-based served region, 0 while moving."""
        return np.where(s < self.L, s + 1, 0)


def _local_space(gap_min: np.ndarray, T: int) -> _LocalSpace:
    L = gap_min.shape[0]
    cap = int(max(1, min(gap_min.max() - 1, T - 1)))
    n = L * (1 + cap)
    ok = np.zeros((n, n), dtype=bool)
    serve = np.arange(L)

    def moving(l, i):
        return L + l * cap + (i - 1)

    ok[serve[:, None], serve[None, :]] = gap_min - 1 <= 0
    for l in range(L):
        ok[l, moving(l, 1)] = True
        for i in range(1, cap + 1):
            ok[moving(l, i), serve] = gap_min[l] - 1 <= i
            ok[moving(l, i), moving(l, min(i + 1, cap))] = True
    return _LocalSpace(L, cap, ok)


def _joint_states(spaces: list[_LocalSpace]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(s.size) for s in spaces], indexing="ij")
    local = np.stack([g.reshape(-1) for g in grids], axis=1)
    regions = np.stack([sp.region(local[:, m]) for m, sp in enumerate(spaces)], axis=1)
    keep = np.ones(len(local), dtype=bool)
    for a, b in itertools.combinations(range(len(spaces)), 2):
        keep &= (regions[:, a] == 0) | (regions[:, a] != regions[:, b])
    return local[keep]


def _has_shared_region(q) -> bool:
    served = [r for r in q if r]
    return len(served) != len(set(served))


def solve_crs(
    scenario: Scenario,
    model: RewardModel,
    sources: Sequence[int] | None = None,
    destinations: Sequence[int] | None = None,
) -> CRSResult:
    """Maximize total joint payoff (interference-coupled rewards minus costs).

    Sources or destinations may coincide. UAVs sharing a region earn nothing
    there but still transmit, as in :func:`evaluate_profile`.
    """
    t0 = time.perf_counter()
    sources = tuple(sources or scenario.fleet.sources)
    destinations = tuple(destinations or scenario.fleet.destinations)
    M, L, T = scenario.M, scenario.L, scenario.T
    for name, ends in (("sources", sources), ("destinations", destinations)):
        if len(ends) != M:
            raise ValueError(f"expected {M} {name}")
    cap = scenario.options.state_cap
    B = count_states(M, L)
    if B * T > cap:
        raise ResourceLimitError(
            f"state graph needs {B} x {T} vertices (cap {cap}); use the distributed solver"
        )
    slot = scenario.physics.slot_s
    spaces = []
    for m in range(M):
        gm = min_gap_matrix(scenario.topology.centers, float(scenario.fleet.speeds[m]), slot)
        spaces.append(_local_space(gm, T))
    # the trackers multiply the state count, so bound the product before building it
    S_bound = float(np.prod([sp.size for sp in spaces], dtype=float))
    if S_bound * T > cap:
        raise ResourceLimitError(
            f"extended state graph needs up to {S_bound:.0f} states per slot (cap {cap}); "
            "use the distributed solver"
        )
    local = _joint_states(spaces)
    # UAVs may share a region at the first and last slot (e.g. the control station)
    ends = [np.array(sources) - 1, np.array(destinations) - 1]
    extra = [e for e in ends if len(set(e.tolist())) < M]
    if extra:
        local = np.concatenate([local, np.unique(np.array(extra), axis=0)])
    S = len(local)
    regions = np.stack([sp.region(local[:, m]) for m, sp in enumerate(spaces)], axis=1)
    width = max(sp.size for sp in spaces)
    step_ok = np.zeros((M, width, width), dtype=bool)
    for m, sp in enumerate(spaces):
        step_ok[m, : sp.size, : sp.size] = sp.step_ok

    # rewards and costs per joint state vector, shared by all extended variants
    uniq, inverse = np.unique(regions, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    integrals = np.zeros((len(uniq), M))
    powers = scenario.fleet.powers
    for j, q in enumerate(uniq):
        for m, r in enumerate(q):
            if r and np.count_nonzero(q == r) == 1:
                itf = [(int(q[n]), float(powers[n])) for n in range(M) if n != m and q[n]]
                integrals[j, m] = model.rate_integral(int(r), float(powers[m]), itf)
    density = model.density
    scale = model.scale
    ups = np.zeros((len(uniq), T))
    for j, q in enumerate(uniq):
        for m, r in enumerate(q):
            if r:
                ups[j] += scale * density[r - 1] * integrals[j, m]
    phi = np.array([state_cost(q, scenario) for q in uniq])
    weight = (phi[:, None] - ups)[inverse]  # (S, T)
    shared = np.array([_has_shared_region(q) for q in regions])
    weight[shared] = np.inf  # co-located states only at the endpoints

    start = np.flatnonzero(np.all(regions == np.array(sources), axis=1))
    target = np.flatnonzero(np.all(regions == np.array(destinations), axis=1))
    weight[target[0], T - 1] = (phi - ups[:, T - 1])[inverse[target[0]]]
    dist = np.full(S, np.inf)
    s0 = int(start[0])
    j0 = inverse[s0]
    dist[s0] = -ups[j0, 0] if scenario.options.literal_virtual_edge else phi[j0] - ups[j0, 0]
    preds = np.full((T, S), -1, dtype=np.int64)
    for t in range(1, T):
        dist, preds[t] = _kernels.state_relax(step_ok, local, np.ascontiguousarray(weight[:, t]), dist)
    s_end = int(target[0])
    if not np.isfinite(dist[s_end]):
        raise InfeasibleError(
            f"no joint route reaches destinations {destinations} at slot {T}"
        )
    chain = [s_end]
    for t in range(T - 1, 0, -1):
        chain.append(int(preds[t, chain[-1]]))
    chain.reverse()
    joint = [tuple(int(x) for x in regions[s]) for s in chain]
    routes = [
        Route(tuple((q[m], t + 1) for t, q in enumerate(joint) if q[m] != 0), m)
        for m in range(M)
    ]
    return CRSResult(
        routes=routes,
        total_payoff=-float(dist[s_end]),
        joint_route=joint,
        states=B,
        extended_states=S,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


@dataclass
class ProfileEvaluation:
    """Interference-coupled outcome of a set of routes flown together."""

    total_payoff: float
    payoffs: list[float]
    rewards: list[float]
    costs: list[float]
    collisions: int


def evaluate_profile(routes: Sequence[Route], scenario: Scenario, model: RewardModel) -> ProfileEvaluation:
    """Score routes under the joint objective used by the centralized solver.

    Each served task earns its interference-coupled reward; a task served by
    two or more UAVs earns nothing (each region takes one UAV per slot), but
    those UAVs still transmit and interfere with everyone else.
    """
    M, L, T = len(routes), scenario.L, scenario.T
    served = np.zeros((M, T), dtype=int)
    for m, r in enumerate(routes):
        for l, t in r:
            served[m, t - 1] = l
    rewards = [0.0] * M
    collisions = 0
    for t in range(T):
        q = served[:, t]
        for m in range(M):
            r = int(q[m])
            if r == 0:
                continue
            if np.count_nonzero(q == r) > 1:
                collisions += 1
                continue
            rewards[m] += model.reward_with_interference(task_index(r, t + 1, L), m, tuple(int(x) for x in q))
    costs = []
    for m, r in enumerate(routes):
        g = build_graph(scenario, np.zeros((L, T)), m)
        costs.append(route_cost(r, g, scenario.options.literal_virtual_edge))
    payoffs = [a - b for a, b in zip(rewards, costs)]
    return ProfileEvaluation(sum(payoffs), payoffs, rewards, costs, collisions)
