"""Task rewards (rate integrals over hexagonal regions) and propulsion costs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import channel
from .errors import QuadratureError
from .scenario import PhysicsParams, Scenario, task_region_slot

SQRT3 = math.sqrt(3.0)


# --- hexagon geometry --------------------------------------------------------

def hex_boundary_radius(dx, dy, R: float):
    """Center-to-boundary distance of a flat-top hexagon along direction (dx, dy).

    Piecewise in the horizontal angle; equals ``R`` toward a vertex and
    ``sqrt(3) R / 2`` toward an edge midpoint. ``atan2`` gives angles on
    (-pi, pi], so the pieces are keyed on ``|angle|``.
    """
    a = np.abs(np.arctan2(dy, dx))
    # np.where evaluates every piece; the unused ones may divide by zero
    with np.errstate(divide="ignore"):
        return np.where(
            a < np.pi / 3,
            SQRT3 * R / (2.0 * np.sin(a + np.pi / 3)),
            np.where(
                a < 2 * np.pi / 3,
                SQRT3 * R / (2.0 * np.sin(a)),
                SQRT3 * R / (2.0 * np.sin(a - np.pi / 3)),
            ),
        )


def in_hexagon(x, y, center, R: float):
    dx = np.asarray(x, dtype=float) - center[0]
    dy = np.asarray(y, dtype=float) - center[1]
    return np.hypot(dx, dy) <= hex_boundary_radius(dx, dy, R)


def hexagon_vertices(center, R: float) -> np.ndarray:
    ang = np.arange(6) * (np.pi / 3)
    return np.column_stack((center[0] + R * np.cos(ang), center[1] + R * np.sin(ang)))


# --- adaptive triangle quadrature --------------------------------------------

# Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
_A1 = (6.0 - math.sqrt(15.0)) / 21.0
_A2 = (6.0 + math.sqrt(15.0)) / 21.0
_W1 = (155.0 - math.sqrt(15.0)) / 1200.0
_W2 = (155.0 + math.sqrt(15.0)) / 1200.0
_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _A1, 1 - 2 * _A1],
    [_A1, 1 - 2 * _A1, _A1],
    [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2],
    [_A2, 1 - 2 * _A2, _A2],
    [1 - 2 * _A2, _A2, _A2],
])
_WEIGHTS = np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2])


def _subdivide(tris):
    """Split each triangle (n, 3, 2) into four congruent children -> (4n, 3, 2)."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 2)


def _areas(tris):
    u = tris[:, 1] - tris[:, 0]
    v = tris[:, 2] - tris[:, 0]
    return 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _apply_rule(f, tris):
    pts = np.einsum("qk,nkd->nqd", _BARY, tris)
    vals = f(pts[..., 0], pts[..., 1])
    return _areas(tris) * (vals @ _WEIGHTS)


def hexagon_mesh(center, R: float, levels: int = 2) -> np.ndarray:
    v = hexagon_vertices(center, R)
    c = np.asarray(center, dtype=float)
    tris = np.stack([np.stack([c, v[j], v[(j + 1) % 6]]) for j in range(6)])
    for _ in range(levels):
        tris = _subdivide(tris)
    return tris


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    evaluations: int
    depth: int


def integrate_hexagon(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    center,
    R: float,
    *,
    base_levels: int = 2,
    rtol: float = 2e-4,
    fail_rtol: float = 1e-3,
    max_depth: int = 12,
) -> QuadratureResult:
    """Integrate ``f(x, y)`` over a hexagon with a locally refined 7-point rule.

    The hexagon is cut into six triangles and refined ``base_levels`` times.
    Each leaf's error is estimated as the gap between its rule value and the
    sum over its four children. Leaves above an equal share of the global
    budget ``rtol * |I|`` are split until the summed estimate fits. Coverage
    cone edges make the integrand discontinuous, and refinement concentrates
    there.
    """
    tris = hexagon_mesh(center, R, base_levels)
    coarse = _apply_rule(f, tris)
    evals = 7 * len(tris)
    depth = np.zeros(len(tris), dtype=int)

    def split(tris, coarse):
        kids = _subdivide(tris)
        kid_vals = _apply_rule(f, kids).reshape(-1, 4)
        fine = kid_vals.sum(axis=1)
        return kids, kid_vals, fine, np.abs(fine - coarse)

    kids, kid_vals, fine, err = split(tris, coarse)
    evals += 7 * len(kids)
    while True:
        value = fine.sum()
        target = rtol * abs(value)
        if err.sum() <= target:
            break
        sel = (err > target / len(err)) & (depth < max_depth)
        if not sel.any():
            break
        new_tris = kids.reshape(-1, 4, 3, 2)[sel].reshape(-1, 3, 2)
        new_coarse = kid_vals[sel].reshape(-1)
        n_kids, n_vals, n_fine, n_err = split(new_tris, new_coarse)
        evals += 7 * len(n_kids)
        keep = ~sel
        kids = np.concatenate((kids.reshape(-1, 4, 3, 2)[keep].reshape(-1, 3, 2), n_kids))
        kid_vals = np.concatenate((kid_vals[keep], n_vals))
        fine = np.concatenate((fine[keep], n_fine))
        err = np.concatenate((err[keep], n_err))
        depth = np.concatenate((depth[keep], np.repeat(depth[sel] + 1, 4)))
    value = float(fine.sum())
    total_err = float(err.sum())
    if total_err > fail_rtol * abs(value):
        raise QuadratureError(
            "rate integral did not converge", value, total_err, int(depth.max())
        )
    return QuadratureResult(value, total_err, evals, int(depth.max()))


# --- propulsion energy ---------------------------------------------------------

@dataclass(frozen=True)
class PowerModel:
    """Rotary-wing propulsion power coefficients (blade profile, induced, parasite)."""

    blade: float
    induced: float
    parasite: float
    tip_speed: float
    induced_velocity: float

    @classmethod
    def from_physics(cls, phys: PhysicsParams) -> "PowerModel":
        return cls(*phys.rotor, phys.tip_speed, phys.induced_velocity)


def propulsion_power(speed, model: PowerModel):
    """Propulsion power in watts at forward ``speed`` (m/s); exact at speed 0."""
    v = np.asarray(speed, dtype=float)
    if np.any(v < 0):
        raise ValueError("speed must be >= 0")
    v2 = v * v
    chi2 = model.induced_velocity**2
    induced = np.sqrt(np.sqrt(1.0 + v2 * v2 / (4.0 * chi2 * chi2)) - v2 / (2.0 * chi2))
    return (
        model.blade * (1.0 + 3.0 * v2 / model.tip_speed**2)
        + model.induced * induced
        + 0.5 * model.parasite * v2 * v
    )


class EdgeCost(NamedTuple):
    moving_time: float
    hovering_time: float
    cost: float


def hop_cost(gap, speed: float, phys: PhysicsParams):
    """Cost of an edge spanning ``gap`` slots: travel for ``gap - 1`` slots, hover one."""
    model = PowerModel.from_physics(phys)
    e = phys.slot_s
    moving = (np.asarray(gap, dtype=float) - 1.0) * e
    return (phys.gamma_move * propulsion_power(speed, model) * moving
            + phys.gamma_hover * propulsion_power(0.0, model) * e)


def hop_costs(scenario: Scenario, m: int) -> np.ndarray:
    """Edge cost indexed by slot gap ``0..T-1`` for UAV ``m`` (0-based); entry 0 unused."""
    gaps = np.arange(scenario.T, dtype=float)
    return hop_cost(np.maximum(gaps, 1.0), float(scenario.fleet.speeds[m]), scenario.physics)


def hover_charge(scenario: Scenario) -> float:
    phys = scenario.physics
    return phys.gamma_hover * float(propulsion_power(0.0, PowerModel.from_physics(phys))) * phys.slot_s


def edge_cost(k: int, k_next: int, m: int, scenario: Scenario) -> EdgeCost:
    """Moving time, hovering time, and cost of UAV ``m`` doing task ``k_next`` after ``k``.

    Task indices are 1-based; ``m`` is 0-based. Whether the hop is flyable is
    decided by the trajectory graph, not here.
    """
    _, t = task_region_slot(k, scenario.L)
    _, t_next = task_region_slot(k_next, scenario.L)
    if t_next <= t:
        raise ValueError("the second task must lie in a later slot")
    phys = scenario.physics
    model = PowerModel.from_physics(phys)
    xi = (t_next - t - 1) * phys.slot_s
    delta = phys.slot_s
    c = (phys.gamma_move * float(propulsion_power(scenario.fleet.speeds[m], model)) * xi
         + phys.gamma_hover * float(propulsion_power(0.0, model)) * delta)
    return EdgeCost(xi, delta, c)


# --- rewards ---------------------------------------------------------------------

class RewardModel:
    """Rate integrals and task rewards for one scenario and demand table.

    Integrals depend only on geometry and powers, so they are cached by
    ``(served region, serving power, interferer set)`` and reused across slots.
    """

    def __init__(self, scenario: Scenario, density: np.ndarray, cache: dict | None = None,
                 **quad_opts):
        self.scenario = scenario
        self.density = np.asarray(density, dtype=float)
        if self.density.shape != (scenario.L, scenario.T):
            raise ValueError(f"density must have shape {(scenario.L, scenario.T)}")
        self.quad_opts = quad_opts
        # a shared cache must only ever see scenarios with the same geometry_key
        self._cache: dict = {} if cache is None else cache

    @property
    def scale(self) -> float:
        phys = self.scenario.physics
        return phys.beta * phys.bandwidth_hz

    def rate_function(self, region: int, power: float, interferers: Iterable[tuple[int, float]]):
        sc = self.scenario
        centers = sc.topology.centers
        H, bw, phys = sc.fleet.altitude, sc.fleet.beamwidth, sc.physics
        server = centers[region - 1]
        itfs = [channel.Interferer(*centers[r - 1], p) for r, p in interferers]

        def rate(x, y):
            g = channel.channel_gain(server, (x, y), H, bw, phys)
            return channel.user_rate(g, power, (x, y), itfs, H, bw, phys)

        return rate

    def rate_integral(self, region: int, power: float, interferers=()) -> float:
        """Integral of the user rate over region ``region`` (1-based)."""
        itf = tuple(sorted((int(r), float(p)) for r, p in interferers))
        key = (int(region), float(power), itf)
        hit = self._cache.get(key)
        if hit is None:
            sc = self.scenario
            f = self.rate_function(region, power, itf)
            res = integrate_hexagon(
                f, sc.topology.centers[region - 1], sc.topology.side_length, **self.quad_opts
            )
            hit = self._cache[key] = res.value
        return hit

    def no_interference_table(self, m: int) -> np.ndarray:
        """``(L, T)`` rewards of UAV ``m`` (0-based) serving each task alone."""
        p = float(self.scenario.fleet.powers[m])
        ints = np.array([self.rate_integral(l, p) for l in range(1, self.scenario.L + 1)])
        return self.scale * self.density * ints[:, None]

    def reward_no_interference(self, k: int, m: int) -> float:
        l, t = task_region_slot(k, self.scenario.L)
        p = float(self.scenario.fleet.powers[m])
        return self.scale * self.density[l - 1, t - 1] * self.rate_integral(l, p)

    def reward_with_interference(self, k: int, m: int, states) -> float:
        """Reward of UAV ``m`` on task ``k`` given every UAV's state this slot.

        ``states[n]`` is the region UAV ``n`` serves, or 0 while moving; the
        entry for ``m`` itself is ignored.
        """
        l, t = task_region_slot(k, self.scenario.L)
        lam = self.density[l - 1, t - 1]
        if lam == 0.0:
            return 0.0
        powers = self.scenario.fleet.powers
        itf = [(q, powers[n]) for n, q in enumerate(states) if n != m and q != 0]
        return self.scale * lam * self.rate_integral(l, float(powers[m]), itf)


def geometry_key(scenario: Scenario, **quad_opts) -> tuple:
    """Everything a rate integral depends on besides region, power and interferers."""
    sc, phys = scenario, scenario.physics
    return (
        sc.topology.centers.tobytes(), sc.topology.side_length, sc.fleet.altitude,
        sc.fleet.beamwidth, phys.carrier_hz, phys.noise_w, phys.path_loss_exponent,
        phys.eta_los, phys.eta_nlos, phys.psi, phys.zeta, tuple(sorted(quad_opts.items())),
    )


def reward_with_interference(k: int, m: int, states, model: RewardModel) -> float:
    return model.reward_with_interference(k, m, states)


def reward_no_interference(k: int, m: int, model: RewardModel) -> float:
    return model.reward_no_interference(k, m)
