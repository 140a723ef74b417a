"""User-demand forecast from a first-order mobility Markov chain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import DemandConfig, Scenario


@dataclass(frozen=True)
class MobilityChain:
    """Transition probabilities between ``L`` regions plus one outside compartment.

    ``transition[i, j]`` is the probability that a user in compartment ``i``
    moves to ``j`` during one slot; the diagonal is ignored and the stay
    probability is the residual ``1 - sum_{j != i} p_ij``. Index ``L`` is the
    outside compartment.
    """

    transition: np.ndarray
    initial_counts: np.ndarray
    outside_initial: float = 0.0

    def __post_init__(self):
        p = np.array(self.transition, dtype=float)
        n0 = np.array(self.initial_counts, dtype=float).reshape(-1)
        L = n0.size
        if p.shape == (L, L):
            p = np.pad(p, ((0, 1), (0, 1)))
        if p.shape != (L + 1, L + 1):
            raise ValueError(f"transition must be {L}x{L} or {L + 1}x{L + 1}, got {p.shape}")
        np.fill_diagonal(p, 0.0)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        leave = p.sum(axis=1)
        if np.any(leave > 1 + 1e-12):
            raise ValueError(f"row {int(np.argmax(leave)) + 1} leaves with probability > 1")
        if np.any(n0 < 0) or self.outside_initial < 0:
            raise ValueError("initial counts must be nonnegative")
        p.setflags(write=False)
        n0.setflags(write=False)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "initial_counts", n0)
        object.__setattr__(self, "outside_initial", float(self.outside_initial))

    @classmethod
    def from_config(cls, cfg: DemandConfig) -> "MobilityChain":
        return cls(cfg.transition, cfg.initial_counts, cfg.outside_initial)

    @property
    def region_count(self) -> int:
        return self.initial_counts.size

    def step_matrix(self) -> np.ndarray:
        """Row-stochastic one-slot matrix including the stay residual."""
        p = self.transition.copy()
        np.fill_diagonal(p, 1.0 - p.sum(axis=1))
        return p


@dataclass(frozen=True)
class DemandTable:
    """Expected users per compartment and slot, and the derived densities.

    ``counts`` has shape ``(L + 1, T)`` (last row is the outside compartment);
    ``density[l-1, t-1]`` is the demand of task ``a(l, t)`` in users/m^2.
    """

    counts: np.ndarray
    areas: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.counts[:-1] / self.areas[:, None]

    @property
    def horizon(self) -> int:
        return self.counts.shape[1]

    def demand(self, l: int, t: int) -> float:
        return float(self.density[l - 1, t - 1])

    def to_csv(self, path) -> None:
        L = self.areas.size
        with open(path, "w") as fh:
            fh.write("region,slot,task,expected_users,area_m2,density_per_m2\n")
            for t in range(self.horizon):
                for l in range(L + 1):
                    is_out = l == L
                    area = "" if is_out else f"{self.areas[l]:.6f}"
                    dens = "" if is_out else f"{self.counts[l, t] / self.areas[l]:.9e}"
                    task = "" if is_out else str(l + 1 + L * t)
                    name = "O" if is_out else str(l + 1)
                    fh.write(f"{name},{t + 1},{task},{self.counts[l, t]:.9f},{area},{dens}\n")


def propagate_demand(chain: MobilityChain, T: int, areas) -> DemandTable:
    """Roll the expected-count recursion forward for ``T`` slots.

    Each step adds arrivals ``sum_j N(j) p_jl`` and removes departures
    ``N(l) sum_j p_lj``, with the outside compartment tracked like any region,
    so total mass is conserved.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    areas = np.broadcast_to(np.asarray(areas, dtype=float), (chain.region_count,)).copy()
    if np.any(areas <= 0):
        raise ValueError("region areas must be > 0")
    p = chain.transition
    leave = p.sum(axis=1)
    counts = np.empty((chain.region_count + 1, T))
    counts[:-1, 0] = chain.initial_counts
    counts[-1, 0] = chain.outside_initial
    for t in range(T - 1):
        n = counts[:, t]
        counts[:, t + 1] = n + n @ p - n * leave
    # departures never exceed the mass present, so this only trims rounding noise
    np.maximum(counts, 0.0, out=counts)
    counts.setflags(write=False)
    areas.setflags(write=False)
    return DemandTable(counts, areas)


def scenario_demand(scenario: Scenario) -> DemandTable:
    chain = MobilityChain.from_config(scenario.demand)
    return propagate_demand(chain, scenario.T, scenario.topology.region_area)

