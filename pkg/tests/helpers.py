import itertools

import numpy as np

from uavroute.economics import RewardModel
from uavroute.scenario import make_scenario

import oracles


def random_model(sc, seed):
    """Reward model with random users per region and slot (50 to 150 each)."""
    rng = np.random.default_rng(seed)
    counts = rng.uniform(50, 150, (sc.L, sc.T))
    return RewardModel(sc, counts / sc.topology.region_area)


def joint_instance(seed, M=2, Ls=(2, 3), Tmax=4):
    rng = np.random.default_rng(seed)
    L = int(rng.choice(Ls))
    T = int(rng.integers(2, Tmax + 1))
    ends = rng.integers(1, L + 1, (2, M))
    sc = make_scenario(L, M, T, speed_kmh=float(rng.uniform(20, 140)),
                       power_dbm=float(rng.uniform(0, 40)),
                       sources=ends[0].tolist(), destinations=ends[1].tolist())
    return sc, random_model(sc, seed)


def brute_force_joint(sc, model):
    """Best joint objective over every combination of feasible routes."""
    per_uav = [
        oracles.all_routes(sc.topology.centers, float(sc.fleet.speeds[m]), sc.physics.slot_s,
                           sc.T, sc.fleet.sources[m], sc.fleet.destinations[m])
        for m in range(sc.M)
    ]
    best = -np.inf
    for combo in itertools.product(*per_uav):
        if any(oracles.shares_inner_vertex(a, b, sc.T) for a, b in itertools.combinations(combo, 2)):
            continue
        best = max(best, oracles.joint_objective(combo, sc, model))
    return best
