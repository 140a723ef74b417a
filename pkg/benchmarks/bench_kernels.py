"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py --repeat 20

Each kernel runs on inputs taken from real solver calls: the single-UAV
relaxation on a 36-region, 20-slot graph, one slot of the centralized
state-graph relaxation for two UAVs over nine regions, and Bellman-Ford on
the explicit edge list of a 9-region graph.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from uavroute import _kernels
from uavroute.crs import _joint_states, _local_space
from uavroute.scenario import make_scenario
from uavroute.spgraph import build_graph, min_gap_matrix


def dag_inputs(rng):
    sc = make_scenario(36, 1, 20, speed_kmh=50.0)
    g = build_graph(sc, rng.uniform(0, 5, (36, 20)))
    return (g.gap_min, g.hop_cost, g.rewards, 0, 0.0)


def state_inputs(rng):
    sc = make_scenario(9, 2, 8, speed_kmh=70.0)
    gap = min_gap_matrix(sc.topology.centers, float(sc.fleet.speeds[0]), sc.physics.slot_s)
    spaces = [_local_space(gap, sc.T)] * 2
    local = _joint_states(spaces)
    step_ok = np.stack([sp.step_ok for sp in spaces])
    S = len(local)
    dist = np.where(rng.random(S) < 0.5, rng.uniform(-5, 5, S), np.inf)
    return (step_ok, local, rng.uniform(-3, 3, S), dist)


def bf_inputs(rng):
    sc = make_scenario(9, 1, 8, speed_kmh=70.0)
    g = build_graph(sc, rng.uniform(0, 5, (9, 8)))
    L = g.L
    tails, heads = [], []
    for a, b in g.edges():
        tails.append(a[0] + L * (a[1] - 1))
        heads.append(b[0] + L * (b[1] - 1))
    tails, heads = np.array(tails, dtype=np.int64), np.array(heads, dtype=np.int64)
    return (L * g.T + 1, tails, heads, rng.uniform(-3, 3, tails.size), 1)


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        import numba
    except ImportError:
        numba = None
    rng = np.random.default_rng(args.seed)
    cases = {
        "dag_relax": dag_inputs(rng),
        "state_relax": state_inputs(rng),
        "bellman_ford": bf_inputs(rng),
    }
    loops = {
        "dag_relax": _kernels._dag_relax_loops,
        "state_relax": _kernels._state_relax_loops,
        "bellman_ford": _kernels._bellman_ford_loops,
    }
    print(f"{'kernel':<14}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, inputs in cases.items():
        t_np = best_time(_kernels.NUMPY_KERNELS[name], inputs, args.repeat)
        if numba is None:
            print(f"{name:<14}{t_np * 1e3:12.3f}{'n/a':>12}{'':>10}")
            continue
        jit = numba.njit(loops[name])
        jit(*inputs)  # compile outside the timing
        t_nb = best_time(jit, inputs, args.repeat)
        print(f"{name:<14}{t_np * 1e3:12.3f}{t_nb * 1e3:12.3f}{t_np / t_nb:9.1f}x")


if __name__ == "__main__":
    main()
