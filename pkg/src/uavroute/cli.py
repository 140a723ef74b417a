"""Command-line entry point: ``uavroute <command> --scenario file.toml``.

UAV and region numbers on the command line and in the JSON output are
1-based. Every multi-UAV command also reports ``joint_payoff``, the routes
scored with interference and collisions, which is comparable across solvers.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import _kernels
from .baselines import run_cp, run_gp
from .crs import evaluate_profile, solve_crs
from .demand import scenario_demand
from .drs import ORDERS, RouteGame, run_drs
from .economics import RewardModel
from .errors import ConfigError, ConvergenceError, InfeasibleError, ResourceLimitError
from .harness import default_bench, load_bench, run_bench
from .scenario import load_scenario, task_index
from .spgraph import solve_sp

EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LIMIT = 2, 3, 4


def _emit(obj) -> None:
    print(json.dumps(obj, default=float))


def _setup(args):
    sc = load_scenario(Path(args.scenario))
    demand = scenario_demand(sc)
    model = RewardModel(sc, demand.density)
    if args.dump_demand:
        demand.to_csv(args.dump_demand)
    if args.dump_rewards:
        with open(args.dump_rewards, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["uav", "region", "slot", "task", "density_per_m2", "reward"])
            for m in range(sc.M):
                table = model.no_interference_table(m)
                for t in range(1, sc.T + 1):
                    for l in range(1, sc.L + 1):
                        w.writerow([m + 1, l, t, task_index(l, t, sc.L),
                                    f"{model.density[l - 1, t - 1]:.9e}",
                                    f"{table[l - 1, t - 1]:.12g}"])
    return sc, model


def _joint(routes, sc, model) -> float:
    return float(evaluate_profile(routes, sc, model).total_payoff)


def cmd_solve_sp(args) -> None:
    sc, model = _setup(args)
    game = RouteGame.from_model(sc, model)
    uavs = [args.uav] if args.uav else range(1, sc.M + 1)
    for u in uavs:
        if not 1 <= u <= sc.M:
            raise ConfigError("--uav", f"must be in 1..{sc.M}")
        m = u - 1
        route, payoff = solve_sp(game.graphs[m], game.sources[m], game.destinations[m], game.literal)
        _emit({"uav": u, "route": route.to_list(), "payoff": payoff})


def cmd_solve_crs(args) -> None:
    sc, model = _setup(args)
    res = solve_crs(sc, model)
    _emit(res.to_json())


def cmd_solve_drs(args) -> None:
    sc, model = _setup(args)
    res = run_drs(sc, model, order=args.order, seed=args.seed)
    out = res.to_json()
    out["joint_payoff"] = _joint(res.routes, sc, model)
    _emit(out)


def _cmd_plan(planner):
    def run(args) -> None:
        sc, model = _setup(args)
        res = planner(sc, model)
        out = res.to_json()
        out["joint_payoff"] = _joint(res.routes, sc, model)
        _emit(out)
    return run


def cmd_bench(args) -> None:
    if args.spec:
        specs = load_bench(args.spec)
    else:
        specs = default_bench(trials=args.trials, seed=args.seed, workers=args.workers)
    summary = run_bench(specs, args.out)
    _emit({"out": str(args.out), "studies": sorted(summary)})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavroute",
        description="Plan UAV base-station trajectories on time-expanded graphs.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, metavar="TOML", help="scenario file")
        p.add_argument("--dump-demand", metavar="CSV", help="write the expected-demand table")
        p.add_argument("--dump-rewards", metavar="CSV",
                       help="write the interference-free reward table of every UAV")
        p.set_defaults(func=func)
        return p

    p = solver("solve-sp", cmd_solve_sp, "exact single-UAV shortest path")
    p.add_argument("--uav", type=int, help="UAV number (default: every UAV, planned alone)")
    solver("solve-crs", cmd_solve_crs, "exact centralized joint planning")
    p = solver("solve-drs", cmd_solve_drs, "distributed best-response planning")
    p.add_argument("--seed", type=int, default=None, help="seed for --order random")
    p.add_argument("--order", choices=ORDERS, default="roundrobin")
    solver("solve-gp", _cmd_plan(run_gp), "greedy one-hop baseline")
    solver("solve-cp", _cmd_plan(run_cp), "periodic circular baseline")

    p = sub.add_parser("bench", help="run the comparison studies and write CSVs")
    p.add_argument("--spec", metavar="TOML", help="bench file (default: built-in studies)")
    p.add_argument("--out", required=True, type=Path, metavar="DIR")
    p.add_argument("--trials", type=int, default=10, help="trials per point for built-in studies")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("info", help="show the kernel backend")
    p.set_defaults(func=lambda args: _emit({"backend": _kernels.BACKEND}))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"uavroute: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"uavroute: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"uavroute: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResourceLimitError, ConvergenceError) as exc:
        print(f"uavroute: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
