"""Randomized experiments comparing the planners, and plot-ready outputs.

Every solver's routes are scored the same way: interference-coupled rewards,
nothing for a task two UAVs share, minus flight costs
(:func:`uavroute.crs.evaluate_profile`). The game payoff each distributed or
heuristic planner optimizes is reported alongside.

Trial ``i`` draws its demand and endpoints from ``(seed, i)`` alone, so all
solvers and all swept values see the same instances.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .baselines import run_cp, run_gp
from .crs import evaluate_profile, solve_crs
from .demand import scenario_demand
from .drs import RouteGame, run_drs
from .economics import PowerModel, RewardModel, geometry_key, propulsion_power
from .errors import ConfigError, InfeasibleError, ResourceLimitError
from .scenario import DemandConfig, Scenario, make_scenario, tomllib
from .spgraph import Route, solve_sp

SOLVERS = ("SP", "CRS", "DRS", "GP", "CP")
SWEEPABLE = ("power_dbm", "speed_kmh", "M", "L", "T", "R")


@dataclass(frozen=True)
class DemandSampler:
    """Random initial counts and a neighbor-only mobility chain.

    Each region keeps a user with probability drawn from ``stay``; movers pick
    a neighboring region with Dirichlet weights, and a ``leave`` share of
    them exits the area.
    """

    counts: tuple[float, float] = (50.0, 150.0)
    stay: tuple[float, float] = (0.5, 0.9)
    leave: float = 0.02
    concentration: float = 1.0

    def sample(self, scenario: Scenario, rng: np.random.Generator) -> DemandConfig:
        L = scenario.L
        counts = rng.uniform(*self.counts, size=L)
        p = np.zeros((L + 1, L + 1))
        for l in range(1, L + 1):
            nb = np.array(scenario.topology.neighbors(l), dtype=int) - 1
            move = 1.0 - rng.uniform(*self.stay)
            if nb.size:
                w = rng.dirichlet(np.full(nb.size, self.concentration))
                p[l - 1, nb] = move * (1.0 - self.leave) * w
                p[l - 1, L] = move * self.leave
            else:
                p[l - 1, L] = move * self.leave
        return DemandConfig(counts, p, 0.0)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep: str
    values: tuple
    solvers: tuple[str, ...] = ("DRS", "GP", "CP")
    trials: int = 10
    seed: int = 0
    base: Mapping[str, Any] = field(default_factory=dict)
    endpoints: str = "random"  # or "control_station"
    demand: DemandSampler = DemandSampler()
    workers: int = 1
    drs_order: str = "roundrobin"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not self.values:
            raise ConfigError("values", "sweep needs at least one value")
        if self.sweep not in SWEEPABLE:
            raise ConfigError("sweep", f"must be one of {SWEEPABLE}")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ConfigError("solvers", f"unknown solver {bad[0]!r}")
        if self.endpoints not in ("random", "control_station"):
            raise ConfigError("endpoints", "must be 'random' or 'control_station'")


@dataclass
class TrialRecord:
    solver: str
    value: float
    trial: int
    ok: bool
    total_payoff: float = math.nan
    game_payoff: float = math.nan
    energy_j: float = math.nan
    throughput_nats: float = math.nan
    rounds: int | None = None
    runtime_ms: float = math.nan
    error: str = ""
    M: int = 0

    @property
    def payoff_per_uav(self) -> float:
        return self.total_payoff / self.M

    @property
    def efficiency(self) -> float:
        return self.throughput_nats / self.energy_j


@dataclass
class MetricsRow:
    solver: str
    param: str
    value: float
    trials_ok: int
    trials_failed: int
    total_payoff: float
    payoff_per_uav: float
    game_payoff: float
    energy_j: float
    throughput_nats: float
    efficiency: float
    rounds: float
    runtime_ms: float


FIELDS = [f.name for f in dataclasses.fields(MetricsRow)]


def energy_of_route(route: Route, m: int, scenario: Scenario) -> float:
    """Propulsion energy in joules: hover on served slots, cruise between them."""
    model = PowerModel.from_physics(scenario.physics)
    e = scenario.physics.slot_s
    p_move = float(propulsion_power(scenario.fleet.speeds[m], model))
    p_hover = float(propulsion_power(0.0, model))
    energy = p_hover * e  # first slot
    for (_, t1), (_, t2) in route.edges():
        energy += p_move * (t2 - t1 - 1) * e + p_hover * e
    return energy


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def trial_scenario(spec: ExperimentSpec, value, trial: int) -> Scenario:
    """Scenario of one trial at one swept value."""
    kw = dict(spec.base)
    kw[spec.sweep] = value
    for key in ("M", "L", "T"):
        if key in kw:
            kw[key] = int(kw[key])
    sc = make_scenario(**kw)
    rng = _trial_rng(spec.seed, trial)
    demand = spec.demand.sample(sc, rng)
    if spec.endpoints == "random":
        # draw for a generous fleet so sweeping M keeps the first UAVs' endpoints
        ends = rng.integers(1, sc.L + 1, size=(2, max(sc.M, 8)))
        sources, dests = ends[0, : sc.M], ends[1, : sc.M]
    else:
        sources = dests = [sc.control_station] * sc.M
    sc = sc.replace(demand=demand).with_fleet(
        sources=tuple(int(s) for s in sources), destinations=tuple(int(d) for d in dests)
    )
    return sc


def run_solver(name: str, scenario: Scenario, model: RewardModel, game: RouteGame,
               order: str = "roundrobin", seed: int | None = None):
    """Routes and game payoff of one solver; DRS also reports its round count."""
    rounds = None
    if name == "CRS":
        res = solve_crs(scenario, model)
        routes, game_payoff = res.routes, res.total_payoff
    elif name == "DRS":
        res = run_drs(scenario, game=game, order=order, seed=seed)
        routes, game_payoff, rounds = res.routes, res.total_payoff, res.rounds
    elif name == "GP":
        res = run_gp(scenario, game=game)
        routes, game_payoff = res.routes, res.total_payoff
    elif name == "CP":
        res = run_cp(scenario, game=game)
        routes, game_payoff = res.routes, res.total_payoff
    elif name == "SP":
        # every UAV plans alone, ignoring the others
        pairs = [
            solve_sp(game.graphs[m], game.sources[m], game.destinations[m], game.literal)
            for m in range(game.M)
        ]
        routes = [Route(r.vertices, m) for m, (r, _) in enumerate(pairs)]
        game_payoff = float(sum(p for _, p in pairs))
    else:
        raise ValueError(f"unknown solver {name!r}")
    return routes, game_payoff, rounds


_CACHES: dict = {}


def _model_for(scenario: Scenario) -> RewardModel:
    cache = _CACHES.setdefault(geometry_key(scenario), {})
    return RewardModel(scenario, scenario_demand(scenario).density, cache=cache)


def run_trial(spec: ExperimentSpec, value, trial: int) -> list[TrialRecord]:
    sc = trial_scenario(spec, value, trial)
    model = _model_for(sc)
    game = RouteGame.from_model(sc, model)
    beta = sc.physics.beta
    out = []
    for name in spec.solvers:
        rec = TrialRecord(name, float(value), trial, ok=False, M=sc.M)
        t0 = time.perf_counter()
        try:
            routes, game_payoff, rounds = run_solver(
                name, sc, model, game, spec.drs_order, seed=spec.seed + trial
            )
        except (InfeasibleError, ResourceLimitError) as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
            out.append(rec)
            continue
        rec.runtime_ms = (time.perf_counter() - t0) * 1e3
        ev = evaluate_profile(routes, sc, model)
        rec.ok = True
        rec.total_payoff = float(ev.total_payoff)
        rec.game_payoff = float(game_payoff)
        rec.rounds = rounds
        rec.energy_j = sum(energy_of_route(r, m, sc) for m, r in enumerate(routes))
        # rewards are beta * aggregate user rate (nats/s); times the slot length gives nats
        rec.throughput_nats = float(sum(ev.rewards)) / beta * sc.physics.slot_s
        out.append(rec)
    return out


def _run_point(args):
    spec, value, trial = args
    return run_trial(spec, value, trial)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[MetricsRow]
    records: list[TrialRecord]

    def row(self, solver: str, value) -> MetricsRow:
        for r in self.rows:
            if r.solver == solver and r.value == float(value):
                return r
        raise KeyError((solver, value))

    def series(self, solver: str, metric: str) -> np.ndarray:
        return np.array([getattr(self.row(solver, v), metric) for v in self.spec.values])


def _aggregate(spec: ExperimentSpec, records: list[TrialRecord]) -> list[MetricsRow]:
    rows = []
    for value in spec.values:
        for solver in spec.solvers:
            recs = [r for r in records if r.solver == solver and r.value == float(value)]
            good = [r for r in recs if r.ok]

            def mean(attr):
                vals = [getattr(r, attr) for r in good]
                vals = [v for v in vals if v is not None]
                return float(np.mean(vals)) if vals else math.nan

            rows.append(MetricsRow(
                solver=solver, param=spec.sweep, value=float(value),
                trials_ok=len(good), trials_failed=len(recs) - len(good),
                total_payoff=mean("total_payoff"), payoff_per_uav=mean("payoff_per_uav"),
                game_payoff=mean("game_payoff"), energy_j=mean("energy_j"),
                throughput_nats=mean("throughput_nats"), efficiency=mean("efficiency"),
                rounds=mean("rounds"), runtime_ms=mean("runtime_ms"),
            ))
    return rows


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Mean metrics per (solver, swept value); failed trials are counted, not averaged."""
    jobs = [(spec, v, i) for v in spec.values for i in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_run_point, jobs))
    else:
        parts = [_run_point(j) for j in jobs]
    records = [rec for part in parts for rec in part]
    return ExperimentResult(spec, _aggregate(spec, records), records)


def write_rows(path: Path, rows: Sequence[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELDS)
        for r in rows:
            w.writerow([getattr(r, f) for f in FIELDS])


# --- convergence trace ----------------------------------------------------

@dataclass(frozen=True)
class ConvergenceSpec:
    name: str = "fig9_convergence"
    base: Mapping[str, Any] = field(default_factory=lambda: {"L": 36, "M": 4, "T": 20, "speed_kmh": 50.0})
    seed: int = 0
    order: str = "roundrobin"
    demand: DemandSampler = DemandSampler()


def convergence_trace(spec: ConvergenceSpec) -> list[dict]:
    """Per-UAV game payoffs after every best-response step from the control station."""
    exp = ExperimentSpec(
        spec.name, "M", (int(spec.base.get("M", 4)),), ("DRS",), 1, spec.seed,
        spec.base, "control_station", spec.demand,
    )
    sc = trial_scenario(exp, exp.values[0], 0)
    res = run_drs(sc, _model_for(sc), order=spec.order, seed=spec.seed)
    rows = [{"step": 0, "round": 0, "uav": "", "switched": "",
             **{f"payoff_uav{m + 1}": p for m, p in enumerate(res.initial_payoffs)},
             "potential": res.initial_potential}]
    for i, s in enumerate(res.trace, 1):
        rows.append({"step": i, "round": s.round, "uav": s.uav + 1, "switched": int(s.switched),
                     **{f"payoff_uav{m + 1}": p for m, p in enumerate(s.payoffs)},
                     "potential": s.potential if s.potential is not None else ""})
    return rows


# --- bench specification ----------------------------------------------------

def default_bench(trials: int = 10, seed: int = 0, workers: int = 1) -> list:
    """Desk-scale analogues of the power, speed, fleet, convergence and efficiency studies."""
    common = dict(trials=trials, seed=seed, workers=workers)
    return [
        ExperimentSpec("fig5_power", "power_dbm", tuple(range(0, 55, 5)),
                       ("CRS", "DRS", "GP", "CP"),
                       base={"L": 9, "M": 2, "T": 8, "speed_kmh": 70.0}, **common),
        ExperimentSpec("fig6_speed", "speed_kmh", (30.0, 50.0, 70.0, 100.0, 120.0, 140.0),
                       ("CRS", "DRS", "GP", "CP"),
                       base={"L": 9, "M": 2, "T": 8}, **common),
        ExperimentSpec("fig8_fleet", "M", (2, 3, 4), ("DRS", "GP", "CP"),
                       base={"L": 36, "T": 20, "speed_kmh": 50.0}, **common),
        ConvergenceSpec(seed=seed),
        ExperimentSpec("fig10_efficiency", "M", (2, 3, 4), ("DRS", "GP", "CP"),
                       base={"L": 36, "T": 20, "speed_kmh": 50.0}, **common),
    ]


def load_bench(path) -> list:
    """Read a bench file: one ``[[experiment]]`` table per study.

    Keys mirror :class:`ExperimentSpec`; ``kind = "convergence"`` selects a
    DRS trace instead of a sweep. A ``[defaults]`` table supplies shared
    ``trials``, ``seed`` and ``workers``.
    """
    doc = tomllib.loads(Path(path).read_text())
    defaults = doc.get("defaults", {})
    out = []
    for i, exp in enumerate(doc.get("experiment", [])):
        exp = {**defaults, **exp}
        name = exp.get("name")
        if not name:
            raise ConfigError(f"experiment[{i}].name", "required")
        demand = DemandSampler(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in exp.get("demand", {}).items()
        })
        if exp.get("kind", "sweep") == "convergence":
            out.append(ConvergenceSpec(name, exp.get("base", {}), exp.get("seed", 0),
                                       exp.get("order", "roundrobin"), demand))
            continue
        try:
            out.append(ExperimentSpec(
                name=name, sweep=exp["sweep"], values=tuple(exp["values"]),
                solvers=tuple(exp.get("solvers", ("DRS", "GP", "CP"))),
                trials=int(exp.get("trials", 10)), seed=int(exp.get("seed", 0)),
                base=exp.get("base", {}), endpoints=exp.get("endpoints", "random"),
                demand=demand, workers=int(exp.get("workers", 1)),
                drs_order=exp.get("order", "roundrobin"),
            ))
        except KeyError as exc:
            raise ConfigError(f"experiment[{i}].{exc.args[0]}", "required") from None
    return out


def run_bench(specs: Sequence, out_dir) -> dict:
    """Run every study, write ``<name>.csv`` per study and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict[str, Any] = {}
    for spec in specs:
        t0 = time.perf_counter()
        if isinstance(spec, ConvergenceSpec):
            rows = convergence_trace(spec)
            with open(out / f"{spec.name}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows(rows)
            summary[spec.name] = {
                "steps": len(rows) - 1,
                "rounds": max(r["round"] for r in rows),
                "final_payoffs": [v for k, v in rows[-1].items() if k.startswith("payoff_uav")],
            }
        else:
            res = run_experiment(spec)
            write_rows(out / f"{spec.name}.csv", res.rows)
            summary[spec.name] = {
                "param": spec.sweep,
                "values": list(spec.values),
                "trials": spec.trials,
                "failed_trials": sum(r.trials_failed for r in res.rows),
                "total_payoff": {s: res.series(s, "total_payoff").tolist() for s in spec.solvers},
            }
        summary[spec.name]["seconds"] = time.perf_counter() - t0
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary
