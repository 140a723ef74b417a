import csv
import json
import math

import numpy as np
import pytest

from uavroute.errors import ConfigError
from uavroute.harness import (
    FIELDS,
    ConvergenceSpec,
    DemandSampler,
    ExperimentSpec,
    convergence_trace,
    default_bench,
    energy_of_route,
    load_bench,
    run_bench,
    run_experiment,
    run_trial,
    trial_scenario,
)
from uavroute.scenario import make_scenario
from uavroute.spgraph import as_route

import oracles

SMALL = ExperimentSpec("small", "power_dbm", (0.0, 30.0), ("SP", "CRS", "DRS", "GP", "CP"),
                       trials=2, seed=3, base={"L": 4, "M": 2, "T": 5, "speed_kmh": 70.0})


def test_energy_of_route():
    sc = make_scenario(9, 1, 20)
    hover = as_route([(3, t) for t in range(1, 21)])
    # [DERIVED] 20 hover slots of 60 s at 1371.32 W
    assert energy_of_route(hover, 0, sc) == pytest.approx(20 * 60 * 1371.32)
    hop = as_route([(3, 1), (6, 3), (3, 20)])
    expect = 3 * 60 * 1371.32 + 17 * 60 * oracles.power_w(70 / 3.6, sc.physics)
    assert energy_of_route(hop, 0, sc) == pytest.approx(expect)


def test_demand_sampler_rows():
    sc = make_scenario(9, 2, 5)
    cfg = DemandSampler().sample(sc, np.random.default_rng(0))
    rows = cfg.transition.sum(axis=1)
    assert np.all(rows[:-1] >= 0.1 - 1e-12) and np.all(rows[:-1] <= 0.5 + 1e-12)
    assert np.all((50 <= cfg.initial_counts) & (cfg.initial_counts <= 150))
    # movers only go to neighbors or outside
    for l in range(1, 10):
        allowed = set(sc.topology.neighbors(l)) | {10}
        assert set(np.flatnonzero(cfg.transition[l - 1]) + 1) <= allowed


def test_trials_share_instances_across_values():
    a = trial_scenario(SMALL, 0.0, 1)
    b = trial_scenario(SMALL, 30.0, 1)
    assert np.array_equal(a.demand.initial_counts, b.demand.initial_counts)
    assert a.fleet.sources == b.fleet.sources
    c = trial_scenario(SMALL, 0.0, 0)
    assert not np.array_equal(a.demand.initial_counts, c.demand.initial_counts)


def test_fleet_sweep_keeps_first_endpoints():
    spec = ExperimentSpec("m", "M", (2, 3), base={"L": 9, "T": 6})
    two, three = trial_scenario(spec, 2, 0), trial_scenario(spec, 3, 0)
    assert three.fleet.sources[:2] == two.fleet.sources


def test_run_trial_metrics():
    recs = {r.solver: r for r in run_trial(SMALL, 30.0, 0)}
    assert all(r.ok for r in recs.values())
    # CRS is optimal for the common objective
    for name in ("SP", "DRS", "GP", "CP"):
        assert recs[name].total_payoff <= recs["CRS"].total_payoff + 1e-9
    r = recs["DRS"]
    assert r.efficiency == pytest.approx(r.throughput_nats / r.energy_j)
    assert r.payoff_per_uav == pytest.approx(r.total_payoff / 2)
    assert r.rounds >= 1


def test_infeasible_trials_are_counted():
    spec = ExperimentSpec("far", "speed_kmh", (5.0,), ("DRS",), trials=3,
                          base={"L": 36, "M": 1, "T": 2})
    res = run_experiment(spec)
    row = res.rows[0]
    assert row.trials_ok + row.trials_failed == 3 and row.trials_failed >= 1


def test_experiment_is_deterministic():
    a, b = run_experiment(SMALL), run_experiment(SMALL)
    for x, y in zip(a.rows, b.rows):
        for f in FIELDS:
            if f != "runtime_ms":
                u, v = getattr(x, f), getattr(y, f)
                assert u == v or (isinstance(u, float) and math.isnan(u) and math.isnan(v))


def test_parallel_matches_serial():
    serial = run_experiment(SMALL)
    par = run_experiment(ExperimentSpec(**{**SMALL.__dict__, "workers": 2}))
    assert [r.total_payoff for r in serial.rows] == [r.total_payoff for r in par.rows]


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec("x", "colour", (1,))
    with pytest.raises(ConfigError):
        ExperimentSpec("x", "M", (1,), solvers=("XYZ",))
    with pytest.raises(ConfigError):
        ExperimentSpec("x", "M", ())
    with pytest.raises(ConfigError):
        ExperimentSpec("x", "M", (1,), trials=0)


def test_convergence_trace():
    rows = convergence_trace(ConvergenceSpec(base={"L": 16, "M": 3, "T": 10, "speed_kmh": 50.0}))
    assert rows[0]["step"] == 0 and "payoff_uav3" in rows[0]
    psi = [rows[0]["potential"]] + [r["potential"] for r in rows[1:] if r["switched"] == 1]
    assert all(b > a for a, b in zip(psi, psi[1:]))


def test_default_bench_shape():
    specs = default_bench(trials=2)
    names = [s.name for s in specs]
    assert names == ["fig5_power", "fig6_speed", "fig8_fleet", "fig9_convergence", "fig10_efficiency"]


def test_bench_file_round_trip(tmp_path):
    path = tmp_path / "b.toml"
    path.write_text(
        '[defaults]\ntrials = 1\nseed = 2\n\n'
        '[[experiment]]\nname = "p"\nsweep = "power_dbm"\nvalues = [10, 20]\n'
        'solvers = ["DRS", "GP"]\nbase = { L = 4, M = 2, T = 4 }\n\n'
        '[[experiment]]\nname = "c"\nkind = "convergence"\nbase = { L = 9, M = 2, T = 6 }\n'
    )
    specs = load_bench(path)
    assert specs[0].trials == 1 and specs[0].seed == 2 and specs[0].solvers == ("DRS", "GP")
    summary = run_bench(specs, tmp_path / "out")
    assert set(summary) == {"p", "c"}
    with open(tmp_path / "out" / "p.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and list(rows[0]) == FIELDS
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["c"]["steps"] >= 2


def test_bench_file_errors(tmp_path):
    path = tmp_path / "b.toml"
    path.write_text('[[experiment]]\nname = "p"\nvalues = [1]\n')
    with pytest.raises(ConfigError):
        load_bench(path)


def test_shipped_bench_file_loads():
    from pathlib import Path
    specs = load_bench(Path(__file__).parents[1] / "scenarios" / "bench.toml")
    assert [s.name for s in specs] == [s.name for s in default_bench()]
