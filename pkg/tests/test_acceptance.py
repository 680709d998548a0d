"""Acceptance criteria 1-8.

Each test prints one ``criterion N: PASS|FAIL`` line; the lines are also
collected into an "acceptance criteria" section of the pytest summary.
"""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from twohop.cli import main
from twohop.core import (EnergyProfile, check_feasibility, check_optimality_properties,
                         make_instance)
from twohop.experiments import read_sweep, read_trials, summarize
from twohop.oracle import GridConfig, grid_oracle, slot_dp_oracle
from twohop.single_link import single_link_data, single_link_schedule
from twohop.solver import solve

from conftest import random_instances

FIG5 = {"T": 10, "source": [{"t": 0, "e": 5}, {"t": 5, "e": 5}],
        "relay": [{"t": 0, "e": 5}, {"t": 8, "e": 5}]}


@contextmanager
def criterion(log, n, title):
    """Report PASS only if the block finishes without a failed assertion."""
    info = {"detail": ""}
    try:
        yield info
    except BaseException as exc:
        line = f"criterion {n}: FAIL {title} ({info['detail'] or type(exc).__name__}: {exc})"
        print(line.splitlines()[0])
        log.append(line.splitlines()[0])
        raise
    line = f"criterion {n}: PASS {title} ({info['detail']})"
    print(line)
    log.append(line)


# --------------------------------------------------------------------------
# 1


def test_criterion_1_symmetric_exact(acceptance_log):
    with criterion(acceptance_log, 1, "symmetric instance is 5 ln 2 with split 5") as info:
        inst = make_instance(10, [(0, 5)], [(0, 5)])
        t0 = time.perf_counter()
        sol = solve(inst)
        dt = time.perf_counter() - t0
        err = abs(sol.throughput - 5 * math.log(2))
        split = sol.policy.segments[0].duration
        info["detail"] = f"|err|={err:.1e}, split={split:.12g}, {dt:.3f}s"
        assert err <= 1e-9
        assert abs(split - 5.0) <= 1e-9
        assert abs(sol.unknowns["xi_s1"] - 5.0) <= 1e-9
        assert dt < 1.0


# --------------------------------------------------------------------------
# 2 and 3 share 200 seeded instances


@pytest.fixture(scope="module")
def oracle_runs():
    insts = random_instances(200, seed=2024, lam=1.0, T=1.0)
    cfg = GridConfig(time_step=2e-3, energy_splits=500)
    grid_oracle(insts[0], cfg)  # compile the kernels outside the timed loop
    t0 = time.perf_counter()
    sols = [solve(i) for i in insts]
    refs = [grid_oracle(i, cfg) for i in insts]
    return insts, sols, refs, time.perf_counter() - t0


def test_criterion_2_oracle_agreement(acceptance_log, oracle_runs):
    with criterion(acceptance_log, 2, "200 random instances agree with the grid oracle") as info:
        insts, sols, refs, dt = oracle_runs
        rel = np.array([abs(s.throughput - r.throughput) / r.throughput for s, r in zip(sols, refs)])
        below = [s.throughput - r.throughput for s, r in zip(sols, refs)]
        info["detail"] = (f"max rel gap {rel.max():.2e}, min solver-oracle {min(below):.2e}, "
                          f"{dt:.1f}s")
        assert rel.max() <= 5e-3
        assert min(below) >= -1e-9
        assert dt < 60


def test_criterion_3_property_suite(acceptance_log, oracle_runs):
    with criterion(acceptance_log, 3, "property suite on the same 200 policies") as info:
        insts, sols, _, _ = oracle_runs
        failures = []
        for k, (inst, sol) in enumerate(zip(insts, sols)):
            if not check_feasibility(inst, sol.policy).feasible:
                failures.append((k, "feasibility"))
                continue
            rep = check_optimality_properties(inst, sol.policy, data_rtol=1e-8)
            failures += [(k, f) for f in rep.failures()]
        info["detail"] = f"{len(failures)} failures over {len(sols)} policies"
        assert not failures, failures[:5]


# --------------------------------------------------------------------------
# 4


def _small_instances(n, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        e = rng.integers(4, 21, size=4) * 0.05  # 0.2 .. 1.0 J
        ts, tr = rng.integers(4, 37, size=2) * 0.025  # 0.1 .. 0.9 s
        out.append(make_instance(1, [(0, e[0]), (ts, e[1])], [(0, e[2]), (tr, e[3])]))
    return out


def test_criterion_4_structure_free_dp(acceptance_log):
    with criterion(acceptance_log, 4, "slot DP sits in [solver-5%, solver+3%]") as info:
        insts = _small_instances(20)
        t0 = time.perf_counter()
        ratios = []
        for inst in insts:
            dp = slot_dp_oracle(inst).throughput
            ratios.append(dp / solve(inst).throughput)
        dt = time.perf_counter() - t0
        info["detail"] = f"DP/solver in [{min(ratios):.4f}, {max(ratios):.4f}], {dt:.1f}s"
        assert max(ratios) <= 1.03
        assert min(ratios) >= 0.95
        assert dt < 120


# --------------------------------------------------------------------------
# 5


def test_criterion_5_baseline_dominance(acceptance_log, tmp_path):
    with criterion(acceptance_log, 5, "optimal dominates the slotted baseline") as info:
        out = tmp_path / "trials.csv"
        t0 = time.perf_counter()
        rc = main(["simulate", "--lambda", "0.5,1,2", "--trials", "10000", "--seed", "42",
                   "--out", str(out)])
        dt = time.perf_counter() - t0
        assert rc == 0
        recs = read_trials(out)
        bad = [r for r in recs
               if r.optimal < r.baseline - 1e-9 * max(1.0, r.Es0 + r.Es1 + r.Er0 + r.Er1)]
        means = {s["lam"]: s for s in summarize(recs)}
        opt = [means[lam]["mean_optimal"] for lam in (0.5, 1.0, 2.0)]
        upl = [means[lam]["mean_uplift"] for lam in (0.5, 1.0, 2.0)]
        info["detail"] = (f"{len(recs)} trials, {len(bad)} violations, means "
                          + ", ".join(f"{m:.4f}" for m in opt)
                          + ", uplifts " + ", ".join(f"{u:.4f}" for u in upl) + f", {dt:.0f}s")
        assert len(recs) == 30000
        assert not bad
        assert all(u > 0 for u in upl)
        assert opt[0] > opt[1] > opt[2]
        assert dt < 300


# --------------------------------------------------------------------------
# 6


def test_criterion_6_fig5_sweep(acceptance_log, tmp_path):
    with criterion(acceptance_log, 6, "t_s1 sweep is continuous with stable labels") as info:
        base = tmp_path / "fig5.json"
        base.write_text(json.dumps(FIG5))
        out = tmp_path / "sweep.csv"
        t0 = time.perf_counter()
        rc = main(["sweep", "--base", str(base), "--param", "ts1", "--from", "0.5",
                   "--to", "9.5", "--step", "0.01", "--out", str(out)])
        dt = time.perf_counter() - t0
        assert rc == 0
        recs = read_sweep(out)
        assert len(recs) == 901
        thr = np.array([r.throughput for r in recs])
        jumps = np.abs(np.diff(thr)) / np.maximum(thr[:-1], thr[1:])
        labels = [f"{r.source_region}/{r.relay_region}" for r in recs]
        runs = [[labels[0], 1]]
        for lab in labels[1:]:
            if lab == runs[-1][0]:
                runs[-1][1] += 1
            else:
                runs.append([lab, 1])
        # every sample's policy through the criterion-3 checks
        failures = 0
        for r in recs:
            inst = make_instance(10, [(0, 5), (r.ts1, 5)], [(0, 5), (8, 5)])
            sol = solve(inst, verify=False)
            ok = check_feasibility(inst, sol.policy).feasible
            ok = ok and check_optimality_properties(inst, sol.policy).passed
            failures += not ok
        info["detail"] = (f"runs {[(lab, n) for lab, n in runs]}, max jump {jumps.max():.2%}, "
                          f"{failures} property failures, sweep {dt:.1f}s")
        assert len(runs) <= 8
        assert min(n for _, n in runs) >= 3
        assert len({lab for lab, _ in runs}) == len(runs)
        assert jumps.max() <= 0.02
        assert failures == 0
        assert dt < 60


# --------------------------------------------------------------------------
# 7


def test_criterion_7_single_link(acceptance_log):
    with criterion(acceptance_log, 7, "single-link cases") as info:
        errs = []
        s = single_link_schedule(EnergyProfile(((0.0, 3.0), (0.5, 1.0))), 0, 1)
        errs += [abs(s.levels[0][0] - 4.0), abs(len(s.levels) - 1)]
        s = single_link_schedule(EnergyProfile(((0.0, 1.0), (0.5, 3.0))), 0, 1)
        errs += [abs(s.levels[0][0] - 2.0), abs(s.levels[1][0] - 6.0),
                 abs(s.levels[0][1] - 0.5), abs(s.levels[1][1] - 0.5)]
        errs.append(abs(single_link_data(EnergyProfile(((0.0, 1.0), (0.5, 3.0))), 0, 1)
                        - (0.5 * math.log(3) + 0.5 * math.log(7))))
        one = EnergyProfile(((0.0, 1.0),))
        errs.append(abs(single_link_data(one, 0, 1) - math.log(2)))
        errs.append(abs(single_link_data(one, 0, 2) - 2 * math.log(1.5)))
        # window restriction: a late arrival pools at its own instant
        late = EnergyProfile(((0.0, 1e-12), (0.9, 1.0)))
        errs.append(abs(single_link_data(late, 0.5, 1.0) - 0.1 * math.log(11)))
        info["detail"] = f"max |err| {max(errs):.1e}"
        assert max(errs) <= 1e-9


# --------------------------------------------------------------------------
# 8


def test_criterion_8_determinism(acceptance_log, tmp_path):
    with criterion(acceptance_log, 8, "repeated simulate/sweep runs are byte-identical") as info:
        base = tmp_path / "fig5.json"
        base.write_text(json.dumps(FIG5))
        files = []
        for k in range(2):
            t = tmp_path / f"trials{k}.csv"
            s = tmp_path / f"sweep{k}.csv"
            assert main(["simulate", "--lambda", "0.5,1,2", "--trials", "200", "--seed", "7",
                         "--out", str(t)]) == 0
            assert main(["sweep", "--base", str(base), "--param", "ts1", "--from", "0.5",
                         "--to", "9.5", "--step", "0.05", "--out", str(s)]) == 0
            files.append([t.read_bytes(), (tmp_path / f"trials{k}_summary.csv").read_bytes(),
                          s.read_bytes()])
        same = [a == b for a, b in zip(*files)]
        info["detail"] = f"trials/summary/sweep identical: {same}"
        assert all(same)
