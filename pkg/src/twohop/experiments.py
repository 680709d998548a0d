"""Slotted baseline, Monte Carlo comparison over lambda, and the t_s1 sweep.

CSV floats are written with 17 significant digits so that identical runs
produce identical files byte for byte.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import RELAY, SOURCE, Instance, Policy, canonicalize, normalize
from .single_link import single_link_schedule
from .solver import solve

RNG_NAME = "numpy.random.PCG64"


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


# --------------------------------------------------------------------------
# baseline


@dataclass(frozen=True)
class BaselineResult:
    policy: Policy
    source_data: float
    relay_data: float

    @property
    def throughput(self) -> float:
        return min(self.source_data, self.relay_data)


def baseline_policy(instance: Instance) -> BaselineResult:
    """Two fixed slots of length T/2, each hop optimal on its own.

    The source uses its arrivals before ``T/2``; the relay uses all its
    arrivals, those before ``T/2`` pooled at the slot start.  Data causality
    is ignored and the reported throughput is the smaller hop.
    """
    inst = normalize(instance)
    half = inst.T / 2
    src = single_link_schedule(inst.source, 0.0, half)
    rel = single_link_schedule(inst.relay, half, inst.T)
    items = ([(SOURCE, p, d) for p, d in src.levels]
             + [(RELAY, p, d) for p, d in rel.levels])
    policy = canonicalize(Policy.from_tuples(items))
    return BaselineResult(policy, src.data(inst.rate), rel.data(inst.rate))


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    lam: float
    Es0: float
    Es1: float
    Er0: float
    Er1: float
    ts1: float
    tr1: float
    optimal: float
    baseline: float
    source_region: str
    relay_region: str


TRIAL_COLUMNS = tuple(f.name for f in fields(TrialRecord))
SUMMARY_COLUMNS = ("lam", "trials", "mean_optimal", "mean_baseline", "mean_uplift")


def trial_rng(seed: int, lam_index: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, lambda index, trial)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, lam_index, trial])))


def _exponential(rng, lam):
    # inverse CDF keeps the draw a documented function of one uniform
    return -math.log1p(-rng.random()) / lam


def _uniform_positive(rng):
    t = rng.random()
    while t == 0.0:
        t = rng.random()
    return t


def draw_instance(rng, lam: float, T: float = 1.0) -> Instance:
    """Energies ~ Exp(lam), second arrivals ~ U(0, T); draw order is fixed."""
    es0, es1, er0, er1 = (_exponential(rng, lam) for _ in range(4))
    ts1 = T * _uniform_positive(rng)
    tr1 = T * _uniform_positive(rng)
    return Instance(T, ((0.0, es0), (ts1, es1)), ((0.0, er0), (tr1, er1)))


def run_trial(seed: int, lam_index: int, lam: float, trial: int, T: float = 1.0) -> TrialRecord:
    inst = draw_instance(trial_rng(seed, lam_index, trial), lam, T)
    sol = solve(inst)
    base = baseline_policy(inst)
    (_, es0), (ts1, es1) = inst.source.arrivals
    (_, er0), (tr1, er1) = inst.relay.arrivals
    return TrialRecord(trial, float(lam), es0, es1, er0, er1, ts1, tr1,
                       sol.throughput / T, base.throughput / T,
                       sol.label.source_region, sol.label.relay_region)


def simulate(lambdas: Sequence[float], trials: int, seed: int,
             T: float = 1.0) -> list[TrialRecord]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return [run_trial(seed, i, lam, k, T)
            for i, lam in enumerate(lambdas) for k in range(trials)]


def summarize(records: Iterable[TrialRecord]) -> list[dict]:
    by_lam: dict[float, list[TrialRecord]] = {}
    for r in records:
        by_lam.setdefault(r.lam, []).append(r)
    out = []
    for lam, rs in by_lam.items():
        opt = math.fsum(r.optimal for r in rs) / len(rs)
        base = math.fsum(r.baseline for r in rs) / len(rs)
        out.append({"lam": lam, "trials": len(rs), "mean_optimal": opt,
                    "mean_baseline": base, "mean_uplift": opt - base})
    return out


def _write_csv(path, header_comment, columns, rows) -> None:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def summary_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + "_summary" + p.suffix)


def write_trials(path, records: Sequence[TrialRecord], seed: int) -> None:
    note = (f"rng={RNG_NAME} seed_sequence=[{seed},lambda_index,trial] "
            "energy=-log1p(-u)/lambda")
    _write_csv(path, note, TRIAL_COLUMNS,
               ([getattr(r, c) for c in TRIAL_COLUMNS] for r in records))
    _write_csv(summary_path(path), note, SUMMARY_COLUMNS,
               ([s[c] for c in SUMMARY_COLUMNS] for s in summarize(records)))


def _read_rows(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def read_trials(path) -> list[TrialRecord]:
    out = []
    for row in _read_rows(path):
        vals = {}
        for f in fields(TrialRecord):
            raw = row[f.name]
            vals[f.name] = int(raw) if f.name == "trial" else (
                raw if f.name.endswith("region") else float(raw))
        out.append(TrialRecord(**vals))
    return out


# --------------------------------------------------------------------------
# t_s1 sweep


@dataclass(frozen=True)
class SweepRecord:
    ts1: float
    throughput: float
    source_region: str
    relay_region: str


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRecord))


def sweep_points(start: float, stop: float, step: float) -> list[float]:
    """``start, start+step, ...`` up to ``stop`` (inclusive within rounding)."""
    if not step > 0:
        raise ValueError("step must be > 0")
    if stop < start:
        raise ValueError("sweep end before start")
    n = int(math.floor((stop - start) / step + 1e-9))
    # rounding to 12 digits keeps 0.5 + k*0.01 printable as typed
    return [round(start + k * step, 12) for k in range(n + 1)]


def sweep_ts1(base: Instance, start: float, stop: float, step: float) -> list[SweepRecord]:
    """Solve ``base`` with its second source arrival moved to each sample."""
    if base.M != 2:
        raise ValueError("sweep over ts1 needs two source arrivals")
    if not (0 < start and stop < base.T):
        raise ValueError(f"ts1 range must lie inside (0, {base.T})")
    (_, es0), (_, es1) = base.source.arrivals
    out = []
    for ts1 in sweep_points(start, stop, step):
        inst = base.with_(source=type(base.source)(((0.0, es0), (ts1, es1))))
        sol = solve(inst)
        out.append(SweepRecord(ts1, sol.throughput / inst.T,
                               sol.label.source_region, sol.label.relay_region))
    return out


def write_sweep(path, records: Sequence[SweepRecord]) -> None:
    _write_csv(path, None, SWEEP_COLUMNS,
               ([getattr(r, c) for c in SWEEP_COLUMNS] for r in records))


def read_sweep(path) -> list[SweepRecord]:
    return [SweepRecord(float(r["ts1"]), float(r["throughput"]), r["source_region"],
                        r["relay_region"]) for r in _read_rows(path)]
