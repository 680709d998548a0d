"""Problem and policy data model, policy evaluation and feasibility checks.

Units: time in seconds, energy in joules, power in watts and data in nats
(the default rate function is ``ln(1 + p)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidInstanceError, PreconditionViolatedError

SOURCE = "source"
RELAY = "relay"
NODES = (SOURCE, RELAY)

DEFAULT_TOL = 1e-9
TIME_RTOL = 1e-12


def abs_tol(instance: "Instance", tol: float = DEFAULT_TOL) -> float:
    """Absolute tolerance used for every energy/data comparison."""
    total = instance.source.total + instance.relay.total
    return tol * max(1.0, instance.T, total)


# --------------------------------------------------------------------------
# rate function


@dataclass(frozen=True)
class RateFunctionSpec:
    """Power-rate map ``g``.

    ``kind="shannon"`` is ``g(p) = ln(1 + p)`` (unit gain after
    normalization).  ``kind="custom-table"`` interpolates ``points`` (pairs
    ``(p, g(p))`` starting at ``(0, 0)``) piecewise linearly and extends the
    last slope beyond the table.
    """

    kind: str = "shannon"
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "shannon":
            if self.points:
                raise InvalidInstanceError("shannon rate takes no parameters")
            return
        if self.kind != "custom-table":
            raise InvalidInstanceError(f"unknown rate kind {self.kind!r}")
        pts = tuple((float(p), float(r)) for p, r in self.points)
        if len(pts) < 3:
            raise InvalidInstanceError("custom-table needs at least 3 points")
        if pts[0] != (0.0, 0.0):
            raise InvalidInstanceError("custom-table must start at (0, 0)")
        p = np.array([q[0] for q in pts])
        r = np.array([q[1] for q in pts])
        if np.any(np.diff(p) <= 0):
            raise InvalidInstanceError("custom-table powers must increase")
        slopes = np.diff(r) / np.diff(p)
        if np.any(slopes <= 0) or np.any(np.diff(slopes) >= 0):
            raise InvalidInstanceError(
                "custom-table must be increasing with strictly decreasing slopes")
        object.__setattr__(self, "points", pts)

    def __call__(self, p):
        if self.kind == "shannon":
            if isinstance(p, float):
                return math.log1p(p)
            return np.log1p(p)
        xs = np.array([q[0] for q in self.points])
        ys = np.array([q[1] for q in self.points])
        last = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        arr = np.asarray(p, dtype=float)
        out = np.where(arr <= xs[-1], np.interp(arr, xs, ys),
                       ys[-1] + last * (arr - xs[-1]))
        if np.ndim(out) == 0 and isinstance(p, float):
            return float(out)
        return out

    def data(self, energy, duration):
        """Data sent by spending ``energy`` at constant power over ``duration``.

        ``duration * g(energy / duration)``; zero for non-positive durations.
        Accepts scalars or arrays; NaN inputs stay NaN.
        """
        if isinstance(energy, float) and isinstance(duration, float):
            if duration <= 0.0:
                return 0.0
            return duration * self(energy / duration)
        e = np.asarray(energy, dtype=float)
        d = np.asarray(duration, dtype=float)
        if self.kind == "shannon":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = d * np.log1p(e / d)
            # d <= 0 sends nothing; NaN durations stay NaN
            return np.where(d > 0, out, np.where(np.isnan(d), np.nan, 0.0))
        safe = np.where(d > 0, d, 1.0)
        return np.where(d > 0, safe * self(e / safe), np.where(np.isnan(d), np.nan, 0.0))

    def check_concavity(self, p_max: float = 100.0, samples: int = 64,
                        seed: int = 0) -> bool:
        """Sampled check of g(0)=0, monotonicity and strict concavity."""
        if self(0.0) != 0.0:
            return False
        rng = np.random.default_rng(seed)
        trip = np.sort(rng.uniform(0.0, p_max, size=(samples, 3)), axis=1)
        g = self(trip)
        if np.any(np.diff(g, axis=1) <= 0):
            return False
        p1, p3 = trip[:, 0], trip[:, 2]
        mid = 0.5 * (p1 + p3)
        chord = 0.5 * (g[:, 0] + g[:, 2])
        if self.kind == "shannon":
            return bool(np.all(chord < self(mid)))
        # piecewise-linear tables are only strictly concave across knots
        return bool(np.all(chord <= self(mid) + 1e-15))

    def to_json(self) -> dict:
        if self.kind == "shannon":
            return {"kind": "shannon"}
        return {"kind": self.kind, "points": [list(q) for q in self.points]}


SHANNON = RateFunctionSpec()


# --------------------------------------------------------------------------
# energy profiles and instances


@dataclass(frozen=True)
class EnergyProfile:
    """Ordered energy arrivals ``(time, amount)``; the first one is at t=0."""

    arrivals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        arr = tuple((float(t), float(e)) for t, e in self.arrivals)
        if not arr:
            raise InvalidInstanceError("energy profile is empty")
        if arr[0][0] != 0.0:
            raise InvalidInstanceError("first arrival must be at t=0")
        for (t0, _), (t1, _) in zip(arr, arr[1:]):
            if not t1 > t0:
                raise InvalidInstanceError("arrival times must strictly increase")
        for t, e in arr:
            if not (math.isfinite(t) and math.isfinite(e)):
                raise InvalidInstanceError("non-finite arrival")
            if e <= 0:
                raise InvalidInstanceError("arrival amounts must be > 0")
        object.__setattr__(self, "arrivals", arr)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "EnergyProfile":
        return cls(tuple((t, e) for t, e in pairs))

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.arrivals)

    @property
    def amounts(self) -> tuple[float, ...]:
        return tuple(e for _, e in self.arrivals)

    @property
    def total(self) -> float:
        return float(sum(self.amounts))

    def __len__(self):
        return len(self.arrivals)

    def inter_arrival_times(self, T: float) -> tuple[float, ...]:
        """``tau_i = t_i - t_{i-1}`` with the deadline as the closing instant."""
        ts = self.times + (T,)
        return tuple(b - a for a, b in zip(ts, ts[1:]))

    def harvested_before(self, t: float) -> float:
        """Energy that arrived strictly before ``t``."""
        return float(sum(e for s, e in self.arrivals if s < t))

    def harvested_by(self, t: float) -> float:
        """Energy that arrived at or before ``t``."""
        return float(sum(e for s, e in self.arrivals if s <= t))

    def scaled(self, factor: float) -> "EnergyProfile":
        return EnergyProfile(tuple((t, e * factor) for t, e in self.arrivals))


@dataclass(frozen=True)
class Instance:
    T: float
    source: EnergyProfile
    relay: EnergyProfile
    rate: RateFunctionSpec = SHANNON
    gains: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        T = float(self.T)
        if not (math.isfinite(T) and T > 0):
            raise InvalidInstanceError("deadline T must be > 0")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "gains", tuple(float(h) for h in self.gains))
        for name in NODES:
            prof = getattr(self, name)
            if not isinstance(prof, EnergyProfile):
                prof = EnergyProfile.from_pairs(prof)
                object.__setattr__(self, name, prof)
            if prof.times[-1] >= T:
                raise InvalidInstanceError(
                    f"{name} arrival at or after the deadline is not allowed")

    @property
    def M(self) -> int:
        return len(self.source)

    @property
    def N(self) -> int:
        return len(self.relay)

    def profile(self, node: str) -> EnergyProfile:
        return self.source if node == SOURCE else self.relay

    def with_(self, **changes) -> "Instance":
        return replace(self, **changes)


def normalize(instance: Instance) -> Instance:
    """Fold channel gains into the harvested energies (unit-gain instance)."""
    hs, hr = instance.gains
    if not (hs > 0 and hr > 0):
        raise InvalidInstanceError("channel gains must be > 0")
    if hs == 1.0 and hr == 1.0:
        return instance
    return replace(instance, source=instance.source.scaled(hs * hs),
                   relay=instance.relay.scaled(hr * hr), gains=(1.0, 1.0))


def make_instance(T, source, relay, rate=SHANNON, gains=(1.0, 1.0)) -> Instance:
    """Convenience constructor taking ``[(t, e), ...]`` lists."""
    return Instance(T, EnergyProfile.from_pairs(source),
                    EnergyProfile.from_pairs(relay), rate, tuple(gains))


# --------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class Segment:
    node: str
    power: float
    duration: float

    def __post_init__(self):
        if self.node not in NODES:
            raise ValueError(f"unknown node {self.node!r}")
        if not self.power >= 0:
            raise ValueError("segment power must be >= 0")
        if not self.duration > 0:
            raise ValueError("segment duration must be > 0")


@dataclass(frozen=True)
class Policy:
    """Alternating timeline of constant-power segments starting at t=0.

    Only one node transmits per segment, so the half-duplex constraint holds
    by construction.
    """

    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def from_tuples(cls, items: Iterable[tuple[str, float, float]],
                    min_duration: float = 0.0) -> "Policy":
        """Build from ``(node, power, duration)``; drops tiny segments."""
        segs = [Segment(n, float(p), float(d)) for n, p, d in items
                if d > min_duration]
        return cls(tuple(segs))

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def starts(self) -> list[float]:
        out, t = [], 0.0
        for s in self.segments:
            out.append(t)
            t += s.duration
        return out

    def levels(self, node: str) -> list[tuple[float, float]]:
        """Nonzero power levels of one node as ``(power, duration)`` in time order."""
        return [(s.power, s.duration) for s in self.segments
                if s.node == node and s.power > 0]

    def epochs(self) -> list[tuple[str, float, list[Segment]]]:
        """Maximal runs of transmitting segments of the same node.

        Returns ``(node, start, segments)``; zero-power segments are idle
        time and split epochs.
        """
        out: list[tuple[str, float, list[Segment]]] = []
        prev_node = None
        for start, seg in zip(self.starts(), self.segments):
            if seg.power <= 0:
                prev_node = None
                continue
            if seg.node == prev_node:
                out[-1][2].append(seg)
            else:
                out.append((seg.node, start, [seg]))
            prev_node = seg.node
        return out

    def to_json(self) -> dict:
        return {"segments": [{"node": s.node, "p": s.power, "d": s.duration}
                             for s in self.segments]}


def canonicalize(policy: Policy, rtol: float = 1e-12) -> Policy:
    """Merge adjacent same-node segments of (numerically) equal power."""
    merged: list[list] = []
    for s in policy.segments:
        if merged:
            node, p, d = merged[-1]
            if node == s.node and abs(p - s.power) <= rtol * max(1.0, p, s.power):
                # keep energy exact when merging
                merged[-1] = [node, (p * d + s.power * s.duration) / (d + s.duration),
                              d + s.duration]
                continue
        merged.append([s.node, s.power, s.duration])
    return Policy(tuple(Segment(n, p, d) for n, p, d in merged))


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class CumulativeCurves:
    """Cumulative energy/data of both nodes at the breakpoints."""

    times: np.ndarray
    E_s: np.ndarray
    E_r: np.ndarray
    B_s: np.ndarray
    B_r: np.ndarray

    @property
    def throughput(self) -> float:
        return float(self.B_r[-1])

    def at(self, t: float) -> tuple[float, float, float, float]:
        """Linear interpolation (exact for piecewise-constant powers)."""
        return tuple(float(np.interp(t, self.times, a))
                     for a in (self.E_s, self.E_r, self.B_s, self.B_r))


def evaluate_policy(instance: Instance, policy: Policy) -> CumulativeCurves:
    """Integrate the policy at every segment boundary and arrival instant."""
    rate = instance.rate
    bounds = [0.0]
    e_s, e_r, b_s, b_r = [0.0], [0.0], [0.0], [0.0]
    for seg in policy.segments:
        data = seg.duration * rate(seg.power)
        energy = seg.power * seg.duration
        src = seg.node == SOURCE
        bounds.append(bounds[-1] + seg.duration)
        e_s.append(e_s[-1] + (energy if src else 0.0))
        b_s.append(b_s[-1] + (data if src else 0.0))
        e_r.append(e_r[-1] + (0.0 if src else energy))
        b_r.append(b_r[-1] + (0.0 if src else data))
    bounds_a = np.array(bounds)
    extra = [t for t in instance.source.times + instance.relay.times
             if 0.0 < t < bounds_a[-1]]
    times = np.unique(np.concatenate([bounds_a, np.array(extra, dtype=float)]))
    curves = [np.interp(times, bounds_a, np.array(a)) for a in (e_s, e_r, b_s, b_r)]
    return CumulativeCurves(times, *curves)


# --------------------------------------------------------------------------
# feasibility

VIOLATION_KINDS = ("energy-causality-source", "energy-causality-relay",
                   "data-causality", "duration", "half-duplex")


@dataclass(frozen=True)
class Violation:
    kind: str
    time: float
    magnitude: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[Violation, ...] = ()

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self):
        if self.feasible:
            return "feasible"
        lines = ["infeasible:"]
        lines += [f"  {v.kind} at t={v.time:.9g} by {v.magnitude:.9g}"
                  for v in self.violations]
        return "\n".join(lines)


def check_feasibility(instance: Instance, policy: Policy,
                      tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Check energy causality, data causality and the duration sum.

    Energy causality compares consumption with the energy that arrived
    strictly before, just ahead of every arrival instant and at the end of
    the policy (consumption only grows between arrivals, so these are the
    binding points).  "Just ahead" is ``TIME_RTOL * max(1, T)`` earlier: a
    boundary accumulated from durations may sit an ulp past the arrival it
    was meant to hit.  Data causality is checked at every breakpoint, which
    includes every relay-segment end.
    """
    eps = abs_tol(instance, tol)
    dt = TIME_RTOL * max(1.0, instance.T)
    curves = evaluate_policy(instance, policy)
    violations: list[Violation] = []

    for node, kind, cons in ((SOURCE, "energy-causality-source", curves.E_s),
                             (RELAY, "energy-causality-relay", curves.E_r)):
        prof = instance.profile(node)
        checkpoints = sorted(set(t for t in prof.times if t > 0) | {curves.times[-1]})
        for t in checkpoints:
            if t > curves.times[-1]:
                continue
            at = t if t == curves.times[-1] else t - dt
            used = float(np.interp(at, curves.times, cons))
            excess = used - prof.harvested_before(t)
            if excess > eps:
                violations.append(Violation(kind, float(t), excess))

    gap = curves.B_r - curves.B_s
    for t, g in zip(curves.times, gap):
        if g > eps:
            violations.append(Violation("data-causality", float(t), float(g)))

    dur_err = policy.duration - instance.T
    if abs(dur_err) > eps:
        violations.append(Violation("duration", float(policy.duration), abs(dur_err)))

    return FeasibilityReport(not violations, tuple(violations))


# --------------------------------------------------------------------------
# optimality properties

PROPERTY_NAMES = ("depletion", "no-idle", "monotone-power", "equal-data",
                  "alternation", "level-change-at-empty-battery")


@dataclass(frozen=True)
class PropertyReport:
    results: dict = field(default_factory=dict)  # name -> (passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.results.values())

    def failures(self) -> list[str]:
        return [k for k, (ok, _) in self.results.items() if not ok]

    def __str__(self):
        return "\n".join(f"  {'PASS' if ok else 'FAIL'} {k}: {detail}"
                         for k, (ok, detail) in self.results.items())


def check_optimality_properties(instance: Instance, policy: Policy,
                                tol: float = DEFAULT_TOL,
                                data_rtol: float = 1e-8) -> PropertyReport:
    """Structural properties every optimal policy has.

    depletion: both batteries empty at T.  no-idle: no zero-power segment.
    monotone-power: each node's power levels never decrease in time.
    equal-data: ``B_s(T) == B_r(T)`` within ``data_rtol`` relative.
    alternation: consecutive epochs belong to different nodes.
    level-change-at-empty-battery: inside an epoch the power only changes
    when consumed energy equals the energy harvested before that instant.
    """
    rep = check_feasibility(instance, policy, tol)
    if not rep.feasible:
        raise PreconditionViolatedError(f"policy is not feasible: {rep}")
    eps = abs_tol(instance, tol)
    canon = canonicalize(policy)
    curves = evaluate_policy(instance, canon)
    res: dict[str, tuple[bool, str]] = {}

    left_s = instance.source.total - curves.E_s[-1]
    left_r = instance.relay.total - curves.E_r[-1]
    res["depletion"] = (abs(left_s) <= eps and abs(left_r) <= eps,
                        f"left source={left_s:.3g} J, relay={left_r:.3g} J")

    idle = [i for i, s in enumerate(canon.segments) if s.power <= 0]
    res["no-idle"] = (not idle, f"idle segments at {idle}" if idle else "none")

    bad = []
    for node in NODES:
        ps = [p for p, _ in canon.levels(node)]
        for a, b in zip(ps, ps[1:]):
            if b < a - 1e-9 * max(1.0, a):
                bad.append((node, a, b))
    res["monotone-power"] = (not bad, f"decreasing steps {bad}" if bad else "ok")

    bs, br = float(curves.B_s[-1]), float(curves.B_r[-1])
    rel = abs(bs - br) / max(bs, br, 1e-300)
    res["equal-data"] = (rel <= data_rtol, f"B_s(T)={bs:.12g}, B_r(T)={br:.12g}")

    epochs = canon.epochs()
    adjacent = [i for i in range(1, len(epochs)) if epochs[i][0] == epochs[i - 1][0]]
    res["alternation"] = (not adjacent,
                          f"{len(epochs)} epochs" + (f", repeats at {adjacent}" if adjacent else ""))

    bad_changes = []
    for node, start, segs in epochs:
        cons = curves.E_s if node == SOURCE else curves.E_r
        prof = instance.profile(node)
        t = start
        for a, b in zip(segs, segs[1:]):
            t += a.duration
            used = float(np.interp(t, curves.times, cons))
            # accumulated durations can land an ulp past the arrival instant
            near = [s for s in prof.times if abs(s - t) <= eps] or [t]
            if all(abs(used - prof.harvested_before(s)) > eps for s in near):
                bad_changes.append((node, t))
    res["level-change-at-empty-battery"] = (
        not bad_changes, f"at {bad_changes}" if bad_changes else "ok")
    return PropertyReport(res)
