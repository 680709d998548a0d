"""Offline throughput-optimal policy for two arrivals per node.

The source corner point ``(t_s1, E_s0)`` is classified into S1/S2 and, in
S2, the relay corner point ``(t_r1, E_r0)`` into R1..R4.  Each region has a
small constrained program; every program is reduced to nested 1-D searches
whose inner equalities (per-epoch or total data balance) are solved by
bracketing root finders.  A bracket always exists because
``x -> x g(E/x)`` is strictly increasing for strictly concave ``g`` with
``g(0) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .core import (DEFAULT_TOL, RELAY, SHANNON, SOURCE, EnergyProfile, Instance,
                   Policy, RateFunctionSpec, abs_tol, canonicalize,
                   check_feasibility, check_optimality_properties,
                   evaluate_policy, normalize)
from .exceptions import (ClassificationInconsistencyError,
                         DegenerateInstanceError, NotBracketedError,
                         SolverSelfCheckError, UnsupportedInstanceError)
from .numerics import (DEFAULT_SEARCH, SearchConfig, bisect_root, bisect_roots,
                       maximize_unimodal, shrink)
from .single_link import single_link_data, single_link_schedule

S1, S2 = "S1", "S2"
WHOLE, R1, R2, R3, R4 = "whole", "R1", "R2", "R3", "R4"


@dataclass(frozen=True)
class RegionLabel:
    source_region: str
    relay_region: str

    def __post_init__(self):
        if (self.relay_region == WHOLE) != (self.source_region == S1):
            raise ValueError("relay region is 'whole' exactly when source is S1")

    def __str__(self):
        return f"{self.source_region}/{self.relay_region}"


@dataclass(frozen=True)
class RegionSolution:
    label: RegionLabel
    policy: Policy
    throughput: float
    unknowns: dict = field(default_factory=dict)
    branch: str = ""
    residuals: dict = field(default_factory=dict)

    def summary(self) -> str:
        lines = [f"region: {self.label}", f"branch: {self.branch}",
                 f"throughput: {self.throughput:.12g} nats"]
        lines += [f"  {k} = {v:.12g}" for k, v in self.unknowns.items()]
        lines += [f"  residual[{k}] = {v:.3g}" for k, v in self.residuals.items()]
        return "\n".join(lines)


@dataclass(frozen=True)
class _Params:
    T: float
    Es0: float
    Es1: float
    ts: float
    Er0: float
    Er1: float
    tr: float
    rate: RateFunctionSpec

    @classmethod
    def of(cls, inst: Instance) -> "_Params":
        if inst.M != 2 or inst.N not in (1, 2):
            raise UnsupportedInstanceError("region programs need M = 2 and N <= 2")
        (_, es0), (ts, es1) = inst.source.arrivals
        if inst.N == 2:
            (_, er0), (tr, er1) = inst.relay.arrivals
        else:
            (_, er0), tr, er1 = inst.relay.arrivals[0], inst.T, 0.0
        return cls(inst.T, es0, es1, ts, er0, er1, tr, inst.rate)

    @property
    def Es(self):
        return self.Es0 + self.Es1

    @property
    def Er(self):
        return self.Er0 + self.Er1

    def data(self, energy, duration):
        # scalar fast path: the inner bisections call this ~10^3 times per solve
        if type(energy) is float and type(duration) is float:
            if duration <= 0.0:
                return 0.0
            if self.rate.kind == "shannon":
                return duration * math.log1p(energy / duration)
            return self.rate.data(energy, duration)
        if np.ndim(energy) == 0 and np.ndim(duration) == 0:
            return self.data(float(energy), float(duration))
        return self.rate.data(energy, duration)


def _as_float(x):
    return float(x) if np.ndim(x) == 0 else x


def _root(fn, lo, hi, cfg, shape=None):
    """Bisection on ``(lo, hi)`` shrunk away from the ends.

    Scalar when ``shape`` is None (NaN if not bracketed), elementwise
    otherwise.
    """
    lo, hi = shrink(lo, hi)
    if shape is None:
        lo, hi = float(lo), float(hi)
        flo, fhi = fn(lo), fn(hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        if not flo * fhi < 0:
            return math.nan
        # Brent keeps the bracket but needs ~10 evaluations instead of ~35
        return brentq(fn, lo, hi, xtol=cfg.bracket_tol * (hi - lo), maxiter=cfg.max_iters)
    return bisect_roots(fn, np.broadcast_to(lo, shape), np.broadcast_to(hi, shape), cfg)


def _build(items, min_duration=0.0) -> Policy:
    return canonicalize(Policy.from_tuples(
        [(n, max(p, 0.0), d) for n, p, d in items], min_duration))


def _nondecreasing(seq, rtol=1e-12):
    ok = True
    for a, b in zip(seq, seq[1:]):
        ok = ok & (b >= a * (1 - rtol))
    return ok


def _outer(P: _Params, pins, powers, lo, hi, cfg):
    """Maximize the source's total data over one free scalar.

    ``pins(v, shape)`` returns the epoch lengths ``(xi_s1, xi_s2)`` fixed by
    the equalities and ``powers(v, xi_s1, xi_s2)`` each node's power
    sequence.  Points whose powers decrease in time are dominated, so they
    are skipped unless nothing else is admissible.
    """
    def obj(v, strict):
        shape = None if np.ndim(v) == 0 else np.shape(v)
        v = _as_float(v)
        x1, x2 = pins(v, shape)
        val = P.data(P.Es0, x1) + P.data(P.Es1, x2)
        if strict:
            with np.errstate(divide="ignore", invalid="ignore"):
                src, rel = powers(v, x1, x2)
                ok = _nondecreasing(src) & _nondecreasing(rel)
            val = np.where(ok, val, np.nan) if shape is not None else (val if ok else math.nan)
        return val

    # the objective is flat at its maximum: a bracket of ~sqrt(tol) already
    # pins the value to ~tol, and the equalities are re-solved exactly below
    ocfg = replace(cfg, bracket_tol=max(cfg.bracket_tol, math.sqrt(cfg.bracket_tol) * 1e-3))
    strict = lambda v: obj(v, True)  # noqa: E731
    v, val = maximize_unimodal(strict, lo, hi, ocfg, vectorized=True)
    if math.isfinite(val):
        return v, val
    v0, val0 = maximize_unimodal(lambda v: obj(v, False), lo, hi, ocfg, vectorized=True)
    if not math.isfinite(val0):
        return v0, val0
    # next to a region boundary the admissible set can be a sliver narrower
    # than one grid cell; look for it around the unrestricted optimum
    a, b = lo, hi
    for _ in range(4):
        w = 2 * (b - a) / ocfg.grid_fallback_points
        a, b = max(lo, v0 - w), min(hi, v0 + w)
        v, val = maximize_unimodal(strict, a, b, ocfg, vectorized=True)
        if math.isfinite(val):
            return v, val
    return v0, val0


# --------------------------------------------------------------------------
# single source epoch


def solve_m1(total_source_energy: float, relay: EnergyProfile, T: float,
             rate: RateFunctionSpec = SHANNON,
             cfg: SearchConfig = DEFAULT_SEARCH) -> tuple[float, Policy]:
    """One source epoch ``[0, xi]`` followed by the relay's window schedule.

    ``xi`` balances source data against the relay's optimal data on
    ``(xi, T)``; the first is increasing and the second decreasing in ``xi``
    so the crossing is unique.
    """
    E = float(total_source_energy)
    if not E > 0:
        raise DegenerateInstanceError("source energy must be > 0")

    def h(x):
        return rate.data(E, x) - single_link_data(relay, x, T, rate)

    lo, hi = shrink(0.0, T)
    try:
        xi = bisect_root(h, lo, hi, cfg)
    except NotBracketedError as exc:
        raise DegenerateInstanceError("no source/relay data crossing in (0, T)") from exc
    # the stopping width is relative to T; a short epoch (tiny source energy)
    # needs a second pass to get the data balance to relative precision
    w = cfg.bracket_tol * (hi - lo)
    try:
        xi = bisect_root(h, max(lo, xi - w), min(hi, xi + w), cfg)
    except NotBracketedError:
        pass
    sched = single_link_schedule(relay, xi, T)
    items = [(SOURCE, E / xi, xi)] + [(RELAY, p, d) for p, d in sched.levels]
    return xi, _build(items)


def classify_source_region(instance: Instance,
                           cfg: SearchConfig = DEFAULT_SEARCH) -> tuple[str, float]:
    """S1 iff one source epoch at the lumped-energy power is energy-causal.

    Returns the label and the single-epoch length ``xi*`` computed with all
    source energy lumped at t=0.
    """
    if instance.M != 2:
        raise UnsupportedInstanceError("source classification needs two source arrivals")
    (_, es0), (ts, es1) = instance.source.arrivals
    xi, _ = solve_m1(es0 + es1, instance.relay, instance.T, instance.rate, cfg)
    # non-strict: the boundary line itself belongs to S1
    in_s1 = (es0 + es1) / xi <= (es0 / ts) * (1 + 1e-12)
    return (S1 if in_s1 else S2), xi


# --------------------------------------------------------------------------
# region R1 (relay energy effectively unconstrained)


def _solve_lumped_split(P: _Params, cfg) -> tuple[float, float]:
    """Total source time ``t`` with both nodes' energy lumped at t=0."""
    def h(t):
        return P.data(P.Es, t) - P.data(P.Er, P.T - t)
    t = _root(h, 0.0, P.T, cfg)
    if math.isnan(t):
        raise DegenerateInstanceError("lumped split has no root")
    return t, P.data(P.Es, t)


def _r1_branch_a(P: _Params, cfg):
    t, B = _solve_lumped_split(P, cfg)
    p, q = P.Es / t, P.Er / (P.T - t)
    xi1 = t * P.Es0 / P.Es
    xi2 = t - xi1
    causal = xi1 * P.T >= P.ts * t * (1 - 1e-12)
    if xi1 >= P.ts:
        items = [(SOURCE, p, t), (RELAY, q, P.T - t)]
    else:
        items = [(SOURCE, p, xi1), (RELAY, q, P.ts - xi1),
                 (SOURCE, p, xi2), (RELAY, q, P.T - P.ts - xi2)]
    return causal, _build(items), {"t": t, "xi_s1": min(xi1, t), "xi_s2": xi2 if xi1 < P.ts else 0.0}


def _r1_branch_b(P: _Params, cfg):
    tau2 = P.T - P.ts

    def pins(E, shape):
        x1 = _root(lambda x: P.data(P.Es0, x) - P.data(E, P.ts - x), 0.0, P.ts, cfg, shape)
        x2 = _root(lambda x: P.data(P.Es1, x) - P.data(P.Er - E, tau2 - x), 0.0, tau2, cfg, shape)
        return x1, x2

    def powers(E, x1, x2):
        return (P.Es0 / x1, P.Es1 / x2), (E / (P.ts - x1), (P.Er - E) / (tau2 - x2))

    E, val = _outer(P, pins, powers, 0.0, P.Er, cfg)
    if not math.isfinite(val):
        return None
    x1, x2 = pins(E, None)
    items = [(SOURCE, P.Es0 / x1, x1), (RELAY, E / (P.ts - x1), P.ts - x1),
             (SOURCE, P.Es1 / x2, x2), (RELAY, (P.Er - E) / (tau2 - x2), tau2 - x2)]
    res = {"epoch1": _rel(P.data(P.Es0, x1), P.data(E, P.ts - x1)),
           "epoch2": _rel(P.data(P.Es1, x2), P.data(P.Er - E, tau2 - x2))}
    unk = {"xi_s1": x1, "xi_s2": x2, "E_r0_prime": E, "E_r1_prime": P.Er - E}
    return _build(items), unk, res


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def solve_r1(instance: Instance, cfg: SearchConfig = DEFAULT_SEARCH) -> RegionSolution:
    """Region R1: the relay behaves as if all its energy arrived at t=0.

    Branch A splits time as in the all-lumped problem and keeps it if the
    relay's first epoch does not outrun the source's data.  Branch B
    otherwise: per-epoch data balance with a free split of relay energy
    between epochs.
    """
    P = _Params.of(instance)
    causal, policy, unk = _r1_branch_a(P, cfg)
    label = RegionLabel(S2, R1)
    if causal:
        return _finish(instance, label, policy, unk, "R1 lumped split",
                       {"total": _total_residual(instance, policy)})
    out = _r1_branch_b(P, cfg)
    if out is None:
        raise ClassificationInconsistencyError("R1 per-epoch program infeasible")
    policy, unk, res = out
    return _finish(instance, label, policy, unk, "R1 empty-buffer split", res)


def r1_relay_consumption(instance: Instance, r1: RegionSolution) -> float:
    """Relay energy the R1 policy spends before the relay's second arrival."""
    tr = instance.relay.times[1]
    curves = evaluate_policy(instance, r1.policy)
    return float(np.interp(tr, curves.times, curves.E_r))


# --------------------------------------------------------------------------
# region R2 (relay energy-limited in its first epoch, t_r1 < t_s1)


def _r2_branch_a(P: _Params, cfg):
    tau_s2 = P.T - P.ts
    after = P.T - P.tr  # relay time after t_r1 is after - xi2

    def pin2(x1, shape):
        src1 = P.data(P.Es0, x1)
        rel1 = P.data(P.Er0, P.tr - x1)
        return _root(lambda x: src1 + P.data(P.Es1, x) - rel1 - P.data(P.Er1, after - x),
                     0.0, tau_s2, cfg, shape)

    def powers(x1, _, x2):
        return (P.Es0 / x1, P.Es1 / x2), (P.Er0 / (P.tr - x1), P.Er1 / (after - x2))

    x1, val = _outer(P, lambda v, shape: (v, pin2(v, shape)), powers, 0.0, P.tr, cfg)
    if not math.isfinite(val):
        return None
    x2 = pin2(x1, None)
    pr1 = P.Er0 / (P.tr - x1)
    pr2 = P.Er1 / (after - x2)
    causal = P.data(P.Es0, x1) >= (P.data(P.Er0, P.tr - x1)
                                   + P.data(pr2 * (P.ts - P.tr), P.ts - P.tr)) * (1 - 1e-12)
    items = [(SOURCE, P.Es0 / x1, x1), (RELAY, pr1, P.tr - x1), (RELAY, pr2, P.ts - P.tr),
             (SOURCE, P.Es1 / x2, x2), (RELAY, pr2, tau_s2 - x2)]
    res = {"total": _rel(P.data(P.Es0, x1) + P.data(P.Es1, x2),
                         P.data(P.Er0, P.tr - x1) + P.data(P.Er1, after - x2))}
    return causal, _build(items), {"xi_s1": x1, "xi_s2": x2}, res


def _r2_branch_b(P: _Params, cfg):
    tau_s2 = P.T - P.ts
    gap = P.ts - P.tr

    def pins(E, shape):
        mid = P.data(E, gap)
        x1 = _root(lambda x: P.data(P.Es0, x) - P.data(P.Er0, P.tr - x) - mid,
                   0.0, P.tr, cfg, shape)
        x2 = _root(lambda x: P.data(P.Es1, x) - P.data(P.Er1 - E, tau_s2 - x),
                   0.0, tau_s2, cfg, shape)
        return x1, x2

    def powers(E, x1, x2):
        return ((P.Es0 / x1, P.Es1 / x2),
                (P.Er0 / (P.tr - x1), E / gap, (P.Er1 - E) / (tau_s2 - x2)))

    E, val = _outer(P, pins, powers, 0.0, P.Er1, cfg)
    if not math.isfinite(val):
        return None
    x1, x2 = pins(E, None)
    items = [(SOURCE, P.Es0 / x1, x1), (RELAY, P.Er0 / (P.tr - x1), P.tr - x1),
             (RELAY, E / gap, gap), (SOURCE, P.Es1 / x2, x2),
             (RELAY, (P.Er1 - E) / (tau_s2 - x2), tau_s2 - x2)]
    res = {"epoch1": _rel(P.data(P.Es0, x1), P.data(P.Er0, P.tr - x1) + P.data(E, gap)),
           "epoch2": _rel(P.data(P.Es1, x2), P.data(P.Er1 - E, tau_s2 - x2))}
    return _build(items), {"xi_s1": x1, "xi_s2": x2, "E_r1_hat": E}, res


def solve_r2(instance: Instance, cfg: SearchConfig = DEFAULT_SEARCH) -> RegionSolution:
    """Region R2: relay power rises at ``t_r1`` inside its first epoch."""
    P = _Params.of(instance)
    label = RegionLabel(S2, R2)
    a = _r2_branch_a(P, cfg)
    if a is not None and a[0]:
        _, policy, unk, res = a
        return _finish(instance, label, policy, unk, "R2 merged p_r2=p_r3", res)
    b = _r2_branch_b(P, cfg)
    if b is None:
        raise ClassificationInconsistencyError("both R2 programs infeasible")
    policy, unk, res = b
    return _finish(instance, label, policy, unk, "R2 empty-buffer split", res)


# --------------------------------------------------------------------------
# region R3 (relay uses E_r0 in epoch 1 and E_r1 in epoch 2)


def _r3_program(P: _Params, cfg):
    tau_s2 = P.T - P.ts
    lo2 = max(P.tr - P.ts, 0.0)

    def pin2(x1, shape):
        src1 = P.data(P.Es0, x1)
        rel1 = P.data(P.Er0, P.ts - x1)
        x2 = _root(lambda x: src1 + P.data(P.Es1, x) - rel1 - P.data(P.Er1, tau_s2 - x),
                   lo2, tau_s2, cfg, shape)
        # relay may not outrun the source at the end of its first epoch
        return np.where(rel1 <= src1 * (1 + 1e-12), x2, np.nan) if shape is not None \
            else (x2 if rel1 <= src1 * (1 + 1e-12) else math.nan)

    def powers(x1, _, x2):
        return (P.Es0 / x1, P.Es1 / x2), (P.Er0 / (P.ts - x1), P.Er1 / (tau_s2 - x2))

    x1, val = _outer(P, lambda v, shape: (v, pin2(v, shape)), powers, 0.0, P.ts, cfg)
    x2 = pin2(x1, None) if math.isfinite(val) else math.nan
    # The admissible x1 set is bounded by x2 = t_r1 - t_s1 and by equal data
    # at the end of relay epoch 1; it can shrink to a point the grid misses.
    for c1, c2 in _r3_corners(P, lo2, tau_s2, cfg):
        v = P.data(P.Es0, c1) + P.data(P.Es1, c2)
        if not math.isfinite(val) or v > val:
            x1, x2, val = c1, c2, v
    if not math.isfinite(val):
        return None
    items = [(SOURCE, P.Es0 / x1, x1), (RELAY, P.Er0 / (P.ts - x1), P.ts - x1),
             (SOURCE, P.Es1 / x2, x2), (RELAY, P.Er1 / (tau_s2 - x2), tau_s2 - x2)]
    res = {"total": _rel(P.data(P.Es0, x1) + P.data(P.Es1, x2),
                         P.data(P.Er0, P.ts - x1) + P.data(P.Er1, tau_s2 - x2))}
    return _build(items), {"xi_s1": x1, "xi_s2": x2}, res


def _r3_corners(P: _Params, lo2, tau_s2, cfg, rtol=1e-9):
    """Endpoints of the admissible R3 set, each checked against both limits."""
    out = []
    tail = P.data(P.Es1, lo2) - P.data(P.Er1, tau_s2 - lo2)
    xa = _root(lambda x: P.data(P.Es0, x) - P.data(P.Er0, P.ts - x) + tail, 0.0, P.ts, cfg)
    if math.isfinite(xa) and lo2 > 0:
        src1, rel1 = P.data(P.Es0, xa), P.data(P.Er0, P.ts - xa)
        if rel1 <= src1 * (1 + rtol):
            out.append((xa, lo2))
    xb = _root(lambda x: P.data(P.Es0, x) - P.data(P.Er0, P.ts - x), 0.0, P.ts, cfg)
    if math.isfinite(xb):
        # equal epoch-1 data leaves the epoch-2 balance for x2
        x2 = _root(lambda x: P.data(P.Es1, x) - P.data(P.Er1, tau_s2 - x), 0.0, tau_s2, cfg)
        if math.isfinite(x2) and x2 >= lo2 * (1 - rtol):
            out.append((xb, max(x2, lo2)))
    return out


def solve_r3(instance: Instance, cfg: SearchConfig = DEFAULT_SEARCH) -> RegionSolution:
    """Region R3: relay spends ``E_r0`` in epoch 1 and ``E_r1`` in epoch 2."""
    P = _Params.of(instance)
    out = _r3_program(P, cfg)
    if out is None:
        raise ClassificationInconsistencyError("R3 program has no admissible xi_s2")
    policy, unk, res = out
    return _finish(instance, RegionLabel(S2, R3), policy, unk, "R3 separate relay epochs", res)


# --------------------------------------------------------------------------
# region R4 (relay power rises at t_r1 inside its second epoch)


def _r4_branch_a(P: _Params, cfg, tol=DEFAULT_TOL, instance=None):
    tail = P.data(P.Er1, P.T - P.tr)

    def h(t):
        return P.data(P.Es, t) - P.data(P.Er0, P.tr - t) - tail

    t = _root(h, 0.0, P.tr, cfg)
    if math.isnan(t):
        return None
    p = P.Es / t
    pr1 = P.Er0 / (P.tr - t)
    pr3 = P.Er1 / (P.T - P.tr)
    xi1 = t * P.Es0 / P.Es
    xi2 = t - xi1
    if xi1 >= P.ts:
        items = [(SOURCE, p, t), (RELAY, pr1, P.tr - t), (RELAY, pr3, P.T - P.tr)]
    else:
        if P.tr - P.ts - xi2 < 0:
            return None
        items = [(SOURCE, p, xi1), (RELAY, pr1, P.ts - xi1), (SOURCE, p, xi2),
                 (RELAY, pr1, P.tr - P.ts - xi2), (RELAY, pr3, P.T - P.tr)]
    policy = _build(items)
    if instance is not None and not check_feasibility(instance, policy, tol).feasible:
        return None
    res = {"total": _rel(P.data(P.Es, t), P.data(P.Er0, P.tr - t) + tail)}
    return policy, {"t": t, "xi_s1": min(xi1, t), "xi_s2": xi2 if xi1 < P.ts else 0.0}, res


def _r4_branch_b(P: _Params, cfg):
    gap = P.tr - P.ts
    tail = P.data(P.Er1, P.T - P.tr)

    def pins(E, shape):
        x1 = _root(lambda x: P.data(P.Es0, x) - P.data(E, P.ts - x), 0.0, P.ts, cfg, shape)
        x2 = _root(lambda x: P.data(P.Es1, x) - P.data(P.Er0 - E, gap - x) - tail,
                   0.0, gap, cfg, shape)
        return x1, x2

    def powers(E, x1, x2):
        return ((P.Es0 / x1, P.Es1 / x2),
                (E / (P.ts - x1), (P.Er0 - E) / (gap - x2), P.Er1 / (P.T - P.tr)))

    E, val = _outer(P, pins, powers, 0.0, P.Er0, cfg)
    if not math.isfinite(val):
        return None
    x1, x2 = pins(E, None)
    items = [(SOURCE, P.Es0 / x1, x1), (RELAY, E / (P.ts - x1), P.ts - x1),
             (SOURCE, P.Es1 / x2, x2), (RELAY, (P.Er0 - E) / (gap - x2), gap - x2),
             (RELAY, P.Er1 / (P.T - P.tr), P.T - P.tr)]
    res = {"epoch1": _rel(P.data(P.Es0, x1), P.data(E, P.ts - x1)),
           "epoch2": _rel(P.data(P.Es1, x2), P.data(P.Er0 - E, gap - x2) + tail)}
    return _build(items), {"xi_s1": x1, "xi_s2": x2, "E_r0_hat": E}, res


def solve_r4(instance: Instance, cfg: SearchConfig = DEFAULT_SEARCH,
             tol: float = DEFAULT_TOL) -> RegionSolution:
    """Region R4: relay power rises at ``t_r1`` inside its second epoch."""
    P = _Params.of(instance)
    label = RegionLabel(S2, R4)
    a = _r4_branch_a(P, cfg, tol, instance)
    if a is not None:
        policy, unk, res = a
        return _finish(instance, label, policy, unk, "R4 merged p_r1=p_r2", res)
    b = _r4_branch_b(P, cfg)
    if b is None:
        raise ClassificationInconsistencyError("both R4 programs infeasible")
    policy, unk, res = b
    return _finish(instance, label, policy, unk, "R4 empty-buffer split", res)


# --------------------------------------------------------------------------
# classification and dispatch


def classify_relay_region(instance: Instance, r1_solution: RegionSolution,
                          cfg: SearchConfig = DEFAULT_SEARCH,
                          tol: float = DEFAULT_TOL) -> str:
    """R1 if the relay corner point is on or above the R1 relay energy curve.

    Otherwise R2 left of ``t_s1``; right of it (``t_r1 = t_s1`` included)
    R4 when the source's second epoch cannot fit before ``t_r1``, else R4
    if the merged R4 policy is feasible and R3 if it is not.
    """
    P = _Params.of(instance)
    if r1_relay_consumption(instance, r1_solution) <= P.Er0 + abs_tol(instance, tol):
        return R1
    if P.tr < P.ts:
        return R2
    if P.data(P.Es1, P.tr - P.ts) > P.data(P.Er1, P.T - P.tr):
        return R4
    return R4 if _r4_branch_a(P, cfg, tol, instance) is not None else R3


def _total_residual(instance: Instance, policy: Policy) -> float:
    c = evaluate_policy(instance, policy)
    return _rel(float(c.B_s[-1]), float(c.B_r[-1]))


def _finish(instance, label, policy, unknowns, branch, residuals) -> RegionSolution:
    thr = evaluate_policy(instance, policy).throughput
    return RegionSolution(label, policy, thr, dict(unknowns), branch, dict(residuals))


def verify_solution(instance: Instance, sol: RegionSolution,
                    tol: float = DEFAULT_TOL, data_rtol: float = 1e-8) -> None:
    """Re-check a solver output through the feasibility and property suite."""
    rep = check_feasibility(instance, sol.policy, tol)
    if not rep.feasible:
        raise SolverSelfCheckError(f"{sol.label} ({sol.branch}) output infeasible:\n{rep}")
    props = check_optimality_properties(instance, sol.policy, tol, data_rtol)
    if not props.passed:
        raise SolverSelfCheckError(
            f"{sol.label} ({sol.branch}) output fails {props.failures()}:\n{props}")


def solve(instance: Instance, cfg: SearchConfig = DEFAULT_SEARCH,
          tol: float = DEFAULT_TOL, verify: bool = True) -> RegionSolution:
    """Optimal offline policy for instances with at most two arrivals per node."""
    inst = normalize(instance)
    if inst.M > 2 or inst.N > 2:
        raise UnsupportedInstanceError(
            f"only up to two arrivals per node are supported (M={inst.M}, N={inst.N})")
    if inst.M == 1:
        xi, policy = solve_m1(inst.source.total, inst.relay, inst.T, inst.rate, cfg)
        sol = _finish(inst, RegionLabel(S1, WHOLE), policy, {"xi_s1": xi}, "single source arrival",
                      {"total": _total_residual(inst, policy)})
    else:
        region, xi = classify_source_region(inst, cfg)
        if region == S1:
            _, policy = solve_m1(inst.source.total, inst.relay, inst.T, inst.rate, cfg)
            sol = _finish(inst, RegionLabel(S1, WHOLE), policy, {"xi_s1": xi},
                          "single source epoch", {"total": _total_residual(inst, policy)})
        elif inst.N == 1:
            # a single relay arrival never constrains the relay curve
            sol = solve_r1(inst, cfg)
        else:
            r1 = solve_r1(inst, cfg)
            relay_region = classify_relay_region(inst, r1, cfg, tol)
            if relay_region == R1:
                sol = r1
            elif relay_region == R2:
                sol = solve_r2(inst, cfg)
            elif relay_region == R3:
                sol = solve_r3(inst, cfg)
            else:
                sol = solve_r4(inst, cfg, tol)
    if verify:
        verify_solution(inst, sol, tol)
    return sol
