"""Brute-force references for the two-hop solver.

``grid_oracle`` enumerates the schedule family implied by the structural
properties (source epochs start at 0 and at ``t_s1``; relay fills the gaps
with window-optimal levels) on nested time and energy grids.  It is tight
but trusts that structure.

``slot_dp_oracle`` trusts nothing but the slot grid: a dynamic program over
(slot boundary, source energy spent, relay energy spent, relay buffer) whose
actions are constant-power runs of either node, so any interleaving,
idling, or power profile on the grid is reachable.  Quantization is always
rounded against the policy, so its value is achievable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import RELAY, SOURCE, Instance, Policy, abs_tol, canonicalize, normalize
from .exceptions import (DegenerateInstanceError, ResolutionExceededError,
                         UnsupportedInstanceError)
from .single_link import string_levels

# rate encoding for the compiled kernels: kind 0 = ln(1+p), kind 1 = table
_SHANNON_KIND, _TABLE_KIND = 0, 1


def _rate_arrays(rate):
    if rate.kind == "shannon":
        return _SHANNON_KIND, np.zeros(2), np.zeros(2)
    xs = np.array([p for p, _ in rate.points], dtype=float)
    ys = np.array([r for _, r in rate.points], dtype=float)
    return _TABLE_KIND, xs, ys


@njit(cache=True)
def _g(p, kind, xs, ys):
    if kind == 0:
        return math.log1p(p)
    n = xs.shape[0]
    if p >= xs[n - 1]:
        return ys[n - 1] + (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]) * (p - xs[n - 1])
    k = 1
    while xs[k] < p:
        k += 1
    w = (p - xs[k - 1]) / (xs[k] - xs[k - 1])
    return ys[k - 1] + w * (ys[k] - ys[k - 1])


@njit(cache=True)
def _f(e, d, kind, xs, ys):
    if d <= 0.0:
        return 0.0
    return d * _g(e / d, kind, xs, ys)


@njit(cache=True)
def _window(pooled, inner_t, inner_e, a, b, kind, xs, ys):
    """Window-optimal data with one optional interior arrival (inner_e > 0)."""
    if b <= a:
        return 0.0
    if inner_e <= 0.0 or not (a < inner_t < b):
        return _f(pooled, b - a, kind, xs, ys)
    total = pooled + inner_e
    if total / (b - a) * (inner_t - a) <= pooled:
        return _f(total, b - a, kind, xs, ys)
    return _f(pooled, inner_t - a, kind, xs, ys) + _f(inner_e, b - inner_t, kind, xs, ys)


@njit(cache=True)
def _capped_window(pooled, inner_t, inner_e, a, b, cap, kind, xs, ys):
    """Window-optimal data spending at most ``cap`` joules."""
    if b <= a or cap <= 0.0:
        return 0.0
    if inner_e <= 0.0 or not (a < inner_t < b) or cap <= pooled:
        return _f(min(cap, pooled + (inner_e if a < inner_t < b else 0.0)), b - a, kind, xs, ys)
    if cap / (b - a) * (inner_t - a) <= pooled:
        return _f(cap, b - a, kind, xs, ys)
    return _f(pooled, inner_t - a, kind, xs, ys) + _f(cap - pooled, b - inner_t, kind, xs, ys)


@njit(cache=True)
def _source_split(es0, es1, x1, x2, kind, xs, ys):
    """Source data in its two epochs, window-optimal over the joined epochs."""
    if x2 <= 0.0:
        return _f(es0, x1, kind, xs, ys), 0.0
    if es0 / x1 >= es1 / x2:
        p = (es0 + es1) / (x1 + x2)
        r = _g(p, kind, xs, ys)
        return r * x1, r * x2
    return _f(es0, x1, kind, xs, ys), _f(es1, x2, kind, xs, ys)


@njit(cache=True)
def _relay_value(j, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2, kind, xs, ys):
    x = cap * j / splits
    c = ts + x2
    pooled1 = er0 + (er1 if tr <= x1 else 0.0)
    r1 = _capped_window(pooled1, tr, er1, x1, ts, x, kind, xs, ys)
    pooled2 = er0 + (er1 if tr <= c else 0.0) - x
    if pooled2 < 0.0:
        pooled2 = 0.0
    r2 = _window(pooled2, tr, er1, c, T, kind, xs, ys)
    return min(r1 + r2, d1 + r2, d1 + d2)


@njit(cache=True)
def _best_split(start, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2, kind, xs, ys):
    """Maximize the relay value over the discrete energy split.

    The value is concave in the split, so climbing from ``start`` (the
    previous grid point's argmax) reaches the maximum.  Only strict
    improvements move, so ties keep the point closest to ``start``.
    """
    j = start
    v = _relay_value(j, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2, kind, xs, ys)
    while j < splits:
        w = _relay_value(j + 1, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2, kind, xs, ys)
        if w <= v:
            break
        j, v = j + 1, w
    while j > 0:
        w = _relay_value(j - 1, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2, kind, xs, ys)
        if w <= v:
            break
        j, v = j - 1, w
    return j, v


@njit(cache=True)
def _grid_two_epochs(T, es0, es1, ts, er0, er1, tr, n1, n2, splits, kind, xs, ys):
    cap = er0 + (er1 if tr < ts else 0.0)
    tau2 = T - ts
    best = -1.0
    bx1, bx2, bj = 0.0, 0.0, 0
    for i in range(1, n1 + 1):
        # i = n1 is one uninterrupted source epoch through t_s1
        x1 = ts * i / n1
        j = 0
        # x2 = 0 leaves E_s1 unused: never optimal, but keeps the grid non-empty
        for k in range(n2):
            x2 = tau2 * k / n2
            d1, d2 = _source_split(es0, es1, x1, x2, kind, xs, ys)
            if i == n1:
                j, v = 0, _relay_value(0, splits, cap, T, ts, ts, x2, er0, er1, tr, 0.0,
                                       d1 + d2, kind, xs, ys)
            else:
                j, v = _best_split(j, splits, cap, T, ts, x1, x2, er0, er1, tr, d1, d2,
                                   kind, xs, ys)
            if v > best:
                best, bx1, bx2, bj = v, x1, x2, j
    return best, bx1, bx2, bj


@njit(cache=True)
def _grid_one_epoch(T, es, er0, er1, tr, n, kind, xs, ys):
    best, bx = -1.0, 0.0
    for i in range(1, n):
        x = T * i / n
        d = _f(es, x, kind, xs, ys)
        pooled = er0 + (er1 if tr <= x else 0.0)
        v = min(d, _window(pooled, tr, er1, x, T, kind, xs, ys))
        if v > best:
            best, bx = v, x
    return best, bx


@dataclass(frozen=True)
class GridConfig:
    """Grid resolution.

    Each source-epoch window ``(0, w]`` is cut into ``n`` equal parts with
    ``n`` the smallest power of two giving a step of at most ``time_step``,
    but never fewer than ``min_window_points``.  Halving ``time_step``
    therefore refines every window grid into a superset of itself.
    """

    time_step: float | None = None  # seconds; default 2e-3 * T
    energy_splits: int = 500
    min_window_points: int = 256

    def __post_init__(self):
        if self.time_step is not None and not self.time_step > 0:
            raise ValueError("time_step must be > 0")
        if self.energy_splits < 2:
            raise ValueError("energy_splits must be >= 2")
        if self.min_window_points < 1:
            raise ValueError("min_window_points must be >= 1")

    def step(self, T: float) -> float:
        return 2e-3 * T if self.time_step is None else self.time_step

    def points(self, window: float, T: float) -> int:
        n = 1
        while window / n > self.step(T) or n < self.min_window_points:
            n *= 2
        return n


@dataclass(frozen=True)
class GridResult:
    throughput: float
    params: dict
    policy: Policy


def _unpack(inst: Instance):
    if inst.M > 2 or inst.N > 2:
        raise UnsupportedInstanceError("oracles support at most two arrivals per node")
    es0 = inst.source.amounts[0]
    es1, ts = (inst.source.amounts[1], inst.source.times[1]) if inst.M == 2 else (0.0, inst.T)
    er0 = inst.relay.amounts[0]
    er1, tr = (inst.relay.amounts[1], inst.relay.times[1]) if inst.N == 2 else (0.0, inst.T)
    return es0, es1, ts, er0, er1, tr


def grid_oracle(instance: Instance, cfg: GridConfig = GridConfig()) -> GridResult:
    """Best feasible throughput over the structured schedule grid.

    Source epochs ``xi_s1`` and ``xi_s2`` run over the window grids of
    :class:`GridConfig` (``xi_s1 = t_s1`` stands for one uninterrupted
    source epoch); the
    relay's first-epoch energy runs over ``energy_splits`` equal parts of
    what it has harvested before ``t_s1``.  Ties keep the lexicographically
    first parameters, so the result does not depend on evaluation order.
    """
    inst = normalize(instance)
    es0, es1, ts, er0, er1, tr = _unpack(inst)
    kind, xs, ys = _rate_arrays(inst.rate)
    T = inst.T
    if inst.M == 1:
        best, x = _grid_one_epoch(T, es0, er0, er1, tr, cfg.points(T, T), kind, xs, ys)
        if best < 0:
            raise DegenerateInstanceError("time grid has no interior point")
        params = {"xi_s1": x}
        policy = _one_epoch_policy(inst, es0, x, er0, er1, tr)
    else:
        best, x1, x2, j = _grid_two_epochs(T, es0, es1, ts, er0, er1, tr,
                                           cfg.points(ts, T), cfg.points(T - ts, T),
                                           cfg.energy_splits, kind, xs, ys)
        if best < 0:
            raise DegenerateInstanceError("time grid has no interior point")
        cap = er0 + (er1 if tr < ts else 0.0)
        x = cap * j / cfg.energy_splits
        params = {"xi_s1": x1, "xi_s2": x2, "relay_epoch1_energy": x}
        policy = _two_epoch_policy(inst, x1, x2, x, best)
    return GridResult(float(best), params, policy)


# --------------------------------------------------------------------------
# turning an argmax back into a policy


def _levels(pooled, inner, a, b, total=None):
    if b <= a:
        return []
    return string_levels(pooled, inner, a, b, total)


def _data(rate, levels):
    return sum(d * rate(p) for p, d in levels)


def _throttle(rate, levels, budget):
    """Scale a window schedule down until it sends at most ``budget`` nats.

    Uniformly scaling every power keeps energy causality and only lowers the
    data, so the scaled schedule stays feasible.
    """
    if _data(rate, levels) <= budget:
        return levels
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _data(rate, [(p * mid, d) for p, d in levels]) <= budget:
            lo = mid
        else:
            hi = mid
    return [(p * lo, d) for p, d in levels]


def _one_epoch_policy(inst, es, x, er0, er1, tr):
    T, rate = inst.T, inst.rate
    d = x * rate(es / x)
    pooled = er0 + (er1 if tr <= x else 0.0)
    inner = [(tr, er1)] if x < tr < T and er1 > 0 else []
    relay = _throttle(rate, _levels(pooled, inner, x, T), d)
    items = [(SOURCE, es / x, x)] + [(RELAY, p, dd) for p, dd in relay]
    return canonicalize(Policy.from_tuples(items))


def _two_epoch_policy(inst, x1, x2, x, value):
    T, rate = inst.T, inst.rate
    es0, es1, ts, er0, er1, tr = _unpack(inst)
    if x1 >= ts:
        src = string_levels(es0, [(ts, es1)] if x2 > 0 else [], 0.0, ts + x2)
        d_src = _data(rate, src)
        pooled = er0 + (er1 if tr <= ts + x2 else 0.0)
        inner = [(tr, er1)] if ts + x2 < tr < T and er1 > 0 else []
        relay = _throttle(rate, _levels(pooled, inner, ts + x2, T), d_src)
        items = [(SOURCE, p, d) for p, d in src] + [(RELAY, p, d) for p, d in relay]
        return canonicalize(Policy.from_tuples(items))
    # joined source epochs: string over virtual time with E_s1 arriving at x1
    if x2 > 0:
        virt = string_levels(es0, [(x1, es1)], 0.0, x1 + x2)
        p1, p2 = virt[0][0], virt[-1][0]
    else:
        p1, p2 = es0 / x1, 0.0
    d1, d2 = x1 * rate(p1), x2 * rate(p2)
    pooled1 = er0 + (er1 if tr <= x1 else 0.0)
    inner1 = [(tr, er1)] if x1 < tr < ts and er1 > 0 else []
    r1 = _throttle(rate, _levels(pooled1, inner1, x1, ts, x), d1)
    used = sum(p * d for p, d in r1)
    c = ts + x2
    pooled2 = er0 + (er1 if tr <= c else 0.0) - used
    inner2 = [(tr, er1)] if c < tr < T and er1 > 0 else []
    r2 = _throttle(rate, _levels(max(pooled2, 0.0), inner2, c, T), d1 + d2 - _data(rate, r1))
    items = ([(SOURCE, p1, x1)] + [(RELAY, p, d) for p, d in r1]
             + ([(SOURCE, p2, x2)] if x2 > 0 else []) + [(RELAY, p, d) for p, d in r2])
    return canonicalize(Policy.from_tuples(items))


# --------------------------------------------------------------------------
# structure-free slot dynamic program


@dataclass(frozen=True)
class SlotDpConfig:
    slots: int = 40
    energy_levels: int = 20  # quanta per joule
    data_levels: int = 80
    max_states: int = 10_000_000

    def __post_init__(self):
        if self.slots < 2 or self.energy_levels < 2 or self.data_levels < 2:
            raise ValueError("slots, energy_levels and data_levels must all be >= 2")


@dataclass(frozen=True)
class SlotDpResult:
    throughput: float
    actions: tuple  # (node, start, end, energy) runs in time order
    policy: Policy


@njit(cache=True)
def _dp_solve(bounds, avail_s, avail_r, arr_s, arr_r, delta, q, L, kind, xs, ys):
    """Backward DP; returns value table V[i, es, er, b]."""
    K = bounds.shape[0] - 1
    Ls = avail_s[K - 1]
    Lr = avail_r[K - 1]
    V = np.full((K + 1, Ls + 1, Lr + 1, L + 1), -1.0)
    V[K, :, :, :] = 0.0
    for i in range(K - 1, -1, -1):
        for es in range(avail_s[i] + 1):
            for er in range(avail_r[i] + 1):
                best = V[i, es, er]
                # idle slot
                for b in range(L + 1):
                    if V[i + 1, es, er, b] > best[b]:
                        best[b] = V[i + 1, es, er, b]
                for r in range(1, K - i + 1):
                    j = i + r
                    span = bounds[j] - bounds[i]
                    # source run
                    kmax = avail_s[j - 1] - es
                    for a in range(arr_s.shape[0]):
                        m = arr_s[a]
                        if i < m < j:
                            lim = (avail_s[m - 1] - es) * span / (bounds[m] - bounds[i])
                            if lim < kmax:
                                kmax = int(math.floor(lim + 1e-9))
                    for k in range(1, kmax + 1):
                        nxt = V[j, es + k, er]
                        d = span * _g(k * delta / span, kind, xs, ys)
                        add = int(math.floor(d / q + 1e-12))
                        for b in range(L + 1):
                            nb = b + add
                            if nb > L:
                                nb = L
                            v = nxt[nb]
                            if v > best[b]:
                                best[b] = v
                    # relay run
                    kmax = avail_r[j - 1] - er
                    for a in range(arr_r.shape[0]):
                        m = arr_r[a]
                        if i < m < j:
                            lim = (avail_r[m - 1] - er) * span / (bounds[m] - bounds[i])
                            if lim < kmax:
                                kmax = int(math.floor(lim + 1e-9))
                    for k in range(1, kmax + 1):
                        nxt = V[j, es, er + k]
                        d = span * _g(k * delta / span, kind, xs, ys)
                        sub = int(math.ceil(d / q - 1e-12))
                        for b in range(1, L + 1):
                            if sub <= b:
                                v = d + nxt[b - sub]
                            else:
                                # throttle the run to drain exactly the buffer
                                v = b * q + nxt[0]
                            if v > best[b]:
                                best[b] = v
    return V


def _slot_bounds(inst: Instance, slots: int) -> np.ndarray:
    grid = np.linspace(0.0, inst.T, slots + 1)
    extra = [t for t in inst.source.times + inst.relay.times if t > 0]
    return np.unique(np.concatenate([grid, np.array(extra, float)]))


def _avail_units(bounds, profile, delta):
    # energy usable during the slot starting at bounds[i]: arrivals at or before it
    return np.array([int(math.floor(profile.harvested_by(t) / delta + 1e-9))
                     for t in bounds[:-1]], dtype=np.int64)


def _buffer_bound(inst: Instance) -> float:
    """Upper bound on throughput, hence on any useful relay buffer.

    Whatever the schedule, the source transmits for some total time ``t``
    and the relay for at most ``T - t``; by concavity each node's data is at
    most what its whole energy gives at constant power over its time.
    """
    rate, T = inst.rate, inst.T
    Es, Er = inst.source.total, inst.relay.total

    def gap(t):
        return rate.data(Es, t) - rate.data(Er, T - t)

    lo, hi = 0.0, T
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return float(rate.data(Es, hi))


def slot_dp_oracle(instance: Instance, cfg: SlotDpConfig = SlotDpConfig()) -> SlotDpResult:
    """Best throughput over run-constant policies on a slot grid.

    Slot boundaries are ``cfg.slots`` uniform slots refined by every arrival
    instant.  Energy is spent in quanta of ``1 / energy_levels`` J; the relay
    buffer is tracked in ``data_levels`` quanta of an upper bound on the
    throughput, rounded down when the source adds data and up when the relay
    removes it.
    """
    if cfg.slots < 1:
        raise ValueError("slots must be >= 1")
    inst = normalize(instance)
    if inst.M > 2 or inst.N > 2:
        raise UnsupportedInstanceError("oracles support at most two arrivals per node")
    kind, xs, ys = _rate_arrays(inst.rate)
    bounds = _slot_bounds(inst, cfg.slots)
    K = len(bounds) - 1
    delta = 1.0 / cfg.energy_levels
    avail_s = _avail_units(bounds, inst.source, delta)
    avail_r = _avail_units(bounds, inst.relay, delta)
    if avail_s[-1] < 1 or avail_r[-1] < 1:
        raise ResolutionExceededError("energy quantum larger than the harvested energy")
    L = cfg.data_levels
    states = (K + 1) * (avail_s[-1] + 1) * (avail_r[-1] + 1) * (L + 1)
    if states > cfg.max_states:
        raise ResolutionExceededError(f"{states} DP states exceed the budget {cfg.max_states}")
    rate = inst.rate
    q = _buffer_bound(inst) / L
    arr_s = np.array([int(np.searchsorted(bounds, t)) for t in inst.source.times[1:]],
                     dtype=np.int64)
    arr_r = np.array([int(np.searchsorted(bounds, t)) for t in inst.relay.times[1:]],
                     dtype=np.int64)
    V = _dp_solve(bounds, avail_s, avail_r, arr_s, arr_r, delta, q, L, kind, xs, ys)
    value = float(V[0, 0, 0, 0])
    actions = _dp_trace(V, bounds, avail_s, avail_r, arr_s, arr_r, delta, q, L, rate)
    items = []
    for node, a, b, k, d in actions:
        span = bounds[b] - bounds[a]
        p = k * delta / span
        if node == RELAY and d is not None:
            # throttled run: lower the power so exactly d nats leave
            p = _inverse_power(rate, d / span, p)
        items.append((node, p, span))
    policy = canonicalize(Policy.from_tuples(items))
    return SlotDpResult(value, tuple((n, float(bounds[a]), float(bounds[b]), k * delta)
                                     for n, a, b, k, _ in actions), policy)


def _inverse_power(rate, target_rate, p_hi):
    lo, hi = 0.0, p_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate(mid) < target_rate:
            lo = mid
        else:
            hi = mid
    return lo


def _dp_trace(V, bounds, avail_s, avail_r, arr_s, arr_r, delta, q, L, rate):
    """Forward pass re-deriving an optimal action sequence from ``V``."""
    K = len(bounds) - 1
    i, es, er, b = 0, 0, 0, 0
    out = []
    while i < K:
        target = V[i, es, er, b]
        found = None
        if abs(V[i + 1, es, er, b] - target) <= 1e-12 * max(1.0, target):
            found = ("idle", i + 1, 0, b, 0.0, None)
        for r in range(1, K - i + 1):
            if found:
                break
            j = i + r
            span = bounds[j] - bounds[i]
            for node, arr, avail, used in ((SOURCE, arr_s, avail_s, es),
                                           (RELAY, arr_r, avail_r, er)):
                kmax = avail[j - 1] - used
                for m in arr:
                    if i < m < j:
                        lim = (avail[m - 1] - used) * span / (bounds[m] - bounds[i])
                        kmax = min(kmax, int(math.floor(lim + 1e-9)))
                for k in range(1, kmax + 1):
                    d = span * rate(k * delta / span)
                    if node == SOURCE:
                        nb = min(L, b + int(math.floor(d / q + 1e-12)))
                        v = V[j, es + k, er, nb]
                        thr = None
                        gain = 0.0
                    else:
                        sub = int(math.ceil(d / q - 1e-12))
                        if sub <= b:
                            nb, gain, thr = b - sub, d, None
                        else:
                            nb, gain, thr = 0, b * q, b * q
                        if b == 0:
                            continue
                        v = V[j, es, er + k, nb]
                    if v >= 0 and abs(gain + v - target) <= 1e-12 * max(1.0, target):
                        found = (node, j, k, nb, gain, thr)
                        break
                if found:
                    break
        if found is None:
            raise RuntimeError("DP trace lost the optimal path")
        node, j, k, nb, _, thr = found
        if node != "idle":
            out.append((node, i, j, k, thr))
            if node == SOURCE:
                es += k
            else:
                er += k
        else:
            out.append((SOURCE, i, j, 0, None))
        i, b = j, nb
    return out
