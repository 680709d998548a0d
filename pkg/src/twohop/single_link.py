"""Throughput-optimal single-transmitter schedule over a time window.

The optimal consumed-energy path is the tightest string below the
harvested-energy staircase: starting from the window start, repeatedly take
the smallest slope to any later corner of the staircase (or to the final
point), ties going to the later corner.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import EnergyProfile, RateFunctionSpec, SHANNON
from .exceptions import InvalidInstanceError


@dataclass(frozen=True)
class WindowSchedule:
    window: tuple[float, float]
    levels: tuple[tuple[float, float], ...]  # (power, duration)

    @property
    def energy(self) -> float:
        return float(sum(p * d for p, d in self.levels))

    def data(self, rate: RateFunctionSpec = SHANNON) -> float:
        return float(sum(d * rate(p) for p, d in self.levels))

    def change_times(self) -> list[float]:
        t, out = self.window[0], []
        for _, d in self.levels[:-1]:
            t += d
            out.append(t)
        return out


def _staircase(arrivals, a: float, b: float):
    """Pooled energy at ``a`` and the interior arrivals ``(t, amount)``."""
    pooled = sum(e for t, e in arrivals if t <= a)
    inner = [(t, e) for t, e in arrivals if a < t < b]
    return pooled, inner


def string_levels(pooled: float, inner, a: float, b: float,
                  total: float | None = None) -> list[tuple[float, float]]:
    """Tightest-string levels for a staircase given as pooled + inner arrivals.

    ``total`` caps the energy spent by ``b`` (defaults to everything
    harvested before ``b``).
    """
    if not a < b:
        raise InvalidInstanceError(f"empty window ({a}, {b})")
    # corners: (time, energy harvested strictly before that time)
    corners = []
    cum = pooled
    for t, e in inner:
        corners.append((t, cum))
        cum += e
    end_energy = cum if total is None else min(total, cum)
    corners = [(t, min(c, end_energy)) for t, c in corners]
    corners.append((b, end_energy))

    levels: list[tuple[float, float]] = []
    x0, y0 = a, 0.0
    i = 0
    while i < len(corners):
        best_j, best_slope = None, None
        for j in range(i, len(corners)):
            t, c = corners[j]
            slope = (c - y0) / (t - x0)
            # later corner wins ties so equal levels come out merged
            if best_slope is None or slope <= best_slope * (1 + 1e-14) + 1e-300:
                best_j, best_slope = j, slope
        t, c = corners[best_j]
        levels.append((max(best_slope, 0.0), t - x0))
        x0, y0 = t, c
        i = best_j + 1
    merged: list[tuple[float, float]] = []
    for p, d in levels:
        if merged and abs(merged[-1][0] - p) <= 1e-14 * max(1.0, p):
            q, e = merged[-1]
            merged[-1] = ((q * e + p * d) / (e + d), e + d)
        else:
            merged.append((p, d))
    return merged


def single_link_schedule(profile: EnergyProfile, a: float, b: float) -> WindowSchedule:
    """Optimal schedule on ``(a, b)``; arrivals at or before ``a`` pool at ``a``."""
    if not profile.arrivals:
        raise InvalidInstanceError("empty energy profile")
    pooled, inner = _staircase(profile.arrivals, a, b)
    if pooled <= 0 and not inner:
        raise InvalidInstanceError("no energy available in the window")
    return WindowSchedule((a, b), tuple(string_levels(pooled, inner, a, b)))


def single_link_data(profile: EnergyProfile, a: float, b: float,
                     rate: RateFunctionSpec = SHANNON) -> float:
    """Data delivered by :func:`single_link_schedule` (nats)."""
    return single_link_schedule(profile, a, b).data(rate)
