"""Derivative-free scalar root bracketing and bounded 1-D maximization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (InvalidIntervalError, NoConvergenceError,
                         NotBracketedError)

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    bracket_tol: float = 1e-10
    max_iters: int = 200
    grid_fallback_points: int = 2048

    def __post_init__(self):
        if not self.bracket_tol > 0:
            raise ValueError("bracket_tol must be > 0")
        if self.max_iters < 1 or self.grid_fallback_points < 1:
            raise ValueError("iteration and grid counts must be >= 1")


DEFAULT_SEARCH = SearchConfig()


def shrink(lo, hi, rel=1e-12):
    """Pull interval endpoints inward to keep away from poles at the ends."""
    eps = rel * (hi - lo)
    return lo + eps, hi - eps


def bisect_root(f, lo: float, hi: float, cfg: SearchConfig = DEFAULT_SEARCH) -> float:
    """Root of a continuous ``f`` on ``[lo, hi]`` by plain bisection.

    Stops once the bracket is narrower than ``cfg.bracket_tol`` times the
    initial width and returns its midpoint.
    """
    lo, hi = float(lo), float(hi)
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo * fhi < 0):
        raise NotBracketedError(f"no sign change on [{lo}, {hi}]")
    width = cfg.bracket_tol * (hi - lo)
    for _ in range(cfg.max_iters):
        mid = 0.5 * (lo + hi)
        # adjacent floats: the bracket cannot shrink any further
        if hi - lo <= width or not lo < mid < hi:
            return mid
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    if hi - lo <= width:
        return 0.5 * (lo + hi)
    raise NoConvergenceError(f"bisection did not converge in {cfg.max_iters} iterations")


def bisect_roots(f, lo, hi, cfg: SearchConfig = DEFAULT_SEARCH) -> np.ndarray:
    """Elementwise bisection for a vectorized ``f``; NaN where not bracketed.

    ``lo`` and ``hi`` broadcast together; ``f`` receives arrays of that
    shape and must be evaluated elementwise.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    lo, hi = lo.copy(), hi.copy()
    flo, fhi = f(lo), f(hi)
    ok = (flo * fhi <= 0) & np.isfinite(flo) & np.isfinite(fhi)
    # exact zeros at an endpoint collapse the bracket onto it
    hi = np.where(flo == 0, lo, hi)
    lo = np.where((fhi == 0) & (flo != 0), hi, lo)
    neg = flo < 0
    width = cfg.bracket_tol * np.max(hi - lo, initial=0.0)
    # every bracket halves each step, so the widest live one fixes the count
    live = np.max(np.where(ok, hi - lo, 0.0), initial=0.0)
    steps = 0 if live <= width else math.ceil(math.log2(live / width))
    if steps > cfg.max_iters:
        raise NoConvergenceError("vectorized bisection did not converge")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        go_lo = (f(mid) < 0) == neg
        lo = np.where(go_lo, mid, lo)
        hi = np.where(go_lo, hi, mid)
    return np.where(ok, 0.5 * (lo + hi), np.nan)


def maximize_unimodal(f, lo: float, hi: float, cfg: SearchConfig = DEFAULT_SEARCH,
                      vectorized: bool = False) -> tuple[float, float]:
    """Maximize ``f`` on ``[lo, hi]`` without assuming unimodality.

    A uniform grid of ``cfg.grid_fallback_points`` samples picks the best
    cell; golden-section search refines inside the neighbouring cells.  The
    returned value is never below the best grid sample.  Non-finite values
    count as infeasible; ``(nan, -inf)`` is returned if every sample is.

    With ``vectorized=True`` the grid is evaluated in one call on an array;
    the refinement always calls ``f`` with a float.
    """
    if not lo < hi:
        raise InvalidIntervalError(f"empty interval [{lo}, {hi}]")
    a, b = shrink(lo, hi)
    n = cfg.grid_fallback_points
    xs = np.linspace(a, b, n) if n > 1 else np.array([0.5 * (a + b)])
    if vectorized:
        ys = np.asarray(f(xs), dtype=float)
    else:
        ys = np.array([f(float(x)) for x in xs], dtype=float)
    ys = np.where(np.isfinite(ys), ys, -np.inf)
    i = int(np.argmax(ys))
    best_x, best_y = float(xs[i]), float(ys[i])
    if best_y == -np.inf:
        return math.nan, -math.inf
    if n == 1:
        return best_x, best_y

    def fs(x):
        y = float(f(x))
        return y if math.isfinite(y) else -math.inf

    left = float(xs[max(i - 1, 0)])
    right = float(xs[min(i + 1, n - 1)])
    width = cfg.bracket_tol * (b - a)
    c = right - _INVPHI * (right - left)
    d = left + _INVPHI * (right - left)
    fc, fd = fs(c), fs(d)
    for _ in range(cfg.max_iters):
        if right - left <= width:
            break
        if fc >= fd:
            right, d, fd = d, c, fc
            c = right - _INVPHI * (right - left)
            fc = fs(c)
        else:
            left, c, fc = c, d, fd
            d = left + _INVPHI * (right - left)
            fd = fs(d)
    for x, y in ((c, fc), (d, fd)):
        if y > best_y:
            best_x, best_y = x, y
    return best_x, best_y
