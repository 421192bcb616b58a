"""Scalar root and boundary location by sign scan plus bisection."""

from __future__ import annotations

from typing import Callable

__all__ = ["bisect_root", "bisect_boundary", "bracket_by_doubling"]


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    ftol: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Root of f in [lo, hi]; f(lo) and f(hi) must have opposite signs."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError("endpoints do not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or abs(fmid) <= ftol or hi - lo <= xtol:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def bisect_boundary(
    feasible: Callable[[float], bool],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Largest feasible point of a feasible-below / infeasible-above boundary.

    Requires feasible(lo) and not feasible(hi); returns the inner (feasible)
    endpoint of the final bracket.
    """
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def bracket_by_doubling(
    f: Callable[[float], float],
    x0: float = 0.0,
    step: float = 1.0,
    max_doublings: int = 80,
) -> tuple[float, float]:
    """Bracket a sign change of f around x0 by doubling outward."""
    f0 = f(x0)
    if f0 == 0.0:
        return x0, x0
    s = step
    for _ in range(max_doublings):
        if f0 < 0.0:
            x1 = x0 + s
            if f(x1) >= 0.0:
                return x0, x1
        else:
            x1 = x0 - s
            if f(x1) <= 0.0:
                return x1, x0
        s *= 2.0
    raise ValueError("failed to bracket a sign change")
