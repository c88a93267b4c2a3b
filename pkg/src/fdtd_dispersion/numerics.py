"""Scalar root finding and minimization used by the dispersion analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class RootFindingError(RuntimeError):
    pass


def bracketed_newton(
    f: Callable[[float], float],
    df: Callable[[float], float],
    lo: float,
    hi: float,
    x0: float | None = None,
    rtol: float = 1e-12,
    maxiter: int = 200,
) -> float:
    """Root of ``f`` on ``[lo, hi]`` by Newton steps safeguarded with bisection.

    ``f(lo)`` and ``f(hi)`` must have opposite signs (or one of them be zero).
    A Newton step that leaves the current bracket, or that shrinks the
    residual too slowly, is replaced by a bisection step. Converged when the
    last step is below ``rtol * |x|`` (absolute floor ``rtol * (hi - lo)``).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise RootFindingError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    # orient so that f(a) < 0 < f(b)
    a, b = (lo, hi) if flo < 0.0 else (hi, lo)
    floor = rtol * abs(hi - lo)
    x = 0.5 * (lo + hi) if x0 is None or not (min(lo, hi) < x0 < max(lo, hi)) else x0
    dx_old = abs(hi - lo)
    dx = dx_old
    fx = f(x)
    dfx = df(x)
    for _ in range(maxiter):
        if fx == 0.0:
            return x
        if fx < 0.0:
            a = x
        else:
            b = x
        newton_out = dfx == 0.0 or ((x - b) * dfx - fx) * ((x - a) * dfx - fx) > 0.0
        if newton_out or abs(2.0 * fx) > abs(dx_old * dfx):
            dx_old = dx
            dx = 0.5 * (b - a)
            x = a + dx
        else:
            dx_old = dx
            dx = fx / dfx
            x = x - dx
        if abs(dx) <= max(rtol * abs(x), floor):
            return x
        fx = f(x)
        dfx = df(x)
    raise RootFindingError(f"no convergence within {maxiter} iterations (x={x})")


def bisect(
    f: Callable[[float], float], lo: float, hi: float, xtol: float, maxiter: int = 200
) -> float:
    flo = f(lo)
    if flo * f(hi) > 0.0:
        raise RootFindingError("root not bracketed")
    for _ in range(maxiter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class GoldenResult:
    x: float
    fun: float
    evaluations: list[tuple[float, float]] = field(default_factory=list)


def golden_section(
    f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-4, maxiter: int = 200
) -> GoldenResult:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; every evaluation is recorded."""
    evals: list[tuple[float, float]] = []

    def g(x: float) -> float:
        v = f(x)
        evals.append((x, v))
        return v

    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = g(x1), g(x2)
    for _ in range(maxiter):
        if hi - lo <= xtol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = g(x2)
    best = min(evals, key=lambda e: e[1])
    return GoldenResult(x=best[0], fun=best[1], evaluations=evals)
