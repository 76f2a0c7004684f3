"""Bracketed scalar root finding and inversion of the dual derivative."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import BracketError, ConvergenceError, DivergenceError, DomainError


@dataclass(frozen=True)
class RootConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_ROOT = RootConfig()


def find_root_monotone(f: Callable[[float], float], lo: float, hi: float,
                       cfg: RootConfig = DEFAULT_ROOT) -> float:
    """Root of a continuous monotone function on ``[lo, hi]``.

    Bisection until the bracket is below tolerance, then one secant step
    through the final bracket; whichever of the secant point and the midpoint
    has the smaller residual is returned.

    Raises
    ------
    BracketError
        If ``f(lo)`` and ``f(hi)`` have the same strict sign.
    ConvergenceError
        If ``cfg.max_iter`` halvings do not shrink the bracket enough.
    """
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")

    for _ in range(cfg.max_iter):
        if hi - lo <= cfg.abs_tol + cfg.rel_tol * max(abs(lo), abs(hi)):
            break
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    else:
        raise ConvergenceError(f"bracket not reduced after {cfg.max_iter} iterations",
                               bracket=(lo, hi))

    mid = lo + 0.5 * (hi - lo)
    best, fbest = mid, abs(f(mid))
    denom = fhi - flo
    if denom != 0:
        sec = lo - flo * (hi - lo) / denom
        if lo <= sec <= hi:
            fsec = abs(f(sec))
            if fsec < fbest:
                best = sec
    return best


def expand_bracket_up(f: Callable[[float], float], lo: float = 1.0) -> tuple[float, float]:
    """Double ``hi`` from ``2 * lo`` until ``f`` changes sign relative to ``f(lo)``."""
    flo = f(lo)
    if flo == 0:
        return lo, lo
    hi = 2.0 * lo
    limit = lo * 2.0 ** 64
    while hi <= limit:
        fhi = f(hi)
        if fhi == 0 or (fhi > 0) != (flo > 0):
            return lo, hi
        hi *= 2.0
    raise DivergenceError(f"no sign change on [{lo}, {limit}]; parameters are likely invalid")


def invert_dual_derivative(psi_hat_y: Callable[[float], float], w: float,
                           y_lo: float, y_hi: float,
                           cfg: RootConfig = DEFAULT_ROOT) -> float:
    """Solve ``psi_hat_y(y) = w`` for ``y`` in ``[y_lo, y_hi]``.

    ``psi_hat_y`` must be strictly decreasing there.  The search runs on the
    ratio ``y / y_lo`` so tolerances do not depend on the scale of ``y``.
    """
    w_top = psi_hat_y(y_lo)
    w_bottom = psi_hat_y(y_hi)
    slack = 1e-12 * (1.0 + abs(w_top) + abs(w_bottom))
    if w > w_top + slack or w < w_bottom - slack:
        raise DomainError(
            f"w={w} outside [{w_bottom}, {w_top}]; clamp to the boundary before inverting")
    if w >= w_top:
        return y_lo
    if w <= w_bottom:
        return y_hi
    t = find_root_monotone(lambda s: psi_hat_y(s * y_lo) - w, 1.0, y_hi / y_lo, cfg)
    return t * y_lo
