"""Borrowing against the annuity allowed.

Ruin happens when wealth plus the surrender value of the annuity reaches zero.
The optimal policy never surrenders, buys annuity income only at the safe
level and invests ``pi*`` in the risky asset in between.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BracketError, ConvergenceError, DomainError, ParameterError, SolveError
from ..model import (MEETING_TOL, DerivedConstants, ModelParams, a_max_unrestricted,
                     derive_constants, ruin_level_unrestricted, safe_level_unrestricted)
from ..numerics import expand_bracket_up, find_root_monotone
from ._dual import DualSolution


def _boundary_slope_ratio(consts: DerivedConstants, x: float) -> float:
    """``[b1 (1-b2) x^(b1-1) + b2 (b1-1) x^(b2-1)] / (b1 - b2)``; equals 1 at x = 1."""
    b1, b2 = consts.b1, consts.b2
    return (b1 * (1 - b2) * x ** (b1 - 1) + b2 * (b1 - 1) * x ** (b2 - 1)) / (b1 - b2)


def _level_ratio(consts: DerivedConstants, x: float) -> float:
    b1, b2 = consts.b1, consts.b2
    return ((1 - b2) * x ** (b1 - 1) + (b1 - 1) * x ** (b2 - 1)) / (b1 - b2)


def x_residual_unrestricted(params: ModelParams, consts: DerivedConstants,
                            x: float, a: float = 0.0) -> float:
    """Ruin-boundary condition after eliminating D1, D2; zero at the solution."""
    c, r = params.c, params.r
    short = (c - a) / r
    w_s = safe_level_unrestricted(params, consts, a)
    w_low = ruin_level_unrestricted(params, consts, a)
    return (w_s - short) * _boundary_slope_ratio(consts, x) + short - w_low


def solve_x_unrestricted(params: ModelParams, consts: DerivedConstants,
                         a: float = 0.0) -> float:
    """Ratio of the dual ruin boundary to the dual safe boundary.

    The ratio does not depend on ``a``; passing ``a`` re-solves the
    ``a``-dependent equation, which is how drift from that fact is detected.
    """
    if params.r <= 0:
        raise ParameterError("the closed form needs r > 0")
    if params.c <= 0:
        raise ParameterError("the closed form needs c > 0")

    def f(x):
        return x_residual_unrestricted(params, consts, x, a)

    try:
        lo, hi = expand_bracket_up(f, 1.0)
        return find_root_monotone(f, lo, hi)
    except (BracketError, ConvergenceError) as exc:
        raise ParameterError(f"no boundary ratio x > 1 for {params}: {exc}") from exc


@dataclass(frozen=True)
class UnrestrictedSolution(DualSolution):
    params: ModelParams
    consts: DerivedConstants
    x: float
    e1: float
    e2: float
    debug: bool = False

    regime = "unrestricted"

    @property
    def a_upper(self) -> float:
        return a_max_unrestricted(self.params)

    def _check_a(self, a: float) -> bool:
        """Validate ``a``; True when the state sits on the meeting point."""
        a_max = self.a_upper
        if a < 0 or a > a_max * (1 + MEETING_TOL):
            raise DomainError(f"a={a} outside [0, {a_max})")
        return a >= a_max - MEETING_TOL * self.params.c

    def scale(self, a):
        p = self.params
        w_s = p.p * p.c / (p.p * p.r + p.lambda_o) - self.consts.a_bar * a
        return w_s - (p.c - a) / p.r

    def y_underbar(self, a):
        p = self.params
        inv = ((p.c - a) / p.r + (1 - p.p) * self.consts.a_bar * a
               + self.scale(a) * _level_ratio(self.consts, self.x))
        return 1.0 / inv

    def y_ref(self, a):
        return self.y_underbar(a) / self.x

    def w_interval(self, a: float) -> tuple[float, float]:
        return (ruin_level_unrestricted(self.params, self.consts, a),
                safe_level_unrestricted(self.params, self.consts, a))

    def psi_clamped(self, w: float, a: float) -> tuple[float, bool]:
        """Ruin probability and whether ``w`` had to be clamped into the domain."""
        at_meeting = self._check_a(a)
        w_low, w_s = self.w_interval(min(a, self.a_upper))
        outside = w < w_low or w > w_s
        if at_meeting:
            return (1.0 if w <= w_low else 0.0), outside
        if w < w_low:
            return 1.0, True
        if w > w_s:
            return 0.0, True
        return self._psi_continuation(w, a), False

    def psi(self, w: float, a: float) -> float:
        return self.psi_clamped(w, a)[0]

    def pi_star(self, w: float, a: float) -> float:
        if self._check_a(a):
            raise DomainError("no continuation region at the meeting point")
        self._require_interior(w, a, lower_open=True)
        return self._pi_continuation(w, a)

    def psi_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        meeting = a >= self.a_upper - MEETING_TOL * self.params.c
        a_eval = np.where(meeting, 0.0, a)
        w_low = -(1 - self.params.p) * self.consts.a_bar * a_eval
        w_s = (self.params.c - a_eval) / self.params.r + self.scale(a_eval)
        out = self._psi_of_u(self.u_of_state(np.clip(w, w_low, w_s), a_eval), a_eval)
        out = np.where(w < w_low, 1.0, np.where(w > w_s, 0.0, out))
        w_meet = -(1 - self.params.p) * self.consts.a_bar * a
        return np.where(meeting, np.where(w <= w_meet, 1.0, 0.0), out)

    def pi_star_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        return self._pi_of_u(self.u_of_state(w, a), a)


def solve_unrestricted(params: ModelParams, consts: DerivedConstants | None = None,
                       debug: bool = False) -> UnrestrictedSolution:
    """Solve the free-boundary problem when borrowing against the annuity is allowed.

    With ``debug=True`` the boundary ratio is re-solved at three other incomes
    and a :class:`SolveError` is raised if any differs by more than 1e-9.
    """
    consts = consts or derive_constants(params)
    x = solve_x_unrestricted(params, consts)
    if debug:
        a_max = a_max_unrestricted(params)
        for frac in (0.25, 0.5, 0.75):
            x_a = solve_x_unrestricted(params, consts, frac * a_max)
            if abs(x_a - x) > 1e-9:
                raise SolveError(f"boundary ratio drifts with a: {x} vs {x_a} at a={frac * a_max}")
    b1, b2 = consts.b1, consts.b2
    return UnrestrictedSolution(params=params, consts=consts, x=x,
                                e1=(1 - b2) / (b1 - b2), e2=(b1 - 1) / (b1 - b2), debug=debug)


def boundaries_unrestricted(sol: UnrestrictedSolution, a: float) -> tuple[float, float]:
    """Dual values ``(y_underbar(a), y_s(a))`` at the ruin and safe levels."""
    if sol._check_a(a):
        raise DomainError("dual boundaries diverge at the meeting point")
    y_under = sol.y_underbar(a)
    return y_under, y_under / sol.x


def coefficients_unrestricted(sol: UnrestrictedSolution, a: float) -> tuple[float, float]:
    if sol._check_a(a):
        raise DomainError("coefficients undefined at the meeting point")
    return sol.coefficients(a)


def psi_unrestricted(sol: UnrestrictedSolution, w: float, a: float) -> float:
    return sol.psi(w, a)


def pi_star_unrestricted(sol: UnrestrictedSolution, w: float, a: float) -> float:
    return sol.pi_star(w, a)
