"""Borrowing restricted, surrender charge below the critical value.

With a cheap surrender option it pays to buy annuity income before the safe
level: above the purchase boundary ``w_b(a) = b (c - a)`` the individual buys
just enough income to land back on it.  Below the boundary the dual solution
has the same shape as in the high-charge regime with a ``p``-dependent ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import (BracketError, ConvergenceError, DomainError, ParameterError,
                      RegimeError, RegionError, SolveError)
from ..model import DerivedConstants, ModelParams, derive_constants, safe_level_restricted
from ..numerics import expand_bracket_up, find_root_monotone
from ._dual import DualSolution
from .restricted_high import A_TRUNCATION, SEAM_TOL, _annuity_weight, p_star, solve_x_high


def x_residual_low(params: ModelParams, consts: DerivedConstants, x: float) -> float:
    b1, b2 = consts.b1, consts.b2
    r = params.r
    level = ((1 - b2) * x ** (b1 - 1) + (b1 - 1) * x ** (b2 - 1)) / (b1 - b2)
    return _annuity_weight(params) * level - (1.0 / r - (1 - params.p) / (r + params.lambda_o))


def solve_x_low(params: ModelParams, consts: DerivedConstants,
                p_crit: float | None = None) -> float:
    """Ratio ``y0 / y_b`` of the dual zero-wealth and purchase boundaries."""
    if params.r <= 0 or params.c <= 0:
        raise ParameterError("the closed form needs r > 0 and c > 0")
    if p_crit is None:
        p_crit = p_star(params, consts)
    if params.p >= p_crit:
        raise RegimeError(f"p={params.p} >= p*={p_crit}; use the high surrender-charge solver")

    def f(x):
        return x_residual_low(params, consts, x)

    try:
        lo, hi = expand_bracket_up(f, 1.0)
        return find_root_monotone(f, lo, hi)
    except (BracketError, ConvergenceError) as exc:
        raise ParameterError(f"no boundary ratio x > 1 for {params}: {exc}") from exc


def _bracket_terms(params: ModelParams, consts: DerivedConstants, x: float):
    b1, b2 = consts.b1, consts.b2
    r = params.r
    weight = _annuity_weight(params)
    t1 = weight * (b1 - 1) * b2 / (b1 - b2) * (x ** (b2 - b1) - 1) + (1 - x ** (1 - b1)) / r
    t2 = weight * b1 * (1 - b2) / (b1 - b2) * (x ** (b1 - b2) - 1) + (1 - x ** (1 - b2)) / r
    return t1, t2


def ode_alphas(params: ModelParams, consts: DerivedConstants,
               x: float) -> tuple[float, float, float, float]:
    """Coefficients of the quadratic ``a3 b^2 - (a2 - a1) b - a4 = 0`` for the boundary slope."""
    b1, b2 = consts.b1, consts.b2
    r = params.r
    s1, s2 = 1 - x ** (1 - b2), 1 - x ** (1 - b1)
    t1, t2 = _bracket_terms(params, consts, x)
    alpha1 = -((b1 - 1) * s1 + (1 - b2) * s2) / r
    alpha2 = (b1 - 1) * t1 + (1 - b2) * t2
    alpha3 = b1 - b2
    alpha4 = -((b1 - 1) * t1 * s1 + (1 - b2) * t2 * s2) / r
    return alpha1, alpha2, alpha3, alpha4


def purchase_slope_b(alphas: tuple[float, float, float, float]) -> float:
    """Slope ``b`` of the purchase boundary ``w_b(a) = b (c - a)`` (the ``+`` root)."""
    a1, a2, a3, a4 = alphas
    disc = (a2 - a1) ** 2 + 4 * a3 * a4
    if disc < 0:
        raise SolveError(f"negative discriminant {disc} for alphas {alphas}; "
                         "no real purchase boundary")
    return ((a2 - a1) + math.sqrt(disc)) / (2 * a3)


def purchase_slope(params: ModelParams, consts: DerivedConstants | None = None) -> float:
    """Slope ``b`` for any ``0 < p <= p*``; equals ``a_bar`` at ``p*``.

    Unlike :func:`solve_restricted_low` this accepts ``p = p*`` itself, where
    the purchase boundary merges with the safe level.
    """
    consts = consts or derive_constants(params)
    p_crit = p_star(params, consts, solve_x_high(params, consts))
    if not 0.0 < params.p <= p_crit + SEAM_TOL:
        raise RegimeError(f"p={params.p} outside (0, p*={p_crit}]")

    def f(x):
        return x_residual_low(params, consts, x)

    try:
        lo, hi = expand_bracket_up(f, 1.0)
        x = find_root_monotone(f, lo, hi)
    except (BracketError, ConvergenceError) as exc:
        raise ParameterError(f"no boundary ratio x > 1 for {params}: {exc}") from exc
    return purchase_slope_b(ode_alphas(params, consts, x))


def _offsets(params: ModelParams, consts: DerivedConstants, x: float, b: float):
    """``-b + (1 - x^(1-B2))/r`` and ``-b + (1 - x^(1-B1))/r``."""
    r = params.r
    return -b + (1 - x ** (1 - consts.b2)) / r, -b + (1 - x ** (1 - consts.b1)) / r


def k_exponent_low(params: ModelParams, consts: DerivedConstants, x: float, b: float) -> float:
    b1, b2 = consts.b1, consts.b2
    o1, _ = _offsets(params, consts, x, b)
    num = _annuity_weight(params) * b1 * (1 - b2) / (b1 - b2) * (x ** (b1 - b2) - 1) + o1
    return num / ((1 - b1) * o1)


def y0_at_zero_low(params: ModelParams, consts: DerivedConstants, x: float, b: float) -> float:
    b1, b2 = consts.b1, consts.b2
    c, r = params.c, params.r
    o1, o2 = _offsets(params, consts, x, b)
    inv = (c / b1 * x ** (b1 - 1) / (x ** (b1 - b2) - 1) * o1
           + c / b2 * x ** (b2 - 1) / (x ** (b2 - b1) - 1) * o2 + c / r)
    return 1.0 / inv


@dataclass(frozen=True)
class RestrictedLowSolution(DualSolution):
    params: ModelParams
    consts: DerivedConstants
    x: float
    b: float
    k_exp: float
    p_star: float
    y0_at_zero: float
    alphas: tuple[float, float, float, float]
    e1: float
    e2: float

    regime = "restricted-low"

    @property
    def a_upper(self) -> float:
        return self.params.c

    def scale(self, a):
        return self.params.c - a

    def y0(self, a):
        c = self.params.c
        return (c / (c - a)) ** self.k_exp * self.y0_at_zero

    def y_ref(self, a):
        return self.y0(a) / self.x

    def y_b(self, a):
        return self.y_ref(a)

    def w_b(self, a):
        return self.b * (self.params.c - a)

    def w_interval(self, a: float) -> tuple[float, float]:
        return 0.0, self.b * (self.params.c - a)

    def domain(self, a: float) -> tuple[float, float]:
        return 0.0, (self.params.c - a) * self.consts.a_bar

    def _check_state(self, w: float, a: float) -> bool:
        if a < 0:
            raise DomainError(f"annuity income must be non-negative, got a={a}")
        if w < 0:
            raise DomainError(f"w={w} < 0 is not admissible when borrowing is restricted")
        if a >= self.params.c * A_TRUNCATION:
            return True
        w_s = safe_level_restricted(self.consts, self.params.c, a)
        if w > w_s * (1 + 1e-12) + 1e-15:
            raise DomainError(f"w={w} above the safe level {w_s} at a={a}")
        return False

    def in_purchase_region(self, w: float, a: float) -> bool:
        w_b = self.w_b(a)
        return w > w_b + 1e-12 * (1.0 + abs(w_b))

    def jump_purchase(self, w: float, a: float) -> float:
        """Income ``delta_a`` bought at ``(w, a)`` to land on the purchase boundary."""
        if self._check_state(w, a) or not self.in_purchase_region(w, a):
            return 0.0
        gap = self.consts.a_bar - self.b
        if gap <= 0:
            raise RegimeError("purchase boundary coincides with the safe level; "
                              "use the high surrender-charge solver")
        delta = (w - self.w_b(a)) / gap
        return min(delta, self.params.c - a)

    def psi(self, w: float, a: float) -> float:
        if self._check_state(w, a):
            return 0.0
        if self.in_purchase_region(w, a):
            delta = self.jump_purchase(w, a)
            a_new = a + delta
            if a_new >= self.params.c * A_TRUNCATION:
                return 0.0
            return self._psi_continuation(self.w_b(a_new), a_new)
        return self._psi_continuation(w, a)

    def pi_star(self, w: float, a: float) -> float:
        if self._check_state(w, a):
            raise DomainError("no continuation region once the shortfall is covered")
        if self.in_purchase_region(w, a):
            delta = self.jump_purchase(w, a)
            raise RegionError(f"(w={w}, a={a}) is in the purchase region; buy {delta} "
                              "of income first", delta_a=delta)
        return self._pi_continuation(w, a)

    def psi_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        c, a_bar = self.params.c, self.consts.a_bar
        w = np.clip(w, 0.0, None)
        w_b = self.b * (c - a)
        buy = w > w_b
        delta = np.where(buy, (w - w_b) / (a_bar - self.b), 0.0)
        a_new = np.minimum(a + delta, c)
        covered = a_new >= c * A_TRUNCATION
        a_eval = np.where(covered, 0.0, a_new)
        w_eval = np.where(buy, self.b * (c - a_eval), np.minimum(w, self.b * (c - a_eval)))
        out = self._psi_of_u(self.u_of_state(w_eval, a_eval), a_eval)
        return np.where(covered, 0.0, out)

    def pi_star_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        return self._pi_of_u(self.u_of_state(w, a), a)


def solve_restricted_low(params: ModelParams,
                         consts: DerivedConstants | None = None) -> RestrictedLowSolution:
    consts = consts or derive_constants(params)
    p_crit = p_star(params, consts, solve_x_high(params, consts))
    x = solve_x_low(params, consts, p_crit)
    alphas = ode_alphas(params, consts, x)
    b = purchase_slope_b(alphas)
    if not 0.0 <= b <= consts.a_bar * (1 + 1e-9):
        raise SolveError(f"purchase slope b={b} outside [0, a_bar={consts.a_bar}]")
    b1, b2 = consts.b1, consts.b2
    o1, o2 = _offsets(params, consts, x, b)
    return RestrictedLowSolution(
        params=params, consts=consts, x=x, b=b,
        k_exp=k_exponent_low(params, consts, x, b), p_star=p_crit,
        y0_at_zero=y0_at_zero_low(params, consts, x, b), alphas=alphas,
        e1=o1 / (b1 * (x ** (b1 - b2) - 1)), e2=o2 / (b2 * (x ** (b2 - b1) - 1)))


def jump_purchase(sol: RestrictedLowSolution, w: float, a: float) -> float:
    return sol.jump_purchase(w, a)


def psi_low(sol: RestrictedLowSolution, w: float, a: float) -> float:
    return sol.psi(w, a)


def pi_star_low(sol: RestrictedLowSolution, w: float, a: float) -> float:
    return sol.pi_star(w, a)
