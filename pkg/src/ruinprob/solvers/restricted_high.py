"""Borrowing restricted, surrender charge at or above the critical value.

Wealth must stay non-negative; at zero wealth the individual surrenders just
enough income to stay solvent, and ruin means reaching ``(w, a) = (0, 0)``.
Annuity income is bought only at the safe level ``(c - a) * a_bar``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import BracketError, ConvergenceError, DomainError, ParameterError, RegimeError
from ..model import DerivedConstants, ModelParams, derive_constants, safe_level_restricted
from ..numerics import expand_bracket_up, find_root_monotone
from ._dual import DualSolution

log = logging.getLogger(__name__)

# restricted states with a above this fraction of c are treated as safe
A_TRUNCATION = 1.0 - 1e-9

# charges within this distance below p* are served by the high-charge formulas,
# where the low-charge jump formula divides by a_bar - b ~ 0
SEAM_TOL = 1e-8


def _annuity_weight(params: ModelParams) -> float:
    """``lambda_o / (r (r + lambda_o))``, i.e. ``1/r - a_bar``."""
    return params.lambda_o / (params.r * (params.r + params.lambda_o))


def x_residual_high(params: ModelParams, consts: DerivedConstants, x: float) -> float:
    b1, b2 = consts.b1, consts.b2
    ratio = (b1 * (1 - b2) * x ** (b1 - 1) + b2 * (b1 - 1) * x ** (b2 - 1)) / (b1 - b2)
    return params.lambda_o / (params.r + params.lambda_o) * ratio - 1.0


def solve_x_high(params: ModelParams, consts: DerivedConstants) -> float:
    """Ratio ``y0 / y_s`` of the dual zero-wealth and safe boundaries (no ``p`` dependence)."""
    if params.r <= 0 or params.c <= 0:
        raise ParameterError("the closed form needs r > 0 and c > 0")

    def f(x):
        return x_residual_high(params, consts, x)

    try:
        lo, hi = expand_bracket_up(f, 1.0)
        return find_root_monotone(f, lo, hi)
    except (BracketError, ConvergenceError) as exc:
        raise ParameterError(f"no boundary ratio x > 1 for {params}: {exc}") from exc


def p_star(params: ModelParams, consts: DerivedConstants, x: float | None = None) -> float:
    """Critical surrender charge separating the two restricted regimes."""
    if x is None:
        x = solve_x_high(params, consts)
    b1, b2 = consts.b1, consts.b2
    return 1.0 / b2 - (1 - b2) / b2 * params.lambda_o / params.r * (x ** (b1 - 1) - 1.0)


def _k_formula(params: ModelParams, consts: DerivedConstants, x: float) -> float:
    b1, b2 = consts.b1, consts.b2
    r = params.r
    lead = _annuity_weight(params) * x ** (b1 - 1) - 1.0 / r
    num = -b2 / (1 - b2) * (1 - params.p) / (r + params.lambda_o) + lead
    return num / lead


def k_exponent_high(params: ModelParams, consts: DerivedConstants, x: float,
                    p_crit: float | None = None) -> float:
    """Growth exponent of the dual boundaries in ``c / (c - a)``; non-negative iff p >= p*."""
    if p_crit is None:
        p_crit = p_star(params, consts, x)
    if params.p < p_crit - SEAM_TOL:
        raise RegimeError(f"p={params.p} < p*={p_crit}; use the low surrender-charge solver")
    k = _k_formula(params, consts, x)
    # at (or a hair below) p* rounding leaves K a hair below its seam value 0
    return max(k, 0.0) if params.p < p_crit + 1e-12 else k


def y0_at_zero_high(params: ModelParams, consts: DerivedConstants, x: float) -> float:
    """Marginal dual value at ``(w, a) = (0, 0)``."""
    b1, b2 = consts.b1, consts.b2
    ratio = params.lambda_o / (params.r + params.lambda_o)
    inv = params.c / params.r * (-(1 - b2) / b2) * (1.0 - ratio * x ** (b1 - 1))
    return 1.0 / inv


@dataclass(frozen=True)
class RestrictedHighSolution(DualSolution):
    params: ModelParams
    consts: DerivedConstants
    x: float
    k_exp: float
    p_star: float
    y0_at_zero: float
    e1: float
    e2: float

    regime = "restricted-high"

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

    def y_s(self, a):
        return self.y_ref(a)

    def w_interval(self, a: float) -> tuple[float, float]:
        return 0.0, (self.params.c - a) * self.consts.a_bar

    def _check_state(self, w: float, a: float) -> bool:
        """Validate ``(w, a)``; True when ``a`` is past the truncation (ruin impossible)."""
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

    def psi(self, w: float, a: float) -> float:
        if self._check_state(w, a):
            return 0.0
        return self._psi_continuation(w, a)

    def pi_star(self, w: float, a: float) -> float:
        if self._check_state(w, a):
            raise DomainError("no continuation region once the shortfall is covered")
        self._require_interior(w, a, lower_open=False)
        return self._pi_continuation(w, a)

    def psi_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        c = self.params.c
        covered = a >= c * A_TRUNCATION
        a_eval = np.where(covered, 0.0, a)
        wc = np.clip(w, 0.0, (c - a_eval) * self.consts.a_bar)
        out = self._psi_of_u(self.u_of_state(wc, a_eval), a_eval)
        return np.where(covered, 0.0, out)

    def pi_star_array(self, w, a) -> np.ndarray:
        w, a = np.broadcast_arrays(np.asarray(w, float), np.asarray(a, float))
        return self._pi_of_u(self.u_of_state(w, a), a)


def solve_restricted_high(params: ModelParams,
                          consts: DerivedConstants | None = None) -> RestrictedHighSolution:
    consts = consts or derive_constants(params)
    x = solve_x_high(params, consts)
    p_crit = p_star(params, consts, x)
    if p_crit >= 1.0:
        log.warning("p*=%.6g >= 1: no surrender charge in (0, 1] is served by this solver", p_crit)
    k = k_exponent_high(params, consts, x, p_crit)
    b1, b2 = consts.b1, consts.b2
    weight = _annuity_weight(params)
    return RestrictedHighSolution(
        params=params, consts=consts, x=x, k_exp=k, p_star=p_crit,
        y0_at_zero=y0_at_zero_high(params, consts, x),
        e1=-(1 - b2) / (b1 - b2) * weight, e2=-(b1 - 1) / (b1 - b2) * weight)


def psi_high(sol: RestrictedHighSolution, w: float, a: float) -> float:
    return sol.psi(w, a)


def pi_star_high(sol: RestrictedHighSolution, w: float, a: float) -> float:
    return sol.pi_star(w, a)
