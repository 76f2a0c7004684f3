"""Closed-form solutions for the three borrowing/surrender regimes."""

from __future__ import annotations

import logging

from ..model import DerivedConstants, ModelParams, derive_constants
from ._dual import DualSolution
from .restricted_high import (SEAM_TOL, RestrictedHighSolution, k_exponent_high, p_star, pi_star_high,
                              psi_high, solve_restricted_high, solve_x_high, y0_at_zero_high)
from .restricted_low import (RestrictedLowSolution, jump_purchase, k_exponent_low, ode_alphas,
                             pi_star_low, psi_low, purchase_slope, purchase_slope_b, solve_restricted_low,
                             solve_x_low, y0_at_zero_low)
from .unrestricted import (UnrestrictedSolution, boundaries_unrestricted,
                           coefficients_unrestricted, pi_star_unrestricted, psi_unrestricted,
                           solve_unrestricted, solve_x_unrestricted)

log = logging.getLogger(__name__)

REGIMES = ("unrestricted", "restricted-high", "restricted-low")


def critical_charge(params: ModelParams, consts: DerivedConstants | None = None) -> float:
    consts = consts or derive_constants(params)
    return p_star(params, consts, solve_x_high(params, consts))


def classify(params: ModelParams, restricted: bool,
             consts: DerivedConstants | None = None) -> str:
    if not restricted:
        return "unrestricted"
    p_crit = critical_charge(params, consts)
    if p_crit >= 1.0:
        log.warning("p*=%.6g >= 1: every admissible charge is in the low-charge regime", p_crit)
    return "restricted-high" if params.p >= p_crit - SEAM_TOL else "restricted-low"


def solve(params: ModelParams, restricted: bool = False,
          consts: DerivedConstants | None = None) -> DualSolution:
    """Solve whichever regime applies to ``params``."""
    consts = consts or derive_constants(params)
    regime = classify(params, restricted, consts)
    if regime == "unrestricted":
        return solve_unrestricted(params, consts)
    if regime == "restricted-high":
        if params.p < critical_charge(params, consts):
            # p sits just below p*: K is clamped to its seam value 0
            log.debug("p=%r within %g of p*, using the high-charge solution", params.p, SEAM_TOL)
        return solve_restricted_high(params, consts)
    return solve_restricted_low(params, consts)


__all__ = [
    "DualSolution", "REGIMES", "RestrictedHighSolution", "RestrictedLowSolution", "SEAM_TOL",
    "UnrestrictedSolution", "boundaries_unrestricted", "classify", "coefficients_unrestricted",
    "critical_charge", "jump_purchase", "k_exponent_high", "k_exponent_low", "ode_alphas",
    "p_star", "pi_star_high", "pi_star_low", "pi_star_unrestricted", "psi_high", "psi_low",
    "psi_unrestricted", "purchase_slope", "purchase_slope_b", "solve", "solve_restricted_high",
    "solve_restricted_low", "solve_unrestricted", "solve_x_high", "solve_x_low",
    "solve_x_unrestricted", "y0_at_zero_high", "y0_at_zero_low",
]
