"""Minimum probability of lifetime ruin with reversible life annuities.

Closed-form solutions via Legendre duality for three regimes, plus a
finite-difference and Monte-Carlo verification lab.
"""

from .errors import (BoundaryError, BracketError, ConvergenceError, DivergenceError, DomainError,
                     ParameterError, RegimeError, RegionError, RuinModelError, SolveError,
                     StepSizeError)
from .model import (DerivedConstants, ModelParams, PortfolioState, a_max_unrestricted,
                    derive_constants, ruin_level_unrestricted, safe_level_restricted,
                    safe_level_unrestricted)
from .solvers import (RestrictedHighSolution, RestrictedLowSolution, UnrestrictedSolution,
                      classify, critical_charge, purchase_slope, solve)

__all__ = [
    "BoundaryError", "BracketError", "ConvergenceError", "DerivedConstants", "DivergenceError",
    "DomainError", "ModelParams", "ParameterError", "PortfolioState", "RegimeError",
    "RegionError", "RestrictedHighSolution", "RestrictedLowSolution", "RuinModelError",
    "SolveError", "StepSizeError", "UnrestrictedSolution", "a_max_unrestricted", "classify",
    "critical_charge", "derive_constants", "purchase_slope", "ruin_level_unrestricted", "safe_level_restricted",
    "safe_level_unrestricted", "solve",
]
