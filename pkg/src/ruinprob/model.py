"""Market primitives, derived constants and region geometry.

Wealth ``w`` is the value held in the risky and riskless assets; ``a`` is the
rate of life-annuity income already owned.  Annuity income costs ``a_bar`` per
unit and can be surrendered for ``(1 - p) * a_bar`` per unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ParameterError

# States this close (relative to c) to the corner of the unrestricted domain
# are treated as sitting on the point where ruin and safe levels meet.
MEETING_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Market and preference primitives.

    Defaults are the base scenario: 2% real rate, 6% risky drift, 20%
    volatility, hazard rate 0.04 for both the individual and the insurer,
    unit consumption and a 50% surrender charge.
    """

    r: float = 0.02
    mu: float = 0.06
    sigma: float = 0.20
    lambda_s: float = 0.04
    lambda_o: float = 0.04
    c: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        for name in ("r", "mu", "sigma", "lambda_s", "lambda_o", "c", "p"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
        if self.r < 0:
            raise ParameterError(f"r >= 0 violated (r={self.r})")
        if not self.mu > self.r:
            raise ParameterError(f"mu > r violated (mu={self.mu}, r={self.r})")
        if not self.sigma > 0:
            raise ParameterError(f"sigma > 0 violated (sigma={self.sigma})")
        if not self.lambda_s > 0:
            raise ParameterError(f"lambda_s > 0 violated (lambda_s={self.lambda_s})")
        if not self.lambda_o > 0:
            raise ParameterError(f"lambda_o > 0 violated (lambda_o={self.lambda_o})")
        if self.c < 0:
            raise ParameterError(f"c >= 0 violated (c={self.c})")
        if not 0 < self.p <= 1:
            raise ParameterError(f"0 < p <= 1 violated (p={self.p})")

    def with_p(self, p: float) -> "ModelParams":
        return ModelParams(self.r, self.mu, self.sigma, self.lambda_s,
                           self.lambda_o, self.c, p)


@dataclass(frozen=True)
class DerivedConstants:
    """Quantities computed once from :class:`ModelParams`.

    Attributes
    ----------
    a_bar : price of one unit of life-annuity income, ``1 / (r + lambda_o)``
    m : half the squared Sharpe ratio
    b1, b2 : roots of ``m B^2 - (r - lambda_s + m) B - lambda_s = 0``,
        with ``b1 > 1`` and ``b2 < 0``
    """

    a_bar: float
    m: float
    b1: float
    b2: float


@dataclass(frozen=True)
class PortfolioState:
    w: float
    a: float

    def __post_init__(self):
        if not (math.isfinite(self.w) and math.isfinite(self.a)):
            raise DomainError(f"state must be finite, got ({self.w}, {self.a})")
        if self.a < 0:
            raise DomainError(f"annuity income must be non-negative, got a={self.a}")


def derive_constants(params: ModelParams) -> DerivedConstants:
    """Annuity price, half squared Sharpe ratio and the two dual exponents."""
    a_bar = 1.0 / (params.r + params.lambda_o)
    m = 0.5 * ((params.mu - params.r) / params.sigma) ** 2
    q = params.r - params.lambda_s + m
    disc = math.sqrt(q * q + 4.0 * m * params.lambda_s)
    # take the root without cancellation, recover the other from the product
    if q >= 0:
        b1 = (q + disc) / (2.0 * m)
        b2 = -params.lambda_s / (m * b1)
    else:
        b2 = (q - disc) / (2.0 * m)
        b1 = -params.lambda_s / (m * b2)
    return DerivedConstants(a_bar=a_bar, m=m, b1=b1, b2=b2)


def a_max_unrestricted(params: ModelParams, consts: DerivedConstants | None = None) -> float:
    """Income at which the unrestricted ruin and safe levels meet."""
    return params.c * (params.r + params.lambda_o) / (params.p * params.r + params.lambda_o)


def _check_unrestricted_a(params: ModelParams, a: float) -> float:
    a_max = a_max_unrestricted(params)
    if a < 0 or a > a_max + MEETING_TOL * max(params.c, 1.0):
        raise DomainError(f"a={a} outside [0, {a_max}] for the unrestricted regime")
    return a_max


def safe_level_unrestricted(params: ModelParams, consts: DerivedConstants, a: float) -> float:
    """Smallest wealth from which borrowing against the annuity rules out ruin."""
    _check_unrestricted_a(params, a)
    p = params.p
    return p * params.c / (p * params.r + params.lambda_o) - consts.a_bar * a


def ruin_level_unrestricted(params: ModelParams, consts: DerivedConstants, a: float) -> float:
    """Wealth at which assets plus the surrender value of the annuity hit zero."""
    if a < 0:
        raise DomainError(f"annuity income must be non-negative, got a={a}")
    return -(1.0 - params.p) * consts.a_bar * a


def safe_level_restricted(consts: DerivedConstants, c: float, a: float) -> float:
    """Wealth needed to buy the remaining shortfall ``c - a`` outright."""
    if a < 0 or a >= c:
        raise DomainError(f"a={a} outside [0, c={c}); ruin is impossible once a >= c")
    return (c - a) * consts.a_bar
