"""Exception hierarchy shared by the solvers, the verification lab and the CLI."""

from __future__ import annotations


class RuinModelError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(RuinModelError, ValueError):
    """A model parameter violates one of its constraints."""


class DomainError(RuinModelError, ValueError):
    """A state or argument lies outside the domain of an operation."""


class BoundaryError(DomainError):
    """The requested quantity is undefined on a free or fixed boundary."""


class RegionError(DomainError):
    """The state lies in the purchase region, where no investment amount applies.

    ``delta_a`` carries the annuity income that has to be bought first.
    """

    def __init__(self, message: str, delta_a: float):
        super().__init__(message)
        self.delta_a = delta_a


class RegimeError(RuinModelError):
    """The surrender charge belongs to the other restricted regime."""


class BracketError(RuinModelError):
    """A root-finding bracket does not contain a sign change."""


class DivergenceError(BracketError):
    """Bracket expansion failed to find a sign change."""


class ConvergenceError(RuinModelError):
    """An iterative method hit its iteration cap.

    ``bracket`` holds the last interval (root finders) or ``None``.
    """

    def __init__(self, message: str, bracket: tuple[float, float] | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.bracket = bracket
        self.residual = residual


class SolveError(RuinModelError):
    """A closed-form construction left its region of validity."""


class StepSizeError(RuinModelError):
    """The simulation time step is too coarse for the state interval."""
