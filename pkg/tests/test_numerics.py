import math

import pytest

from ruinprob import derive_constants
from ruinprob.errors import BracketError, ConvergenceError, DivergenceError, DomainError
from ruinprob.numerics import (RootConfig, expand_bracket_up, find_root_monotone,
                               invert_dual_derivative)
from ruinprob.solvers.restricted_high import solve_x_high, x_residual_high
from ruinprob.solvers.unrestricted import x_residual_unrestricted


def test_linear_root():
    assert find_root_monotone(lambda x: x - 2, 0, 10) == pytest.approx(2, abs=1e-12)


def test_sqrt2():
    assert find_root_monotone(lambda x: x * x - 2, 1, 2) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_reversed_bracket_and_endpoint_roots():
    assert find_root_monotone(lambda x: x - 2, 10, 0) == pytest.approx(2, abs=1e-12)
    assert find_root_monotone(lambda x: x - 1, 1, 3) == 1


def test_no_sign_change():
    with pytest.raises(BracketError):
        find_root_monotone(lambda x: x + 5, 0, 1)


def test_iteration_cap():
    with pytest.raises(ConvergenceError) as info:
        find_root_monotone(lambda x: x - 0.3, 0, 1, RootConfig(max_iter=3))
    lo, hi = info.value.bracket
    assert lo <= 0.3 <= hi


def test_root_config_validation():
    with pytest.raises(ValueError):
        RootConfig(abs_tol=0)
    with pytest.raises(ValueError):
        RootConfig(max_iter=0)


def test_expand_bracket():
    assert expand_bracket_up(lambda x: x - 3, 1.0) == (1.0, 4.0)
    assert expand_bracket_up(lambda x: math.log(x) - 1, 1.0) == (1.0, 4.0)


def test_expand_bracket_diverges():
    with pytest.raises(DivergenceError):
        expand_bracket_up(lambda x: 1.0, 1.0)


def test_unrestricted_x_bracket(base):
    k = derive_constants(base)
    lo, hi = expand_bracket_up(lambda x: x_residual_unrestricted(base, k, x), 1.0)
    # root near 1.32 from a dense residual scan
    assert lo < 1.3228 < hi


def test_high_x_residual_at_root(base):
    k = derive_constants(base)
    x = solve_x_high(base, k)
    assert abs(x_residual_high(base, k, x)) < 1e-10


def test_invert_round_trip(unres):
    y_lo, y_hi = unres.dual_bounds(0.0)
    y = invert_dual_derivative(lambda v: unres.psi_hat_y(v, 0.0), 5.0, y_lo, y_hi)
    assert unres.psi_hat_y(y, 0.0) == pytest.approx(5.0, abs=1e-9)


def test_invert_endpoints(unres):
    y_lo, y_hi = unres.dual_bounds(0.0)
    f = lambda v: unres.psi_hat_y(v, 0.0)
    assert invert_dual_derivative(f, f(y_lo), y_lo, y_hi) == y_lo
    assert invert_dual_derivative(f, f(y_hi), y_lo, y_hi) == y_hi
    with pytest.raises(DomainError):
        invert_dual_derivative(f, f(y_lo) + 1.0, y_lo, y_hi)
