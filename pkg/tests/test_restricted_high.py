import itertools

import numpy as np
import pytest

from ruinprob import (BoundaryError, DomainError, ModelParams, ParameterError, RegimeError,
                      derive_constants, solve)
from ruinprob.solvers import (k_exponent_high, p_star, pi_star_high, psi_high,
                              solve_restricted_high, solve_x_high, y0_at_zero_high)
from ruinprob.solvers.restricted_high import A_TRUNCATION, _k_formula, x_residual_high

# frozen from an independent scipy-brentq evaluation of the boundary equations
X_HIGH = 1.8244661035504377
P_STAR = 0.25850379484183206
Y0_ZERO = 0.08091747413218586
PSI_0_075_HALF = 0.39266622919413674


def y0_unsimplified(prm, k, x):
    """Zero-wealth dual value before eliminating ``x^(B2-1)`` with the boundary equation."""
    q = prm.lambda_o / (prm.r + prm.lambda_o)
    b1, b2 = k.b1, k.b2
    inv = prm.c / prm.r * (1 - q * (1 - b2) / (b1 - b2) * x ** (b1 - 1)
                           - q * (b1 - 1) / (b1 - b2) * x ** (b2 - 1))
    return 1 / inv


def test_x_golden_and_residual(base, high):
    assert high.x == pytest.approx(X_HIGH, rel=1e-10)
    assert abs(x_residual_high(base, high.consts, high.x)) < 1e-10
    k = high.consts
    assert high.x ** (k.b1 - 1) < (base.r + base.lambda_o) / base.lambda_o
    # left side at x = 1 is lambda_o / (r + lambda_o) = 2/3
    assert x_residual_high(base, k, 1.0) + 1 == pytest.approx(2 / 3, rel=1e-14)


def test_x_independent_of_p(base):
    k = derive_constants(base)
    assert solve_x_high(base.with_p(0.3), k) == solve_x_high(base.with_p(0.9), k)


def test_p_star(base, high):
    assert high.p_star == pytest.approx(0.258, abs=0.002)
    assert high.p_star == pytest.approx(P_STAR, rel=1e-10)
    k = high.consts
    assert _k_formula(base.with_p(high.p_star), k, high.x) == pytest.approx(0.0, abs=1e-10)


def test_p_star_below_one_across_parameters():
    grid = itertools.product((0.005, 0.02, 0.05), (0.06, 0.12), (0.15, 0.3),
                             (0.01, 0.04, 0.1), (0.01, 0.04, 0.2))
    for r, mu, sigma, ls, lo in grid:
        if mu <= r:
            continue
        prm = ModelParams(r=r, mu=mu, sigma=sigma, lambda_s=ls, lambda_o=lo)
        assert p_star(prm, derive_constants(prm)) < 1


def test_k_exponent(base, high):
    k = high.consts
    ks = [k_exponent_high(base.with_p(p), k, high.x) for p in (0.5, 0.75, 1.0)]
    assert ks[0] < ks[1] < ks[2]
    assert ks[2] == pytest.approx(1.0, abs=1e-12)
    assert k_exponent_high(base.with_p(high.p_star), k, high.x) == 0.0
    with pytest.raises(RegimeError):
        k_exponent_high(base.with_p(0.2), k, high.x)


def test_seam_tolerance_serves_p_just_below(base, high):
    prm = base.with_p(high.p_star - 1e-9)
    sol = solve_restricted_high(prm)
    assert sol.k_exp == 0.0


def test_y0_zero(base, high):
    k = high.consts
    assert high.y0_at_zero == pytest.approx(Y0_ZERO, rel=1e-10)
    assert high.y0_at_zero == pytest.approx(y0_unsimplified(base, k, high.x), rel=1e-12)
    vals = {y0_at_zero_high(base.with_p(p), k, high.x) for p in (0.3, 0.6, 1.0)}
    assert len(vals) == 1 and vals.pop() > 0


def test_dual_boundary_chain(high):
    for a in (0.0, 0.3, 0.8):
        assert high.y0(a) == pytest.approx((1 / (1 - a)) ** high.k_exp * high.y0_at_zero)
        assert high.y_s(a) == pytest.approx(high.y0(a) / high.x)
        w_s = high.w_interval(a)[1]
        assert high.psi_hat_y(high.y_s(a), a) == pytest.approx(w_s, abs=1e-9)
        assert high.psi_hat_y(high.y0(a), a) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("a", [0.0, 0.2, 0.4, 0.6, 0.9])
def test_boundary_values(high, a):
    assert high.psi(high.w_interval(a)[1], a) == pytest.approx(0.0, abs=1e-10)
    if a == 0.0:
        assert high.psi(0.0, 0.0) == pytest.approx(1.0, abs=1e-10)
    else:
        assert high.psi(0.0, a) < 1.0


def test_rescue_probability(base):
    prm = base.with_p(P_STAR)
    sol = solve(prm, restricted=True)
    assert sol.regime == "restricted-high"
    assert psi_high(sol, 0.0, 0.75) == pytest.approx(0.25, abs=0.03)
    assert psi_high(sol, 0.0, 0.75) == pytest.approx(0.25, abs=1e-9)


def test_golden_zero_wealth(high):
    assert high.psi(0.0, 0.75) == pytest.approx(PSI_0_075_HALF, rel=1e-9)


def test_irreversible_zero_wealth(base):
    sol = solve(base.with_p(1.0), restricted=True)
    assert sol.psi(0.0, 0.75) == pytest.approx(1.0, abs=1e-10)


def test_psi_increasing_in_p(base):
    sols = [solve(base.with_p(p), restricted=True) for p in (P_STAR, 0.4, 0.6, 0.8, 1.0)]
    for a in (0.0, 0.3, 0.6):
        w_s = sols[0].w_interval(a)[1]
        for w in np.linspace(0, w_s, 7):
            vals = [s.psi(w, a) for s in sols]
            assert np.all(np.diff(vals) >= -1e-10)


def test_pi_star_independent_of_p(base):
    sols = [solve(base.with_p(p), restricted=True) for p in (0.3, 0.5, 0.75, 1.0)]
    vals = [pi_star_high(s, 5.0, 0.25) for s in sols]
    assert max(vals) - min(vals) < 1e-8
    assert vals[0] > 0


def test_pi_star_positive_and_fd_consistent(high):
    for a in (0.0, 0.4):
        w_s = high.w_interval(a)[1]
        for w in np.linspace(0, w_s, 12)[:-1]:
            assert high.pi_star(w, a) > 0
    w_s = high.w_interval(0.2)[1]
    w, h = 0.5 * w_s, 1e-4 * w_s
    f = high.psi
    d1 = (f(w + h, 0.2) - f(w - h, 0.2)) / (2 * h)
    d2 = (f(w + h, 0.2) - 2 * f(w, 0.2) + f(w - h, 0.2)) / h ** 2
    prm = high.params
    assert high.pi_star(w, 0.2) == pytest.approx(-(prm.mu - prm.r) / prm.sigma ** 2 * d1 / d2,
                                                 rel=1e-4)


def test_domain_errors(high):
    with pytest.raises(DomainError):
        high.psi(-0.1, 0.2)
    with pytest.raises(DomainError):
        high.psi(high.w_interval(0.2)[1] + 0.1, 0.2)
    with pytest.raises(DomainError):
        high.psi(1.0, -0.2)
    with pytest.raises(BoundaryError):
        high.pi_star(high.w_interval(0.2)[1], 0.2)


def test_truncation(high):
    a = high.params.c * A_TRUNCATION
    assert high.psi(0.0, a) == 0.0
    assert high.psi(0.0, 1.0) == 0.0
    assert 0.0 <= high.psi(0.0, high.params.c * (1 - 1e-8)) <= 1.0


def test_g_function_decreasing(high):
    k = high.consts
    b1, b2, kk = k.b1, k.b2, high.k_exp
    z = np.linspace(1, high.x, 200)
    coef = (b1 - 1) * (1 - b2) / (b1 - b2)
    g_prime = (-kk * coef * ((b1 - 1) * z ** (b1 - 2) + (1 - b2) * z ** (b2 - 2))
               - coef * (z ** (b1 - 2) - z ** (b2 - 2)))
    assert np.all(g_prime <= 0)


def test_dual_concave(high):
    for a in (0.0, 0.5, 0.9):
        lo, hi = high.dual_bounds(a)
        for y in np.linspace(lo, hi, 30)[1:-1]:
            assert high.psi_hat_yy(y, a) < 0


def test_singular_dual_boundary(base):
    sol = solve(base.with_p(1.0), restricted=True)
    assert sol.y0(0.999999) > 1e5 * sol.y0_at_zero
    assert 0.0 <= sol.psi(0.0, 0.999999) <= 1.0


def test_zero_rate_rejected():
    with pytest.raises(ParameterError):
        solve_restricted_high(ModelParams(r=0.0))


def test_arrays_match_scalar(high):
    for a in (0.0, 0.35):
        w = np.linspace(0, high.w_interval(a)[1], 31)
        ref = np.array([high.psi(v, a) for v in w])
        assert np.max(np.abs(high.psi_array(w, a) - ref)) < 1e-12
        ref_pi = np.array([high.pi_star(v, a) for v in w[:-1]])
        assert np.max(np.abs(high.pi_star_array(w[:-1], a) / ref_pi - 1)) < 1e-10
