import logging

import numpy as np
import pytest

from ruinprob import (RestrictedHighSolution, RestrictedLowSolution, UnrestrictedSolution,
                      classify, critical_charge, solve)
from ruinprob.solvers import REGIMES, SEAM_TOL


def test_classify(base):
    p_crit = critical_charge(base)
    assert classify(base, False) == "unrestricted"
    assert classify(base, True) == "restricted-high"
    assert classify(base.with_p(0.1), True) == "restricted-low"
    assert classify(base.with_p(p_crit), True) == "restricted-high"
    assert classify(base.with_p(p_crit - 0.5 * SEAM_TOL), True) == "restricted-high"
    assert classify(base.with_p(p_crit - 2 * SEAM_TOL), True) == "restricted-low"
    assert set(REGIMES) == {"unrestricted", "restricted-high", "restricted-low"}


def test_solve_types(base):
    assert isinstance(solve(base), UnrestrictedSolution)
    assert isinstance(solve(base, restricted=True), RestrictedHighSolution)
    assert isinstance(solve(base.with_p(0.1), restricted=True), RestrictedLowSolution)


def test_both_sides_of_dispatch_threshold_agree(base):
    p_crit = critical_charge(base)
    above = solve(base.with_p(p_crit - 0.5 * SEAM_TOL), restricted=True)
    below = solve(base.with_p(p_crit - 2 * SEAM_TOL), restricted=True)
    for a in (0.0, 0.4):
        for w in np.linspace(0, 0.9 * above.w_interval(a)[1], 5):
            assert above.psi(w, a) == pytest.approx(below.psi(w, a), abs=1e-6)


def test_p_star_warning(base, monkeypatch, caplog):
    import ruinprob.solvers as mod
    monkeypatch.setattr(mod, "p_star", lambda *args, **kw: 1.2)
    with caplog.at_level(logging.WARNING):
        assert classify(base, True) == "restricted-low"
    assert "p*" in caplog.text


def test_solution_values_bounded(any_solution):
    sol = any_solution
    for frac in (0.0, 0.4, 0.8):
        a = frac * sol.a_upper
        lo, hi = sol.domain(a)
        psi = sol.psi_array(np.linspace(lo, hi, 101), a)
        assert np.all((psi >= 0) & (psi <= 1))


def test_policy_profile_scales(any_solution):
    sol = any_solution
    nu, prof = sol.policy_profile(257)
    for a in (0.0, 0.35 * sol.a_upper):
        lo, hi = sol.w_interval(a)
        w = lo + nu[1:-1] * (hi - lo)
        direct = sol.pi_star_array(w, a)
        assert np.max(np.abs(direct - (hi - lo) * prof[1:-1])) < 1e-8 * np.max(direct)
