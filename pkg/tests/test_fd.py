import numpy as np
import pytest

from ruinprob import ConvergenceError, ParameterError
from ruinprob.verify.fd import BUY, SURRENDER, GridConfig, fd_solve

# sup errors against the closed forms observed when the tolerance was fixed:
# 201x51 -> unrestricted 1.7e-5, restricted-high 0.0155, restricted-low 0.0040
FD_TOL = 0.02


@pytest.fixture(scope="module")
def grids(unres, high, low):
    return {s.regime: (s, fd_solve(s.params, s.consts, s.regime, GridConfig()))
            for s in (unres, high, low)}


@pytest.mark.parametrize("regime", ["unrestricted", "restricted-high", "restricted-low"])
def test_matches_closed_form(grids, regime):
    sol, res = grids[regime]
    assert res.sup_error(sol) <= FD_TOL
    assert res.n_cap_binding == 0


@pytest.mark.parametrize("regime", ["unrestricted", "restricted-high", "restricted-low"])
def test_rows_monotone_and_bounded(grids, regime):
    _, res = grids[regime]
    assert np.all((res.psi >= 0) & (res.psi <= 1))
    assert np.all(np.diff(res.psi, axis=1) <= 1e-12)


def test_corner_imposed(grids):
    _, res = grids["restricted-high"]
    assert res.psi[0, 0] == 1.0
    _, res = grids["restricted-low"]
    assert res.psi[0, 0] == 1.0


def test_branches(grids):
    _, res = grids["restricted-high"]
    assert np.all(res.branch[1:-1, 0] == SURRENDER)
    _, res = grids["restricted-low"]
    counts = res.branch_counts()
    assert counts["buy"] > 0 and counts["surrender"] > 0
    # buying happens only above the purchase boundary
    sol, _ = grids["restricted-low"]
    rows, cols = np.nonzero(res.branch == BUY)
    w_b = sol.b * (sol.params.c - res.a[rows])
    assert np.all(res.w[rows, cols] >= w_b - 2 * (res.w[rows, 1] - res.w[rows, 0]))


def test_refinement_reduces_error(unres):
    coarse = fd_solve(unres.params, unres.consts, "unrestricted", GridConfig(n_w=51, n_a=13))
    fine = fd_solve(unres.params, unres.consts, "unrestricted", GridConfig(n_w=101, n_a=26))
    assert fine.sup_error(unres) < coarse.sup_error(unres)


def test_non_convergence(unres):
    with pytest.raises(ConvergenceError) as info:
        fd_solve(unres.params, unres.consts, "restricted-high",
                 GridConfig(n_w=41, n_a=11, policy_iters=1))
    assert info.value.residual is not None and info.value.residual > 0


def test_config_validation(unres):
    with pytest.raises(ParameterError):
        GridConfig(n_w=5)
    with pytest.raises(ParameterError):
        GridConfig(n_a=2)
    with pytest.raises(ParameterError):
        GridConfig(grid_tol=0.0)
    with pytest.raises(ParameterError):
        fd_solve(unres.params, unres.consts, "sideways", GridConfig(n_w=21, n_a=5))
