"""Named verification suites run by the command line and the acceptance tests."""

from __future__ import annotations

import time

import numpy as np

from ..model import ModelParams, PortfolioState
from ..solvers import classify, critical_charge, solve
from . import checks
from .checks import Report
from .fd import GridConfig, fd_solve
from .mc import SimConfig, mc_simulate

SUITES = ("residual", "vi", "shape", "fd", "mc", "seam")

SHAPE_FRACTIONS = (0.0, 0.3, 0.6)
MC_INCOME_FRACTIONS = (0.0, 0.25, 0.5)
MC_WEALTH_FRACTIONS = (0.25, 0.5, 0.75)
# per-income shift of the wealth fractions; the unrestricted process is scale
# invariant, so equal fractions at different incomes would repeat one test
MC_WEALTH_SHIFT = 0.05
FD_TOL = 0.02
FD_GRIDS = (GridConfig(n_w=201, n_a=51), GridConfig(n_w=401, n_a=101))
MC_FLOOR = 0.01
CENSORED_LIMIT = 0.01


def mc_states(solution) -> list[PortfolioState]:
    """Nine interior starts: three incomes times three positions in the continuation interval."""
    states = []
    for row, af in enumerate(MC_INCOME_FRACTIONS):
        a = af * solution.a_upper
        lo, hi = solution.w_interval(a)
        shift = (row - 1) * MC_WEALTH_SHIFT
        states += [PortfolioState(lo + (f + shift) * (hi - lo), a) for f in MC_WEALTH_FRACTIONS]
    return states


def residual_suite(solution) -> Report:
    rep = checks.check_hjb_residual(solution, checks.interior_points(solution))
    if solution.regime == "restricted-low":
        rep.extend(checks.check_hjb_residual(solution, checks.purchase_region_points(solution)))
    return rep.extend(checks.negative_controls(solution, checks.interior_points(solution)))


def vi_suite(solution) -> Report:
    pts = checks.interior_points(solution)
    rep = checks.check_variational_inequalities(solution, pts)
    if solution.regime != "unrestricted":
        incomes = [f * solution.a_upper for f in (0.1, 0.3, 0.6)]
        rep.extend(checks.check_neumann_binding(solution, incomes))
    if solution.regime == "restricted-low":
        d2 = checks.purchase_region_points(solution)
        rep.extend(checks.check_variational_inequalities(solution, d2))
        rep.extend(checks.check_purchase_binding(solution, d2))
    return rep


def shape_suite(solution) -> Report:
    rep = Report()
    for f in SHAPE_FRACTIONS:
        a = f * solution.a_upper
        rep.extend(checks.check_shape(solution, a))
        rep.extend(checks.check_dual_concavity(solution, a))
    return rep


def fd_suite(solution, grids=FD_GRIDS, tol: float = FD_TOL) -> Report:
    """Grid oracle error at the base grid and decrease under refinement."""
    rep = Report()
    errors = []
    for grid in grids:
        t0 = time.perf_counter()
        res = fd_solve(solution.params, solution.consts, solution.regime, grid)
        err = res.sup_error(solution)
        errors.append(err)
        loc = f"({solution.regime},{grid.n_w}x{grid.n_a})"
        rep.notes.append(f"fd {loc} sup_error={err:.6e} iterations={res.iterations} "
                         f"pi_cap={res.pi_cap:.6g} elapsed={time.perf_counter() - t0:.2f}s")
        rep.add("fd_pi_cap", loc, res.n_cap_binding, 0, res.n_cap_binding == 0)
        if grid is grids[0]:
            rep.add("fd_sup_error", loc, err, tol, err <= tol)
    for coarse, fine, g in zip(errors, errors[1:], grids[1:]):
        rep.add("fd_refinement", f"({solution.regime},{g.n_w}x{g.n_a})", fine - coarse, 0.0,
                fine < coarse)
    return rep


def mc_suite(solution, sim: SimConfig | None = None, states=None) -> Report:
    """Simulated discounted ruin probability against the closed form."""
    sim = sim or SimConfig()
    rep = Report()
    t0 = time.perf_counter()
    for st in states or mc_states(solution):
        res = mc_simulate(solution.params, solution.consts, solution, st, sim)
        exact = solution.psi(st.w, st.a)
        tol = max(3 * res.std_err, MC_FLOOR)
        loc = f"({solution.regime},w={st.w:.6g},a={st.a:.6g})"
        rep.notes.append(f"mc {loc} estimate={res.estimate:.6f}+-{res.std_err:.6f} "
                         f"exact={exact:.6f} censored={res.n_censored} "
                         f"elapsed={res.elapsed:.2f}s")
        rep.add("mc_error", loc, res.estimate - exact, tol, abs(res.estimate - exact) <= tol)
        rep.add("mc_censored", loc, res.censored_fraction, CENSORED_LIMIT,
                res.censored_fraction < CENSORED_LIMIT)
    rep.notes.append(f"mc total elapsed={time.perf_counter() - t0:.2f}s "
                     f"paths={sim.n_paths} dt={sim.dt}")
    return rep


def seam_suite(params: ModelParams, offset: float = 1e-6) -> Report:
    """Low-charge solver just below ``p*`` against the high-charge one at ``p*``."""
    p_crit = critical_charge(params)
    low = solve(params.with_p(p_crit - offset), restricted=True)
    high = solve(params.with_p(p_crit), restricted=True)
    rep = checks.check_seam(low, high)
    rep.notes.append(f"seam p*={p_crit:.12g} low={low.regime} high={high.regime}")
    return rep


def run_suite(name: str, params: ModelParams, restricted: bool,
              sim: SimConfig | None = None) -> Report:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if name == "seam":
        return seam_suite(params)
    solution = solve(params, restricted=restricted)
    if name == "mc":
        rep = mc_suite(solution, sim)
    else:
        runner = {"residual": residual_suite, "vi": vi_suite, "shape": shape_suite,
                  "fd": fd_suite}[name]
        rep = runner(solution)
    rep.notes.insert(0, f"suite {name} regime {classify(params, restricted)}")
    return rep


def grid_points(solution, n: int = 5) -> np.ndarray:
    """``n x n`` interior (w, a) grid over the continuation region."""
    pts = []
    for af in np.linspace(0.0, 0.6, n):
        a = af * solution.a_upper
        lo, hi = solution.w_interval(a)
        for f in np.linspace(0.1, 0.9, n):
            pts.append((lo + f * (hi - lo), a))
    return np.array(pts)
