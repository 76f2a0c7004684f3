"""Finite-difference oracle for the ruin-probability variational inequality.

Each income level ``a_j`` gets its own uniform wealth grid spanning that row's
admissible interval.  At every node one of three branches is active:

* diffusion: ``lambda_s psi - min_pi L^pi psi = 0`` with an upwind
  Markov-chain discretization (monotone for every ``pi``),
* buy one income step: ``psi(w, a) = psi(w - a_bar da, a + da)``,
* surrender one income step: ``psi(w, a) = psi(w + (1 - p) a_bar da, a - da)``.

Off-grid landings are interpolated linearly in the neighbouring row.  The
nonlinear system is solved by policy iteration (Howard): pick the branch and
``pi`` that maximize the residual at each node, then solve the linear system.
Nothing here uses the closed-form solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ConvergenceError, ParameterError
from ..model import DerivedConstants, ModelParams, a_max_unrestricted, derive_constants

DIFFUSE, BUY, SURRENDER, FIXED = 0, 1, 2, 3
BRANCH_NAMES = {DIFFUSE: "diffuse", BUY: "buy", SURRENDER: "surrender", FIXED: "fixed"}


@dataclass(frozen=True)
class GridConfig:
    n_w: int = 201
    n_a: int = 51
    policy_iters: int = 200
    grid_tol: float = 1e-10
    # investment cap as a multiple of the widest wealth interval
    pi_cap_factor: float = 50.0

    def __post_init__(self):
        if self.n_w < 11:
            raise ParameterError(f"n_w >= 11 violated (n_w={self.n_w})")
        if self.n_a < 3:
            raise ParameterError(f"n_a >= 3 violated (n_a={self.n_a})")
        if not self.grid_tol > 0:
            raise ParameterError(f"grid_tol > 0 violated (grid_tol={self.grid_tol})")
        if self.policy_iters < 1:
            raise ParameterError("policy_iters must be >= 1")


@dataclass
class GridResult:
    """Grid solution; row ``j`` holds income ``a[j]`` and wealth nodes ``w[j]``."""

    regime: str
    a: np.ndarray
    w: np.ndarray
    psi: np.ndarray
    pi: np.ndarray
    branch: np.ndarray
    iterations: int
    residual: float
    pi_cap: float
    n_cap_binding: int

    def sup_error(self, solution, skip_last_row: bool = True) -> float:
        """Largest ``|psi_grid - psi_exact|`` over the grid nodes."""
        rows = slice(0, -1) if skip_last_row else slice(None)
        a = np.broadcast_to(self.a[rows, None], self.w[rows].shape)
        exact = solution.psi_array(self.w[rows], a)
        return float(np.max(np.abs(self.psi[rows] - exact)))

    def branch_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.branch == code)) for code, name in BRANCH_NAMES.items()}


class _Geometry:
    """Row intervals and the fixed (boundary) data of one regime."""

    def __init__(self, params: ModelParams, consts: DerivedConstants, regime: str, n_a: int):
        self.params, self.consts, self.regime = params, consts, regime
        p, a_bar = params.p, consts.a_bar
        if regime == "unrestricted":
            a_top = a_max_unrestricted(params)
            self.a = np.linspace(0.0, a_top, n_a)
            self.lo = -(1 - p) * a_bar * self.a
            self.hi = p * params.c / (p * params.r + params.lambda_o) - a_bar * self.a
            self.hi[-1] = self.lo[-1]
        elif regime in ("restricted-high", "restricted-low"):
            self.a = np.linspace(0.0, params.c, n_a)
            self.lo = np.zeros(n_a)
            self.hi = (params.c - self.a) * a_bar
            self.hi[-1] = 0.0
        else:
            raise ParameterError(f"unknown regime {regime!r}")
        self.restricted = regime != "unrestricted"
        self.da = self.a[1] - self.a[0]


def fd_solve(params: ModelParams, consts: DerivedConstants | None, regime: str,
             grid: GridConfig = GridConfig()) -> GridResult:
    """Solve the variational inequality on a ``grid.n_a x grid.n_w`` node set."""
    consts = consts or derive_constants(params)
    geo = _Geometry(params, consts, regime, grid.n_a)
    n_a, n_w = grid.n_a, grid.n_w
    n = n_a * n_w
    t = np.linspace(0.0, 1.0, n_w)
    W = geo.lo[:, None] + (geo.hi - geo.lo)[:, None] * t[None, :]
    A = np.broadcast_to(geo.a[:, None], W.shape)
    h = (geo.hi - geo.lo) / (n_w - 1)
    idx = np.arange(n).reshape(n_a, n_w)
    pi_cap = grid.pi_cap_factor * float(np.max(geo.hi - geo.lo))

    # fixed nodes and their values
    fixed = np.zeros((n_a, n_w), bool)
    fixed_val = np.zeros((n_a, n_w))
    fixed[-1, :] = True                      # degenerate top row
    fixed[:, -1] = True                      # safe level
    if regime == "unrestricted":
        fixed[:, 0] = True
        fixed_val[:, 0] = 1.0                # ruin level
        fixed_val[-1, :] = 0.0
        fixed_val[-1, 0] = 1.0
    else:
        fixed[0, 0] = True
        fixed_val[0, 0] = 1.0                # ruin at (0, 0)
    # restricted: w = 0 with a > 0 is forced to surrender (reflection)
    forced_surrender = np.zeros((n_a, n_w), bool)
    if geo.restricted:
        forced_surrender[1:-1, 0] = True

    buy_rows, buy_cols, buy_wts, buy_const, buy_ok = _transition(geo, W, idx, +1)
    sur_rows, sur_cols, sur_wts, sur_const, sur_ok = _transition(geo, W, idx, -1)

    free = ~fixed
    inner = free & ~forced_surrender
    inner[:, 0] = False
    inner[:, -1] = False
    # unrestricted lower nodes and restricted w=0 nodes never diffuse
    m_sharpe = params.mu - params.r
    sig2 = params.sigma ** 2
    lam = params.lambda_s
    drift0 = params.r * W - params.c + A
    hh = np.where(h > 0, h, 1.0)[:, None]

    psi = np.where(fixed, fixed_val, np.clip(1.0 - t[None, :], 0.0, 1.0))
    branch = np.where(fixed, FIXED, np.where(forced_surrender, SURRENDER, DIFFUSE))
    pi = np.zeros_like(W)
    prev_key = None
    residual = np.inf
    for it in range(1, grid.policy_iters + 1):
        # -- policy improvement ------------------------------------------------
        diff = (psi[:, 1:] - psi[:, :-1]) / hh
        dplus = np.zeros_like(W)
        dminus = np.zeros_like(W)
        dplus[:, :-1] = diff
        dminus[:, 1:] = diff
        d2 = (dplus - dminus) / hh
        pi = _best_pi(drift0, dplus, dminus, d2, m_sharpe, sig2, pi_cap)
        gen = _generator(drift0 + m_sharpe * pi, 0.5 * sig2 * pi ** 2, hh)
        res_diff = lam * psi - (gen[0] * (np.roll(psi, 1, axis=1) - psi)
                                + gen[1] * (np.roll(psi, -1, axis=1) - psi))
        land_buy = _apply(buy_rows, buy_cols, buy_wts, buy_const, psi.ravel(), n).reshape(W.shape)
        land_sur = _apply(sur_rows, sur_cols, sur_wts, sur_const, psi.ravel(), n).reshape(W.shape)
        res_buy = np.where(buy_ok, psi - land_buy, -np.inf)
        res_sur = np.where(sur_ok, psi - land_sur, -np.inf)
        stacked = np.stack([np.where(inner, res_diff, -np.inf), res_buy, res_sur])
        choice = np.argmax(stacked, axis=0)
        new_branch = np.where(fixed, FIXED, np.where(forced_surrender, SURRENDER, choice))
        best = stacked.max(axis=0)
        residual = float(np.max(np.abs(np.where(fixed | ~np.isfinite(best), 0.0, best))))

        # -- policy evaluation -------------------------------------------------
        rows, cols, vals = [], [], []
        rhs = np.zeros(n)
        fi = idx[fixed]
        rows.append(fi); cols.append(fi); vals.append(np.ones(fi.size))
        rhs[fi] = fixed_val[fixed]
        dmask = new_branch == DIFFUSE
        di = idx[dmask]
        lo_c, hi_c = gen[0][dmask], gen[1][dmask]
        rows += [di, di, di]
        cols += [di - 1, di + 1, di]
        vals += [-lo_c, -hi_c, lam + lo_c + hi_c]
        for code, (br, bc, bw, bconst) in ((BUY, (buy_rows, buy_cols, buy_wts, buy_const)),
                                           (SURRENDER, (sur_rows, sur_cols, sur_wts, sur_const))):
            mask = (new_branch == code).ravel()
            sel = mask[br]
            ai = idx.ravel()[mask]
            rows += [ai, br[sel]]
            cols += [ai, bc[sel]]
            vals += [np.ones(ai.size), -bw[sel]]
            rhs[ai] = bconst[ai]
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(n, n))
        new_psi = spla.spsolve(mat.tocsc(), rhs).reshape(W.shape)
        change = float(np.max(np.abs(new_psi - psi)))
        psi = new_psi
        key = (new_branch.tobytes(), pi.round(12).tobytes())
        if change < grid.grid_tol or key == prev_key:
            branch = new_branch
            break
        prev_key = key
        branch = new_branch
    else:
        raise ConvergenceError(f"policy iteration did not converge in {grid.policy_iters} "
                               f"sweeps (last change {change:.3e})", residual=change)

    pi = np.where(branch == DIFFUSE, pi, 0.0)
    return GridResult(regime=regime, a=geo.a.copy(), w=W, psi=np.clip(psi, 0.0, 1.0), pi=pi,
                      branch=branch, iterations=it, residual=residual, pi_cap=pi_cap,
                      n_cap_binding=int(np.sum((branch == DIFFUSE) & (pi >= pi_cap))))


def _generator(drift, diff, h):
    """Jump intensities to the lower and upper neighbour (upwind, non-negative)."""
    up = np.maximum(drift, 0.0) / h + diff / h ** 2
    down = np.maximum(-drift, 0.0) / h + diff / h ** 2
    return down, up


def _best_pi(drift0, dplus, dminus, d2, m_sharpe, sig2, cap):
    """Per-node ``pi`` in ``[0, cap]`` minimizing the discrete generator applied to psi."""

    def value(pi):
        b = drift0 + m_sharpe * pi
        return np.where(b >= 0, b * dplus, b * dminus) + 0.5 * sig2 * pi ** 2 * d2

    safe_d2 = np.where(d2 > 0, d2, np.inf)
    cands = [np.zeros_like(drift0), np.full_like(drift0, cap),
             np.clip(-drift0 / m_sharpe, 0.0, cap),
             np.clip(-m_sharpe * dplus / (sig2 * safe_d2), 0.0, cap),
             np.clip(-m_sharpe * dminus / (sig2 * safe_d2), 0.0, cap)]
    vals = np.stack([value(cnd) for cnd in cands])
    best = np.argmin(vals, axis=0)
    return np.choose(best, cands)


def _transition(geo: _Geometry, W: np.ndarray, idx: np.ndarray, direction: int):
    """Sparse linear-interpolation map for buying (+1) or surrendering (-1) one income step.

    Returns ``(rows, cols, weights, const, allowed)`` so that the landing value
    is ``const[row] + sum(weights * psi[cols])``.
    """
    n_a, n_w = W.shape
    a_bar, p = geo.consts.a_bar, geo.params.p
    dw = -a_bar * geo.da if direction > 0 else (1 - p) * a_bar * geo.da
    rows, cols, wts = [], [], []
    const = np.zeros(n_a * n_w)
    allowed = np.zeros((n_a, n_w), bool)
    last = n_a - 1
    for j in range(n_a):
        k = j + direction
        if k < 0 or k > last or j == last:
            continue
        w_land = W[j] + dw
        src = idx[j]
        if geo.restricted and direction > 0:
            ok = w_land >= -1e-14 * (1 + abs(dw))
        else:
            ok = np.ones(n_w, bool)
        allowed[j] = ok
        lo, hi = geo.lo[k], geo.hi[k]
        if k == last:
            # degenerate row: exact rule only
            const[src] = 0.0 if geo.restricted else np.where(w_land > lo, 0.0, 1.0)
            continue
        # beyond the safe level psi = 0; at or below the ruin level psi = 1
        above = w_land >= hi
        below = np.zeros(n_w, bool) if geo.restricted else (w_land <= lo) & ~above
        const[src[below]] = 1.0
        mid = ~above & ~below
        pos = np.clip((w_land[mid] - lo) / (hi - lo) * (n_w - 1), 0.0, n_w - 1)
        i0 = np.minimum(np.floor(pos).astype(int), n_w - 2)
        frac = pos - i0
        s = src[mid]
        rows += [s, s]
        cols += [idx[k, i0], idx[k, i0 + 1]]
        wts += [1.0 - frac, frac]
    if rows:
        return (np.concatenate(rows), np.concatenate(cols), np.concatenate(wts), const, allowed)
    empty = np.zeros(0, int)
    return empty, empty, np.zeros(0), const, allowed


def _apply(rows, cols, wts, const, psi_flat, n):
    out = const.copy()
    np.add.at(out, rows, wts * psi_flat[cols])
    return out
