"""Monte-Carlo simulation of the optimally controlled wealth process.

Wealth follows the Euler-Maruyama discretization of

    dW = (r W + (mu - r) pi - c + A) dt + sigma pi dB

with the investment amount read from the solution's normalized policy profile
and the regime's annuity controls applied after every step:

* unrestricted: ``A`` stays fixed; absorb at the ruin level (ruin) or the
  safe level (safe);
* restricted, high charge: a negative ``W`` is cleared by surrendering
  ``-W / ((1 - p) a_bar)`` of income; ruin when the income runs out;
* restricted, low charge: additionally, wealth above ``b (c - A)`` buys just
  enough income to return to that level.

Each path draws from its own generator seeded from ``(seed, path index)``, so
results do not depend on how paths are scheduled.  With ``bridge`` on, every
step also samples whether the Brownian bridge between its end points touched
an absorbing level, and reflections (surrender at zero wealth, purchase at the
purchase boundary) act on the bridge extreme rather than on the end point.  The estimator is the mean
of ``exp(-lambda_s tau)`` over ruined paths (zero for safe ones).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import DomainError, ParameterError, StepSizeError
from ..model import DerivedConstants, ModelParams, PortfolioState, derive_constants

RUIN, SAFE, CENSORED = 0, 1, 2
OUTCOME_NAMES = {RUIN: "ruin", SAFE: "safe", CENSORED: "censored"}

# corner tolerances for declaring ruin at (0, 0) in the restricted regimes
W_EPS = 1e-12
A_EPS = 1e-12
# per-step move allowed relative to the interval width (6-sigma shock)
_SHOCK_SIGMAS = 6.0


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float = 200.0
    seed: int = 12345
    # Brownian-bridge correction for crossings of absorbing boundaries
    bridge: bool = True
    # restricted paths whose income gets within this fraction of c count as
    # safe; the bias is at most psi(0, c (1 - a_safe_frac))
    a_safe_frac: float = 1e-2
    # worker processes; 0 means one per CPU.  Results do not depend on it.
    workers: int = 1
    keep_paths: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt > 0 violated (dt={self.dt})")
        if self.n_paths < 1:
            raise ParameterError(f"n_paths >= 1 violated (n_paths={self.n_paths})")
        if not self.horizon > 0:
            raise ParameterError(f"horizon > 0 violated (horizon={self.horizon})")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")
        if self.workers < 0:
            raise ParameterError("workers must be >= 0")
        if not 0 <= self.a_safe_frac < 1:
            raise ParameterError("a_safe_frac must lie in [0, 1)")


@dataclass
class SimResult:
    estimate: float
    std_err: float
    n_ruin: int
    n_safe: int
    n_censored: int
    # estimate plus the largest discount weight a censored path could carry
    upper_bound: float
    elapsed: float = 0.0
    outcomes: np.ndarray | None = field(default=None, repr=False)
    taus: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_paths(self) -> int:
        return self.n_ruin + self.n_safe + self.n_censored

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_paths


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Generator for one path, derived from ``(seed, path index)`` only."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


@numba.njit(cache=True)
def _lookup(x, inv_h, table):
    """Linear interpolation in a table on a uniform grid starting at 0."""
    pos = x * inv_h
    last = table.shape[0] - 1
    if pos <= 0.0:
        return table[0]
    if pos >= last:
        return table[last]
    i = int(pos)
    f = pos - i
    return table[i] + f * (table[i + 1] - table[i])


@numba.njit(cache=True)
def _near(d0, d1, var):
    # a bridge between points this far from a level almost surely misses it
    return d0 * d1 < 20.0 * var


@numba.njit(cache=True)
def _bridge_min(x0, x1, var, u):
    """Minimum of a Brownian bridge from x0 to x1 with variance ``var``."""
    return 0.5 * (x0 + x1 - math.sqrt((x1 - x0) ** 2 - 2.0 * var * math.log(u)))


@numba.njit(cache=True)
def _bridge_max(x0, x1, var, u):
    return 0.5 * (x0 + x1 + math.sqrt((x1 - x0) ** 2 - 2.0 * var * math.log(u)))


@numba.njit(cache=True)
def _run_absorbed(gen, w, k, table, max_steps, bridge):
    """One path with fixed income, absorbed at ``lo`` (ruin) or ``hi`` (safe)."""
    lo, hi, a, dt, inv_h, r, mu, sigma, c = k[0], k[1], k[2], k[3], k[4], k[5], k[6], k[7], k[8]
    sq = math.sqrt(dt)
    excess = mu - r
    for step in range(max_steps):
        pi = _lookup(w - lo, inv_h, table)
        sd = sigma * pi * sq
        w1 = w + (r * w + excess * pi - c + a) * dt + sd * gen.standard_normal()
        if w1 <= lo:
            return RUIN, (step + 1) * dt
        if w1 >= hi:
            return SAFE, (step + 1) * dt
        if bridge:
            var = sd * sd
            if _near(w - lo, w1 - lo, var):
                if gen.random() < math.exp(-2.0 * (w - lo) * (w1 - lo) / var):
                    return RUIN, (step + 1) * dt
            if _near(hi - w, hi - w1, var):
                if gen.random() < math.exp(-2.0 * (hi - w) * (hi - w1) / var):
                    return SAFE, (step + 1) * dt
        w = w1
    return CENSORED, max_steps * dt


@numba.njit(cache=True)
def _run_reflected(gen, omega, s, k, table, max_steps, buys, bridge):
    """One restricted path in scaled coordinates.

    ``s = c - A`` is the income shortfall and ``omega = W / s``.  The scaled
    wealth has dynamics free of ``s``; ``s`` changes only when income is
    surrendered (at ``omega = 0``) or bought (at ``omega = top`` if ``buys``).
    """
    top, dt, inv_h, r, mu, sigma, c, p, a_bar, s_safe = (k[0], k[1], k[2], k[3], k[4], k[5],
                                                         k[6], k[7], k[8], k[9])
    sq = math.sqrt(dt)
    excess = mu - r
    keep = (1.0 - p) * a_bar
    gap = a_bar - top
    for step in range(max_steps):
        pi = _lookup(omega, inv_h, table)
        sd = sigma * pi * sq
        w1 = omega + (r * omega + excess * pi - 1.0) * dt + sd * gen.standard_normal()
        var = sd * sd
        if w1 >= a_bar:
            return SAFE, (step + 1) * dt
        if bridge and not buys and _near(a_bar - omega, a_bar - w1, var):
            if gen.random() < math.exp(-2.0 * (a_bar - omega) * (a_bar - w1) / var):
                return SAFE, (step + 1) * dt
        # surrender clears any dip below zero wealth inside the step
        dip = -w1
        if bridge and _near(omega, w1, var):
            dip = -_bridge_min(omega, w1, var, 1.0 - gen.random())
        if dip > 0.0:
            s_new = s * (1.0 + dip / keep)
            if s_new >= c:
                return RUIN, (step + 1) * dt
            w1 = (w1 + dip) * s / s_new
            s = s_new
        if buys:
            peak = w1
            if bridge and _near(top - omega, top - w1, var):
                peak = _bridge_max(omega, w1, var, 1.0 - gen.random())
            if peak > top:
                bought = s * (peak - top) / gap
                s_new = s - bought
                if s_new <= s_safe:
                    return SAFE, (step + 1) * dt
                w1 = max((w1 * s - a_bar * bought) / s_new, 0.0)
                s = s_new
        if s >= c - A_EPS and w1 * s <= W_EPS:
            return RUIN, (step + 1) * dt
        omega = w1
    return CENSORED, max_steps * dt


def _check_start(solution, w: float, a: float) -> None:
    PortfolioState(w, a)
    if solution.regime == "unrestricted":
        if a > solution.a_upper:
            raise DomainError(f"a={a} beyond the meeting point {solution.a_upper}")
    else:
        if a > solution.params.c:
            raise DomainError(f"a={a} above c={solution.params.c}")
        if w < 0:
            raise DomainError("w < 0 is not admissible when borrowing is restricted")


def check_step_size(solution, dt: float, a: float, table: np.ndarray | None = None) -> None:
    """Raise :class:`StepSizeError` if one Euler step can jump across the whole interval."""
    p = solution.params
    w_lo, w_hi = solution.w_interval(a)
    width = w_hi - w_lo
    if width <= 0:
        return
    if table is None:
        _, table = solution.policy_profile()
    nu = np.linspace(0.0, 1.0, table.size)
    w = w_lo + nu * width
    pi = width * table
    move = (np.abs(p.r * w - p.c + a + (p.mu - p.r) * pi) * dt
            + _SHOCK_SIGMAS * p.sigma * pi * math.sqrt(dt))
    worst = float(np.max(move))
    if worst >= width:
        i = int(np.argmax(move))
        raise StepSizeError(
            f"dt={dt} too coarse: a {_SHOCK_SIGMAS:g}-sigma step of {worst:.4g} at w={w[i]:.4g} "
            f"(pi={pi[i]:.4g}) exceeds the interval width {width:.4g} at a={a}")


def mc_simulate(params: ModelParams, consts: DerivedConstants | None, solution,
                start: PortfolioState, sim: SimConfig = SimConfig()) -> SimResult:
    """Estimate ``E[exp(-lambda_s tau) 1{ruin}]`` from ``start`` under the solution's policy."""
    consts = consts or derive_constants(params)
    w0, a0 = float(start.w), float(start.a)
    _check_start(solution, w0, a0)
    t0 = time.perf_counter()
    regime = solution.regime
    c, p, a_bar = params.c, params.p, consts.a_bar

    # starting states settled before any step
    immediate = None
    if regime == "unrestricted":
        lo, hi = solution.w_interval(min(a0, solution.a_upper))
        if w0 <= lo:
            immediate = RUIN
        elif w0 >= hi:
            immediate = SAFE
    elif a0 >= c * (1 - sim.a_safe_frac) or w0 >= a_bar * (c - a0):
        immediate = SAFE
    elif a0 <= A_EPS and w0 <= W_EPS:
        immediate = RUIN
    if immediate is not None:
        outcome = np.full(sim.n_paths, immediate, dtype=np.int8)
        taus = np.zeros(sim.n_paths)
        return _summarize(outcome, taus, params, sim, time.perf_counter() - t0)

    buys = regime == "restricted-low"
    if buys and w0 > solution.w_b(a0):
        # jump onto the purchase boundary before the clock starts
        a0 += solution.jump_purchase(w0, a0)
        w0 = solution.w_b(a0)

    nu, profile = solution.policy_profile()
    check_step_size(solution, sim.dt, a0, profile)
    w_lo, w_hi = solution.w_interval(a0)
    # investment per unit of the scaled state, on a uniform grid from the lower end
    if regime == "unrestricted":
        table = (w_hi - w_lo) * profile
        inv_h = (nu.size - 1) / (w_hi - w_lo)
        packed = np.array([w_lo, w_hi, a0, sim.dt, inv_h, params.r, params.mu, params.sigma, c])
        start_x, start_s = w0, 0.0
    else:
        top = (w_hi - w_lo) / (c - a0)
        table = top * profile
        inv_h = (nu.size - 1) / top
        packed = np.array([top, sim.dt, inv_h, params.r, params.mu, params.sigma, c, p, a_bar,
                           c * sim.a_safe_frac])
        start_x, start_s = w0 / (c - a0), c - a0
    job = (regime, start_x, start_s, packed, np.ascontiguousarray(table),
           int(math.ceil(sim.horizon / sim.dt)), sim.bridge, sim.seed)
    workers = sim.workers or os.cpu_count() or 1
    if workers <= 1 or sim.n_paths < 2 * workers:
        outcome, taus = _run_paths(job, 0, sim.n_paths)
    else:
        bounds = np.linspace(0, sim.n_paths, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_paths, [job] * workers, bounds[:-1], bounds[1:]))
        outcome = np.concatenate([o for o, _ in parts])
        taus = np.concatenate([t for _, t in parts])
    return _summarize(outcome, taus, params, sim, time.perf_counter() - t0)


def _run_paths(job, first: int, stop: int):
    """Paths ``first .. stop - 1``; each path's stream depends only on its index."""
    regime, x0, s0, packed, table, max_steps, bridge, seed = job
    n = stop - first
    outcome = np.empty(n, dtype=np.int8)
    taus = np.empty(n)
    buys = regime == "restricted-low"
    for i in range(n):
        gen = path_generator(seed, first + i)
        if regime == "unrestricted":
            outcome[i], taus[i] = _run_absorbed(gen, x0, packed, table, max_steps, bridge)
        else:
            outcome[i], taus[i] = _run_reflected(gen, x0, s0, packed, table, max_steps,
                                                 buys, bridge)
    return outcome, taus


def _summarize(outcome, taus, params: ModelParams, sim: SimConfig, elapsed: float) -> SimResult:
    weights = np.where(outcome == RUIN, np.exp(-params.lambda_s * taus), 0.0)
    n = outcome.size
    est = float(weights.mean())
    se = float(weights.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    n_cens = int(np.sum(outcome == CENSORED))
    bound = est + n_cens / n * math.exp(-params.lambda_s * sim.horizon)
    return SimResult(estimate=est, std_err=se, n_ruin=int(np.sum(outcome == RUIN)),
                     n_safe=int(np.sum(outcome == SAFE)), n_censored=n_cens,
                     upper_bound=bound, elapsed=elapsed,
                     outcomes=outcome if sim.keep_paths else None,
                     taus=taus if sim.keep_paths else None)
