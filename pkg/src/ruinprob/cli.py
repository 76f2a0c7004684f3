"""Command-line front end: constants, curves, boundary sweep, verification, simulation.

Exit codes: 0 success, 1 a verification check failed, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from contextlib import contextmanager
from dataclasses import fields

import numpy as np

from .errors import RuinModelError
from .model import ModelParams, PortfolioState, derive_constants
from .solvers import critical_charge, purchase_slope, solve
from .solvers.restricted_high import A_TRUNCATION

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PARAM_FLAGS = {"r": "--r", "mu": "--mu", "sigma": "--sigma", "lambda_s": "--lambda-s",
               "lambda_o": "--lambda-o", "c": "--c", "p": "--p"}
REGIME_LABELS = {"unrestricted": "unrestricted", "restricted-high": "restricted: p >= p*",
                 "restricted-low": "restricted: p < p*"}
DEFAULT_SEED = 12345


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """Full-precision number for CSV output."""
    return format(float(x), ".17g")


# -- configuration ------------------------------------------------------------------

def read_config(path: str) -> dict[str, float]:
    """Flat ``key = value`` file with keys named after the model parameters."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string("[params]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in fields(ModelParams)}
    out = {}
    for key, raw in parser["params"].items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}; expected one of {sorted(known)}")
        try:
            out[key] = float(raw)
        except ValueError as exc:
            raise UsageError(f"config key {key} is not a number: {raw!r}") from exc
    return out


def params_from_args(args) -> ModelParams:
    """Defaults, overridden by the config file, overridden by flags."""
    values = read_config(args.config) if args.config else {}
    for name in PARAM_FLAGS:
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    return ModelParams(**values)


@contextmanager
def output(path: str | None):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
    with fh:
        yield fh


# -- commands -------------------------------------------------------------------------

def cmd_constants(args, params: ModelParams) -> int:
    consts = derive_constants(params)
    sol = solve(params, restricted=args.restricted, consts=consts)
    rows = [("a_bar", consts.a_bar), ("m", consts.m), ("B1", consts.b1), ("B2", consts.b2),
            ("p_star", critical_charge(params, consts))]
    with output(args.out) as fh:
        for key, val in rows:
            fh.write(f"{key} = {fmt(val)}\n")
        fh.write(f"regime = {REGIME_LABELS[sol.regime]}\n")
    return EXIT_OK


def curve_table(solution, a: float, n_points: int) -> np.ndarray:
    """Rows ``(w, psi, pi_star)`` across the wealth domain at income ``a``.

    In the purchase region the investment shown is the one held after buying
    income down to the boundary; at the safe level it is zero.
    """
    if n_points < 2:
        raise UsageError("n-points must be at least 2")
    if a < 0 or a >= solution.a_upper or (solution.regime != "unrestricted"
                                          and a >= solution.params.c * A_TRUNCATION):
        raise UsageError(f"a={a} outside the income range [0, {solution.a_upper})")
    lo, hi = solution.domain(a)
    w = np.linspace(lo, hi, n_points)
    psi = solution.psi_array(w, a)
    w_eval, a_eval = w, np.full_like(w, a)
    covered = np.zeros(n_points, bool)
    if solution.regime == "restricted-low":
        c, b = solution.params.c, solution.b
        buy = w > solution.w_b(a)
        delta = np.where(buy, (w - solution.w_b(a)) / (solution.consts.a_bar - b), 0.0)
        a_new = np.minimum(a + delta, c)
        covered = a_new >= c * A_TRUNCATION
        a_eval = np.where(covered, a, a_new)
        w_eval = np.where(buy, b * (c - a_eval), w)
    pi = solution.pi_star_array(w_eval, a_eval)
    pi = np.where(covered, 0.0, pi)
    pi[-1] = 0.0
    return np.column_stack([w, psi, pi])


def write_csv(fh, header, rows) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([fmt(v) for v in row])


def cmd_curve(args, params: ModelParams) -> int:
    sol = solve(params, restricted=args.restricted)
    table = curve_table(sol, args.a, args.n_points)
    with output(args.out) as fh:
        write_csv(fh, ("w", "psi", "pi_star"), table)
    return EXIT_OK


def bp_sweep(params: ModelParams, n_points: int) -> np.ndarray:
    """``(p, b)`` on ``p = p* k / n`` for ``k = 1..n``."""
    if n_points < 1:
        raise UsageError("n-points must be at least 1")
    consts = derive_constants(params)
    p_crit = critical_charge(params, consts)
    if p_crit >= 1.0:
        raise UsageError(f"p*={p_crit} >= 1: no surrender charge in (0, 1] reaches it")
    ps = p_crit * np.arange(1, n_points + 1) / n_points
    ps[-1] = p_crit
    return np.array([(p, purchase_slope(params.with_p(p), consts)) for p in ps])


def cmd_bp_sweep(args, params: ModelParams) -> int:
    table = bp_sweep(params, args.n_points)
    with output(args.out) as fh:
        write_csv(fh, ("p", "b"), table)
    return EXIT_OK


def _sim_config(args, **extra):
    from .verify.mc import SimConfig
    return SimConfig(n_paths=args.paths, dt=args.dt, horizon=args.horizon, seed=args.seed,
                     workers=args.workers, **extra)


def cmd_verify(args, params: ModelParams) -> int:
    from .verify.checks import Report
    from .verify.suites import SUITES, run_suite
    names = SUITES if "all" in args.suite else list(dict.fromkeys(args.suite))
    sim = _sim_config(args) if "mc" in names else None
    report = Report()
    for name in names:
        report.extend(run_suite(name, params, args.restricted, sim))
    with output(args.out) as fh:
        fh.write(report.format() + "\n")
        fh.write(f"SUMMARY {len(report.lines)} checks, {len(report.failures)} failed\n")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(args, params: ModelParams) -> int:
    from .verify.mc import OUTCOME_NAMES, mc_simulate
    sol = solve(params, restricted=args.restricted)
    state = PortfolioState(args.w, args.a)
    sim = _sim_config(args, keep_paths=args.out is not None)
    res = mc_simulate(params, sol.consts, sol, state, sim)
    exact = sol.psi(state.w, state.a)
    summary = [("regime", sol.regime), ("w", fmt(state.w)), ("a", fmt(state.a)),
               ("estimate", fmt(res.estimate)), ("std_err", fmt(res.std_err)),
               ("upper_bound", fmt(res.upper_bound)), ("n_ruin", res.n_ruin),
               ("n_safe", res.n_safe), ("n_censored", res.n_censored),
               ("analytic_psi", fmt(exact)), ("elapsed", f"{res.elapsed:.3f}")]
    for key, val in summary:
        print(f"{key} = {val}")
    if args.out is not None:
        with output(args.out) as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(("path", "outcome", "tau"))
            for i, (o, tau) in enumerate(zip(res.outcomes, res.taus)):
                out.writerow((i, OUTCOME_NAMES[o], fmt(tau)))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _shared() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    for name, flag in PARAM_FLAGS.items():
        shared.add_argument(flag, dest=name, type=float, default=None,
                            help=f"model parameter {name} (default {getattr(ModelParams, name)})")
    shared.add_argument("--restricted", action="store_true",
                        help="forbid borrowing against annuity income")
    shared.add_argument("--out", default=None, help="output path (default stdout)")
    shared.add_argument("--config", default=None, help="flat key = value parameter file")
    shared.add_argument("--seed", type=_u64, default=DEFAULT_SEED, help="simulation seed")
    return shared


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _sim_flags(p: argparse.ArgumentParser, paths: int) -> None:
    p.add_argument("--paths", type=int, default=paths, help="number of simulated paths")
    p.add_argument("--dt", type=float, default=1e-3, help="time step in years")
    p.add_argument("--horizon", type=float, default=200.0, help="censoring horizon in years")
    p.add_argument("--workers", type=int, default=1, help="worker processes (0 = all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    from .verify.suites import SUITES
    shared = _shared()
    parser = argparse.ArgumentParser(
        prog="ruinprob", description="Minimum probability of lifetime ruin with reversible annuities")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", parents=[shared], help="derived constants and regime")

    p = sub.add_parser("curve", parents=[shared], help="CSV of w, psi, pi_star at fixed income")
    p.add_argument("--a", type=float, default=0.0, help="annuity income")
    p.add_argument("--n-points", type=int, default=200)

    p = sub.add_parser("bp-sweep", parents=[shared], help="CSV of the purchase slope b against p")
    p.add_argument("--n-points", type=int, default=50)

    p = sub.add_parser("verify", parents=[shared], help="run verification suites")
    p.add_argument("--suite", action="append", choices=SUITES + ("all",),
                   help="suite to run; repeatable (default: residual, vi, shape, seam)")
    _sim_flags(p, paths=100_000)

    p = sub.add_parser("simulate", parents=[shared], help="Monte-Carlo ruin estimate from a state")
    p.add_argument("--w", type=float, required=True, help="starting wealth")
    p.add_argument("--a", type=float, default=0.0, help="starting annuity income")
    _sim_flags(p, paths=10_000)
    return parser


COMMANDS = {"constants": cmd_constants, "curve": cmd_curve, "bp-sweep": cmd_bp_sweep,
            "verify": cmd_verify, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not args.suite:
        args.suite = ["residual", "vi", "shape", "seam"]
    try:
        params = params_from_args(args)
        return COMMANDS[args.command](args, params)
    except (UsageError, RuinModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
