"""Property checks on a solved ruin-probability function.

Every check returns a :class:`Report`: one :class:`CheckLine` per point or
property, serialized as ``CHECK <name> <location> <value> <threshold> <status>``.
Derivatives come from finite differences of ``solution.psi`` with step
``1e-4`` times the local interval length, so the checks only rely on the
solution's public evaluation methods and apply equally to perturbed wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"

HJB_TOL = 1e-4
VI_TOL = 1e-6
BIND_TOL = 1e-4
MONO_TOL = 1e-12
CONVEX_TOL = -1e-8
REL_STEP = 1e-4


@dataclass
class CheckLine:
    name: str
    location: str
    value: float
    threshold: float
    status: str

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def format(self) -> str:
        return f"CHECK {self.name} {self.location} {self.value:.6e} {self.threshold:.6e} {self.status}"


@dataclass
class Report:
    lines: list[CheckLine] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, name: str, location: str, value: float, threshold: float,
            ok: bool | None) -> CheckLine:
        status = SKIP if ok is None else (PASS if ok else FAIL)
        line = CheckLine(name, location, float(value), float(threshold), status)
        self.lines.append(line)
        return line

    def extend(self, other: "Report") -> "Report":
        self.lines.extend(other.lines)
        self.notes.extend(other.notes)
        return self

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines)

    @property
    def failures(self) -> list[CheckLine]:
        return [line for line in self.lines if not line.passed]

    def worst(self, name: str | None = None) -> float:
        vals = [abs(l.value) for l in self.lines
                if l.status != SKIP and (name is None or l.name == name)]
        return max(vals) if vals else 0.0

    def format(self) -> str:
        """Check lines, preceded by ``#``-prefixed informational notes."""
        out = [f"# {note}" for note in self.notes]
        out += [line.format() for line in self.lines]
        return "\n".join(out)


def _loc(w: float, a: float) -> str:
    return f"(w={w:.6g},a={a:.6g})"


# -- derivatives ---------------------------------------------------------------

def _steps(solution, a: float) -> tuple[float, float]:
    w_lo, w_hi = solution.domain(a)
    return REL_STEP * (w_hi - w_lo), REL_STEP * solution.a_upper


def psi_w(solution, w: float, a: float, one_sided: bool = False) -> float:
    h, _ = _steps(solution, a)
    f = solution.psi
    if one_sided:
        # second-order forward difference
        return (-3 * f(w, a) + 4 * f(w + h, a) - f(w + 2 * h, a)) / (2 * h)
    return (f(w + h, a) - f(w - h, a)) / (2 * h)


def psi_ww(solution, w: float, a: float) -> float:
    h, _ = _steps(solution, a)
    f = solution.psi
    return (f(w + h, a) - 2 * f(w, a) + f(w - h, a)) / h ** 2


def psi_a(solution, w: float, a: float) -> float:
    _, k = _steps(solution, a)
    f = solution.psi
    if a - k < 0:
        return (-3 * f(w, a) + 4 * f(w, a + k) - f(w, a + 2 * k)) / (2 * k)
    return (f(w, a + k) - f(w, a - k)) / (2 * k)


def hjb_residual(solution, w: float, a: float) -> float:
    """``lambda_s psi - (r w - c + a) psi_w + m psi_w^2 / psi_ww`` (optimized investment)."""
    prm = solution.params
    m = solution.consts.m
    pw, pww = psi_w(solution, w, a), psi_ww(solution, w, a)
    return (prm.lambda_s * solution.psi(w, a) - (prm.r * w - prm.c + a) * pw
            + m * pw * pw / pww)


# -- state selection -------------------------------------------------------------

def _region_top(solution, a: float) -> float:
    """Upper end of the continuation region (purchase boundary or safe level)."""
    return solution.w_interval(a)[1]


def interior_points(solution, n_w: int = 5, n_a: int = 3,
                    a_frac: tuple[float, float] = (0.1, 0.7)) -> list[tuple[float, float]]:
    """Points strictly inside the continuation region, away from every boundary."""
    pts = []
    for af in np.linspace(a_frac[0], a_frac[1], n_a):
        a = af * solution.a_upper
        w_lo, w_hi = solution.w_interval(a)
        for f in np.linspace(0.1, 0.9, n_w):
            pts.append((float(w_lo + f * (w_hi - w_lo)), float(a)))
    return pts


def purchase_region_points(solution, n_w: int = 3, n_a: int = 3) -> list[tuple[float, float]]:
    """Points strictly between the purchase boundary and the safe level."""
    pts = []
    for af in np.linspace(0.1, 0.6, n_a):
        a = af * solution.a_upper
        w_b = solution.w_b(a)
        w_s = solution.domain(a)[1]
        for f in np.linspace(0.2, 0.8, n_w):
            pts.append((float(w_b + f * (w_s - w_b)), float(a)))
    return pts


def _is_interior(solution, w: float, a: float) -> bool:
    if not 0 <= a < solution.a_upper:
        return False
    w_lo, w_hi = solution.domain(a)
    h, k = _steps(solution, a)
    if not (w_lo + 2 * h < w < w_hi - 2 * h):
        return False
    # the a-shifted states must stay admissible too
    w_hi_next = solution.domain(min(a + 2 * k, solution.a_upper))[1]
    return w < w_hi_next - 2 * h


# -- checks -----------------------------------------------------------------------

def check_hjb_residual(solution, points, tol: float = HJB_TOL) -> Report:
    """HJB residual at each point; in the purchase region only ``<= tol`` is required."""
    rep = Report()
    for w, a in points:
        if not _is_interior(solution, w, a):
            rep.add("hjb_residual", _loc(w, a), math.nan, tol, None)
            continue
        res = hjb_residual(solution, w, a)
        in_purchase = _in_purchase(solution, w, a)
        name = "hjb_residual_purchase" if in_purchase else "hjb_residual"
        ok = res <= tol if in_purchase else abs(res) <= tol
        rep.add(name, _loc(w, a), res, tol, ok)
    return rep


def _in_purchase(solution, w: float, a: float) -> bool:
    return hasattr(solution, "in_purchase_region") and solution.in_purchase_region(w, a)


def vi_slacks(solution, w: float, a: float) -> tuple[float, float]:
    """``(a_bar psi_w - psi_A, psi_A - (1-p) a_bar psi_w)``; both must be <= 0."""
    a_bar, p = solution.consts.a_bar, solution.params.p
    pw, pa = psi_w(solution, w, a), psi_a(solution, w, a)
    return a_bar * pw - pa, pa - (1 - p) * a_bar * pw


def check_variational_inequalities(solution, points, tol: float = VI_TOL) -> Report:
    rep = Report()
    for w, a in points:
        if not _is_interior(solution, w, a):
            rep.add("vi_buy", _loc(w, a), math.nan, tol, None)
            rep.add("vi_surrender", _loc(w, a), math.nan, tol, None)
            continue
        buy, sur = vi_slacks(solution, w, a)
        rep.add("vi_buy", _loc(w, a), buy, tol, buy <= tol)
        rep.add("vi_surrender", _loc(w, a), sur, tol, sur <= tol)
    return rep


def check_purchase_binding(solution, points, tol: float = BIND_TOL) -> Report:
    """In the purchase region the buying inequality holds with equality."""
    rep = Report()
    for w, a in points:
        if not (_in_purchase(solution, w, a) and _is_interior(solution, w, a)):
            rep.add("bind_purchase", _loc(w, a), math.nan, tol, None)
            continue
        buy, _ = vi_slacks(solution, w, a)
        rep.add("bind_purchase", _loc(w, a), buy, tol, abs(buy) <= tol)
    return rep


def check_neumann_binding(solution, incomes, tol: float = BIND_TOL) -> Report:
    """At zero wealth the surrender inequality holds with equality (restricted regimes)."""
    rep = Report()
    a_bar, p = solution.consts.a_bar, solution.params.p
    for a in incomes:
        _, k = _steps(solution, a)
        if not (k <= a < solution.a_upper - 3 * k):
            rep.add("bind_neumann", _loc(0.0, a), math.nan, tol, None)
            continue
        gap = (1 - p) * a_bar * psi_w(solution, 0.0, a, one_sided=True) - psi_a(solution, 0.0, a)
        rep.add("bind_neumann", _loc(0.0, a), gap, tol, abs(gap) <= tol)
    return rep


def shape_line(solution, a: float, n_points: int = 100) -> tuple[np.ndarray, np.ndarray]:
    w_lo, w_hi = solution.domain(a)
    w = np.linspace(w_lo, w_hi, n_points)
    return w, np.array([solution.psi(x, a) for x in w])


def check_shape(solution, a: float, n_points: int = 100) -> Report:
    """Range, monotonicity, convexity and boundary values of ``psi(., a)``; positive ``pi*``."""
    rep = Report()
    w, psi = shape_line(solution, a, n_points)
    loc = f"(a={a:.6g},n={n_points})"
    outside = float(max(0.0, -psi.min(), psi.max() - 1.0))
    rep.add("shape_range", loc, outside, 0.0, outside == 0.0)
    rise = float(np.max(np.diff(psi)))
    rep.add("shape_monotone", loc, rise, MONO_TOL, rise <= MONO_TOL)
    bend = float(np.min(np.diff(psi, 2)))
    rep.add("shape_convex", loc, bend, CONVEX_TOL, bend >= CONVEX_TOL)
    top = psi[-1]
    rep.add("boundary_safe", loc, top, 1e-10, abs(top) <= 1e-10)
    if solution.regime == "unrestricted" or a == 0.0:
        rep.add("boundary_ruin", loc, psi[0] - 1.0, 1e-10, abs(psi[0] - 1.0) <= 1e-10)
    w_lo, w_hi = solution.w_interval(a)
    inner = np.linspace(w_lo, w_hi, n_points)[1:-1]
    pis = np.array([solution.pi_star(x, a) for x in inner])
    low = float(pis.min())
    rep.add("pi_positive", loc, low, 0.0, low > 0.0)
    return rep


def check_dual_concavity(solution, a: float, n_points: int = 50) -> Report:
    y_lo, y_hi = solution.dual_bounds(a)
    y = np.linspace(y_lo, y_hi, n_points + 2)[1:-1]
    curv = np.array([solution.psi_hat_yy(v, a) for v in y])
    worst = float(curv.max())
    return Report().extend(_single("dual_concave", f"(a={a:.6g},n={n_points})", worst, 0.0,
                                   worst < 0.0))


def _single(name, loc, value, thr, ok) -> Report:
    rep = Report()
    rep.add(name, loc, value, thr, ok)
    return rep


def seam_grid(high, n: int = 5) -> list[tuple[float, float]]:
    """Interior grid shared by both restricted regimes near the critical charge."""
    pts = []
    for a in np.linspace(0.05, 0.75, n) * high.params.c:
        w_hi = high.w_interval(a)[1]
        for f in np.linspace(0.1, 0.9, n):
            pts.append((float(f * w_hi), float(a)))
    return pts


def check_seam(low, high, n: int = 5, tol: float = 1e-3) -> Report:
    """Low-charge solution just below ``p*`` against the high-charge one at ``p*``."""
    d_psi, d_pi = 0.0, 0.0
    for w, a in seam_grid(high, n):
        d_psi = max(d_psi, abs(low.psi(w, a) - high.psi(w, a)))
        try:
            low_pi = low.pi_star(w, a)
        except DomainError:
            # just below p* the purchase boundary sits a hair under the safe level
            low_pi = low.pi_star(min(w, low.w_b(a)), a)
        d_pi = max(d_pi, abs(low_pi - high.pi_star(w, a)))
    loc = f"(p_low={low.params.p:.9g},p_high={high.params.p:.9g},grid={n}x{n})"
    rep = Report()
    rep.add("seam_psi", loc, d_psi, tol, d_psi < tol)
    rep.add("seam_pi", loc, d_pi, tol, d_pi < tol)
    return rep


# -- negative controls ------------------------------------------------------------

class PerturbedSolution:
    """A solution with ``psi`` replaced by ``psi + amplitude * bump``.

    ``bump(w, a)`` defaults to ``sin(pi nu)^2`` with ``nu`` the normalized
    position in the wealth domain, so the perturbation vanishes on the
    boundaries and only the interior equations can detect it.
    """

    def __init__(self, base, amplitude: float = 0.01, bump=None):
        self._base = base
        self.amplitude = amplitude
        self._bump = bump or self._default_bump

    def __getattr__(self, name):
        return getattr(self._base, name)

    def _default_bump(self, w, a):
        w_lo, w_hi = self._base.domain(a)
        nu = (w - w_lo) / (w_hi - w_lo)
        return math.sin(math.pi * nu) ** 2

    def psi(self, w, a):
        return self._base.psi(w, a) + self.amplitude * self._bump(w, a)


def negative_controls(solution, points) -> Report:
    """Perturbed solutions must fail the residual and inequality checks."""
    rep = Report()
    bumped = PerturbedSolution(solution, 0.01)
    worst = check_hjb_residual(bumped, points).worst()
    rep.add("negctl_hjb", "bump=0.01", worst, 1e-3, worst > 1e-3)
    # a tilt that makes psi fall too fast in a breaks the buying inequality
    tilted = PerturbedSolution(solution, 1.0, bump=lambda w, a: -0.5 * a)
    vi = check_variational_inequalities(tilted, points)
    n_fail = len(vi.failures)
    rep.add("negctl_vi", "tilt=-0.5a", n_fail, 1, n_fail >= 1)
    return rep
