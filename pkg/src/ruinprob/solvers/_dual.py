"""Shared machinery for the closed-form regime solutions.

In every regime the concave dual of the ruin probability has the form

    psi_hat(y, a) = D1(a) y**b1 + D2(a) y**b2 + (c - a) / r * y,

with ``D_i(a) = S(a) * e_i * y_ref(a)**(1 - b_i)`` for two constants
``e1, e2``, a wealth scale ``S(a)`` and a reference dual value ``y_ref(a)``.
Writing ``u = y / y_ref(a)``, the continuation region maps onto ``u`` in
``[1, x]``: ``u = 1`` is the upper wealth boundary (safe or purchase level) and
``u = x`` the lower one (ruin level or zero wealth).
"""

from __future__ import annotations

import numpy as np

from ..errors import BoundaryError, DomainError
from ..model import DerivedConstants, ModelParams
from ..numerics import invert_dual_derivative

_NEWTON_STEPS = 4
_TABLE_SIZE = 2049


class DualSolution:
    """Evaluation layer common to the three regimes.

    Subclasses set ``params``, ``consts``, ``x``, ``e1``, ``e2`` and implement
    ``scale``, ``y_ref``, ``w_interval`` and ``domain``.
    """

    regime: str = ""
    params: ModelParams
    consts: DerivedConstants
    x: float
    e1: float
    e2: float

    # -- regime hooks -------------------------------------------------------
    def scale(self, a):
        raise NotImplementedError

    def y_ref(self, a):
        raise NotImplementedError

    def w_interval(self, a: float) -> tuple[float, float]:
        """Wealth interval of the continuation region at income ``a``."""
        raise NotImplementedError

    def domain(self, a: float) -> tuple[float, float]:
        """Full admissible wealth interval at income ``a``."""
        return self.w_interval(a)

    @property
    def a_upper(self) -> float:
        raise NotImplementedError

    # -- dual function ------------------------------------------------------
    def coefficients(self, a: float) -> tuple[float, float]:
        b1, b2 = self.consts.b1, self.consts.b2
        s, yr = self.scale(a), self.y_ref(a)
        return s * self.e1 * yr ** (1.0 - b1), s * self.e2 * yr ** (1.0 - b2)

    def dual_bounds(self, a: float) -> tuple[float, float]:
        yr = self.y_ref(a)
        return yr, self.x * yr

    def psi_hat(self, y: float, a: float) -> float:
        b1, b2 = self.consts.b1, self.consts.b2
        yr = self.y_ref(a)
        u = y / yr
        return yr * (self.scale(a) * (self.e1 * u ** b1 + self.e2 * u ** b2)
                     + (self.params.c - a) / self.params.r * u)

    def psi_hat_y(self, y: float, a: float) -> float:
        return self._w_of_u(y / self.y_ref(a), a)

    def psi_hat_yy(self, y: float, a: float) -> float:
        u = y / self.y_ref(a)
        return self.scale(a) * self._curv(u) / y

    def _g(self, u):
        b1, b2 = self.consts.b1, self.consts.b2
        return b1 * self.e1 * u ** (b1 - 1.0) + b2 * self.e2 * u ** (b2 - 1.0)

    def _g_prime(self, u):
        b1, b2 = self.consts.b1, self.consts.b2
        return (b1 * (b1 - 1.0) * self.e1 * u ** (b1 - 2.0)
                + b2 * (b2 - 1.0) * self.e2 * u ** (b2 - 2.0))

    def _curv(self, u):
        # y * psi_hat_yy / S(a)
        return u * self._g_prime(u)

    def _w_of_u(self, u, a):
        return (self.params.c - a) / self.params.r + self.scale(a) * self._g(u)

    def _psi_of_u(self, u, a):
        # psi_hat(y) - w y at w = psi_hat_y(y); the (c-a)/r terms cancel exactly
        b1, b2 = self.consts.b1, self.consts.b2
        val = self.y_ref(a) * u * self.scale(a) * (
            (1.0 - b1) * self.e1 * u ** (b1 - 1.0) + (1.0 - b2) * self.e2 * u ** (b2 - 1.0))
        return np.clip(val, 0.0, 1.0)

    def _pi_of_u(self, u, a):
        p = self.params
        return -(p.mu - p.r) / p.sigma ** 2 * self.scale(a) * self._curv(u)

    # -- primal evaluation (scalar) ----------------------------------------
    def _dual_point(self, w: float, a: float) -> float:
        """Dual value ``y`` with ``psi_hat_y(y, a) = w``; ``w`` is clamped."""
        w_lo, w_hi = self.w_interval(a)
        y_lo, y_hi = self.dual_bounds(a)
        if w >= w_hi:
            return y_lo
        if w <= w_lo:
            return y_hi
        return invert_dual_derivative(lambda y: self.psi_hat_y(y, a), w, y_lo, y_hi)

    def _psi_continuation(self, w: float, a: float) -> float:
        w_lo, w_hi = self.w_interval(a)
        w = min(max(w, w_lo), w_hi)
        y = self._dual_point(w, a)
        # rounding can leave the boundary values a few ulps outside [0, 1]
        return min(max(self.psi_hat(y, a) - w * y, 0.0), 1.0)

    def _pi_continuation(self, w: float, a: float) -> float:
        y = self._dual_point(w, a)
        p = self.params
        return -(p.mu - p.r) / p.sigma ** 2 * y * self.psi_hat_yy(y, a)

    # -- vectorized evaluation ---------------------------------------------
    def _u_table(self):
        table = getattr(self, "_table_cache", None)
        if table is None:
            u = np.linspace(1.0, self.x, _TABLE_SIZE)
            g = self._g(u)
            order = np.argsort(g)
            table = (g[order], u[order])
            object.__setattr__(self, "_table_cache", table)
        return table

    def _u_from_g(self, target: np.ndarray) -> np.ndarray:
        g_tab, u_tab = self._u_table()
        u = np.interp(target, g_tab, u_tab)
        for _ in range(_NEWTON_STEPS):
            u = u - (self._g(u) - target) / self._g_prime(u)
            np.clip(u, 1.0, self.x, out=u)
        return u

    def u_of_state(self, w, a) -> np.ndarray:
        """Normalized dual variable for continuation-region states (vectorized)."""
        w = np.asarray(w, dtype=float)
        a = np.asarray(a, dtype=float)
        target = (w - (self.params.c - a) / self.params.r) / self.scale(a)
        return self._u_from_g(target)

    def policy_profile(self, n: int = 4097) -> tuple[np.ndarray, np.ndarray]:
        """Optimal investment on the continuation region in normalized form.

        Returns ``(nu, P)`` with ``nu`` uniform on ``[0, 1]``.  For any ``a``,
        ``pi*(w_lo + nu * (w_hi - w_lo), a) = (w_hi - w_lo) * P(nu)``, where
        ``(w_lo, w_hi) = w_interval(a)``.
        """
        nu = np.linspace(0.0, 1.0, n)
        w_lo, w_hi = self.w_interval(0.0)
        w = w_lo + nu * (w_hi - w_lo)
        u = self.u_of_state(w, np.zeros_like(w))
        u[0], u[-1] = self.x, 1.0
        return nu, self._pi_of_u(u, 0.0) / (w_hi - w_lo)

    # -- common API ----------------------------------------------------------
    def psi(self, w: float, a: float) -> float:
        raise NotImplementedError

    def pi_star(self, w: float, a: float) -> float:
        raise NotImplementedError

    def psi_array(self, w, a) -> np.ndarray:
        raise NotImplementedError

    def pi_star_array(self, w, a) -> np.ndarray:
        raise NotImplementedError

    def _require_interior(self, w: float, a: float, lower_open: bool) -> None:
        w_lo, w_hi = self.w_interval(a)
        tol = 1e-12 * (1.0 + abs(w_lo) + abs(w_hi))
        if w >= w_hi - tol or (lower_open and w <= w_lo + tol):
            raise BoundaryError(
                f"investment strategy undefined on the boundary (w={w}, a={a}, "
                f"interval=[{w_lo}, {w_hi}])")
        if w < w_lo - tol:
            raise DomainError(f"w={w} below the domain [{w_lo}, {w_hi}] at a={a}")
