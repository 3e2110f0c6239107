"""The GUE Tracy-Widom distribution F2, two independent ways.

Fredholm route: F2(s) = det(I - K_Ai) on L^2(s, inf), discretized by
Gauss-Legendre on [s, max(s, 0) + 16] (Nystrom). Double precision.

ODE route: the Hastings-McLeod solution q'' = s q + 2 q^3, q ~ Ai(s) as
s -> inf, integrated backward together with

    u(s) = int_s^inf q^2,          (u = d/ds ln F2)
    v(s) = int_s^inf (x - s) q^2,  (ln F2 = -v)

so u' = -q^2 and v' = -u.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import airy

from .errors import ConvergenceError, DomainError

RIGHT_TAIL = 16.0


def _airy_kernel(x):
    ai, aip, _, _ = airy(x)
    dx = x[:, None] - x[None, :]
    same = np.abs(dx) < 1e-14
    num = np.outer(ai, aip) - np.outer(aip, ai)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(same, 0.0, num / np.where(same, 1.0, dx))
    diag = aip ** 2 - x * ai ** 2
    K[np.diag_indices_from(K)] = diag
    return K


def fredholm_log_f2(s, nodes=80):
    """ln det(I - K_Ai) on (s, inf)."""
    s = float(s)
    hi = max(s, 0.0) + RIGHT_TAIL
    t, w = np.polynomial.legendre.leggauss(nodes)
    x = (hi - s) / 2 * t + (hi + s) / 2
    w = w * (hi - s) / 2
    sw = np.sqrt(w)
    A = sw[:, None] * _airy_kernel(x) * sw[None, :]
    tr = np.trace(A)
    if tr < 1e-3:
        # log det(I - A) = -sum tr(A^k)/k keeps full relative accuracy in the tail
        total, P = 0.0, np.eye(nodes)
        for k in range(1, 60):
            P = P @ A
            term = np.trace(P) / k
            total -= term
            if abs(term) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    sign, logdet = np.linalg.slogdet(np.eye(nodes) - A)
    if sign <= 0:
        raise ConvergenceError(f"Fredholm determinant not positive at s = {s}")
    return logdet


def fredholm_f2(s, nodes=80):
    return float(np.exp(fredholm_log_f2(s, nodes)))


@dataclass(frozen=True)
class TWDistribution:
    s_grid: list
    F2: list
    log_F2: list
    F2_ode: list

    def max_route_gap(self):
        return max(abs(a - b) for a, b in zip(self.F2, self.F2_ode))

    def to_csv(self, sig=17):
        lines = ["s,F2"]
        lines += [f"{s:.{sig}g},{f:.{sig}g}" for s, f in zip(self.s_grid, self.F2)]
        return "\n".join(lines) + "\n"


def _start_values(s0):
    ai, aip, _, _ = airy(s0)
    u0 = aip ** 2 - s0 * ai ** 2
    # closed forms of int_s^inf Ai^2 and int_s^inf (x - s) Ai^2
    v0 = (2 * s0 ** 2 * ai ** 2 - 2 * s0 * aip ** 2 - ai * aip) / 3
    return [ai, aip, u0, v0]


def _rhs(s, y):
    q, dq, u, v = y
    return [dq, s * q + 2 * q ** 3, -q * q, -u]


class HastingsMcLeod:
    """Dense Hastings-McLeod solution on [s_min, s0]."""

    def __init__(self, s_min=-10.0, s_max=8.0):
        if not s_min < s_max:
            raise DomainError("need s_min < s_max")
        self.s_min = float(s_min)
        self.s0 = max(12.0, float(s_max) + 2.0)
        sol = solve_ivp(_rhs, (self.s0, self.s_min), _start_values(self.s0), method="DOP853",
                        rtol=2.5e-14, atol=1e-40, dense_output=True)
        if not sol.success:
            raise ConvergenceError(f"Hastings-McLeod integration failed: {sol.message}")
        self._sol = sol.sol

    def _eval(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s_min - 1e-12):
            raise DomainError(f"s below the integrated range [{self.s_min}, {self.s0}]")
        out = np.empty((4,) + s.shape)
        far = s > self.s0
        near = ~far
        if np.any(near):
            out[:, near] = self._sol(s[near])
        if np.any(far):
            ai, aip, _, _ = airy(s[far])
            out[:, far] = np.array([ai, aip, aip ** 2 - s[far] * ai ** 2, 0 * ai])
        return out

    def q(self, s):
        return self._eval(s)[0]

    def state(self, s):
        """(q, q', R, ln F2) with R = d/ds ln F2."""
        q, dq, u, v = self._eval(s)
        return q, dq, u, -v

    def log_f2(self, s):
        return -self._eval(s)[3]


@lru_cache(maxsize=8)
def hastings_mcleod(s_min=-10.0, s_max=8.0):
    return HastingsMcLeod(s_min, s_max)


def solve_tw(s_min, s_max, points, nodes=80, check=True):
    """Tabulate F2 by the Fredholm route, cross-checked by the ODE route.

    With ``check`` each value is recomputed with 1.5x the Nystrom nodes and
    F2 must agree to 1e-12 absolutely, otherwise ConvergenceError.
    """
    if not s_min < s_max:
        raise DomainError("need s_min < s_max")
    if points < 2:
        raise DomainError("need at least two points")
    grid = np.linspace(float(s_min), float(s_max), int(points))
    logs = []
    for s in grid:
        lf = fredholm_log_f2(s, nodes)
        if check:
            lf2 = fredholm_log_f2(s, int(1.5 * nodes))
            gap = abs(np.exp(lf) - np.exp(lf2))
            if gap > 1e-12:
                raise ConvergenceError(f"Nystrom not converged at s = {s}: {gap:.2e}")
        logs.append(lf)
    hm = hastings_mcleod(min(-10.0, float(s_min)), max(8.0, float(s_max)))
    ode = np.exp(hm.log_f2(grid))
    return TWDistribution(s_grid=[float(s) for s in grid], F2=[float(np.exp(x)) for x in logs],
                          log_F2=[float(x) for x in logs], F2_ode=[float(x) for x in ode])
