"""Sigma-form ODE residuals, soft-edge scaling limits and asymptotic independence.

Edge profiles in terms of the Tracy-Widom quantities q (Hastings-McLeod)
and R = d/ds ln F2 = int_s^inf q^2:

GUE, k = sqrt(2) c (c = 2^-1/2 is the standard scaling, k = 1):
    f(x) = -k R(-k x),   g(y) = k R(-k y)

LUE, alpha = beta n, kappa = c (1+beta)^(1/6):
    f(x) = -L^(1/3) (1+beta)^(1/6) R(-kappa x)
    g(y) =  R^(1/3) (1+beta)^(1/6) R(kappa y)

with soft edges L = (sqrt(1+beta) - 1)^2, R = (sqrt(1+beta) + 1)^2, so that
L R = beta^2. Each profile solves its sigma-PII form exactly, because
R = q'^2 - s q^2 - q^4 along the Hastings-McLeod solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp

from .calculus import one_sided_far
from .errors import DomainError
from .gap import gap_point
from .tracy_widom import fredholm_f2, hastings_mcleod
from .weights import WeightSpec

GUE = "gue"
LUE = "lue"
KINDS = ("PIV", "PV", "PII_gue_f", "PII_gue_g", "PII_lue_f", "PII_lue_g", "PII_tw")


def _terms(kind, s, ds, d2s, z, params):
    """Left side and right-side terms of each sigma form, as a list summing to zero."""
    p = params or {}
    if kind == "PIV":
        nu = p.get("nu", (0, 0, 0))
        return [d2s ** 2, -4 * (z * ds - s) ** 2,
                4 * (ds + nu[0]) * (ds + nu[1]) * (ds + nu[2])]
    if kind == "PV":
        nu = p.get("nu", (0, 0, 0, 0))
        A = s - z * ds + 2 * ds ** 2 + sum(nu) * ds
        prod = (ds + nu[0]) * (ds + nu[1]) * (ds + nu[2]) * (ds + nu[3])
        return [(z * d2s) ** 2, -A ** 2, 4 * prod]
    if kind in ("PII_gue_f", "PII_gue_g"):
        c = p.get("c", 2 ** -0.5)
        k3 = 2 * math.sqrt(2) * c ** 3
        sgn = -1 if kind == "PII_gue_f" else 1
        return [d2s ** 2 / 4, -k3 * s * ds, k3 * z * ds ** 2, -sgn * ds ** 3]
    if kind in ("PII_lue_f", "PII_lue_g"):
        c = p.get("c", 1.0)
        beta = p.get("beta", 1.0)
        lo, hi = soft_edges(beta)
        m = 4 * c ** 3 * math.sqrt(1 + beta)
        if kind == "PII_lue_f":
            edge = p.get("L", lo)
            return [d2s ** 2, -m * s * ds, m * z * ds ** 2, 4 * c / edge ** (1 / 3) * ds ** 3]
        edge = p.get("R", hi)
        return [d2s ** 2, m * s * ds, -m * z * ds ** 2, 4 * c / edge ** (1 / 3) * ds ** 3]
    if kind == "PII_tw":
        return [d2s ** 2, 4 * ds ** 3, -4 * z * ds ** 2, 4 * ds * s]
    raise DomainError(f"unknown sigma form {kind!r}; expected one of {KINDS}")


def sigma_ode_residual(kind, s, ds, d2s, z, params=None):
    """Left minus right of the chosen sigma form.

    PIV: s''^2 = 4 (z s' - s)^2 - 4 (s'+nu0)(s'+nu1)(s'+nu2).
    PV:  (z s'')^2 = (s - z s' + 2 s'^2 + sum(nu) s')^2 - 4 prod(s'+nu_i).
    PII_gue_f/g: s''^2/4 = 2 sqrt2 c^3 (s s' - z s'^2) -/+ s'^3.
    PII_lue_f:  s''^2 = 4 c^3 sqrt(1+beta) (s s' - z s'^2) - 4c/L^(1/3) s'^3, g with signs flipped
    on the first two terms and R in place of L.
    PII_tw: s''^2 + 4 s' (s'^2 - z s' + s) = 0 for s = d/dz ln F2.
    """
    return sum(_terms(kind, s, ds, d2s, z, params))


def sigma_ode_relative(kind, s, ds, d2s, z, params=None):
    t = _terms(kind, s, ds, d2s, z, params)
    return sum(t) / max([1] + [abs(x) for x in t])


def soft_edges(beta):
    """(L, R) = ((sqrt(1+beta) -+ 1)^2); the rescaled Marchenko-Pastur edges."""
    r = math.sqrt(1 + beta)
    return (r - 1) ** 2, (r + 1) ** 2


@dataclass(frozen=True)
class ScalingSpec:
    ensemble: str
    c: float
    n: int = 4
    beta: float = 1.0

    def __post_init__(self):
        if self.ensemble not in (GUE, LUE):
            raise DomainError(f"ensemble must be {GUE!r} or {LUE!r}")
        if not self.c > 0:
            raise DomainError("c must be positive")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.ensemble == LUE and not self.beta > 0:
            raise DomainError("beta must be positive")

    @classmethod
    def gue(cls, n=4, c=2 ** -0.5):
        return cls(GUE, c, n)

    @classmethod
    def lue(cls, n=4, beta=1.0, c=1.0):
        return cls(LUE, c, n, beta)

    def with_n(self, n):
        return ScalingSpec(self.ensemble, self.c, n, self.beta)

    @property
    def L(self):
        return soft_edges(self.beta)[0]

    @property
    def R(self):
        return soft_edges(self.beta)[1]

    @property
    def alpha(self):
        return self.beta * self.n

    def weight(self):
        if self.ensemble == GUE:
            return WeightSpec.gaussian()
        return WeightSpec.laguerre(mp.mpf(self.beta) * self.n)

    @property
    def kappa(self):
        """Argument scale: s = -kappa x on the left edge."""
        if self.ensemble == GUE:
            return math.sqrt(2) * self.c
        return self.c * (1 + self.beta) ** (1 / 6)

    def amplitudes(self):
        if self.ensemble == GUE:
            k = self.kappa
            return k, k
        t = (1 + self.beta) ** (1 / 6)
        return self.L ** (1 / 3) * t, self.R ** (1 / 3) * t

    def left_s(self, x):
        return -self.kappa * x

    def right_s(self, y):
        return -self.kappa * y if self.ensemble == GUE else self.kappa * y

    def window(self, x, y, digits=40):
        """(a, b) for scaled coordinates (x, y) as mp numbers."""
        with mp.workdps(digits + 10):
            x, y, n, c = mp.mpf(x), mp.mpf(y), self.n, mp.mpf(self.c)
            if self.ensemble == GUE:
                e = mp.sqrt(2 * n)
                d = c / mp.mpf(n) ** (mp.mpf(1) / 6)
                return -e + d * x, e - d * y
            r = mp.sqrt(1 + mp.mpf(self.beta))
            L, R = (r - 1) ** 2, (r + 1) ** 2
            n13 = mp.cbrt(n)
            return L * n + c * L ** (mp.mpf(2) / 3) * n13 * x, R * n + c * R ** (mp.mpf(2) / 3) * n13 * y

    def htilde(self, H, digits=40):
        with mp.workdps(digits + 10):
            if self.ensemble == GUE:
                return mp.mpf(self.c) * H / mp.mpf(self.n) ** (mp.mpf(1) / 6)
            return H / mp.mpf(self.n) ** (mp.mpf(2) / 3)

    def sigma_params(self):
        if self.ensemble == GUE:
            return {"c": self.c}
        return {"c": self.c, "beta": self.beta, "L": self.L, "R": self.R}

    def limits_tw(self, x, y):
        """Limiting one-sided probabilities (F(x), G(y)) for the events lambda_min > a, lambda_max < b."""
        return fredholm_f2(self.left_s(x)), fredholm_f2(self.right_s(y))


def _profile(spec, side, pts):
    pts = np.asarray(pts, dtype=float)
    k = spec.kappa
    A, B = spec.amplitudes()
    if side == "f":
        s = spec.left_s(pts)
        amp, ds_dx, sign = A, -k, -1
    else:
        s = spec.right_s(pts)
        amp, ds_dx, sign = B, (-k if spec.ensemble == GUE else k), 1
    lo = min(-10.0, float(np.min(s)) - 1)
    hi = max(8.0, float(np.max(s)) + 1)
    q, dq, R, _ = hastings_mcleod(lo, hi).state(s)
    # value = sign*amp*R(s); d/ds R = -q^2, d/ds (-q^2) = -2 q q'
    val = sign * amp * R
    d1 = sign * amp * ds_dx * (-q * q)
    d2 = sign * amp * ds_dx ** 2 * (-2 * q * dq)
    return val, d1, d2


@dataclass
class LimitProfile:
    spec: ScalingSpec
    x_grid: list
    y_grid: list
    f: list
    g: list
    df: list
    dg: list
    d2f: list
    d2g: list
    Htilde: list
    residual_f: float = 0.0
    residual_g: float = 0.0
    worst: dict = field(default_factory=dict)

    def to_csv(self, side="f", sig=17):
        if side == "f":
            rows, head = zip(self.x_grid, self.f), "x,f"
        else:
            rows, head = zip(self.y_grid, self.g), "y,g"
        return head + "\n" + "".join(f"{a:.{sig}g},{b:.{sig}g}\n" for a, b in rows)


def solve_edge_profiles(spec, x_grid, y_grid, tol=1e-8):
    """f, g on the grids from the Tracy-Widom quantities, with their sigma-PII residuals."""
    for g in (x_grid, y_grid):
        if any(abs(v) > 8 for v in g):
            raise DomainError("profile grids must stay within |x|, |y| <= 8")
    f, df, d2f = _profile(spec, "f", x_grid)
    g, dg, d2g = _profile(spec, "g", y_grid)
    kind_f = "PII_gue_f" if spec.ensemble == GUE else "PII_lue_f"
    kind_g = "PII_gue_g" if spec.ensemble == GUE else "PII_lue_g"
    p = spec.sigma_params()
    rf = [sigma_ode_relative(kind_f, *v, p) for v in zip(f, df, d2f, x_grid)]
    rg = [sigma_ode_relative(kind_g, *v, p) for v in zip(g, dg, d2g, y_grid)]
    i, j = int(np.argmax(np.abs(rf))), int(np.argmax(np.abs(rg)))
    prof = LimitProfile(
        spec=spec, x_grid=[float(x) for x in x_grid], y_grid=[float(y) for y in y_grid],
        f=list(f), g=list(g), df=list(df), dg=list(dg), d2f=list(d2f), d2g=list(d2g),
        Htilde=[[fi + gj for gj in g] for fi in f],
        residual_f=float(abs(rf[i])), residual_g=float(abs(rg[j])),
        worst={"f": (float(x_grid[i]), float(rf[i])), "g": (float(y_grid[j]), float(rg[j]))})
    return prof


def limiting_pde_terms(spec, x, y, H, Hx, Hy, Hxx, Hxy, Hyy):
    """Terms of the limiting edge PDE (sum is zero on solutions)."""
    c = spec.c
    if spec.ensemble == GUE:
        m = 8 * math.sqrt(2) * c ** 3
        return [-m * H * Hy * Hx, m * y * Hy ** 2 * Hx, -4 * Hy ** 3 * Hx,
                Hx * (Hyy - Hxy) ** 2, Hy * m * x * Hx ** 2, 4 * Hy * Hx ** 3, Hy * (Hxy - Hxx) ** 2]
    b = spec.beta
    L, R = spec.L, spec.R
    b13, b23 = b ** (1 / 3), b ** (2 / 3)
    lead = 4 * c ** 3 * math.sqrt(1 + b) * b13 ** 4 * Hx * Hy
    return [lead * H, -lead * x * Hx, -lead * y * Hy,
            Hx * L ** (4 / 3) * Hxy ** 2, Hx * b13 ** 4 * Hyy ** 2,
            Hx * 2 * b23 * L ** (2 / 3) * Hxy * Hyy, Hx * 4 * c * b23 * L ** (1 / 3) * Hy ** 3,
            -Hy * R ** (4 / 3) * Hxy ** 2, -Hy * b13 ** 4 * Hxx ** 2,
            -Hy * 2 * b23 * R ** (2 / 3) * Hxy * Hxx, -Hy * 4 * c * b23 * R ** (1 / 3) * Hx ** 3]


def limiting_pde_residual(prof):
    """Max relative residual of the limiting PDE for Htilde = f(x) + g(y) on the grid."""
    worst, where = 0.0, None
    for i, x in enumerate(prof.x_grid):
        for j, y in enumerate(prof.y_grid):
            t = limiting_pde_terms(prof.spec, x, y, prof.f[i] + prof.g[j], prof.df[i], prof.dg[j],
                                   prof.d2f[i], 0.0, prof.d2g[j])
            r = abs(sum(t)) / max([1e-300] + [abs(v) for v in t])
            if max(abs(v) for v in t) < 1e-300:
                r = 0.0
            if r > worst:
                worst, where = r, (x, y)
    return worst, where


@dataclass
class IndependenceRow:
    n: int
    E_internal: float
    E_tw: float
    htilde_dev: float
    lower_bound_ok: bool
    digits: int

    def as_dict(self):
        return {"n": self.n, "E": self.E_internal, "E_tw": self.E_tw,
                "htilde_dev": self.htilde_dev, "lower_bound_ok": self.lower_bound_ok,
                "digits": self.digits}


@dataclass
class IndependenceReport:
    ensemble: str
    c: float
    beta: float
    x_grid: list
    y_grid: list
    rows: list

    def sequence(self, name="E_internal"):
        return [getattr(r, name) for r in self.rows]

    def strictly_decreasing(self, name="E_internal"):
        s = self.sequence(name)
        return all(b < a for a, b in zip(s, s[1:]))

    def as_dict(self):
        return {"ensemble": self.ensemble, "c": self.c, "beta": self.beta,
                "grid": {"x": self.x_grid, "y": self.y_grid},
                "rows": [r.as_dict() for r in self.rows],
                "E_decreasing": self.strictly_decreasing(),
                "htilde_decreasing": self.strictly_decreasing("htilde_dev")}


def _far(spec):
    w = spec.weight()
    return one_sided_far(w, "b"), one_sided_far(w, "a")


def independence_check(spec, n_list, x_grid, y_grid, digits=40):
    """Joint-versus-product deviation and Htilde -> f + g deviation for each n.

    F and G are the finite-n one-sided gap probabilities for the same events
    as the joint (lambda_min > a(x), lambda_max < b(y)), with the other
    endpoint at the edge of the support.
    """
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be increasing")
    rows = []
    prof = solve_edge_profiles(spec, x_grid, y_grid)
    for n in n_list:
        sp = spec.with_n(n)
        w = sp.weight()
        lo, hi = _far(sp)
        ab = [[sp.window(x, y, digits) for y in y_grid] for x in x_grid]
        for row in ab:
            for a, b in row:
                if sp.ensemble == LUE and not a > 0:
                    raise DomainError(f"scaled window leaves the support at n = {n}: a = {a}")
        with mp.workdps(digits + 10):
            Fn = [gap_point(w, n, ab[i][0][0], hi, digits).prob for i in range(len(x_grid))]
            Gn = [gap_point(w, n, lo, ab[0][j][1], digits).prob for j in range(len(y_grid))]
            e_int = e_tw = dev = mp.zero
            lb_ok = True
            for i, x in enumerate(x_grid):
                for j, y in enumerate(y_grid):
                    a, b = ab[i][j]
                    pt = gap_point(w, n, a, b, digits)
                    P = pt.prob
                    e_int = max(e_int, abs(P - Fn[i] * Gn[j]))
                    Ft, Gt = sp.limits_tw(x, y)
                    e_tw = max(e_tw, abs(P - mp.mpf(Ft) * Gt))
                    dev = max(dev, abs(sp.htilde(pt.H, digits) - prof.f[i] - prof.g[j]))
                    lb_ok = lb_ok and P <= min(Fn[i], Gn[j]) * (1 + mp.mpf(10) ** (-digits // 2))
        rows.append(IndependenceRow(n, float(e_int), float(e_tw), float(dev), lb_ok, digits))
    return IndependenceReport(spec.ensemble, spec.c, spec.beta, [float(x) for x in x_grid],
                              [float(y) for y in y_grid], rows)
