"""Ladder-operator auxiliary quantities and their compatibility identities.

For the Gaussian weight

    A_n(z) = R_{n,b}/(z-b) + R_{n,a}/(z-a) + 2,
    B_n(z) = r_{n,b}/(z-b) + r_{n,a}/(z-a),

and for the Laguerre weight an extra pole at z = 0 carries R_n, r_n. The
endpoint quantities come straight from cached endpoint values of the
polynomials; an infinite endpoint (or the Laguerre endpoint a = 0, where
the weight vanishes) contributes exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp

from . import numerics
from .errors import DomainError, EnsembleMismatchError
from .numerics import is_inf, mpf
from .weights import weight_at


@dataclass(frozen=True)
class GueLadder:
    n: int
    R_na: object
    R_nb: object
    r_na: object
    r_nb: object


@dataclass(frozen=True)
class LueLadder:
    n: int
    R_n: object
    r_n: object
    R_na: object
    R_nb: object
    r_na: object
    r_nb: object


@dataclass
class CompatReport:
    """Identity residuals, each already divided by max(1, largest term)."""

    n: int
    residuals: dict
    tolerance: object
    raw: dict = field(default_factory=dict)
    label: str = ""

    @property
    def passed(self):
        return all(abs(v) < self.tolerance for v in self.residuals.values())

    @property
    def pass_(self):
        return self.passed

    def failures(self):
        return {k: v for k, v in self.residuals.items() if not abs(v) < self.tolerance}

    def worst(self):
        return max((abs(v) for v in self.residuals.values()), default=mp.zero)

    def as_dict(self, digits=30):
        fmt = lambda x: numerics.nstr(x, digits)
        return {
            "label": self.label,
            "n": self.n,
            "tolerance": fmt(self.tolerance),
            "residuals": {k: fmt(v) for k, v in self.residuals.items()},
            "pass": self.passed,
        }


def _mul(x, q):
    """x*q with 0*inf = 0; endpoint quantities vanish at infinite endpoints."""
    return mp.zero if q == 0 else x * q


def _div(q, x):
    return mp.zero if q == 0 else q / x


def _edge(sys, side, k, j):
    """w(e) P_k(e) P_j(e) at endpoint e = a or b (zero if the weight vanishes there)."""
    e = sys.a if side == "a" else sys.b
    if is_inf(e):
        return mp.zero
    vals = sys.Pa if side == "a" else sys.Pb
    wt = weight_at(sys.weight, e)
    if wt == 0:
        return mp.zero
    return wt * vals[k] * vals[j]


def _endpoint_quantities(sys, n):
    """(R_na, R_nb, r_na, r_nb) for 0 <= n <= n_max+1."""
    if not 0 <= n <= sys.n_max + 1:
        raise DomainError(f"n = {n} outside 0..{sys.n_max + 1}")
    with mp.workdps(sys.digits_used):
        R_na = _edge(sys, "a", n, n) / sys.h[n]
        R_nb = -_edge(sys, "b", n, n) / sys.h[n]
        if n == 0:
            r_na = r_nb = mp.zero
        else:
            r_na = _edge(sys, "a", n, n - 1) / sys.h[n - 1]
            r_nb = -_edge(sys, "b", n, n - 1) / sys.h[n - 1]
    return R_na, R_nb, r_na, r_nb


def gue_ladder(sys, n):
    if not sys.weight.is_gaussian:
        raise EnsembleMismatchError("gue_ladder needs an OPSystem on the Gaussian weight")
    return GueLadder(n, *_endpoint_quantities(sys, n))


def lue_ladder(sys, n):
    """Laguerre quantities; R_n and r_n come from the sum rules.

    R_n + R_na + R_nb = 1 and r_n + r_na + r_nb + n = 0.
    """
    if not sys.weight.is_laguerre:
        raise EnsembleMismatchError("lue_ladder needs an OPSystem on the Laguerre weight")
    R_na, R_nb, r_na, r_nb = _endpoint_quantities(sys, n)
    with mp.workdps(sys.digits_used):
        R_n = 1 - R_na - R_nb
        r_n = -n - r_na - r_nb
    return LueLadder(n, R_n, r_n, R_na, R_nb, r_na, r_nb)


def lue_integrals(sys, n, nodes=None):
    """R_n and r_n from their defining integrals (quadrature oracle).

    R_n = alpha/h_n int P_n^2 y^{alpha-1} e^{-y} dy,
    r_n = alpha/h_{n-1} int P_n P_{n-1} y^{alpha-1} e^{-y} dy.
    """
    if not sys.weight.is_laguerre:
        raise EnsembleMismatchError("lue_integrals needs a Laguerre OPSystem")
    from .orthopoly import _finite_cutoffs, eval_monic

    digits = sys.digits
    nodes = nodes or max(256, 8 * sys.n_max)
    a, b = _finite_cutoffs(sys.weight, sys.window, sys.n_max, digits)
    with mp.workdps(digits + 10):
        alpha = sys.weight.alpha_mp()
        # split at a + 1 (when inside) to resolve y^{alpha-1} near small a
        cuts = [a, b] if b - a < 2 else [a, a + 1, b]
        total_R = mp.zero
        total_r = mp.zero
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            xs, ws = numerics.gauss_legendre_on(lo, hi, nodes, digits)
            for x, wgt in zip(xs, ws):
                base = wgt * mp.exp((alpha - 1) * mp.log(x) - x)
                pn = eval_monic(sys, n, x)
                total_R += base * pn * pn
                if n > 0:
                    total_r += base * pn * eval_monic(sys, n - 1, x)
        R_n = alpha * total_R / sys.h[n]
        r_n = alpha * total_r / sys.h[n - 1] if n > 0 else mp.zero
    return R_n, r_n


def probe_points(sys):
    """Eight real probe points away from the poles {a, b} (and 0 for Laguerre)."""
    with mp.workdps(sys.digits_used):
        ends = [mpf(e) for e in (sys.a, sys.b) if not is_inf(e)]
        if len(ends) == 2:
            a, b = ends
        elif len(ends) == 1:
            a, b = (ends[0] - 2, ends[0]) if is_inf(sys.a) else (ends[0], ends[0] + 2)
        else:
            a, b = mp.mpf(-1), mp.mpf(1)
        mid, width = (a + b) / 2, b - a
        big = max(abs(a), abs(b)) + 3
        pts = [a - 1, b + 1, mid + width / 4, mid - width / 4 + width / 17,
               big, -big, a - mp.mpf(5) / 2, b + mp.mpf(5) / 2]
        poles = ends + ([mp.zero] if sys.weight.is_laguerre else [])
        out = []
        for z in pts:
            while any(abs(z - p) < mp.mpf("0.01") for p in poles):
                z += mp.mpf("0.37")
            out.append(z)
    return out


def _identity(terms):
    """Residual of sum(terms) = 0 scaled by max(1, largest |term|), plus raw sum."""
    raw = mp.fsum(terms)
    scale = max([mp.one] + [abs(t) for t in terms])
    return raw / scale, raw


class _Gue:
    """Helper exposing A_n, B_n and friends for the Gaussian weight."""

    def __init__(self, sys):
        self.sys = sys
        self.cache = {}

    def q(self, n):
        if n not in self.cache:
            self.cache[n] = _endpoint_quantities(self.sys, n)
        return self.cache[n]

    def _poles(self, z, qa, qb):
        sys = self.sys
        out = mp.zero
        if not is_inf(sys.a):
            out += _div(qa, z - mpf(sys.a))
        if not is_inf(sys.b):
            out += _div(qb, z - mpf(sys.b))
        return out

    def A(self, n, z):
        R_na, R_nb, _, _ = self.q(n)
        return self._poles(z, R_na, R_nb) + 2

    def B(self, n, z):
        _, _, r_na, r_nb = self.q(n)
        return self._poles(z, r_na, r_nb)


class _Lue(_Gue):
    def full(self, n):
        R_na, R_nb, r_na, r_nb = self.q(n)
        return 1 - R_na - R_nb, -n - r_na - r_nb, R_na, R_nb, r_na, r_nb

    def A(self, n, z):
        R_n, _, R_na, R_nb, _, _ = self.full(n)
        return R_n / z + self._poles(z, R_na, R_nb)

    def B(self, n, z):
        _, r_n, _, _, r_na, r_nb = self.full(n)
        return r_n / z + self._poles(z, r_na, r_nb)


def _pointwise_conditions(helper, sys, n, out):
    """(S1), (S2) and (S2') at every probe point."""
    w = sys.weight
    al = sys.alpha
    be = sys.beta
    beta_next = sys.h[n + 1] / sys.h[n]
    for i, z in enumerate(probe_points(sys)):
        vp = w.v_prime(z)
        An, Bn = helper.A(n, z), helper.B(n, z)
        Bn1, An1 = helper.B(n + 1, z), helper.A(n + 1, z)
        Anm = helper.A(n - 1, z)
        out[f"S1@z{i}"] = _identity([Bn1, Bn, -(z - al[n]) * An, vp])
        out[f"S2@z{i}"] = _identity([mp.one, (z - al[n]) * Bn1, -(z - al[n]) * Bn,
                                     -beta_next * An1, be[n] * Anm])
        sumA = mp.fsum(helper.A(j, z) for j in range(n))
        out[f"S2'@z{i}"] = _identity([Bn * Bn, vp * Bn, sumA, -be[n] * An * Anm])


def _report(n, identities, digits, label):
    with mp.workdps(digits + 10):
        tol = mp.mpf(10) ** (-mp.mpf(digits) / 3)
    return CompatReport(n=n, residuals={k: v[0] for k, v in identities.items()},
                        tolerance=tol, raw={k: v[1] for k, v in identities.items()}, label=label)


def verify_compat_gue(sys, n, pointwise=True):
    """Residuals of the GUE difference identities at level n (1 <= n <= n_max - 1)."""
    if not sys.weight.is_gaussian:
        raise EnsembleMismatchError("verify_compat_gue needs a Gaussian OPSystem")
    if not 1 <= n <= sys.n_max - 1:
        raise DomainError(f"need 1 <= n <= n_max - 1 = {sys.n_max - 1}, got {n}")
    g = _Gue(sys)
    out = {}
    with mp.workdps(sys.digits_used):
        a_inf, b_inf = is_inf(sys.a), is_inf(sys.b)
        a = mp.zero if a_inf else mpf(sys.a)
        b = mp.zero if b_inf else mpf(sys.b)
        al, be = sys.alpha, sys.beta
        R_na, R_nb, r_na, r_nb = g.q(n)
        Rm_a, Rm_b, _, _ = g.q(n - 1)
        _, _, r1_a, r1_b = g.q(n + 1)
        out["alpha_from_R"] = _identity([R_na, R_nb, -2 * al[n]])
        out["r_b_step"] = _identity([r1_b, r_nb, -_mul(b - al[n], R_nb)])
        out["r_a_step"] = _identity([r1_a, r_na, -_mul(a - al[n], R_na)])
        out["beta_from_r"] = _identity([be[n], -mp.mpf(n) / 2, -r_na / 2, -r_nb / 2])
        out["r_a_square"] = _identity([r_na * r_na, -be[n] * R_na * Rm_a])
        out["r_b_square"] = _identity([r_nb * r_nb, -be[n] * R_nb * Rm_b])
        sum_Ra = mp.fsum(g.q(j)[0] for j in range(n))
        sum_Rb = mp.fsum(g.q(j)[1] for j in range(n))
        cross = mp.zero if (a_inf or b_inf) else r_nb * r_na / (b - a)
        crossR = mp.zero if (a_inf or b_inf) else (R_nb * Rm_a + Rm_b * R_na) / (b - a)
        out["b_weighted_sum"] = _identity([2 * cross, 2 * _mul(b, r_nb), sum_Rb,
                                   -be[n] * crossR, -2 * be[n] * (Rm_b + R_nb)])
        out["a_weighted_sum"] = _identity([-2 * cross, 2 * _mul(a, r_na), sum_Ra,
                                   be[n] * crossR, -2 * be[n] * (Rm_a + R_na)])
        lhs = [2 * _mul(b, r_nb), 2 * _mul(a, r_na), sum_Ra, sum_Rb]
        out["total_weighted_sum"] = _identity(lhs + [-2 * be[n] * (Rm_b + R_nb + Rm_a + R_na)])
        elim = [-2 * be[n] * (R_na + R_nb)]
        if R_na != 0:
            elim.append(-2 * r_na * r_na / R_na)
        if R_nb != 0:
            elim.append(-2 * r_nb * r_nb / R_nb)
        out["reduced_weighted_sum"] = _identity(lhs + elim)
        if pointwise:
            _pointwise_conditions(g, sys, n, out)
    return _report(n, out, sys.digits, "gue-compat")


def lue_weighted_sum_display(sys, n, b_sum_start=0):
    """Residual of the intermediate weighted-sum display before its simplified form.

    ``b_sum_start`` selects where the b-sum begins. The identity holds with
    j = 0; starting at j = 1 is kept as a negative control.
    """
    g = _Lue(sys)
    with mp.workdps(sys.digits_used):
        a, b = mpf(sys.a), sys.b
        R_n, r_n, R_na, R_nb, r_na, r_nb = g.full(n)
        R_m, _, Rm_a, Rm_b, _, _ = g.full(n - 1)
        be = sys.beta[n]
        sa = mp.fsum(g.q(j)[0] for j in range(n))
        sb = mp.fsum(g.q(j)[1] for j in range(b_sum_start, n))
        alpha = sys.weight.alpha_mp()
        terms = [_mul(a, sa), _mul(b, sb),
                 -be * ((Rm_a + Rm_b) * R_n + (R_na + R_nb) * R_m + Rm_a * R_nb + Rm_b * R_na),
                 2 * r_n * (r_na + r_nb), -(alpha - a) * r_na, -_mul(alpha - b, r_nb) if not is_inf(b) else mp.zero,
                 2 * r_na * r_nb]
        return _identity(terms)


def verify_compat_lue(sys, n, pointwise=True):
    """Residuals of the LUE difference identities at level n (1 <= n <= n_max - 1)."""
    if not sys.weight.is_laguerre:
        raise EnsembleMismatchError("verify_compat_lue needs a Laguerre OPSystem")
    if not 1 <= n <= sys.n_max - 1:
        raise DomainError(f"need 1 <= n <= n_max - 1 = {sys.n_max - 1}, got {n}")
    g = _Lue(sys)
    out = {}
    with mp.workdps(sys.digits_used):
        b_inf = is_inf(sys.b)
        a = mpf(sys.a)
        b = mp.zero if b_inf else mpf(sys.b)
        alpha = sys.weight.alpha_mp()
        al, be = sys.alpha, sys.beta
        beta_next = sys.h[n + 1] / sys.h[n]
        R_n, r_n, R_na, R_nb, r_na, r_nb = g.full(n)
        R_m, r_m, Rm_a, Rm_b, rm_a, rm_b = g.full(n - 1)
        R_p, r_p, Rp_a, Rp_b, rp_a, rp_b = g.full(n + 1)
        out["R_sum_rule"] = _identity([R_n, R_na, R_nb, -mp.one])
        out["r_step"] = _identity([r_n, r_p, -alpha, al[n] * R_n])
        out["r_a_step"] = _identity([r_na, rp_a, -_mul(a - al[n], R_na)])
        out["r_b_step"] = _identity([r_nb, rp_b, -_mul(b - al[n], R_nb)])
        out["r_square"] = _identity([r_n * r_n, -alpha * r_n, -be[n] * R_n * R_m])
        out["r_a_square"] = _identity([r_na * r_na, -be[n] * Rm_a * R_na])
        out["r_b_square"] = _identity([r_nb * r_nb, -be[n] * Rm_b * R_nb])
        sum_R = mp.fsum(g.full(j)[0] for j in range(n))
        sum_Ra = mp.fsum(g.q(j)[0] for j in range(n))
        sum_Rb = mp.fsum(g.q(j)[1] for j in range(n))
        ra_over_a = _div(r_na, a)
        rb_over_b = _div(r_nb, b)
        Xa = _div(Rm_a * R_n + R_m * R_na, a)
        Xb = _div(Rm_b * R_n + R_m * R_nb, b)
        cross_r = mp.zero if b_inf else r_na * r_nb / (a - b)
        cross_R = mp.zero if b_inf else (Rm_a * R_nb + Rm_b * R_na) / (a - b)
        out["sum_R"] = _identity([-2 * r_n * ra_over_a, -2 * r_n * rb_over_b, r_n,
                                   alpha * ra_over_a, alpha * rb_over_b, sum_R,
                                   be[n] * Xa, be[n] * Xb])
        out["sum_R_a"] = _identity([2 * r_n * ra_over_a, 2 * cross_r, r_na, -alpha * ra_over_a,
                                   sum_Ra, -be[n] * Xa, -be[n] * cross_R])
        out["sum_R_b"] = _identity([2 * r_n * rb_over_b, -2 * cross_r, r_nb, -alpha * rb_over_b,
                                   sum_Rb, -be[n] * Xb, be[n] * cross_R])
        out["r_telescoping"] = _identity([mp.one, r_p, -r_n, rp_a, -r_na, rp_b, -r_nb])
        out["beta_step"] = _identity([al[n] * (r_n - r_p), -beta_next * R_p, be[n] * R_m])
        out["beta_step_a"] = _identity([_mul(a - al[n], rp_a - r_na), -beta_next * Rp_a, be[n] * Rm_a])
        out["beta_step_b"] = _identity([_mul(b - al[n], rp_b - r_nb), -beta_next * Rp_b, be[n] * Rm_b])
        out["r_sum_rule"] = _identity([r_n, r_na, r_nb, mp.mpf(n)])
        out["alpha_from_endpoints"] = _identity([al[n], -alpha, -_mul(a, R_na), -_mul(b, R_nb), -(2 * n + 1)])
        out["weighted_sum"] = lue_weighted_sum_display(sys, n, b_sum_start=0)
        rhs = [-be[n] * (R_na + R_nb), -(2 * n + alpha - a) * r_na,
               -_mul(2 * n + alpha - b, r_nb) if not b_inf else mp.zero, -2 * r_na * r_nb]
        if R_na != 0:
            rhs.append(-r_na * r_na / R_na * (1 - R_nb))
        if R_nb != 0:
            rhs.append(-r_nb * r_nb / R_nb * (1 - R_na))
        out["reduced_weighted_sum"] = _identity([_mul(a, sum_Ra), _mul(b, sum_Rb)] + rhs)
        if pointwise:
            _pointwise_conditions(g, sys, n, out)
    return _report(n, out, sys.digits, "lue-compat")
