"""Finite differences of H_n, master-PDE residuals and Toda checks.

First partials of H_n are exact ladder quantities (2 r_{n,a}, 2 r_{n,b} for
the Gaussian weight; r_{n,a}, r_{n,b} for Laguerre). Second partials come
from central differences of those exact first partials on freshly built
OP systems, optionally Richardson-extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp

from . import numerics
from .errors import ConvergenceError, DomainError, EnsembleMismatchError, InvalidPointError
from .gap import H_value, system_for
from .ladder import CompatReport, _endpoint_quantities
from .numerics import is_inf, mpf
from .weights import Window

CENTRAL2 = "central2"
RICHARDSON4 = "richardson4"



def one_sided_far(w, variable):
    """Fixed endpoint for a one-sided problem: the support edge, infinite where unbounded."""
    if variable == "b":
        return -mp.inf if w.is_gaussian else mp.zero
    return mp.inf


def default_step(digits, win):
    with mp.workdps(digits + 10):
        ends = [abs(mpf(e)) for e in (win.a, win.b) if not is_inf(e)]
        return mp.mpf(10) ** (-mp.mpf(digits) / 5) * max([mp.one] + ends)


@dataclass(frozen=True)
class FDScheme:
    step: object = None
    order: str = RICHARDSON4

    def __post_init__(self):
        if self.order not in (CENTRAL2, RICHARDSON4):
            raise DomainError(f"unknown FD order {self.order!r}")
        if self.step is not None and not mp.mpf(self.step) > 0:
            raise DomainError("FD step must be positive")

    def resolve(self, digits, win):
        h = default_step(digits, win) if self.step is None else mp.mpf(self.step)
        if win.finite and not h < (mpf(win.b) - mpf(win.a)) / 10:
            raise DomainError(f"FD step {mp.nstr(h, 3)} too large for window ({win.a}, {win.b})")
        return h

    def tolerance(self, digits, h):
        """Expected FD accuracy: truncation or the 10^-(2 digits/5) floor."""
        with mp.workdps(digits + 10):
            floor = mp.mpf(10) ** (-2 * mp.mpf(digits) / 5)
            trunc = 100 * h ** (2 if self.order == CENTRAL2 else 4)
            return max(floor, trunc)


def _fd(func, h, order, digits):
    """d/dt func(t) at t = 0 for a vector-valued func."""
    def central(step):
        up, dn = func(step), func(-step)
        return [(u - d) / (2 * step) for u, d in zip(up, dn)]

    d1 = central(h)
    if order == CENTRAL2:
        return d1
    d2 = central(h / 2)
    tol = mp.mpf(10) ** (-mp.mpf(digits) / 10)
    for x, y in zip(d1, d2):
        if abs(x - y) > tol * max(1, abs(y)):
            raise ConvergenceError(
                f"Richardson halves disagree by {mp.nstr(abs(x - y), 3)}; FD step too large")
    return [(4 * y - x) / 3 for x, y in zip(d1, d2)]


def _ensure_ensemble(w, gaussian):
    if gaussian and not w.is_gaussian:
        raise EnsembleMismatchError("expected the Gaussian weight")
    if not gaussian and not w.is_laguerre:
        raise EnsembleMismatchError("expected the Laguerre weight")


def exact_first_partials(sys, n):
    """(dH/da, dH/db) from the ladder quantities."""
    _, _, r_na, r_nb = _endpoint_quantities(sys, n)
    if sys.weight.is_gaussian:
        with mp.workdps(sys.digits_used):
            return 2 * r_na, 2 * r_nb
    return r_na, r_nb


@dataclass
class HDerivs:
    H: object
    Ha: object
    Hb: object
    Haa: object
    Hab: object
    Hbb: object
    step: object
    sys: object


def _partials_at(w, n, a, b, digits):
    sys = system_for(w, Window(a, b), n, digits)
    return list(exact_first_partials(sys, n))


def fd_second_partials(w, n, win, scheme=None, digits=60):
    """(Haa, Hab, Hbb) by differentiating the exact first partials; Hab is symmetrized."""
    d = h_derivatives(w, n, win, scheme, digits)
    return d.Haa, d.Hab, d.Hbb


def h_derivatives(w, n, win, scheme=None, digits=60):
    scheme = scheme or FDScheme()
    if not win.finite:
        raise DomainError("second partials need a finite window")
    h = scheme.resolve(digits, win)
    with mp.workdps(digits + numerics.required_digits(n + 2) + 10):
        a, b = mpf(win.a), mpf(win.b)
        if w.is_laguerre and not a - h > 0:
            raise DomainError("a - step must stay inside the Laguerre support")
        sys = system_for(w, Window(a, b), n, digits)
        Ha, Hb = exact_first_partials(sys, n)
        H = H_value(sys, n).H
        da = _fd(lambda t: _partials_at(w, n, a + t, b, digits), h, scheme.order, digits)
        db = _fd(lambda t: _partials_at(w, n, a, b + t, digits), h, scheme.order, digits)
        Haa, Hba = da
        Hab, Hbb = db
        return HDerivs(H, Ha, Hb, Haa, (Hab + Hba) / 2, Hbb, h, sys)


@dataclass(frozen=True)
class GuePdeTerms:
    Ha: object
    Hb: object
    Haa: object
    Hab: object
    Hbb: object
    quartic_term: object


@dataclass(frozen=True)
class LuePdeTerms:
    Ha: object
    Hb: object
    Haa: object
    Hab: object
    Hbb: object
    l: object
    k: object
    Delta1: object
    Delta2: object


@dataclass
class PDEResidualReport:
    n: int
    point: Window
    residual_sqrt_form: object
    residual_cleared_form: object
    scale: object
    fd_step: object
    scale_cleared: object = None
    raw_sqrt: object = None
    raw_cleared: object = None
    tolerance: object = None
    checks: dict = field(default_factory=dict)
    terms: object = None
    equations: tuple = ()
    digits: int = 0

    @property
    def passed(self):
        ok = abs(self.residual_sqrt_form) < self.tolerance and \
            abs(self.residual_cleared_form) < self.tolerance
        return ok and all(abs(v) < self.tolerance for v in self.checks.values())

    def as_dict(self, digits=30):
        fmt = lambda x: numerics.nstr(x, digits)
        return {
            "equations": list(self.equations),
            "n": self.n,
            "a": fmt(self.point.a),
            "b": fmt(self.point.b),
            "digits": self.digits,
            "fd_step": fmt(self.fd_step),
            "residuals": {"sqrt_form": fmt(self.residual_sqrt_form),
                          "cleared_form": fmt(self.residual_cleared_form),
                          **{k: fmt(v) for k, v in self.checks.items()}},
            "scale": fmt(self.scale),
            "tolerance": fmt(self.tolerance),
            "pass": self.passed,
        }


def _sign(x):
    return 1 if x > 0 else -1


def _sqrt_checked(x, name):
    if x < 0:
        raise InvalidPointError(f"{name} = {mp.nstr(x, 5)} < 0; FD error dominates")
    return mp.sqrt(x)


def pde_residual_gue(w, n, win, scheme=None, digits=80, tol="1e-10"):
    """Square-root and cleared forms of the GUE master PDE at (a, b).

    2 b Hb + 2 a Ha - 2 H = sa sqrt(Da) + sb sqrt(Db), with
    Da = (Haa + Hab)^2 + 4 Ha^2 Q, Db likewise, Q = 2n + Ha + Hb = 4 beta_n,
    and sa, sb the signs of R_na, R_nb.
    """
    _ensure_ensemble(w, True)
    d = h_derivatives(w, n, win, scheme, digits)
    H, Ha, Hb, Haa, Hab, Hbb, h, sys = d.H, d.Ha, d.Hb, d.Haa, d.Hab, d.Hbb, d.step, d.sys
    with mp.workdps(sys.digits_used):
        a, b = mpf(win.a), mpf(win.b)
        R_na, R_nb, _, _ = _endpoint_quantities(sys, n)
        Q = 2 * n + Ha + Hb
        if not Q > 0:
            raise InvalidPointError("2n + Ha + Hb must be positive")
        Xa, Xb = Haa + Hab, Hbb + Hab
        Da = Xa * Xa + 4 * Ha * Ha * Q
        Db = Xb * Xb + 4 * Hb * Hb * Q
        ua, ub = _sqrt_checked(Da, "Da"), _sqrt_checked(Db, "Db")
        sa, sb = _sign(R_na), _sign(R_nb)
        lhs = 2 * b * Hb + 2 * a * Ha - 2 * H
        raw = lhs - (sa * ua + sb * ub)
        scale = max(mp.one, abs(lhs), ua, ub)
        inner = lhs * lhs - Da - Db
        raw_c = inner * inner - 4 * Da * Db
        scale_c = max(mp.one, lhs ** 4, (Da + Db) ** 2, 4 * Da * Db)
        Ra_rec = (-Xa + sa * ua) / (2 * Q)
        Rb_rec = (-Xb + sb * ub) / (2 * Q)
        checks = {
            "quartic_vs_4beta": (Q - 4 * sys.beta[n]) / max(1, abs(Q)),
            "R_na_reconstructed": (Ra_rec - R_na) / max(1, abs(R_na)),
            "R_nb_reconstructed": (Rb_rec - R_nb) / max(1, abs(R_nb)),
        }
        terms = GuePdeTerms(Ha, Hb, Haa, Hab, Hbb, Q)
        return PDEResidualReport(
            n=n, point=win, residual_sqrt_form=raw / scale, residual_cleared_form=raw_c / scale_c,
            scale=scale, fd_step=h, scale_cleared=scale_c, raw_sqrt=raw, raw_cleared=raw_c,
            tolerance=mp.mpf(tol), checks=checks, terms=terms,
            equations=("gue_sqrt_form", "gue_cleared_form"), digits=digits)


def lue_pde_terms(H, Ha, Hb, Haa, Hab, Hbb, n, alpha, a, b):
    l = 2 * (n * n + alpha * n - H + a * Ha + b * Hb)
    Xa = a * Haa + b * Hab
    Xb = b * Hbb + a * Hab
    k = l * (H + (2 * n + alpha - a) * Ha + (2 * n + alpha - b) * Hb + 2 * Ha * Hb) + Xa * Xb
    D1 = Xa * Xa + 2 * l * Ha * Ha
    D2 = Xb * Xb + 2 * l * Hb * Hb
    return LuePdeTerms(Ha, Hb, Haa, Hab, Hbb, l, k, D1, D2), Xa, Xb


def lue_printed_polynomial(t):
    """The octic polynomial form as typeset, kept for comparison; it carries a stray sqrt."""
    l, k, D1, D2 = t.l, t.k, t.Delta1, t.Delta2
    P = D1 * D2
    inner = (k * k - l * l * (D1 + D2) - P) ** 2 - 4 * l * l * P * (l * l + mp.sqrt(P) + D1 + D2)
    return (inner ** 2 - 16 * l ** 6 * P * P * (D1 + D2)) ** 2 - 1024 * l ** 12 * P ** 5


def pde_residual_lue(w, n, win, scheme=None, digits=100, tol="1e-8"):
    """Square-root and cleared forms of the LUE master PDE at (a, b).

    With R_na = (-Xa + sa sqrt(D1))/l and R_nb = (-Xb + sb sqrt(D2))/l the
    equation reads k = -l (sa sqrt(D1) + sb sqrt(D2)) + sa sb sqrt(D1 D2).
    Squaring twice gives
    (k^2 + D1 D2 - l^2 (D1 + D2))^2 = 4 D1 D2 (k + l^2)^2.
    """
    _ensure_ensemble(w, False)
    d = h_derivatives(w, n, win, scheme, digits)
    H, Ha, Hb, Haa, Hab, Hbb, h, sys = d.H, d.Ha, d.Hb, d.Haa, d.Hab, d.Hbb, d.step, d.sys
    with mp.workdps(sys.digits_used):
        a, b = mpf(win.a), mpf(win.b)
        alpha = w.alpha_mp()
        R_na, R_nb, _, _ = _endpoint_quantities(sys, n)
        t, Xa, Xb = lue_pde_terms(H, Ha, Hb, Haa, Hab, Hbb, n, alpha, a, b)
        if not t.l > 0:
            raise InvalidPointError("l = 2 beta_n must be positive")
        u1, u2 = _sqrt_checked(t.Delta1, "Delta1"), _sqrt_checked(t.Delta2, "Delta2")
        sa, sb = _sign(R_na), _sign(R_nb)
        rhs = -t.l * (sa * u1 + sb * u2) + sa * sb * u1 * u2
        raw = t.k - rhs
        scale = max(mp.one, abs(t.k), t.l * u1, t.l * u2, u1 * u2)
        P = t.Delta1 * t.Delta2
        left = t.k ** 2 + P - t.l ** 2 * (t.Delta1 + t.Delta2)
        right = 4 * P * (t.k + t.l ** 2) ** 2
        raw_c = left * left - right
        scale_c = max(mp.one, t.k ** 4, P * P, (t.l ** 2 * (t.Delta1 + t.Delta2)) ** 2, abs(right))
        checks = {
            "l_vs_2beta": (t.l - 2 * sys.beta[n]) / max(1, abs(t.l)),
            "R_na_reconstructed": ((-Xa + sa * u1) / t.l - R_na) / max(1, abs(R_na)),
            "R_nb_reconstructed": ((-Xb + sb * u2) / t.l - R_nb) / max(1, abs(R_nb)),
        }
        return PDEResidualReport(
            n=n, point=win, residual_sqrt_form=raw / scale, residual_cleared_form=raw_c / scale_c,
            scale=scale, fd_step=h, scale_cleared=scale_c, raw_sqrt=raw, raw_cleared=raw_c,
            tolerance=mp.mpf(tol), checks=checks, terms=t,
            equations=("lue_sqrt_form", "lue_cleared_form"), digits=digits)


def _coeffs(w, n, a, b, digits):
    sys = system_for(w, Window(a, b), n, digits)
    beta_next = sys.h[n + 1] / sys.h[n]
    return [sys.alpha[n - 1], sys.alpha[n], sys.beta[n], beta_next]


def toda_check(w, n, win, scheme=None, digits=60):
    """Two-variable Toda equations for alpha_n, beta_n along the window flow.

    Gaussian, flow (a + t, b + t):
        D beta_n / beta_n = 2 (alpha_{n-1} - alpha_n),  D alpha_n = 2 (beta_n - beta_{n+1}) + 1.
    The +1 follows from D p1(n) = 2 beta_n - n; on the whole line alpha_n = 0,
    beta_n = n/2 and the right side vanishes only with this sign.
    Laguerre, flow (a e^t, b e^t):
        D beta_n = beta_n (alpha_{n-1} - alpha_n + 2),  D alpha_n - alpha_n = beta_n - beta_{n+1}.
    """
    scheme = scheme or FDScheme()
    if n < 1:
        raise DomainError("toda_check needs n >= 1")
    if not win.finite:
        raise DomainError("toda_check needs a finite window")
    h = scheme.resolve(digits, win)
    with mp.workdps(digits + numerics.required_digits(n + 2) + 10):
        a, b = mpf(win.a), mpf(win.b)
        am1, an, bn, bn1 = _coeffs(w, n, a, b, digits)
        out, raw = {}, {}
        if w.is_gaussian:
            d = _fd(lambda t: _coeffs(w, n, a + t, b + t, digits), h, scheme.order, digits)
            dbeta, dalpha = d[2], d[1]
            out["toda_beta"] = _rel([dbeta / bn, -2 * am1, 2 * an])
            out["toda_alpha"] = _rel([dalpha, -2 * bn, 2 * bn1, -mp.one])
            # same equation with the constant's sign flipped; must fail
            raw["toda_alpha_flipped_constant"] = _rel([dalpha, -2 * bn, 2 * bn1, mp.one])
        else:
            # the exponential flow step is relative, so scale it down by max(|a|,|b|)
            s = h / max(1, abs(a), abs(b))
            d = _fd(lambda t: _coeffs(w, n, a * mp.exp(t), b * mp.exp(t), digits), s, scheme.order,
                    digits)
            dbeta, dalpha = d[2], d[1]
            out["toda_beta"] = _rel([dbeta, -bn * (am1 - an + 2)])
            out["toda_alpha"] = _rel([dalpha, -an, -bn, bn1])
        return CompatReport(n=n, residuals=out, tolerance=scheme.tolerance(digits, h), raw=raw,
                            label=f"toda-{w.kind}")


def _rel(terms):
    return mp.fsum(terms) / max([mp.one] + [abs(t) for t in terms])


def _H_and_logh(w, n, a, b, digits):
    sys = system_for(w, Window(a, b), n, digits)
    return [H_value(sys, n).H, mp.log(sys.h[n])]


def gradient_check(w, n, win, scheme=None, digits=60):
    """FD of H (from p1) and of ln h_n against the exact ladder expressions."""
    scheme = scheme or FDScheme()
    if not win.finite:
        raise DomainError("gradient_check needs a finite window")
    h = scheme.resolve(digits, win)
    with mp.workdps(digits + numerics.required_digits(n + 2) + 10):
        a, b = mpf(win.a), mpf(win.b)
        if w.is_laguerre and not a - h > 0:
            raise DomainError("a - step must stay inside the Laguerre support")
        sys = system_for(w, Window(a, b), n, digits)
        Ha, Hb = exact_first_partials(sys, n)
        R_na, R_nb, _, _ = _endpoint_quantities(sys, n)
        da = _fd(lambda t: _H_and_logh(w, n, a + t, b, digits), h, scheme.order, digits)
        db = _fd(lambda t: _H_and_logh(w, n, a, b + t, digits), h, scheme.order, digits)
        out = {
            "dH_da": _rel([da[0], -Ha]),
            "dH_db": _rel([db[0], -Hb]),
            "dlogh_da": _rel([da[1], R_na]),
            "dlogh_db": _rel([db[1], R_nb]),
        }
        return CompatReport(n=n, residuals=out, tolerance=scheme.tolerance(digits, h),
                            label=f"gradient-{w.kind}")


@dataclass(frozen=True)
class SigmaData:
    """sigma, sigma', sigma'' of H along one endpoint with the other held far away."""

    z: object
    sigma: object
    dsigma: object
    d2sigma: object
    window: Window
    variable: str
    step: object


def _sigma_pair(w, n, a, b, variable, digits):
    sys = system_for(w, Window(a, b), n, digits)
    Ha, Hb = exact_first_partials(sys, n)
    return [Ha if variable == "a" else Hb]


def one_sided_sigma(w, n, z, variable="b", far=None, scheme=None, digits=80):
    """One-endpoint data for the sigma-form reductions.

    The fixed endpoint defaults to the edge of the support (a = -inf or 0
    when b varies, b = +inf when a varies); pass ``far`` to truncate.
    """
    scheme = scheme or FDScheme()
    if variable not in ("a", "b"):
        raise DomainError("variable must be 'a' or 'b'")
    with mp.workdps(digits + numerics.required_digits(n + 2) + 10):
        z = mpf(z)
        far = one_sided_far(w, variable) if far is None else mpf(far)
        a, b = (far, z) if variable == "b" else (z, far)
        win = Window(a, b).check(w)
        h = default_step(digits, Window(z - 1, z + 1)) if scheme.step is None else mpf(scheme.step)
        if variable == "a" and w.is_laguerre and not z - h > 0:
            raise DomainError("a - step must stay inside the Laguerre support")
        sys = system_for(w, win, n, digits)
        sigma = H_value(sys, n).H
        Ha, Hb = exact_first_partials(sys, n)
        ds = Ha if variable == "a" else Hb
        if variable == "a":
            f = lambda t: _sigma_pair(w, n, z + t, b, "a", digits)
        else:
            f = lambda t: _sigma_pair(w, n, a, z + t, "b", digits)
        d2 = _fd(f, h, scheme.order, digits)[0]
        return SigmaData(z=z, sigma=sigma, dsigma=ds, d2sigma=d2, window=win,
                         variable=variable, step=h)
