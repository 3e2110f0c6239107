"""Monic orthogonal polynomials on a window, built two independent ways.

``build_from_moments`` factors the Hankel moment matrix (exact but
ill-conditioned); ``build_by_quadrature`` runs the Stieltjes procedure on
Gauss-Legendre nodes (stable, but needs enough nodes). Disagreement between
the two is the error detector.

Index conventions for an ``OPSystem`` with ``n_max = N``:

* ``h[k]``, k = 0..N+1
* ``alpha[k]``, k = 0..N
* ``beta[k]``, k = 0..N, with ``beta[0] = 0`` standing in for beta_0 P_{-1} = 0
* ``p1[k]``, k = 0..N+1, sub-leading coefficient of P_k (p1[0] = 0)
* ``Pa[k]``, ``Pb[k]``, k = 0..N+1; ``None`` at an infinite endpoint
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from mpmath import mp

from . import numerics
from .errors import ConvergenceError, DomainError, IllConditionedError
from .numerics import PrecisionPolicy, is_inf, mpf
from .weights import Window, WeightSpec, moment_vector, weight_at

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OPSystem:
    weight: WeightSpec
    window: Window
    n_max: int
    h: tuple
    alpha: tuple
    beta: tuple
    p1: tuple
    Pa: tuple
    Pb: tuple
    digits: int
    digits_used: int
    route: str = "moments"

    @property
    def a(self):
        return self.window.a

    @property
    def b(self):
        return self.window.b


def _ldl_hankel(mu, size):
    """LDL^T of the Hankel matrix (mu_{i+j}); returns (L, d) or the failing index."""
    L = [[mp.zero] * size for _ in range(size)]
    d = [mp.zero] * size
    for i in range(size):
        for j in range(i + 1):
            s = mu[i + j]
            for k in range(j):
                s -= L[i][k] * L[j][k] * d[k]
            if i == j:
                if not s > 0:
                    return None, i
                d[i] = s
                L[i][i] = mp.one
            else:
                L[i][j] = s / d[j]
    return (L, d), None


def _endpoint_values(alpha, beta, x, count):
    """P_0(x) .. P_{count-1}(x) by the three-term recurrence."""
    vals = [mp.one]
    prev = mp.zero
    for k in range(count - 1):
        nxt = (x - alpha[k]) * vals[k] - beta[k] * prev
        prev = vals[k]
        vals.append(nxt)
    return tuple(vals)


def _assemble(weight, window, n_max, h, alpha, beta, digits, work, route):
    p1 = [mp.zero]
    for k in range(n_max + 1):
        p1.append(p1[k] - alpha[k])
    count = n_max + 2
    Pa = None if is_inf(window.a) else _endpoint_values(alpha, beta, mpf(window.a), count)
    Pb = None if is_inf(window.b) else _endpoint_values(alpha, beta, mpf(window.b), count)
    return OPSystem(weight=weight, window=window, n_max=n_max, h=tuple(h),
                    alpha=tuple(alpha), beta=tuple(beta), p1=tuple(p1),
                    Pa=Pa, Pb=Pb, digits=digits, digits_used=work, route=route)


def build_from_moments(w, win, n_max, policy=None):
    """OP data from an LDL^T factorization of the (n_max+2)-square moment matrix.

    With M = L D L^T (L unit lower), x^k = sum_i L[k][i] P_i, so the pivots are
    the norms h_k and p1(k) = -L[k][k-1]. Working precision starts at
    ``policy.digits + required_digits(n_max+1)`` and doubles on a
    non-positive pivot.
    """
    policy = policy or PrecisionPolicy()
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    win.check(w)
    size = n_max + 2
    work = policy.digits + numerics.required_digits(size - 1, w)
    attempts = policy.max_escalations if policy.auto_escalate else 0
    for attempt in range(attempts + 1):
        with mp.workdps(work):
            mu = moment_vector(w, win, 2 * size - 2, work)
            fact, bad = _ldl_hankel(mu, size)
            if fact is not None:
                L, d = fact
                h = list(d)
                alpha = [L[1][0]]
                for k in range(1, n_max + 1):
                    alpha.append(L[k + 1][k] - L[k][k - 1])
                beta = [mp.zero] + [h[k] / h[k - 1] for k in range(1, n_max + 1)]
                return _assemble(w, win, n_max, h, alpha, beta, policy.digits, work, "moments")
        log.info("non-positive pivot %d at %d digits; escalating", bad, work)
        if attempt < attempts:
            work *= 2
    raise IllConditionedError(
        f"moment matrix pivot {bad} non-positive at {work} digits", index=bad, digits=work)


def _finite_cutoffs(w, win, n_max, digits):
    """Replace infinite endpoints by points beyond which x^{2n} w(x) is negligible."""
    if win.finite:
        return mpf(win.a), mpf(win.b)
    with mp.workdps(30):
        target = (digits + 20) * mp.ln10
        power = 2 * n_max + 4
        shift = 0 if w.is_gaussian else w.alpha_mp()
        x = mp.mpf(2)
        # Gaussian tail ~ x^p e^{-x^2}, Laguerre tail ~ x^{p+alpha} e^{-x}
        while (x * x if w.is_gaussian else x) - (power + shift) * mp.log(x) <= target:
            x *= mp.mpf(1.25)
    a = -x if is_inf(win.a) else mpf(win.a)
    b = x if is_inf(win.b) else mpf(win.b)
    if not a < b:
        raise DomainError("window lies entirely in the negligible tail")
    return a, b


def _stieltjes(w, a, b, n_max, nodes, digits):
    xs, ws = numerics.gauss_legendre_on(a, b, nodes, digits)
    with mp.workdps(digits + 10):
        wts = [wi * weight_at(w, xi) for xi, wi in zip(xs, ws)]
        p_prev = [mp.zero] * nodes
        p_cur = [mp.one] * nodes
        h, alpha, beta = [], [], [mp.zero]
        for k in range(n_max + 2):
            sq = [wt * p * p for wt, p in zip(wts, p_cur)]
            hk = mp.fsum(sq)
            if not hk > 0:
                raise ConvergenceError(f"quadrature norm h_{k} is not positive")
            h.append(hk)
            if k == n_max + 1:
                break
            ak = mp.fdot(sq, xs) / hk
            alpha.append(ak)
            bk = hk / h[k - 1] if k > 0 else mp.zero
            if k > 0:
                beta.append(bk)
            p_next = [(x - ak) * p - bk * q for x, p, q in zip(xs, p_cur, p_prev)]
            p_prev, p_cur = p_cur, p_next
    return h, alpha, beta


def build_by_quadrature(w, win, n_max, nodes=256, digits=60, check=False):
    """Stieltjes procedure with Gauss-Legendre inner products on the window.

    Infinite endpoints are replaced by cutoffs where the integrand is below
    10^-(digits+20). With ``check`` a doubled-node run must agree to
    10^-(digits/2), otherwise ``ConvergenceError``.
    """
    digits = numerics.check_digits(digits)
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if nodes < max(4 * n_max, 4):
        raise DomainError(f"need nodes >= 4*n_max, got {nodes} for n_max={n_max}")
    win.check(w)
    a, b = _finite_cutoffs(w, win, n_max, digits)
    h, alpha, beta = _stieltjes(w, a, b, n_max, nodes, digits)
    if check:
        h2, alpha2, _ = _stieltjes(w, a, b, n_max, 2 * nodes, digits)
        with mp.workdps(digits + 10):
            tol = mp.mpf(10) ** (-digits / 2)
            dev = max(abs(x - y) / abs(y) for x, y in zip(h, h2))
            if dev > tol:
                raise ConvergenceError(
                    f"{nodes} nodes insufficient: doubled-node norms differ by {mp.nstr(dev, 3)}")
    with mp.workdps(digits + 10):
        return _assemble(w, win, n_max, h, alpha, beta, digits, digits + 10, "quadrature")


def eval_monic(sys, k, x):
    """P_k(x) via z P_n = P_{n+1} + alpha_n P_n + beta_n P_{n-1}."""
    if not 0 <= k <= sys.n_max + 1:
        raise DomainError(f"degree {k} outside 0..{sys.n_max + 1}")
    with mp.workdps(sys.digits_used):
        x = mpf(x)
        prev, cur = mp.zero, mp.one
        for j in range(k):
            prev, cur = cur, (x - sys.alpha[j]) * cur - sys.beta[j] * prev
        return cur


def max_relative_deviation(s1, s2, fields=("h", "alpha", "beta", "p1")):
    """Largest relative difference between two systems over the named fields.

    Entries far below the field's own scale (alpha on a symmetric window,
    say) are measured against that scale instead of themselves.
    """
    worst = mp.zero
    with mp.workdps(max(s1.digits_used, s2.digits_used)):
        for name in fields:
            xs, ys = getattr(s1, name), getattr(s2, name)
            scale = max(abs(y) for y in ys) or mp.one
            floor = scale * mp.mpf(10) ** -10
            for x, y in zip(xs, ys):
                worst = max(worst, abs(x - y) / max(abs(y), floor))
    return worst
