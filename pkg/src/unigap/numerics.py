"""Arbitrary-precision arithmetic policy and base special functions.

All routines take the working precision (decimal digits) as an explicit
argument and evaluate inside ``mpmath.workdps``; nothing here changes the
global mpmath precision on return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from mpmath import mp

from .errors import DomainError

MIN_DIGITS = 30


@dataclass(frozen=True)
class PrecisionPolicy:
    """Target precision for a computation.

    ``digits`` is the accuracy the caller wants in the final quantities.
    Factorizations run at a higher working precision and, when
    ``auto_escalate`` is set, double it on failure up to
    ``max_escalations`` times.
    """

    digits: int = 60
    auto_escalate: bool = True
    max_escalations: int = 4

    def __post_init__(self):
        if int(self.digits) != self.digits or self.digits < MIN_DIGITS:
            raise DomainError(f"digits must be an integer >= {MIN_DIGITS}, got {self.digits!r}")
        if self.max_escalations < 0:
            raise DomainError("max_escalations must be >= 0")


def check_digits(digits):
    if int(digits) != digits or digits < MIN_DIGITS:
        raise DomainError(f"digits must be an integer >= {MIN_DIGITS}, got {digits!r}")
    return int(digits)


def mpf(x):
    """Convert to an mpmath real at the current working precision."""
    return x if isinstance(x, mp.mpf) else mp.mpf(x)


def is_inf(x):
    if isinstance(x, (int,)):
        return False
    if isinstance(x, float):
        return math.isinf(x)
    return mp.isinf(x)


def erf(x, digits):
    """Error function by the positive-term Kummer series.

    erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_k (2x^2)^k / (1*3*...*(2k+1)).
    Every term is positive, so no guard digits are lost to cancellation.
    """
    digits = check_digits(digits)
    with mp.workdps(digits + 10):
        x = mpf(x)
        if mp.isinf(x):
            return mp.one if x > 0 else -mp.one
        if x == 0:
            return mp.zero
        ax = abs(x)
        x2 = ax * ax
        # erfc(x) < e^{-x^2}/(x sqrt(pi)); below 10^-(digits+15) the answer is +-1
        if ax > 1 and x2 + mp.log(ax) > (digits + 15) * mp.ln10:
            return mp.one if x > 0 else -mp.one
        t = 2 * x2
        term = mp.one
        total = mp.one
        eps = mp.mpf(10) ** (-(digits + 8))
        k = 0
        while True:
            k += 1
            term = term * t / (2 * k + 1)
            total += term
            if term < eps * total and k > t:
                break
        val = 2 * ax * mp.exp(-x2) / mp.sqrt(mp.pi) * total
        if val > 1:
            val = mp.one
        return val if x > 0 else -val


def lower_incomplete_gamma(s, x, digits):
    """gamma(s, x) = int_0^x t^{s-1} e^{-t} dt via the Kummer series.

    gamma(s, x) = x^s e^{-x} sum_k x^k / (s (s+1) ... (s+k)); positive terms.
    ``x`` may be +inf, returning Gamma(s).
    """
    digits = check_digits(digits)
    with mp.workdps(digits + 10):
        s = mpf(s)
        x = mpf(x)
        if not s > 0:
            raise DomainError(f"lower_incomplete_gamma needs s > 0, got {s}")
        if x < 0:
            raise DomainError(f"lower_incomplete_gamma needs x >= 0, got {x}")
        if mp.isinf(x):
            return mp.gamma(s)
        if x == 0:
            return mp.zero
        term = 1 / s
        total = term
        eps = mp.mpf(10) ** (-(digits + 8))
        k = 0
        while True:
            k += 1
            term = term * x / (s + k)
            total += term
            if term < eps * total and s + k > x:
                break
        return mp.exp(s * mp.log(x) - x) * total


def required_digits(n, weight=None):
    """Starting working precision for an n-level moment factorization.

    Hankel matrices lose roughly a fixed number of digits per added row,
    so the heuristic is linear in ``n``. ``weight`` is accepted for
    signature stability; both ensembles currently share the rule.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return max(50, 12 * int(n))


def _legendre_pair(m, x):
    p0, p1 = mp.one, x
    for k in range(2, m + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, p0


@lru_cache(maxsize=64)
def _gauss_legendre_cached(m, digits):
    x0, _ = np.polynomial.legendre.leggauss(m)
    half = (m + 1) // 2
    left_n, left_w = [], []
    with mp.workdps(digits + 10):
        tol = mp.mpf(10) ** (-(digits + 6))
        # leggauss returns ascending nodes; refine the non-positive half by Newton
        for i in range(half):
            x = mp.mpf(x0[i])
            if m % 2 == 1 and i == half - 1:
                x = mp.zero
            for _ in range(100):
                pm, pm1 = _legendre_pair(m, x)
                dp = m * (x * pm - pm1) / (x * x - 1)
                dx = pm / dp
                x -= dx
                if abs(dx) < tol:
                    break
            pm, pm1 = _legendre_pair(m, x)
            dp = m * (x * pm - pm1) / (x * x - 1)
            left_n.append(x)
            left_w.append(2 / ((1 - x * x) * dp * dp))
        mirror = half - 1 if m % 2 == 1 else half
        nodes = left_n + [-v for v in reversed(left_n[:mirror])]
        weights = left_w + list(reversed(left_w[:mirror]))
    return tuple(nodes), tuple(weights)


def gauss_legendre(m, digits):
    """Gauss-Legendre nodes and weights on [-1, 1] at ``digits`` precision."""
    if m < 1:
        raise DomainError("need at least one node")
    return _gauss_legendre_cached(int(m), int(digits))


def gauss_legendre_on(a, b, m, digits):
    """Nodes and weights mapped to the finite interval (a, b)."""
    t, wt = gauss_legendre(m, digits)
    with mp.workdps(digits + 10):
        a = mpf(a)
        b = mpf(b)
        half = (b - a) / 2
        mid = (a + b) / 2
        return [mid + half * ti for ti in t], [half * wi for wi in wt]


def nstr(x, digits):
    """Decimal rendering with min(digits, 30) significant figures."""
    return mp.nstr(mpf(x), min(int(digits), 30), strip_zeros=False, min_fixed=-5, max_fixed=5)
