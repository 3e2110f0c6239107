"""Ensemble weights, truncated moments and whole-support norms.

Two weights are supported: the Gaussian e^{-x^2} on the real line and the
Laguerre x^alpha e^{-x} on (0, inf). Windows may carry infinite endpoints,
in which case boundary terms vanish exactly rather than being
approximated by a large finite cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp

from . import numerics
from .errors import DomainError
from .numerics import check_digits, is_inf, mpf

GAUSSIAN = "gaussian"
LAGUERRE = "laguerre"


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    alpha: object = None

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, LAGUERRE):
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if self.kind == LAGUERRE:
            if self.alpha is None or not mp.mpf(self.alpha) > 0:
                raise DomainError(f"Laguerre weight needs alpha > 0, got {self.alpha!r}")
        elif self.alpha is not None:
            raise DomainError("Gaussian weight takes no alpha")

    @classmethod
    def gaussian(cls):
        return cls(GAUSSIAN)

    @classmethod
    def laguerre(cls, alpha):
        return cls(LAGUERRE, alpha)

    @property
    def is_gaussian(self):
        return self.kind == GAUSSIAN

    @property
    def is_laguerre(self):
        return self.kind == LAGUERRE

    @property
    def support(self):
        if self.is_gaussian:
            return (-mp.inf, mp.inf)
        return (mp.zero, mp.inf)

    def alpha_mp(self):
        return mpf(self.alpha)

    def v(self, x):
        """-ln w(x)."""
        x = mpf(x)
        if self.is_gaussian:
            return x * x
        return x - self.alpha_mp() * mp.log(x)

    def v_prime(self, z):
        z = mpf(z)
        if self.is_gaussian:
            return 2 * z
        return 1 - self.alpha_mp() / z

    def label(self):
        if self.is_gaussian:
            return "gaussian"
        return f"laguerre(alpha={self.alpha})"


@dataclass(frozen=True)
class Window:
    """The interval (a, b); endpoints may be +-inf."""

    a: object
    b: object

    def __post_init__(self):
        if not mp.mpf(self.a) < mp.mpf(self.b):
            raise DomainError(f"window needs a < b, got ({self.a}, {self.b})")

    @classmethod
    def whole(cls, weight):
        lo, hi = weight.support
        return cls(lo, hi)

    def check(self, weight):
        """Raise unless the window lies inside the weight's support."""
        lo, hi = weight.support
        if mp.mpf(self.a) < lo or mp.mpf(self.b) > hi:
            raise DomainError(f"window ({self.a}, {self.b}) leaves the support of {weight.label()}")
        return self

    @property
    def finite(self):
        return not (is_inf(self.a) or is_inf(self.b))

    def is_whole(self, weight):
        lo, hi = weight.support
        return mp.mpf(self.a) == lo and mp.mpf(self.b) == hi

    def shifted(self, da=0, db=0):
        a = self.a if is_inf(self.a) else mpf(self.a) + da
        b = self.b if is_inf(self.b) else mpf(self.b) + db
        return Window(a, b)


def weight_at(w, x):
    """w(x); zero at an infinite point and at x = 0 for the Laguerre weight."""
    x = mpf(x)
    if mp.isinf(x):
        if w.is_laguerre and x < 0:
            raise DomainError("x = -inf is outside the Laguerre support")
        return mp.zero
    if w.is_gaussian:
        return mp.exp(-x * x)
    if x < 0:
        raise DomainError(f"x = {x} is outside the Laguerre support (0, inf)")
    if x == 0:
        return mp.zero
    return mp.exp(w.alpha_mp() * mp.log(x) - x)


def _antiderivative_pair(w, win, digits):
    """Values F(b), F(a) of the zeroth-moment antiderivative."""
    if w.is_gaussian:
        half_root_pi = mp.sqrt(mp.pi) / 2
        return (half_root_pi * numerics.erf(win.b, digits),
                half_root_pi * numerics.erf(win.a, digits))
    s = w.alpha_mp() + 1
    return (numerics.lower_incomplete_gamma(s, win.b, digits),
            numerics.lower_incomplete_gamma(s, win.a, digits))


def _mu0(w, win, digits):
    """Zeroth moment, recomputed with more digits if F(b) - F(a) cancels."""
    guard = 10
    while True:
        with mp.workdps(digits + guard):
            fb, fa = _antiderivative_pair(w, win, digits + guard)
            diff = fb - fa
            big = max(abs(fb), abs(fa))
            if diff <= 0:
                loss = digits + guard
            else:
                loss = int(mp.log10(big / diff)) if big > 0 else 0
            if loss <= guard - 8 or guard > 40 * digits:
                return diff
        guard = loss + 20


def _recurrence_guard(w, win, m):
    """Extra digits to absorb growth of the homogeneous recurrence solution."""
    ends = [abs(mpf(e)) for e in (win.a, win.b) if not is_inf(e)]
    scale = max(ends) if ends else mp.inf
    guard = 2 * m + 10
    if mp.isinf(scale) or m == 0:
        return guard
    worst = mp.zero
    with mp.workdps(30):
        for j in range(1, m + 1):
            if w.is_gaussian:
                growth = mp.loggamma(mp.mpf(j) / 2 + 1)
            else:
                growth = mp.loggamma(j + w.alpha_mp() + 1)
            worst = max(worst, (growth - j * mp.log(max(scale, mp.mpf(10) ** -6))) / mp.ln10)
    return guard + int(worst)


def moment_vector(w, win, m, digits):
    """[mu_0, ..., mu_m] on the window via integration-by-parts recurrences.

    Gaussian: mu_{j+1} = (j mu_{j-1} - (b^j e^{-b^2} - a^j e^{-a^2})) / 2.
    Laguerre: mu_{j+1} = (j+1+alpha) mu_j + a^{j+1+alpha} e^{-a} - b^{j+1+alpha} e^{-b}.
    """
    digits = check_digits(digits)
    if m < 0:
        raise DomainError("m must be >= 0")
    win.check(w)
    work = digits + _recurrence_guard(w, win, m)
    with mp.workdps(work):
        a_inf, b_inf = is_inf(win.a), is_inf(win.b)
        a = None if a_inf else mpf(win.a)
        b = None if b_inf else mpf(win.b)
        mu = [_mu0(w, win, work)]
        if w.is_gaussian:
            ea = mp.zero if a_inf else mp.exp(-a * a)
            eb = mp.zero if b_inf else mp.exp(-b * b)
            if m >= 1:
                mu.append((ea - eb) / 2)
            apow = mp.one
            bpow = mp.one
            for j in range(1, m):
                apow = apow * a if not a_inf else apow
                bpow = bpow * b if not b_inf else bpow
                ta = mp.zero if a_inf else apow * ea
                tb = mp.zero if b_inf else bpow * eb
                mu.append((j * mu[j - 1] - (tb - ta)) / 2)
        else:
            alpha = w.alpha_mp()
            wa = weight_at(w, a) if not a_inf else mp.zero
            wb = mp.zero if b_inf else weight_at(w, b)
            apow = mp.one
            bpow = mp.one
            for j in range(0, m):
                if not a_inf:
                    apow = apow * a
                if not b_inf:
                    bpow = bpow * b
                ta = apow * wa
                tb = bpow * wb
                mu.append((j + 1 + alpha) * mu[j] + ta - tb)
    return mu


def moment(w, win, j, digits):
    """mu_j(a, b) = int_a^b x^j w(x) dx."""
    if j < 0:
        raise DomainError("moment index must be >= 0")
    return moment_vector(w, win, j, digits)[j]


def whole_interval_norm(w, n, digits=50):
    """h_n over the whole support: sqrt(pi) n!/2^n or n! Gamma(n+alpha+1)."""
    if n < 0:
        raise DomainError("n must be >= 0")
    with mp.workdps(check_digits(digits) + 10):
        if w.is_gaussian:
            return mp.sqrt(mp.pi) * mp.factorial(n) / mp.mpf(2) ** n
        return mp.factorial(n) * mp.gamma(n + w.alpha_mp() + 1)


def log_whole_interval_norm(w, n, digits=50):
    with mp.workdps(check_digits(digits) + 10):
        if w.is_gaussian:
            return mp.log(mp.pi) / 2 + mp.loggamma(n + 1) - n * mp.log(2)
        return mp.loggamma(n + 1) + mp.loggamma(n + w.alpha_mp() + 1)
