"""Independent ground truth: Monte-Carlo sampling and direct small-n quadrature.

Normalizations. The GUE density exp(-Tr H^2) gives diagonal entries
N(0, 1/2) and off-diagonal real and imaginary parts N(0, 1/4), since
Tr H^2 = sum H_ii^2 + 2 sum_{i<j} |H_ij|^2. With X complex, Re and Im
N(0, 1/2), H = (X + X*)/2 has exactly that law. For LUE, G is n x m with
complex entries of unit variance, so G G* has density
det(W)^(m-n) exp(-Tr W) and eigenvalue weight x^(m-n) e^(-x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from mpmath import mp

from . import numerics
from .errors import ConvergenceError, DomainError
from .numerics import is_inf
from .orthopoly import _finite_cutoffs
from .weights import log_whole_interval_norm, weight_at

CHUNK = 10_000


@dataclass(frozen=True)
class MCConfig:
    trials: int
    seed: int
    n: int

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.n < 1:
            raise DomainError("n must be >= 1")


@dataclass(frozen=True)
class MCEstimate:
    p_hat: float
    ci95_halfwidth: float
    trials: int

    def contains(self, p):
        return abs(p - self.p_hat) <= self.ci95_halfwidth


def _wishart_alpha(ensemble, alpha):
    if alpha is None:
        alpha = ensemble.alpha
    a = float(alpha)
    if a < 0 or a != int(a):
        raise DomainError(f"the Wishart sampler needs an integer alpha >= 0, got {alpha}")
    return int(a)


def _batch(ensemble, n, count, rng, alpha=None):
    """(count, n) array of sorted eigenvalues."""
    if ensemble.is_gaussian:
        X = rng.normal(scale=math.sqrt(0.5), size=(count, n, n)) \
            + 1j * rng.normal(scale=math.sqrt(0.5), size=(count, n, n))
        H = (X + np.conj(np.swapaxes(X, 1, 2))) / 2
        return np.linalg.eigvalsh(H)
    m = n + _wishart_alpha(ensemble, alpha)
    G = rng.normal(scale=math.sqrt(0.5), size=(count, n, m)) \
        + 1j * rng.normal(scale=math.sqrt(0.5), size=(count, n, m))
    W = G @ np.conj(np.swapaxes(G, 1, 2))
    return np.linalg.eigvalsh(W)


def sample_eigenvalues(ensemble, n, rng, alpha=None):
    """One draw of n sorted eigenvalues.

    ``alpha`` overrides the Laguerre exponent for sampling only, so the
    Wishart case m = n (alpha = 0) is reachable.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if ensemble.is_gaussian and alpha is not None:
        raise DomainError("alpha applies to the Laguerre ensemble only")
    return [float(v) for v in _batch(ensemble, n, 1, rng, alpha)[0]]


def _chunks(cfg):
    """Per-chunk generators from a spawned seed sequence; independent of worker layout."""
    sizes = [CHUNK] * (cfg.trials // CHUNK)
    if cfg.trials % CHUNK:
        sizes.append(cfg.trials % CHUNK)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    return [(size, np.random.default_rng(s)) for size, s in zip(sizes, seeds)]


def mc_eigenvalues(ensemble, cfg, alpha=None):
    return np.concatenate([_batch(ensemble, cfg.n, size, rng, alpha) for size, rng in _chunks(cfg)])


def mc_gap_probability(ensemble, n, win, cfg, alpha=None):
    """Fraction of trials with lambda_min > a and lambda_max < b, with a 95% binomial CI."""
    if cfg.n != n:
        raise DomainError(f"config is for n = {cfg.n}, not {n}")
    a = -math.inf if is_inf(win.a) else float(win.a)
    b = math.inf if is_inf(win.b) else float(win.b)
    hits = 0
    for size, rng in _chunks(cfg):
        ev = _batch(ensemble, n, size, rng, alpha)
        hits += int(np.count_nonzero((ev[:, 0] > a) & (ev[:, -1] < b)))
    p = hits / cfg.trials
    return MCEstimate(p_hat=p, ci95_halfwidth=1.96 * math.sqrt(p * (1 - p) / cfg.trials),
                      trials=cfg.trials)


def _panel_edges(w, lo, hi, n):
    """Panels of width <= 2 over the bulk, doubling in width through the tails."""
    if w.is_gaussian:
        core = (-mp.sqrt(2 * n) - 6, mp.sqrt(2 * n) + 6)
    else:
        core = (mp.zero, 4 * n + 2 * w.alpha_mp() + 20)
    c_lo, c_hi = max(lo, core[0]), min(hi, core[1])
    if not c_lo < c_hi:
        c_lo, c_hi = lo, min(hi, lo + 2)
    k = max(1, int(mp.ceil((c_hi - c_lo) / 2)))
    edges = [c_lo + (c_hi - c_lo) * i / k for i in range(k + 1)]
    width = (c_hi - c_lo) / k
    right, step = c_hi, width
    while right < hi:
        step *= 2
        right = min(hi, right + step)
        edges.append(right)
    left, step = c_lo, width
    while left > lo:
        step *= 2
        left = max(lo, left - step)
        edges.insert(0, left)
    return edges


def _nodes(w, win, n, per_panel, digits):
    lo, hi = _finite_cutoffs(w, win, n, digits)
    edges = _panel_edges(w, lo, hi, n)
    xs, W = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        px, pw = numerics.gauss_legendre_on(a, b, per_panel, digits)
        xs += px
        W += [wi * weight_at(w, xi) for xi, wi in zip(px, pw)]
    return xs, W


def _tensor_integral(w, win, n, per_panel, digits):
    """int over (a,b)^n of Delta^2 prod w, divided by n!."""
    xs, W = _nodes(w, win, n, per_panel, digits)
    m = len(xs)
    if n == 1:
        return mp.fsum(W)
    if n == 2:
        return mp.fsum(W[i] * W[j] * (xs[i] - xs[j]) ** 2 for i, j in combinations(range(m), 2))
    # n = 3: sum_{i,j,k} = sum_ij W_i W_j D_ij (D diag(W) D)_ij with D_ij = (x_i - x_j)^2,
    # evaluated in extended (long double) precision; every term is non-negative
    x = np.array([float(v) for v in xs], dtype=np.longdouble)
    Wl = np.array([float(v) for v in W], dtype=np.longdouble)
    D = (x[:, None] - x[None, :]) ** 2
    inner = (D * Wl[None, :]) @ D
    return mp.mpf(float(np.sum(Wl[:, None] * Wl[None, :] * D * inner) / 6))


def direct_quadrature_prob(ensemble, n, win, nodes=None, digits=40, check=True):
    """Prob(n, a, b) by n-fold tensor Gauss-Legendre of the joint density (n <= 3).

    ``nodes`` is the count per panel of a composite rule (panels of width
    <= 2 over the bulk, doubling through the tails). n = 1, 2 run in mp
    arithmetic; n = 3 runs in long double, so its accuracy is about 1e-15
    whatever ``digits`` says. With ``check`` a run at twice the nodes must
    agree to 10^-(digits/2) (n <= 2) or 1e-14 (n = 3).
    """
    if n not in (1, 2, 3):
        raise DomainError("direct quadrature is limited to n in {1, 2, 3}")
    digits = numerics.check_digits(digits)
    win.check(ensemble)
    eff = digits if n < 3 else 30
    nodes = nodes or max(16, math.ceil(0.6 * eff))
    with mp.workdps(digits + 10):
        log_norm = mp.fsum(log_whole_interval_norm(ensemble, j, digits) for j in range(n))
        norm = mp.exp(log_norm)
        p = _tensor_integral(ensemble, win, n, nodes, eff) / norm
        if check:
            p2 = _tensor_integral(ensemble, win, n, 2 * nodes, eff) / norm
            tol = mp.mpf(10) ** (-mp.mpf(digits) / 2) if n < 3 else mp.mpf("1e-14")
            if abs(p - p2) > tol:
                raise ConvergenceError(
                    f"tensor quadrature unsettled: {nodes} vs {2 * nodes} nodes per panel differ by "
                    f"{mp.nstr(abs(p - p2), 3)}")
            p = p2
        return p
