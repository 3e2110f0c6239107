"""Gap probabilities, Hankel determinants and the quantity H_n.

Everything is kept in the log domain: ln D_n = sum ln h_j on the window and
ln Prob = ln D_n - ln D_n(whole support). H_n is read off the sub-leading
coefficient p1 (no differentiation), so finite-difference checks against
ln D_n are genuinely two-sided.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from mpmath import mp

from . import numerics
from .errors import ConvergenceError, DomainError, UnigapError
from .numerics import PrecisionPolicy, is_inf, mpf
from .ladder import _endpoint_quantities, _mul
from .orthopoly import build_from_moments
from .weights import Window, WeightSpec, log_whole_interval_norm

CSV_HEADER = ("a", "b", "logD", "logProb", "H", "p1")


@dataclass(frozen=True)
class GapPoint:
    n: int
    window: Window
    logD: object
    logProb: object
    H: object
    p1: object

    @property
    def prob(self):
        return mp.exp(self.logProb)


@dataclass
class GapSurface:
    n: int
    weight: WeightSpec
    a_grid: list
    b_grid: list
    points: list
    digits: int = 60

    def __post_init__(self):
        for name, g in (("a_grid", self.a_grid), ("b_grid", self.b_grid)):
            if any(not x < y for x, y in zip(g, g[1:])):
                raise DomainError(f"{name} must be strictly increasing")

    def nodes(self):
        for i, row in enumerate(self.points):
            for j, pt in enumerate(row):
                if pt is not None:
                    yield i, j, pt


def system_for(w, win, n, digits=60):
    """OPSystem with room for level-n ladder quantities and their neighbours."""
    return build_from_moments(w, win, n + 1, PrecisionPolicy(digits=digits))


def log_hankel_det(sys, n):
    if not 0 <= n <= sys.n_max + 1:
        raise DomainError(f"n = {n} outside 0..{sys.n_max + 1}")
    with mp.workdps(sys.digits_used):
        return mp.fsum(mp.log(h) for h in sys.h[:n])


def _log_full_det(w, n, digits):
    with mp.workdps(digits + 10):
        return mp.fsum(log_whole_interval_norm(w, j, digits) for j in range(n))


def log_gap_probability(sys, n):
    if not 0 <= n <= sys.n_max:
        raise DomainError(f"n = {n} outside 0..{sys.n_max}")
    with mp.workdps(sys.digits_used):
        val = log_hankel_det(sys, n) - _log_full_det(sys.weight, n, sys.digits_used)
        # the whole support gives exactly zero up to rounding
        return min(val, mp.zero)


def gap_probability(sys, n):
    with mp.workdps(sys.digits_used):
        return mp.exp(log_gap_probability(sys, n))


def H_value(sys, n):
    """GapPoint at level n, with H from p1: 2 p1 (Gaussian), n(alpha+n) + p1 (Laguerre)."""
    if not 0 <= n <= sys.n_max:
        raise DomainError(f"n = {n} outside 0..{sys.n_max}")
    with mp.workdps(sys.digits_used):
        p1 = sys.p1[n]
        if sys.weight.is_gaussian:
            H = 2 * p1
        else:
            H = n * (sys.weight.alpha_mp() + n) + p1
        return GapPoint(n=n, window=sys.window, logD=log_hankel_det(sys, n),
                        logProb=log_gap_probability(sys, n), H=H, p1=p1)


def H_from_log_derivative(sys, n):
    """H as the endpoint derivative of ln D_n, summed over levels.

    Since d ln h_j/da = -R_ja and d ln h_j/db = -R_jb, the Gaussian
    H = (d/da + d/db) ln D_n is -sum_j (R_ja + R_jb) and the Laguerre
    H = (a d/da + b d/db) ln D_n is -sum_j (a R_ja + b R_jb).
    """
    if not 0 <= n <= sys.n_max + 1:
        raise DomainError(f"n = {n} outside 0..{sys.n_max + 1}")
    with mp.workdps(sys.digits_used):
        ends = [_endpoint_quantities(sys, j)[:2] for j in range(n)]
        if sys.weight.is_gaussian:
            return -mp.fsum(Ra + Rb for Ra, Rb in ends)
        return -mp.fsum(_mul(sys.a, Ra) + _mul(sys.b, Rb) for Ra, Rb in ends)


def gap_point(w, n, a, b, digits=60):
    return H_value(system_for(w, Window(a, b), n, digits), n)


def _path_integral(n, w, a, c, panels, digits, nodes_per_panel=8):
    """int_0^a H_n(t, t + c) dt by composite Gauss-Legendre."""
    with mp.workdps(digits + 10):
        a = mpf(a)
        edges = [a * k / panels for k in range(panels + 1)]
        total = mp.zero
        for lo, hi in zip(edges[:-1], edges[1:]):
            xs, ws = numerics.gauss_legendre_on(lo, hi, nodes_per_panel, digits)
            for t, wt in zip(xs, ws):
                total += wt * gap_point(w, n, t, t + c, digits).H
        return total


def reconstruct_logprob(n, w, a, b, steps=32, digits=60):
    """ln Prob(n, a, b) = int_0^a H_n(t, t+b-a) dt + ln Prob(n, 0, b-a), Gaussian only.

    ``steps`` is the number of panels (8 nodes each). The same integral on
    steps/2 panels must agree to 10^-(digits/2), otherwise ConvergenceError.
    """
    if not w.is_gaussian:
        raise DomainError("reconstruct_logprob is defined for the Gaussian weight")
    if steps < 16:
        raise DomainError(f"steps must be >= 16, got {steps}")
    if is_inf(a) or is_inf(b):
        raise DomainError("reconstruction needs a finite window")
    with mp.workdps(digits + 10):
        a, b = mpf(a), mpf(b)
        c = b - a
        base = gap_point(w, n, 0, c, digits).logProb
        if a == 0:
            return base
        fine = _path_integral(n, w, a, c, steps, digits)
        coarse = _path_integral(n, w, a, c, steps // 2, digits)
        tol = mp.mpf(10) ** (-mp.mpf(digits) / 2) * max(1, abs(fine))
        if abs(fine - coarse) > tol:
            raise ConvergenceError(
                f"path integral unsettled: {steps} vs {steps // 2} panels differ by "
                f"{mp.nstr(abs(fine - coarse), 3)}")
        return base + fine


def surface(w, n, a_grid, b_grid, policy=None):
    """GapPoint at every (a, b) with a < b; pairs with a >= b are left as None."""
    policy = policy or PrecisionPolicy()
    with mp.workdps(policy.digits + 20):
        a_grid = [mpf(x) for x in a_grid]
        b_grid = [mpf(x) for x in b_grid]
    rows = []
    for a in a_grid:
        row = []
        for b in b_grid:
            if not a < b:
                row.append(None)
                continue
            try:
                win = Window(a, b).check(w)
                sys = build_from_moments(w, win, n + 1, policy)
                row.append(H_value(sys, n))
            except UnigapError as exc:
                raise type(exc)(f"surface node (a={a}, b={b}): {exc}") from exc
        rows.append(row)
    return GapSurface(n=n, weight=w, a_grid=a_grid, b_grid=b_grid, points=rows,
                      digits=policy.digits)


def _fmt(x, digits):
    return mp.nstr(mpf(x), digits, strip_zeros=False)


def _row(pt, digits):
    return [_fmt(v, digits) for v in (pt.window.a, pt.window.b, pt.logD, pt.logProb, pt.H, pt.p1)]


def export_csv(surf, digits=None):
    digits = digits or min(surf.digits, 30)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    with mp.workdps(digits + 20):
        for _, _, pt in surf.nodes():
            wr.writerow(_row(pt, digits))
    return buf.getvalue()


def _points_from_rows(rows, n):
    pts = []
    for r in rows:
        a, b, logD, logProb, H, p1 = (mp.mpf(x) for x in r)
        pts.append(GapPoint(n=n, window=Window(a, b), logD=logD, logProb=logProb, H=H, p1=p1))
    return pts


def _grid_from_points(pts, n, w, digits):
    a_grid = sorted({p.window.a for p in pts})
    b_grid = sorted({p.window.b for p in pts})
    ia = {a: i for i, a in enumerate(a_grid)}
    ib = {b: j for j, b in enumerate(b_grid)}
    rows = [[None] * len(b_grid) for _ in a_grid]
    for p in pts:
        rows[ia[p.window.a]][ib[p.window.b]] = p
    return GapSurface(n=n, weight=w, a_grid=a_grid, b_grid=b_grid, points=rows, digits=digits)


def parse_csv(text, n, weight, digits=40):
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    if tuple(header) != CSV_HEADER:
        raise DomainError(f"unexpected CSV header {header}")
    with mp.workdps(digits + 20):
        pts = _points_from_rows([r for r in rd if r], n)
        return _grid_from_points(pts, n, weight, digits)


def export_json(surf, digits=None):
    digits = digits or min(surf.digits, 30)
    with mp.workdps(digits + 20):
        doc = {
            "n": surf.n,
            "weight": {"kind": surf.weight.kind,
                       "alpha": None if surf.weight.alpha is None else str(surf.weight.alpha)},
            "digits": digits,
            "columns": list(CSV_HEADER),
            "rows": [_row(pt, digits) for _, _, pt in surf.nodes()],
        }
    return json.dumps(doc, indent=1) + "\n"


def parse_json(text):
    doc = json.loads(text)
    wk = doc["weight"]
    w = WeightSpec(wk["kind"], wk["alpha"])
    digits = doc["digits"]
    with mp.workdps(digits + 20):
        pts = _points_from_rows(doc["rows"], doc["n"])
        return _grid_from_points(pts, doc["n"], w, digits)
