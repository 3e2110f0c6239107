"""Command-line front end: every verification and tabulation as a subcommand.

Exit codes: 0 when every check is within tolerance, 1 when a check fails
(the report is still written), 2 on a bad configuration or a numerical
infrastructure error (non-convergence, ill-conditioning).

Reports go to --out, else to $UNIGAP_OUTPUT_DIR/<subcommand>.<ext>, else
to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import dataclass, field

from mpmath import mp

from . import calculus, gap, ladder, numerics, oracle, orthopoly, painleve, tracy_widom
from .errors import UnigapError
from .weights import Window, WeightSpec, moment_vector

OUTPUT_ENV = "UNIGAP_OUTPUT_DIR"
SCHEMA_VERSION = 1
SUBCOMMANDS = ("moments", "recurrence", "compat", "surface", "pde-gue", "pde-lue", "toda",
               "sigma-ode", "tw", "scaling-limit", "independence", "mc", "quad-oracle")
JSON_ONLY = {"compat", "pde-gue", "pde-lue", "toda", "sigma-ode", "independence", "mc",
             "quad-oracle", "selftest"}


class ConfigError(Exception):
    """A configuration value is invalid; the message starts with the field name."""


# ---------------------------------------------------------------- parsing helpers

def parse_number(text, field_name):
    t = str(text).strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return mp.inf
    if t in ("-inf", "-infinity"):
        return -mp.inf
    try:
        return mp.mpf(t)
    except (ValueError, TypeError):
        raise ConfigError(f"{field_name}: not a number: {text!r}") from None


def parse_grid(text, field_name, digits=60):
    """`start:end:count` with inclusive endpoints, evaluated at full precision."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"{field_name}: expected start:end:count, got {text!r}")
    try:
        count = int(parts[2])
    except ValueError:
        raise ConfigError(f"{field_name}: count must be an integer, got {parts[2]!r}") from None
    if count < 1:
        raise ConfigError(f"{field_name}: count must be >= 1")
    with mp.workdps(digits + 20):
        lo, hi = parse_number(parts[0], field_name), parse_number(parts[1], field_name)
        if not (mp.isfinite(lo) and mp.isfinite(hi)):
            raise ConfigError(f"{field_name}: grid endpoints must be finite")
        if count == 1:
            if lo != hi:
                raise ConfigError(f"{field_name}: a single-point grid needs start == end")
            return [lo]
        if not lo < hi:
            raise ConfigError(f"{field_name}: need start < end")
        return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def parse_int_list(text, field_name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{field_name}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{field_name}: empty list")
    return vals


# ---------------------------------------------------------------- tables

@dataclass
class Table:
    """A CSV table whose columns are 'int', 'mp' (digits-aware) or 'float' (17 significant)."""

    header: tuple
    kinds: tuple
    rows: list
    sig: int = 30

    def _cell(self, kind, v):
        if kind == "int":
            return str(int(v))
        if kind == "float":
            return f"{float(v):.17g}"
        if kind == "str":
            return str(v)
        return mp.nstr(mp.mpf(v), self.sig, strip_zeros=False)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.header)
        with mp.workdps(self.sig + 20):
            for r in self.rows:
                wr.writerow([self._cell(k, v) for k, v in zip(self.kinds, r)])
        return buf.getvalue()

    def to_records(self):
        with mp.workdps(self.sig + 20):
            return [[self._cell(k, v) for k, v in zip(self.kinds, r)] for r in self.rows]

    @classmethod
    def from_csv(cls, text, kinds, sig=30):
        rd = csv.reader(io.StringIO(text))
        header = tuple(next(rd))
        if len(header) != len(kinds):
            raise ConfigError(f"csv: expected {len(kinds)} columns, found {len(header)}")
        conv = {"int": int, "float": float, "str": str, "mp": mp.mpf}
        with mp.workdps(sig + 20):
            rows = [[conv[k](v) for k, v in zip(kinds, r)] for r in rd if r]
        return cls(header, tuple(kinds), rows, sig)


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    subcommand: str
    ensemble: str = "gue"
    n: int = 2
    alpha: str | None = None
    a: object = None
    b: object = None
    a_grid: object = None
    b_grid: object = None
    digits: int = 60
    fd_step: object = None
    fd_order: str = calculus.RICHARDSON4
    c: float | None = None
    beta: float = 1.0
    trials: int = 100_000
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.subcommand not in SUBCOMMANDS + ("selftest",):
            raise ConfigError(f"subcommand: unknown {self.subcommand!r}")
        if self.ensemble not in ("gue", "lue"):
            raise ConfigError(f"ensemble: expected gue or lue, got {self.ensemble!r}")
        if self.ensemble == "gue" and self.alpha is not None:
            raise ConfigError("alpha: applies to the lue ensemble only")
        if self.ensemble == "lue":
            self.alpha = "1" if self.alpha is None else self.alpha
            if not parse_number(self.alpha, "alpha") > 0:
                raise ConfigError(f"alpha: must be > 0, got {self.alpha}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n: must be a positive integer, got {self.n!r}")
        try:
            numerics.check_digits(self.digits)
        except UnigapError as exc:
            raise ConfigError(f"digits: {exc}") from None
        if self.fd_order not in (calculus.CENTRAL2, calculus.RICHARDSON4):
            raise ConfigError(f"fd_order: expected central2 or richardson4, got {self.fd_order!r}")
        if self.fd_step is not None:
            self.fd_step = parse_number(self.fd_step, "fd_step")
            if not (mp.isfinite(self.fd_step) and self.fd_step > 0):
                raise ConfigError("fd_step: must be a positive finite number")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format: expected csv or json, got {self.fmt!r}")
        if self.fmt == "csv" and self.subcommand in JSON_ONLY:
            raise ConfigError(f"format: {self.subcommand} writes json reports only")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if self.beta <= 0:
            raise ConfigError("beta: must be > 0")
        if self.c is not None and self.c <= 0:
            raise ConfigError("c: must be > 0")
        with mp.workdps(self.digits + 20):
            for name in ("a", "b"):
                v = getattr(self, name)
                if v is not None:
                    setattr(self, name, parse_number(v, name))
            for name in ("a_grid", "b_grid"):
                v = getattr(self, name)
                if isinstance(v, str):
                    setattr(self, name, parse_grid(v, name.replace("_", "-"), self.digits))
        return self

    def weight(self):
        if self.ensemble == "gue":
            return WeightSpec.gaussian()
        return WeightSpec.laguerre(self.alpha)

    def window(self):
        w = self.weight()
        lo, hi = w.support
        a = lo if self.a is None else self.a
        b = hi if self.b is None else self.b
        try:
            return Window(a, b).check(w)
        except UnigapError as exc:
            raise ConfigError(f"window: {exc}") from None

    def windows(self):
        """Windows from --a-grid/--b-grid (pairs with a < b), else the single --a/--b window."""
        if self.a_grid is None and self.b_grid is None:
            return [self.window()]
        w = self.weight()
        a_grid = self.a_grid or [self.a if self.a is not None else w.support[0]]
        b_grid = self.b_grid or [self.b if self.b is not None else w.support[1]]
        out = []
        for a in a_grid:
            for b in b_grid:
                if a < b:
                    try:
                        out.append(Window(a, b).check(w))
                    except UnigapError as exc:
                        raise ConfigError(f"window grid: {exc}") from None
        if not out:
            raise ConfigError("a-grid: no pair with a < b")
        return out

    def scheme(self):
        return calculus.FDScheme(step=self.fd_step, order=self.fd_order)


# ---------------------------------------------------------------- results

@dataclass
class Result:
    """What a subcommand produced: a pass flag plus a json document and/or a table."""

    passed: bool
    doc: dict
    table: Table | None = None


def _fmt(x, digits=30):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, float):
        return f"{x:.17g}"
    return numerics.nstr(x, digits)


def _envelope(cfg, equations, residuals, tolerance, passed, fd_step=None, **more):
    doc = {
        "schema": SCHEMA_VERSION,
        "subcommand": cfg.subcommand,
        "ensemble": cfg.ensemble,
        "alpha": cfg.alpha,
        "n": cfg.n,
        "equations": list(equations),
        "digits": cfg.digits,
        "fd_step": None if fd_step is None else _fmt(fd_step, cfg.digits),
        "residuals": {k: _fmt(v, cfg.digits) for k, v in residuals.items()},
        "tolerance": _fmt(tolerance, cfg.digits),
        "pass": bool(passed),
    }
    doc.update(more)
    return doc


def _window_doc(win, digits):
    return {"a": _fmt(win.a, digits), "b": _fmt(win.b, digits)}


# ---------------------------------------------------------------- subcommands

def cmd_moments(cfg):
    win, w = cfg.window(), cfg.weight()
    m = 2 * cfg.n + 2
    with mp.workdps(cfg.digits + 20):
        mu = moment_vector(w, win, m, cfg.digits)
    rows = [[k, mu[k]] for k in range(m)]
    table = Table(("k", "moment"), ("int", "mp"), rows, min(cfg.digits, 30))
    doc = _envelope(cfg, [], {}, 0, True, window=_window_doc(win, cfg.digits),
                    columns=list(table.header), rows=table.to_records())
    return Result(True, doc, table)


def cmd_recurrence(cfg):
    win, w = cfg.window(), cfg.weight()
    sys_m = orthopoly.build_from_moments(w, win, cfg.n, numerics.PrecisionPolicy(cfg.digits))
    sys_q = orthopoly.build_by_quadrature(w, win, cfg.n, digits=cfg.digits)
    dev = orthopoly.max_relative_deviation(sys_m, sys_q)
    tol = mp.mpf(10) ** -min(20, cfg.digits // 3)
    rows = [[k, sys_m.h[k], sys_m.alpha[k], sys_m.beta[k], sys_m.p1[k]] for k in range(cfg.n + 1)]
    table = Table(("k", "h", "alpha", "beta", "p1"), ("int", "mp", "mp", "mp", "mp"), rows,
                  min(cfg.digits, 30))
    doc = _envelope(cfg, ["moments_vs_quadrature"], {"moments_vs_quadrature": dev}, tol,
                    dev < tol, window=_window_doc(win, cfg.digits), columns=list(table.header),
                    rows=table.to_records())
    return Result(dev < tol, doc, table)


def cmd_compat(cfg):
    win, w = cfg.window(), cfg.weight()
    sys_ = orthopoly.build_from_moments(w, win, cfg.n + 1, numerics.PrecisionPolicy(cfg.digits))
    if cfg.ensemble == "gue":
        rep = ladder.verify_compat_gue(sys_, cfg.n)
    else:
        rep = ladder.verify_compat_lue(sys_, cfg.n)
    doc = _envelope(cfg, list(rep.residuals), rep.residuals, rep.tolerance, rep.passed,
                    window=_window_doc(win, cfg.digits))
    return Result(rep.passed, doc)


def cmd_surface(cfg):
    w = cfg.weight()
    if cfg.a_grid is None or cfg.b_grid is None:
        raise ConfigError("a-grid: surface needs both --a-grid and --b-grid")
    surf = gap.surface(w, cfg.n, cfg.a_grid, cfg.b_grid, numerics.PrecisionPolicy(cfg.digits))
    text = gap.export_csv(surf) if cfg.fmt == "csv" else gap.export_json(surf)
    return Result(True, {"text": text})


def _pde(cfg, kind):
    w = cfg.weight()
    if (kind == "gue") != (cfg.ensemble == "gue"):
        raise ConfigError(f"ensemble: pde-{kind} needs --ensemble {kind}")
    fn = calculus.pde_residual_gue if kind == "gue" else calculus.pde_residual_lue
    with mp.workdps(cfg.digits + 20):
        tol = mp.mpf(cfg.extra.get("tol") or ("1e-10" if kind == "gue" else "1e-8"))
    reports = [fn(w, cfg.n, win, cfg.scheme(), cfg.digits, tol) for win in cfg.windows()]
    passed = all(r.passed for r in reports)
    worst = {"sqrt_form": max(abs(r.residual_sqrt_form) for r in reports),
             "cleared_form": max(abs(r.residual_cleared_form) for r in reports)}
    doc = _envelope(cfg, reports[0].equations, worst, tol, passed, fd_step=reports[0].fd_step,
                    points=[r.as_dict(min(cfg.digits, 30)) for r in reports])
    return Result(passed, doc)


def cmd_toda(cfg):
    w = cfg.weight()
    reps = []
    for win in cfg.windows():
        reps.append((win, calculus.toda_check(w, cfg.n, win, cfg.scheme(), cfg.digits),
                     calculus.gradient_check(w, cfg.n, win, cfg.scheme(), cfg.digits)))
    passed = all(t.passed and g.passed for _, t, g in reps)
    residuals = {}
    for _, t, g in reps:
        for k, v in list(t.residuals.items()) + list(g.residuals.items()):
            residuals[k] = max(residuals.get(k, mp.zero), abs(v))
    step = cfg.scheme().resolve(cfg.digits, reps[0][0])
    doc = _envelope(cfg, list(residuals), residuals, reps[0][1].tolerance, passed, fd_step=step,
                    points=[{**_window_doc(win, cfg.digits), "toda": t.as_dict(), "gradient": g.as_dict()}
                            for win, t, g in reps])
    return Result(passed, doc)


def sigma_residual(w, n, z, variable, scheme, digits):
    """Relative residual of the sigma form obeyed by the one-sided H (PIV or PV)."""
    sd = calculus.one_sided_sigma(w, n, z, variable=variable, scheme=scheme, digits=digits)
    if w.is_gaussian:
        kind, nu = "PIV", (2 * n, 0, 0)
    else:
        kind, nu = "PV", (n, n + w.alpha_mp(), 0, 0)
    with mp.workdps(digits + 20):
        r = painleve.sigma_ode_relative(kind, sd.sigma, sd.dsigma, sd.d2sigma, sd.z, {"nu": nu})
    return kind, r, sd


def cmd_sigma_ode(cfg):
    w = cfg.weight()
    variable = cfg.extra.get("variable") or "b"
    zs = cfg.extra.get("z_grid") or [cfg.extra.get("z")]
    if zs == [None]:
        raise ConfigError("z: sigma-ode needs --z or --z-grid")
    with mp.workdps(cfg.digits + 20):
        tol = mp.mpf(cfg.extra.get("tol") or "1e-8")
    points, worst, kind, step = [], mp.zero, None, None
    for z in zs:
        kind, r, sd = sigma_residual(w, cfg.n, z, variable, cfg.scheme(), cfg.digits)
        worst, step = max(worst, abs(r)), sd.step
        points.append({"z": _fmt(sd.z, cfg.digits), "residual": _fmt(r, cfg.digits),
                       **_window_doc(sd.window, cfg.digits)})
    name = "sigma_" + kind
    doc = _envelope(cfg, [name], {name: worst}, tol, worst < tol, fd_step=step,
                    variable=variable, points=points)
    return Result(worst < tol, doc)


def cmd_tw(cfg):
    smin, smax = cfg.extra["smin"], cfg.extra["smax"]
    points = cfg.extra["points"]
    dist = tracy_widom.solve_tw(smin, smax, points)
    gap_ = dist.max_route_gap()
    monotone = all(b >= a for a, b in zip(dist.F2, dist.F2[1:]))
    passed = gap_ < 1e-8 and monotone
    table = Table(("s", "F2"), ("float", "float"), list(zip(dist.s_grid, dist.F2)))
    doc = _envelope(cfg, ["fredholm_vs_painleve_II"], {"fredholm_vs_painleve_II": gap_}, 1e-8,
                    passed, monotone=monotone, columns=list(table.header), rows=table.to_records())
    return Result(passed, doc, table)


def _scaling_spec(cfg):
    if cfg.ensemble == "gue":
        return painleve.ScalingSpec.gue(n=cfg.n, c=cfg.c if cfg.c is not None else 2 ** -0.5)
    return painleve.ScalingSpec.lue(n=cfg.n, beta=cfg.beta, c=cfg.c if cfg.c is not None else 1.0)


def _float_grid(cfg, key, default):
    g = cfg.extra.get(key)
    return [float(v) for v in g] if g else default


def cmd_scaling_limit(cfg):
    spec = _scaling_spec(cfg)
    xs = _float_grid(cfg, "x_grid", [-2.0, -1.0, 0.0, 1.0, 2.0])
    ys = _float_grid(cfg, "y_grid", xs)
    try:
        prof = painleve.solve_edge_profiles(spec, xs, ys)
    except UnigapError as exc:
        raise ConfigError(f"x-grid: {exc}") from None
    pde, _ = painleve.limiting_pde_residual(prof)
    residuals = {"sigma_PII_f": prof.residual_f, "sigma_PII_g": prof.residual_g,
                 "limiting_pde": pde}
    passed = max(residuals.values()) < 1e-8
    rows = [["f", x, v] for x, v in zip(prof.x_grid, prof.f)]
    rows += [["g", y, v] for y, v in zip(prof.y_grid, prof.g)]
    table = Table(("side", "t", "value"), ("str", "float", "float"), rows)
    doc = _envelope(cfg, list(residuals), residuals, 1e-8, passed, c=spec.c, beta=spec.beta,
                    columns=list(table.header), rows=table.to_records())
    return Result(passed, doc, table)


def cmd_independence(cfg):
    spec = _scaling_spec(cfg)
    n_list = cfg.extra.get("n_list") or [4, 8, 16]
    default = [-2.0, -1.0, 0.0, 1.0, 2.0] if cfg.ensemble == "gue" else [-1.0, -0.5, 0.0, 0.5, 1.0]
    xs = _float_grid(cfg, "x_grid", default)
    ys = _float_grid(cfg, "y_grid", xs)
    try:
        rep = painleve.independence_check(spec, n_list, xs, ys, digits=cfg.digits)
    except UnigapError as exc:
        raise ConfigError(f"x-grid: {exc}") from None
    body = rep.as_dict()
    passed = body["E_decreasing"] and body["htilde_decreasing"]
    residuals = {f"E(n={r.n})": r.E_internal for r in rep.rows}
    residuals.update({f"htilde_dev(n={r.n})": r.htilde_dev for r in rep.rows})
    doc = _envelope(cfg, ["joint_minus_product", "htilde_minus_f_plus_g"], residuals,
                    "strictly decreasing in n", passed, report=body)
    return Result(passed, doc)


def cmd_mc(cfg):
    w, win = cfg.weight(), cfg.window()
    mc_cfg = oracle.MCConfig(trials=cfg.trials, seed=cfg.seed, n=cfg.n)
    est = oracle.mc_gap_probability(w, cfg.n, win, mc_cfg)
    exact = float(gap.gap_probability(gap.system_for(w, win, cfg.n, cfg.digits), cfg.n))
    zmult = float(cfg.extra.get("z_mult") or 1.96)
    half = est.ci95_halfwidth / 1.96 * zmult
    diff = abs(est.p_hat - exact)
    doc = _envelope(cfg, ["mc_vs_hankel"], {"mc_vs_hankel": diff}, half, diff <= half,
                    window=_window_doc(win, cfg.digits), p_hat=est.p_hat, hankel=exact,
                    trials=cfg.trials, seed=cfg.seed, z=zmult)
    return Result(diff <= half, doc)


def cmd_quad_oracle(cfg):
    w, win = cfg.weight(), cfg.window()
    if cfg.n > 3:
        raise ConfigError("n: direct quadrature is limited to n <= 3")
    direct = oracle.direct_quadrature_prob(w, cfg.n, win, digits=cfg.digits)
    hankel = gap.gap_probability(gap.system_for(w, win, cfg.n, cfg.digits), cfg.n)
    diff = abs(direct - hankel)
    tol = mp.mpf(10) ** (-mp.mpf(cfg.digits) / 2) if cfg.n < 3 else mp.mpf("1e-13")
    doc = _envelope(cfg, ["quadrature_vs_hankel"], {"quadrature_vs_hankel": diff}, tol, diff < tol,
                    window=_window_doc(win, cfg.digits), direct=_fmt(direct, cfg.digits),
                    hankel=_fmt(hankel, cfg.digits))
    return Result(diff < tol, doc)


COMMANDS = {
    "moments": cmd_moments, "recurrence": cmd_recurrence, "compat": cmd_compat,
    "surface": cmd_surface, "pde-gue": lambda c: _pde(c, "gue"), "pde-lue": lambda c: _pde(c, "lue"),
    "toda": cmd_toda, "sigma-ode": cmd_sigma_ode, "tw": cmd_tw, "scaling-limit": cmd_scaling_limit,
    "independence": cmd_independence, "mc": cmd_mc, "quad-oracle": cmd_quad_oracle,
}


# ---------------------------------------------------------------- selftest

def _selftest_checks():
    """(name, thunk -> (residual, tolerance)) for the fast acceptance subset."""
    G, L2 = WeightSpec.gaussian(), WeightSpec.laguerre(2)

    def erf_closed_form():
        p = gap.gap_probability(gap.system_for(G, Window(-1, 1), 1, 60), 1)
        with mp.workdps(80):
            return abs(p - mp.erf(1)), mp.mpf("1e-45")

    def compat(w, win):
        def run():
            rep = (ladder.verify_compat_gue if w.is_gaussian else ladder.verify_compat_lue)(
                gap.system_for(w, win, 3, 60), 3)
            return rep.worst(), rep.tolerance
        return run

    def construction():
        win = Window(-1, 2)
        s1 = orthopoly.build_from_moments(G, win, 6, numerics.PrecisionPolicy(60))
        s2 = orthopoly.build_by_quadrature(G, win, 6, digits=60)
        return orthopoly.max_relative_deviation(s1, s2), mp.mpf("1e-20")

    def gradient():
        rep = calculus.gradient_check(G, 2, Window(-1, 1.5), digits=60)
        return rep.worst(), rep.tolerance

    def pde():
        rep = calculus.pde_residual_gue(G, 2, Window(-1, 1.5), digits=80)
        return max(abs(rep.residual_sqrt_form), abs(rep.residual_cleared_form)), rep.tolerance

    def toda():
        rep = calculus.toda_check(G, 2, Window(-1, 1.5), digits=60)
        return rep.worst(), rep.tolerance

    def sigma():
        _, r, _ = sigma_residual(G, 2, 1, "b", calculus.FDScheme(), 60)
        return abs(r), mp.mpf("1e-8")

    def tw():
        dist = tracy_widom.solve_tw(-6, 4, 11)
        return dist.max_route_gap(), 1e-8

    def quad():
        win = Window(-1, 1)
        d = oracle.direct_quadrature_prob(G, 2, win, digits=40)
        h = gap.gap_probability(gap.system_for(G, win, 2, 40), 2)
        return abs(d - h), mp.mpf("1e-20")

    def mc():
        win = Window(-1.5, 1.5)
        est = oracle.mc_gap_probability(G, 2, win, oracle.MCConfig(20_000, 12345, 2))
        exact = float(gap.gap_probability(gap.system_for(G, win, 2, 40), 2))
        # four binomial standard errors: a fixed-seed sanity band, not a coverage claim
        return abs(est.p_hat - exact), 4 * est.ci95_halfwidth / 1.96

    return [
        ("erf_closed_form", erf_closed_form),
        ("compat_gue", compat(G, Window(-1, 1.5))),
        ("compat_lue", compat(L2, Window(mp.mpf("0.5"), 6))),
        ("moments_vs_quadrature", construction),
        ("gradient_gue", gradient),
        ("pde_gue", pde),
        ("toda_gue", toda),
        ("sigma_PIV", sigma),
        ("tw_routes", tw),
        ("quadrature_oracle", quad),
        ("monte_carlo", mc),
    ]


def selftest(tolerance_scale=1.0):
    """Run the fast checks; returns (report dict, name of first failure or None)."""
    rows, first = [], None
    for name, thunk in _selftest_checks():
        residual, tol = thunk()
        tol = tol * tolerance_scale
        ok = bool(abs(residual) < tol)
        if not ok and first is None:
            first = name
        rows.append({"check": name, "residual": _fmt(residual, 5), "tolerance": _fmt(tol, 5),
                     "pass": ok})
    doc = {"schema": SCHEMA_VERSION, "subcommand": "selftest",
           "equations": [r["check"] for r in rows], "digits": 60, "fd_step": None,
           "residuals": {r["check"]: r["residual"] for r in rows},
           "tolerance": {r["check"]: r["tolerance"] for r in rows},
           "checks": rows, "first_failure": first, "pass": first is None}
    return doc, first


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    """Accepts negative numbers, -inf and grids like -2:0:5 as option values."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-(\d|\.\d|inf)")


def _common(p, csv_default=True):
    p.add_argument("--ensemble", choices=("gue", "lue"), default="gue")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--alpha", default=None, help="Laguerre exponent (lue only, default 1)")
    p.add_argument("--a", default=None, help="left endpoint (number or -inf)")
    p.add_argument("--b", default=None, help="right endpoint (number or inf)")
    p.add_argument("--digits", type=int, default=60)
    p.add_argument("--out", default=None, help="output file (default $%s/<subcommand>.<ext> or stdout)"
                   % OUTPUT_ENV)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                   default="csv" if csv_default else "json")


def _fd(p):
    p.add_argument("--fd-step", default=None)
    p.add_argument("--fd-order", choices=(calculus.CENTRAL2, calculus.RICHARDSON4),
                   default=calculus.RICHARDSON4)


def _grids(p):
    p.add_argument("--a-grid", default=None, help="start:end:count")
    p.add_argument("--b-grid", default=None, help="start:end:count")


def build_parser():
    parser = _Parser(prog="unigap", description="Gap probabilities of unitary ensembles: "
                     "ladder identities, PDE and Painleve checks, oracles.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name in ("moments", "recurrence"):
        _common(sub.add_parser(name, help=f"tabulate {name}"))
    _common(sub.add_parser("compat", help="ladder compatibility identities"), csv_default=False)
    p = sub.add_parser("surface", help="Prob, log D, H, p1 on an (a, b) grid")
    _common(p)
    _grids(p)
    for name in ("pde-gue", "pde-lue"):
        p = sub.add_parser(name, help="master PDE residuals")
        _common(p, csv_default=False)
        _fd(p)
        _grids(p)
        p.add_argument("--tol", default=None)
    p = sub.add_parser("toda", help="Toda equations and H gradient checks")
    _common(p, csv_default=False)
    _fd(p)
    _grids(p)
    p = sub.add_parser("sigma-ode", help="sigma-form residual of the one-sided problem")
    _common(p, csv_default=False)
    _fd(p)
    p.add_argument("--z", default=None)
    p.add_argument("--z-grid", default=None)
    p.add_argument("--variable", choices=("a", "b"), default="b")
    p.add_argument("--tol", default=None)
    p = sub.add_parser("tw", help="Tracy-Widom F2 table")
    _common(p)
    p.add_argument("--smin", type=float, default=-6.0)
    p.add_argument("--smax", type=float, default=4.0)
    p.add_argument("--points", type=int, default=101)
    for name in ("scaling-limit", "independence"):
        p = sub.add_parser(name, help="soft-edge scaling" if name == "scaling-limit"
                           else "asymptotic independence of the two edges")
        _common(p, csv_default=(name == "scaling-limit"))
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--x-grid", default=None)
        p.add_argument("--y-grid", default=None)
        if name == "independence":
            p.add_argument("--n-list", default="4,8,16")
    p = sub.add_parser("mc", help="Monte-Carlo gap probability against the Hankel route")
    _common(p, csv_default=False)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z-mult", type=float, default=1.96, help="CI half-width in standard errors")
    p = sub.add_parser("quad-oracle", help="direct n-fold quadrature against the Hankel route")
    _common(p, csv_default=False)
    p = sub.add_parser("selftest", help="fast acceptance subset")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every tolerance (0 forces failure)")
    p.add_argument("--out", default=None)
    return parser


def config_from_args(ns):
    g = vars(ns)
    extra = {}
    cfg = RunConfig(subcommand=ns.subcommand)
    if ns.subcommand == "selftest":
        cfg.fmt, cfg.out = "json", ns.out
        return cfg.validate()
    for key in ("ensemble", "n", "alpha", "a", "b", "digits", "out", "fmt", "fd_step", "fd_order",
                "a_grid", "b_grid", "c", "beta", "trials", "seed"):
        if key in g:
            setattr(cfg, key, g[key])
    for key in ("z", "variable", "tol", "smin", "smax", "points", "z_mult"):
        if key in g:
            extra[key] = g[key]
    if g.get("z_grid"):
        extra["z_grid"] = parse_grid(g["z_grid"], "z-grid", ns.digits)
    for key in ("x_grid", "y_grid"):
        if g.get(key):
            extra[key] = parse_grid(g[key], key.replace("_", "-"), 30)
    if g.get("n_list"):
        extra["n_list"] = parse_int_list(g["n_list"], "n-list")
    if ns.subcommand == "tw":
        if not extra["smin"] < extra["smax"]:
            raise ConfigError("smin: must be below smax")
        if extra["points"] < 2:
            raise ConfigError("points: need at least 2")
    cfg.extra = extra
    return cfg.validate()


def _render(cfg, res):
    if "text" in res.doc:
        return res.doc["text"]
    if cfg.fmt == "csv" and res.table is not None:
        return res.table.to_csv()
    return json.dumps(res.doc, indent=1, sort_keys=False) + "\n"


def _destination(cfg):
    if cfg.out:
        return cfg.out
    d = os.environ.get(OUTPUT_ENV)
    if d:
        os.makedirs(d, exist_ok=True)
        return os.path.join(d, f"{cfg.subcommand}.{cfg.fmt}")
    return None


def _emit(cfg, text):
    dest = _destination(cfg)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def run(argv=None):
    """Parse, validate, compute, write. Returns the exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = config_from_args(ns)
        if cfg.subcommand == "selftest":
            doc, first = selftest(ns.tolerance_scale)
            _emit(cfg, json.dumps(doc, indent=1) + "\n")
            if first:
                print(f"selftest: FAILED at {first}", file=sys.stderr)
                return 1
            return 0
        res = COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnigapError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    _emit(cfg, _render(cfg, res))
    if not res.passed:
        print(f"{cfg.subcommand}: verification FAILED", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
