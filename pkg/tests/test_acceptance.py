"""Acceptance criteria, one test per criterion; each prints a pass/fail summary line."""

import time
from statistics import NormalDist

import numpy as np
import pytest
from mpmath import mp

from unigap import calculus, gap, ladder, numerics, oracle, orthopoly, painleve, tracy_widom
from unigap.weights import Window, WeightSpec

G = WeightSpec.gaussian()


def _random_windows(kind, rng, count=10):
    """Seeded windows with a few infinite (or support-edge) endpoints mixed in."""
    out = []
    for i in range(count):
        if kind == "gue":
            a = float(rng.uniform(-3, 1))
            b = a + float(rng.uniform(0.5, 4))
            if i == count - 2:
                a = -mp.inf
            if i == count - 1:
                b = mp.inf
        else:
            a = float(rng.uniform(0, 3))
            b = a + float(rng.uniform(0.5, 10))
            if i == count - 2:
                a = 0
            if i == count - 1:
                b = mp.inf
        out.append(Window(a, b))
    return out


def test_criterion_1_compatibility_suite(record_criterion):
    t0 = time.time()
    rng = np.random.default_rng(2024)
    digits, worst, failures, count = 80, mp.zero, [], 0
    for kind in ("gue", "lue"):
        for i, win in enumerate(_random_windows(kind, rng)):
            w = G if kind == "gue" else WeightSpec.laguerre([0.5, 1, 2, 3.5][i % 4])
            sys_ = orthopoly.build_from_moments(w, win, 7, numerics.PrecisionPolicy(digits))
            for n in range(1, 7):
                verify = ladder.verify_compat_gue if kind == "gue" else ladder.verify_compat_lue
                rep = verify(sys_, n)
                count += 1
                worst = max(worst, rep.worst())
                if not rep.passed:
                    failures.append((kind, win, n, rep.failures()))
    elapsed = time.time() - t0
    tol = mp.mpf(10) ** (-mp.mpf(digits) / 3)
    ok = not failures and elapsed < 60
    record_criterion(1, "compatibility identities", ok,
                     f"{count} (window, n) cases, worst relative residual {mp.nstr(worst, 3)} "
                     f"< {mp.nstr(tol, 3)}, {elapsed:.1f}s")
    assert not failures, failures[:3]
    assert elapsed < 60


def test_criterion_2_construction_cross_validation(record_criterion):
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst, bad = mp.zero, []
    for kind in ("gue", "lue"):
        w = G if kind == "gue" else WeightSpec.laguerre(2)
        for win in _random_windows(kind, rng):
            s1 = orthopoly.build_from_moments(w, win, 10, numerics.PrecisionPolicy(60))
            s2 = orthopoly.build_by_quadrature(w, win, 10, digits=60)
            dev = orthopoly.max_relative_deviation(s1, s2)
            worst = max(worst, dev)
            if not dev < mp.mpf("1e-20"):
                bad.append((kind, win, dev))
    elapsed = time.time() - t0
    ok = not bad and elapsed < 60
    record_criterion(2, "moments vs Stieltjes quadrature", ok,
                     f"20 windows, n_max = 10, worst deviation in (h, alpha, beta, p1) "
                     f"{mp.nstr(worst, 3)} < 1e-20, {elapsed:.1f}s")
    assert not bad, bad
    assert elapsed < 60


def _fd_logdet_flow(w, n, win, digits):
    """Richardson FD of ln D_n along (a + t, b + t) (Gaussian) or (a e^t, b e^t) (Laguerre)."""
    h = calculus.default_step(digits, win)
    with mp.workdps(digits + numerics.required_digits(n + 2) + 10):
        a, b = mp.mpf(win.a), mp.mpf(win.b)
        if w.is_gaussian:
            move = lambda t: (a + t, b + t)
        else:
            move = lambda t: (a * mp.exp(t), b * mp.exp(t))

        def logd(t):
            lo, hi = move(t)
            return gap.log_hankel_det(gap.system_for(w, Window(lo, hi), n, digits), n)

        d1 = (logd(h) - logd(-h)) / (2 * h)
        d2 = (logd(h / 2) - logd(-h / 2)) / h
        return (4 * d2 - d1) / 3, h


def test_criterion_3_H_identities(record_criterion):
    t0 = time.time()
    digits = 60
    cases = [(G, Window(-1, 1.5)), (G, Window(-2, 0.5)), (G, Window(-mp.inf, 1)),
             (WeightSpec.laguerre(2), Window(0.5, 6)), (WeightSpec.laguerre(1), Window(1, 4)),
             (WeightSpec.laguerre(1), Window(2, mp.inf))]
    id_worst, grad_worst, flow_worst, bad = mp.zero, mp.zero, mp.zero, []
    id_tol = mp.mpf(10) ** (-mp.mpf(digits) / 2)
    fd_tol = mp.mpf(10) ** (-2 * mp.mpf(digits) / 5)
    for w, win in cases:
        for n in (1, 2, 3, 4):
            sys_ = gap.system_for(w, win, n, digits)
            with mp.workdps(sys_.digits_used):
                H_def = gap.H_from_log_derivative(sys_, n)
                H_p1 = gap.H_value(sys_, n).H
                r = abs(H_def - H_p1) / max(1, abs(H_p1))
            id_worst = max(id_worst, r)
            if not r < id_tol:
                bad.append(("identity", w.kind, win, n, r))
            if win.finite:
                rep = calculus.gradient_check(w, n, win, digits=digits)
                grad_worst = max(grad_worst, rep.worst())
                if not rep.passed or rep.tolerance > fd_tol * (1 + mp.mpf(10) ** -10):
                    bad.append(("gradient", w.kind, win, n, rep.failures()))
                flow, _ = _fd_logdet_flow(w, n, win, digits)
                with mp.workdps(sys_.digits_used):
                    rf = abs(flow - H_p1) / max(1, abs(H_p1))
                flow_worst = max(flow_worst, rf)
                if not rf < fd_tol:
                    bad.append(("flow", w.kind, win, n, rf))
    elapsed = time.time() - t0
    ok = not bad and elapsed < 60
    record_criterion(3, "H identities and gradients", ok,
                     f"H vs p1 form {mp.nstr(id_worst, 3)} < {mp.nstr(id_tol, 3)}; FD gradients "
                     f"{mp.nstr(grad_worst, 3)} and FD d ln D along the flow {mp.nstr(flow_worst, 3)} "
                     f"< {mp.nstr(fd_tol, 3)}, {elapsed:.1f}s")
    assert not bad, bad
    assert elapsed < 60


def test_criterion_4_master_pdes(record_criterion):
    t0 = time.time()
    grids = {
        "gue": (G, [-1.5, -1, -0.5], [0.5, 1, 1.5], calculus.pde_residual_gue, "1e-10", 80),
        "lue": (WeightSpec.laguerre(1), [0.5, 1, 1.5], [4, 6, 8], calculus.pde_residual_lue,
                "1e-8", 100),
    }
    worst, bad = {}, []
    for kind, (w, a_list, b_list, fn, tol, digits) in grids.items():
        worst[kind] = mp.zero
        for n in (2, 3, 4):
            for a in a_list:
                for b in b_list:
                    rep = fn(w, n, Window(a, b), digits=digits, tol=tol)
                    worst[kind] = max(worst[kind], abs(rep.residual_sqrt_form),
                                      abs(rep.residual_cleared_form))
                    if not rep.passed:
                        bad.append((kind, n, a, b, rep.as_dict(5)))
    ratios = {}
    for kind, (w, a_list, b_list, fn, _, digits) in grids.items():
        win = Window(a_list[1], b_list[2])
        r1, r2 = (fn(w, 3, win, calculus.FDScheme(step=h, order=calculus.CENTRAL2), digits=digits,
                     tol="1") for h in ("1e-3", "5e-4"))
        ratios[kind] = (float(abs(r1.residual_sqrt_form / r2.residual_sqrt_form)),
                        float(abs(r1.residual_cleared_form / r2.residual_cleared_form)))
    ratio_ok = all(3.5 < r < 4.5 for pair in ratios.values() for r in pair)
    elapsed = time.time() - t0
    ok = not bad and ratio_ok and elapsed < 300
    record_criterion(4, "master PDEs", ok,
                     f"GUE worst {mp.nstr(worst['gue'], 3)} < 1e-10, LUE worst "
                     f"{mp.nstr(worst['lue'], 3)} < 1e-8 (27 points each, square-root and cleared "
                     f"forms); central2 residual ratio on halving the step "
                     f"GUE {ratios['gue'][0]:.3f}/{ratios['gue'][1]:.3f}, LUE "
                     f"{ratios['lue'][0]:.3f}/{ratios['lue'][1]:.3f}, {elapsed:.1f}s")
    assert not bad, bad[:2]
    assert ratio_ok, ratios
    assert elapsed < 300


def test_criterion_5_toda(record_criterion):
    t0 = time.time()
    cases = {
        "gue": (G, [(-1, 1.5), (-2, 0.5), (-0.5, 2), (-1.5, 1.5), (0, 2.5)]),
        "lue": (WeightSpec.laguerre(2), [(0.5, 6), (1, 4), (0.3, 9), (2, 7), (1.5, 12)]),
    }
    worst, bad = mp.zero, []
    for kind, (w, wins) in cases.items():
        for n in (2, 3):
            for a, b in wins:
                rep = calculus.toda_check(w, n, Window(a, b), digits=60)
                worst = max(worst, rep.worst() / rep.tolerance)
                if not rep.passed:
                    bad.append((kind, n, a, b, rep.failures()))
    elapsed = time.time() - t0
    ok = not bad and elapsed < 60
    record_criterion(5, "Toda equations", ok,
                     f"20 cases, worst residual/FD-tolerance {mp.nstr(worst, 3)} < 1, {elapsed:.1f}s")
    assert not bad, bad
    assert elapsed < 60


def test_criterion_6_sigma_reductions(record_criterion):
    from unigap.cli import sigma_residual

    t0 = time.time()
    cases = [(G, n, z, "b") for n in (1, 2, 3) for z in (-0.5, 0.5, 1.5)]
    cases += [(G, n, z, "a") for n in (2, 3) for z in (-1.5, 0.5)]
    cases += [(WeightSpec.laguerre(al), n, z, "b") for al in (1, 2) for n in (1, 2, 3) for z in (1, 3, 6)]
    cases += [(WeightSpec.laguerre(1), n, z, "a") for n in (2, 3) for z in (0.5, 2)]
    worst, bad = {"PIV": mp.zero, "PV": mp.zero}, []
    for w, n, z, var in cases:
        kind, r, _ = sigma_residual(w, n, z, var, calculus.FDScheme(), 60)
        worst[kind] = max(worst[kind], abs(r))
        if not abs(r) < mp.mpf("1e-8"):
            bad.append((w.kind, n, z, var, r))
    elapsed = time.time() - t0
    ok = not bad and elapsed < 120
    record_criterion(6, "sigma-form reductions", ok,
                     f"{len(cases)} one-sided cases, sigma-PIV worst {mp.nstr(worst['PIV'], 3)}, "
                     f"sigma-PV worst {mp.nstr(worst['PV'], 3)} < 1e-8, {elapsed:.1f}s")
    assert not bad, bad
    assert elapsed < 120


ORACLE_WINDOWS = {
    "gue": [(1, None, -1, 1), (2, None, -1, 1), (3, None, -1.5, 1.5), (1, None, -0.5, 2),
            (2, None, -2, 0.8), (3, None, -1, 2.5), (1, None, -mp.inf, 0.3),
            (2, None, -1.2, mp.inf), (3, None, -2, 2), (2, None, 0, 3)],
    "lue": [(1, 1, 0.5, 4), (2, 1, 0.5, 6), (3, 1, 0.5, 9), (1, 2, 1, mp.inf),
            (2, 2, 0.3, mp.inf), (3, 2, 1, 10), (2, 2, 1, 7), (3, 1, 0.2, 8), (1, 2, 0, 5),
            (2, 1, 0, 4)],
}


def test_criterion_7_oracle_triangle(record_criterion):
    t0 = time.time()
    comparisons = sum(len(v) for v in ORACLE_WINDOWS.values())
    z_family = NormalDist().inv_cdf(1 - 0.05 / (2 * comparisons))
    quad_worst, inside95, bad, idx = 0.0, 0, [], 0
    for kind, rows in ORACLE_WINDOWS.items():
        for n, alpha, a, b in rows:
            w = G if alpha is None else WeightSpec.laguerre(alpha)
            win = Window(a, b)
            hankel = gap.gap_probability(gap.system_for(w, win, n, 40), n)
            direct = oracle.direct_quadrature_prob(w, n, win, digits=40)
            qtol = mp.mpf("1e-20") if n < 3 else mp.mpf("1e-13")
            qdiff = abs(direct - hankel)
            quad_worst = max(quad_worst, float(qdiff))
            est = oracle.mc_gap_probability(w, n, win, oracle.MCConfig(100_000, idx, n))
            se = max(est.ci95_halfwidth / 1.96, 1 / est.trials)
            d_mc = abs(est.p_hat - float(hankel))
            inside95 += d_mc <= 1.96 * se
            if not qdiff < qtol or not d_mc <= z_family * se or \
                    not abs(est.p_hat - float(direct)) <= z_family * se:
                bad.append((kind, n, a, b, float(qdiff), d_mc / se))
            idx += 1
    erf_p = gap.gap_probability(gap.system_for(G, Window(-1, 1), 1, 60), 1)
    with mp.workdps(80):
        erf_err = abs(erf_p - mp.erf(1))
    erf_ok = erf_err < mp.mpf("1e-50")
    elapsed = time.time() - t0
    ok = not bad and erf_ok and elapsed < 180
    record_criterion(7, "oracle triangle", ok,
                     f"{comparisons} windows: Hankel vs direct quadrature worst {quad_worst:.2e}; "
                     f"MC (1e5 trials) within the 95% CI on {inside95}/{comparisons}, all within the "
                     f"family-wise band z = {z_family:.2f}; erf(1) error {mp.nstr(erf_err, 3)}, "
                     f"{elapsed:.1f}s")
    assert not bad, bad
    assert erf_ok
    assert elapsed < 180


def test_criterion_8_scaling_limits(record_criterion):
    t0 = time.time()
    specs = [painleve.ScalingSpec.gue(c=2 ** -0.5), painleve.ScalingSpec.gue(c=1.3),
             painleve.ScalingSpec.lue(beta=1.0), painleve.ScalingSpec.lue(beta=0.5, c=0.8),
             painleve.ScalingSpec.lue(beta=3.0, c=1.2)]
    grid = list(np.linspace(-3, 3, 13))
    sigma_worst = pde_worst = 0.0
    for spec in specs:
        prof = painleve.solve_edge_profiles(spec, grid, grid)
        sigma_worst = max(sigma_worst, prof.residual_f, prof.residual_g)
        pde_worst = max(pde_worst, painleve.limiting_pde_residual(prof)[0])
    tw = tracy_widom.solve_tw(-6, 4, 51)
    route_gap = tw.max_route_gap()
    elapsed = time.time() - t0
    ok = sigma_worst < 1e-8 and pde_worst < 1e-8 and route_gap < 1e-8 and elapsed < 180
    record_criterion(8, "scaling limits", ok,
                     f"sigma-PII worst {sigma_worst:.2e}, limiting PDE worst {pde_worst:.2e}, "
                     f"TW Fredholm vs Painleve II on [-6, 4] {route_gap:.2e} (all < 1e-8), "
                     f"{elapsed:.1f}s")
    assert sigma_worst < 1e-8
    assert pde_worst < 1e-8
    assert route_gap < 1e-8
    assert elapsed < 180


def test_criterion_9_asymptotic_independence(record_criterion):
    t0 = time.time()
    n_list = [4, 8, 16]
    gue_rep = painleve.independence_check(painleve.ScalingSpec.gue(c=2 ** -0.5), n_list,
                                          [-2, -1, 0, 1, 2], [-2, -1, 0, 1, 2])
    lue_rep = painleve.independence_check(painleve.ScalingSpec.lue(beta=1.0), n_list,
                                          [-1, -0.5, 0, 0.5, 1], [-1, -0.5, 0, 0.5, 1])
    e_gue = gue_rep.sequence("E_internal")
    h_lue = lue_rep.sequence("htilde_dev")
    elapsed = time.time() - t0
    ok = gue_rep.strictly_decreasing() and lue_rep.strictly_decreasing("htilde_dev") \
        and elapsed < 900
    record_criterion(9, "asymptotic independence", ok,
                     "GUE E(n) for n = 4, 8, 16: " + ", ".join(f"{v:.4g}" for v in e_gue)
                     + "; LUE |Htilde - (f + g)|: " + ", ".join(f"{v:.4g}" for v in h_lue)
                     + f", {elapsed:.1f}s")
    assert gue_rep.strictly_decreasing()
    assert lue_rep.strictly_decreasing("htilde_dev")
    assert all(r.lower_bound_ok for r in gue_rep.rows + lue_rep.rows)
    assert elapsed < 900


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
