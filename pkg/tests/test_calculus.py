import pytest
from mpmath import mp

from unigap import calculus, gap, painleve
from unigap.errors import DomainError
from unigap.weights import Window, WeightSpec

G = WeightSpec.gaussian()
L1 = WeightSpec.laguerre(1)


@pytest.mark.parametrize("a,b,n", [(-1, 1.5, 2), (-2, 0.3, 3), (0.2, 2.2, 4)])
def test_gue_master_pde(a, b, n):
    rep = calculus.pde_residual_gue(G, n, Window(a, b), digits=80)
    assert rep.passed, rep.as_dict(5)
    assert abs(rep.residual_sqrt_form) < mp.mpf(10) ** -40
    assert abs(rep.checks["quartic_vs_4beta"]) < mp.mpf(10) ** -40


@pytest.mark.parametrize("alpha,a,b,n", [(1, 0.5, 6, 3), (2, 1, 4, 2), (0.5, 2, 9, 4)])
def test_lue_master_pde(alpha, a, b, n):
    rep = calculus.pde_residual_lue(WeightSpec.laguerre(alpha), n, Window(a, b), digits=100)
    assert rep.passed, rep.as_dict(5)
    assert abs(rep.residual_cleared_form) < mp.mpf(10) ** -40


def test_lue_octic_as_typeset_does_not_vanish():
    rep = calculus.pde_residual_lue(L1, 3, Window(0.5, 6), digits=100)
    t = rep.terms
    with mp.workdps(120):
        P = t.Delta1 * t.Delta2
        inner = (t.k ** 2 - t.l ** 2 * (t.Delta1 + t.Delta2) - P) ** 2 \
            - 4 * t.l ** 2 * P * (t.l ** 2 + mp.sqrt(P) + t.Delta1 + t.Delta2)
        scale = max(abs((inner ** 2 - 16 * t.l ** 6 * P * P * (t.Delta1 + t.Delta2)) ** 2),
                    abs(1024 * t.l ** 12 * P ** 5))
        assert abs(calculus.lue_printed_polynomial(t)) / scale > 1e-3


def test_central_difference_error_quarters_with_the_step():
    win = Window(-1, 1.5)
    r = [calculus.pde_residual_gue(G, 3, win, calculus.FDScheme(step=h, order=calculus.CENTRAL2),
                                   digits=80, tol="1") for h in ("2e-3", "1e-3")]
    ratio = r[0].residual_sqrt_form / r[1].residual_sqrt_form
    assert 3.8 < ratio < 4.2


@pytest.mark.parametrize("w,win", [(G, Window(-1, 1.5)), (WeightSpec.laguerre(2), Window(0.5, 6))])
def test_toda_and_gradient(w, win):
    for n in (2, 3):
        assert calculus.toda_check(w, n, win).passed
        assert calculus.gradient_check(w, n, win).passed


def test_gue_toda_with_the_opposite_constant_fails():
    rep = calculus.toda_check(G, 2, Window(-1, 1.5))
    assert abs(rep.raw["toda_alpha_flipped_constant"]) > 1


def test_exact_first_partials_match_H_finite_differences():
    win = Window(-0.8, 1.1)
    sys_ = gap.system_for(G, win, 3, 60)
    Ha, Hb = calculus.exact_first_partials(sys_, 3)
    with mp.workdps(90):
        h = mp.mpf("1e-15")
        up = gap.gap_point(G, 3, win.a + h, win.b, 60).H
        dn = gap.gap_point(G, 3, win.a - h, win.b, 60).H
        assert abs((up - dn) / (2 * h) - Ha) < mp.mpf(10) ** -20


def test_fd_scheme_validation():
    with pytest.raises(DomainError):
        calculus.FDScheme(order="forward")
    with pytest.raises(DomainError):
        calculus.FDScheme(step=0)
    with pytest.raises(DomainError):
        calculus.FDScheme(step="0.5").resolve(60, Window(0, 1))
    with pytest.raises(DomainError):
        calculus.h_derivatives(G, 2, Window(-mp.inf, 1))
    with pytest.raises(DomainError):
        calculus.h_derivatives(L1, 2, Window(1e-13, 3), calculus.FDScheme(step="1e-12"))


@pytest.mark.parametrize("variable,z", [("b", 0.5), ("a", -0.5)])
def test_sigma_PIV_one_sided(variable, z):
    for n in (1, 2, 3):
        sd = calculus.one_sided_sigma(G, n, z, variable=variable, digits=60)
        with mp.workdps(80):
            r = painleve.sigma_ode_relative("PIV", sd.sigma, sd.dsigma, sd.d2sigma, sd.z,
                                            {"nu": (2 * n, 0, 0)})
        assert abs(r) < mp.mpf(10) ** -40


@pytest.mark.parametrize("variable,z", [("b", 3), ("a", 1.5)])
def test_sigma_PV_one_sided(variable, z):
    for n in (1, 2, 3):
        sd = calculus.one_sided_sigma(L1, n, z, variable=variable, digits=60)
        with mp.workdps(80):
            r = painleve.sigma_ode_relative("PV", sd.sigma, sd.dsigma, sd.d2sigma, sd.z,
                                            {"nu": (n, n + 1, 0, 0)})
        assert abs(r) < mp.mpf(10) ** -40


def test_truncated_far_endpoint_degrades_gracefully():
    exact = calculus.one_sided_sigma(G, 3, 1, digits=60)
    cut = calculus.one_sided_sigma(G, 3, 1, far=-10, digits=60)
    with mp.workdps(80):
        r = painleve.sigma_ode_relative("PIV", cut.sigma, cut.dsigma, cut.d2sigma, cut.z,
                                        {"nu": (6, 0, 0)})
        assert abs(exact.sigma - cut.sigma) < mp.mpf(10) ** -30
        assert abs(r) < mp.mpf(10) ** -30
