import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from unigap import numerics, orthopoly
from unigap.errors import DomainError
from unigap.weights import Window, WeightSpec, weight_at

G = WeightSpec.gaussian()


def test_whole_line_reproduces_hermite_recurrence():
    s = orthopoly.build_from_moments(G, Window.whole(G), 8, numerics.PrecisionPolicy(40))
    with mp.workdps(40):
        for k in range(9):
            assert abs(s.alpha[k]) < mp.mpf(10) ** -35
            if k:
                assert abs(s.beta[k] - mp.mpf(k) / 2) < mp.mpf(10) ** -35
            assert abs(s.p1[k]) < mp.mpf(10) ** -35


@pytest.mark.parametrize("alpha", [0.5, 1, 3])
def test_half_line_reproduces_laguerre_recurrence(alpha):
    L = WeightSpec.laguerre(alpha)
    s = orthopoly.build_from_moments(L, Window.whole(L), 7, numerics.PrecisionPolicy(40))
    with mp.workdps(40):
        a = mp.mpf(alpha)
        for k in range(8):
            assert abs(s.alpha[k] - (2 * k + a + 1)) < mp.mpf(10) ** -30
            if k:
                assert abs(s.beta[k] - k * (k + a)) < mp.mpf(10) ** -30
            assert abs(s.p1[k] + k * (k + a)) < mp.mpf(10) ** -30


@given(st.floats(-2.5, 1), st.floats(0.5, 3.5))
@settings(max_examples=10, deadline=None)
def test_moment_and_stieltjes_routes_agree(a, width):
    win = Window(a, a + width)
    s1 = orthopoly.build_from_moments(G, win, 6, numerics.PrecisionPolicy(40))
    s2 = orthopoly.build_by_quadrature(G, win, 6, nodes=128, digits=40)
    assert orthopoly.max_relative_deviation(s1, s2) < mp.mpf("1e-25")


def test_monic_polynomials_are_orthogonal_with_norms_h():
    win = Window(-0.7, 1.9)
    s = orthopoly.build_from_moments(G, win, 5, numerics.PrecisionPolicy(40))
    with mp.workdps(50):
        for j in range(4):
            for k in range(j, 4):
                ip = mp.quad(lambda x: orthopoly.eval_monic(s, j, x) * orthopoly.eval_monic(s, k, x)
                             * weight_at(G, x), [-0.7, 1.9])
                target = s.h[j] if j == k else 0
                assert abs(ip - target) < mp.mpf(10) ** -30


def test_endpoint_values_match_evaluation():
    L = WeightSpec.laguerre(2)
    s = orthopoly.build_from_moments(L, Window(0.5, 6), 4, numerics.PrecisionPolicy(40))
    with mp.workdps(s.digits_used):
        for k in range(5):
            assert abs(s.Pa[k] - orthopoly.eval_monic(s, k, mp.mpf("0.5"))) < mp.mpf(10) ** -35
            assert abs(s.Pb[k] - orthopoly.eval_monic(s, k, 6)) < mp.mpf(10) ** -30


def test_precision_target_is_met():
    win = Window(-1, 2)
    s60 = orthopoly.build_from_moments(G, win, 20, numerics.PrecisionPolicy(60))
    s200 = orthopoly.build_from_moments(G, win, 20, numerics.PrecisionPolicy(200))
    assert orthopoly.max_relative_deviation(s60, s200) < mp.mpf(10) ** -55


def test_quadrature_route_rejects_too_few_nodes():
    with pytest.raises(DomainError):
        orthopoly.build_by_quadrature(G, Window(-1, 1), 10, nodes=20)
