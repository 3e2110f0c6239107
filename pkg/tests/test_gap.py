import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from unigap import gap, numerics
from unigap.errors import DomainError
from unigap.weights import Window, WeightSpec, moment_vector

G = WeightSpec.gaussian()


def test_single_level_gaussian_is_erf():
    p = gap.gap_probability(gap.system_for(G, Window(-1, 1), 1, 60), 1)
    with mp.workdps(70):
        assert abs(p - mp.erf(1)) < mp.mpf(10) ** -58


@pytest.mark.parametrize("alpha,a,b", [(1, 0.5, 3), (2.5, 0, 4), (3, 2, mp.inf)])
def test_single_level_laguerre_is_regularized_gamma(alpha, a, b):
    w = WeightSpec.laguerre(alpha)
    p = gap.gap_probability(gap.system_for(w, Window(a, b), 1, 50), 1)
    with mp.workdps(60):
        ref = mp.gammainc(alpha + 1, a, b, regularized=True)
        assert abs(p - ref) < mp.mpf(10) ** -45


@pytest.mark.parametrize("w,a,b,n", [(G, -1.3, 0.8, 4), (WeightSpec.laguerre(2), 0.5, 7, 3)])
def test_hankel_determinant_matches_direct_determinant(w, a, b, n):
    sys_ = gap.system_for(w, Window(a, b), n, 50)
    with mp.workdps(120):
        mu = moment_vector(w, Window(a, b), 2 * n, 100)
        M = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                M[i, j] = mu[i + j]
        assert abs(gap.log_hankel_det(sys_, n) - mp.log(mp.det(M))) < mp.mpf(10) ** -45


@given(st.floats(-2, 0), st.floats(0.1, 1), st.floats(0.1, 1), st.integers(1, 4))
@settings(max_examples=15, deadline=None)
def test_probability_grows_with_the_window(a, width, extra, n):
    b = a + 1 + width
    small = gap.log_gap_probability(gap.system_for(G, Window(a, b), n, 40), n)
    big = gap.log_gap_probability(gap.system_for(G, Window(a - extra, b + extra), n, 40), n)
    assert small < big <= 0


def test_whole_support_has_probability_one_and_zero_H():
    for w in (G, WeightSpec.laguerre(1.5)):
        pt = gap.H_value(gap.system_for(w, Window.whole(w), 3, 40), 3)
        assert abs(pt.logProb) < mp.mpf(10) ** -30
        assert abs(pt.H) < mp.mpf(10) ** -30


def test_symmetric_gaussian_window_has_zero_H():
    pt = gap.gap_point(G, 3, -1.2, 1.2, 40)
    assert abs(pt.p1) < mp.mpf(10) ** -35 and abs(pt.H) < mp.mpf(10) ** -35


@pytest.mark.parametrize("w,a,b", [(G, -1, 2), (G, -mp.inf, 0.4), (WeightSpec.laguerre(2), 0.5, 6),
                                   (WeightSpec.laguerre(1), 1, mp.inf)])
def test_H_definition_matches_p1_form(w, a, b):
    for n in (1, 3, 5):
        sys_ = gap.system_for(w, Window(a, b), n, 50)
        with mp.workdps(sys_.digits_used):
            assert abs(gap.H_from_log_derivative(sys_, n) - gap.H_value(sys_, n).H) < mp.mpf(10) ** -45


@pytest.mark.parametrize("a,b", [(-0.5, 1.5), (0.4, 2.0)])
def test_reconstruction_integral_matches_direct(a, b):
    direct = gap.log_gap_probability(gap.system_for(G, Window(a, b), 2, 40), 2)
    rebuilt = gap.reconstruct_logprob(2, G, a, b, steps=16, digits=40)
    assert abs(direct - rebuilt) < mp.mpf(10) ** -20


def test_reconstruction_rejects_laguerre_and_coarse_steps():
    with pytest.raises(DomainError):
        gap.reconstruct_logprob(2, WeightSpec.laguerre(1), 1, 2)
    with pytest.raises(DomainError):
        gap.reconstruct_logprob(2, G, -1, 1, steps=8)


def _surface():
    return gap.surface(G, 2, ["-2", "-1.5", "-1", "-0.5", "0"], ["0.5", "1", "1.5", "2", "2.5"],
                       numerics.PrecisionPolicy(40))


def test_surface_shape_and_skipped_pairs():
    surf = _surface()
    assert len(list(surf.nodes())) == 25
    tri = gap.surface(G, 2, ["-1", "0", "1"], ["0", "1"], numerics.PrecisionPolicy(40))
    assert len(list(tri.nodes())) == 3
    assert tri.points[2][0] is None and tri.points[2][1] is None


def test_surface_csv_and_json_round_trip_byte_identical():
    surf = _surface()
    text = gap.export_csv(surf)
    assert text.splitlines()[0] == "a,b,logD,logProb,H,p1"
    assert len(text.splitlines()) == 26
    assert gap.export_csv(gap.parse_csv(text, 2, G, digits=40)) == text
    js = gap.export_json(surf)
    assert gap.export_json(gap.parse_json(js)) == js


def test_parse_csv_rejects_foreign_header():
    with pytest.raises(DomainError):
        gap.parse_csv("x,y\n1,2\n", 2, G)
