import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from unigap import numerics
from unigap.errors import DomainError


@given(st.floats(min_value=-6, max_value=6, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_erf_matches_mpmath(x):
    with mp.workdps(60):
        ref = mp.erf(mp.mpf(x))
        assert abs(numerics.erf(x, 50) - ref) <= mp.mpf(10) ** -48 * max(1, abs(ref))


def test_erf_is_odd_and_saturates():
    with mp.workdps(50):
        assert numerics.erf(0, 40) == 0
        assert numerics.erf(-1.25, 40) == -numerics.erf(1.25, 40)
        assert abs(numerics.erf(30, 40) - 1) < mp.mpf(10) ** -40


@given(st.floats(min_value=0.1, max_value=8), st.floats(min_value=0.0, max_value=40))
@settings(max_examples=40, deadline=None)
def test_lower_incomplete_gamma_matches_mpmath(s, x):
    with mp.workdps(70):
        ref = mp.gammainc(mp.mpf(s), 0, mp.mpf(x))
        got = numerics.lower_incomplete_gamma(s, x, 50)
        assert abs(got - ref) <= mp.mpf(10) ** -45 * max(1, abs(ref))


@pytest.mark.parametrize("m", [1, 3, 8, 20])
def test_gauss_legendre_is_exact_to_degree_2m_minus_1(m):
    x, w = numerics.gauss_legendre(m, 40)
    with mp.workdps(50):
        for k in range(2 * m):
            exact = mp.mpf(2) / (k + 1) if k % 2 == 0 else mp.zero
            assert abs(mp.fsum(wi * xi ** k for xi, wi in zip(x, w)) - exact) < mp.mpf(10) ** -35


def test_gauss_legendre_on_interval_integrates_exponential():
    x, w = numerics.gauss_legendre_on(-1, 2, 30, 50)
    with mp.workdps(60):
        approx = mp.fsum(wi * mp.exp(xi) for xi, wi in zip(x, w))
        assert abs(approx - (mp.e ** 2 - 1 / mp.e)) < mp.mpf(10) ** -40


def test_required_digits_grows_linearly():
    assert numerics.required_digits(1) == 50
    assert numerics.required_digits(10) == 120
    with pytest.raises(DomainError):
        numerics.required_digits(0)


@pytest.mark.parametrize("bad", [10, 29, 40.5])
def test_precision_policy_rejects_low_or_fractional_digits(bad):
    with pytest.raises(DomainError):
        numerics.PrecisionPolicy(digits=bad)
    with pytest.raises(DomainError):
        numerics.check_digits(bad)


def test_nstr_caps_significant_figures_at_thirty():
    with mp.workdps(80):
        s = numerics.nstr(mp.pi, 80)
    assert s.replace(".", "").startswith("3141592653589793238462643383")
    assert len(s.replace(".", "")) == 30
    assert numerics.nstr(mp.mpf(2) / 3, 5) == "0.66667"


def test_is_inf_handles_all_number_types():
    assert numerics.is_inf(float("inf")) and numerics.is_inf(-mp.inf)
    assert not numerics.is_inf(3) and not numerics.is_inf(mp.mpf(2))
