from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from pvthreshold.errors import UsageError
from pvthreshold.special import (
    betainc_regularized,
    binomial_cdf,
    binomial_sf,
    std_normal_cdf,
    std_normal_sf,
    student_t_cdf,
)


def exact_binom_cdf(y, m, p):
    p = Fraction(p)
    return float(sum(math.comb(m, k) * p ** k * (1 - p) ** (m - k) for k in range(0, y + 1)))


class TestNormal:
    def test_center_and_limits(self):
        assert std_normal_cdf(0.0) == 0.5
        assert std_normal_cdf(math.inf) == 1.0
        assert std_normal_cdf(-math.inf) == 0.0

    def test_quadrature_oracle(self):
        pdf = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
        val, _ = integrate.quad(pdf, -math.inf, 1.959964, epsabs=1e-14)
        assert abs(std_normal_cdf(1.959964) - 0.975) < 1e-6
        assert abs(std_normal_cdf(1.959964) - val) < 1e-12

    @pytest.mark.parametrize("t", [-7.5, -3.0, -0.3, 0.8, 2.5, 6.0])
    def test_matches_erfc(self, t):
        assert abs(std_normal_cdf(t) - 0.5 * math.erfc(-t / math.sqrt(2))) < 1e-15

    def test_symmetry_grid(self):
        t = np.linspace(-8, 8, 801)
        assert np.max(np.abs(std_normal_cdf(t) + std_normal_cdf(-t) - 1.0)) < 1e-12

    def test_deep_tail_does_not_saturate(self):
        assert 0 < std_normal_sf(30.0) < 1e-190
        assert std_normal_sf(3.0) == pytest.approx(std_normal_cdf(-3.0), rel=0, abs=0)

    @given(st.floats(-40, 40), st.floats(-40, 40))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert std_normal_cdf(lo) <= std_normal_cdf(hi)


class TestStudentT:
    def test_symmetry_point(self):
        assert student_t_cdf(0.0, 7) == 0.5

    def test_cauchy(self):
        assert abs(student_t_cdf(1.0, 1) - 0.75) < 1e-12
        for t in (-3.0, 0.2, 5.0):
            assert abs(student_t_cdf(t, 1) - (0.5 + math.atan(t) / math.pi)) < 1e-12

    def test_integration_oracle(self):
        df = 10
        c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
        pdf = lambda t: c * (1 + t * t / df) ** (-(df + 1) / 2)
        val, _ = integrate.quad(pdf, -math.inf, 2.0, epsabs=1e-14)
        assert abs(student_t_cdf(2.0, 10) - 0.963306) < 1e-5
        assert abs(student_t_cdf(2.0, 10) - val) < 1e-10

    @pytest.mark.parametrize("df", [1, 2, 3, 5, 9, 30, 120, 1000])
    def test_against_scipy(self, df):
        t = np.linspace(-12, 12, 97)
        assert np.max(np.abs(student_t_cdf(t, df) - stats.t.cdf(t, df))) < 1e-10

    def test_normal_limit(self):
        t = np.linspace(-5, 5, 201)
        assert np.max(np.abs(student_t_cdf(t, 10 ** 6) - std_normal_cdf(t))) < 1e-3

    def test_invalid_df(self):
        with pytest.raises(UsageError) as e:
            student_t_cdf(0.3, 0)
        assert e.value.code == "invalid-df"

    @given(st.floats(-50, 50), st.floats(-50, 50), st.integers(1, 200))
    def test_monotone(self, a, b, df):
        lo, hi = sorted((a, b))
        assert student_t_cdf(lo, df) <= student_t_cdf(hi, df) + 1e-15


class TestBinomial:
    def test_examples(self):
        assert binomial_cdf(10, 10, 0.3) == 1.0
        assert abs(binomial_cdf(5, 10, 0.5) - 638 / 1024) < 1e-12
        assert binomial_cdf(-1, 10, 0.5) == 0.0

    @pytest.mark.parametrize("m,p", [(1, 0.3), (10, 0.5), (37, 0.11), (200, 0.73), (1000, 0.5)])
    def test_exact_summation_oracle(self, m, p):
        for y in range(0, m + 1, max(1, m // 25)):
            assert abs(binomial_cdf(y, m, p) - exact_binom_cdf(y, m, p)) < 1e-12

    def test_total_mass(self):
        for m, p in [(7, 0.2), (50, 0.9)]:
            assert binomial_cdf(m, m, p) - binomial_cdf(-1, m, p) == 1.0

    def test_large_m_uses_beta_identity(self):
        m, p = 20000, 0.4
        for y in (7800, 8000, 8100):
            assert abs(binomial_cdf(y, m, p) - stats.binom.cdf(y, m, p)) < 1e-10

    def test_sf_is_strict_exceedance(self):
        assert abs(binomial_sf(5, 10, 0.5) - 386 / 1024) < 1e-12
        assert binomial_sf(10, 10, 0.5) == 0.0

    def test_invalid_p(self):
        for p in (-0.1, 1.5, math.nan):
            with pytest.raises(UsageError) as e:
                binomial_cdf(3, 10, p)
            assert e.value.code == "invalid-p"

    def test_degenerate_p(self):
        assert binomial_cdf(0, 5, 0.0) == 1.0
        assert binomial_cdf(4, 5, 1.0) == 0.0

    @settings(max_examples=60)
    @given(st.integers(1, 300), st.floats(0.001, 0.999))
    def test_nondecreasing(self, m, p):
        vals = [binomial_cdf(y, m, p) for y in range(-1, m + 1)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_incomplete_beta_against_scipy():
    from scipy.special import betainc

    rng = np.random.default_rng(0)
    a = rng.uniform(0.1, 60, 400)
    b = rng.uniform(0.1, 60, 400)
    x = rng.uniform(0, 1, 400)
    assert np.max(np.abs(betainc_regularized(a, b, x) - betainc(a, b, x))) < 1e-12
