import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slmiv import specfun as sf

mp.mp.dps = 30


class TestNormCdf:
    def test_examples(self):
        assert sf.norm_cdf(0.0) == 0.5
        assert sf.norm_cdf(-1.0) == pytest.approx(0.15865525393145705, abs=1e-16)
        assert sf.norm_cdf(40.0) == 1.0

    def test_far_tail_keeps_relative_precision(self):
        # mpmath values
        assert sf.norm_cdf(-10.0) == pytest.approx(7.619853024160526066e-24, rel=1e-13)
        assert sf.norm_cdf(-38.0) == pytest.approx(2.8854283600687843084e-316, rel=1e-6)

    @given(st.floats(-40, 40))
    def test_symmetry(self, z):
        assert abs(sf.norm_cdf(z) + sf.norm_cdf(-z) - 1.0) <= 1e-15

    @given(st.floats(-30, 8))
    def test_against_mpmath(self, z):
        assert sf.norm_cdf(z) == pytest.approx(float(mp.ncdf(z)), abs=1e-15, rel=1e-13)

    @given(st.floats(-1e3, -8.0))
    def test_log_cdf_far_tail(self, z):
        assert sf.log_norm_cdf(z) == pytest.approx(float(mp.log(mp.ncdf(z))), rel=1e-12)

    def test_increasing(self):
        z = np.linspace(-8, 5, 2001)
        assert np.all(np.diff(sf.norm_cdf(z)) > 0)
        # the upper tail rounds to 1 in double precision
        assert np.all(np.diff(sf.norm_cdf(np.linspace(5, 40, 500))) >= 0)

    def test_array_in_array_out(self):
        out = sf.norm_cdf(np.array([-1.0, 0.0, 1.0]))
        assert isinstance(out, np.ndarray) and out.shape == (3,)
        assert isinstance(sf.norm_cdf(0.3), float)


class TestNormQuantile:
    def test_examples(self):
        assert sf.norm_quantile(0.5) == 0.0
        assert sf.norm_quantile(0.0) == -math.inf
        assert sf.norm_quantile(1.0) == math.inf
        assert sf.norm_quantile(0.317311) == pytest.approx(-0.47524, abs=1e-5)

    @pytest.mark.parametrize("p", [-0.1, 1.5, math.nan])
    def test_rejects_outside_unit_interval(self, p):
        with pytest.raises(ValueError):
            sf.norm_quantile(p)

    @given(st.floats(1e-8, 1 - 1e-8))
    def test_round_trip(self, p):
        assert abs(sf.norm_cdf(sf.norm_quantile(p)) - p) <= 1e-12


class TestBessel:
    def test_half_integer_closed_form(self):
        assert sf.bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)
        assert sf.bessel_i(0.5, 1.0) == pytest.approx(0.937674, abs=1e-6)
        z = 50.0
        assert sf.bessel_i(0.5, z) == pytest.approx(math.sqrt(2 / (math.pi * z)) * math.sinh(z), rel=1e-12)

    def test_zero_argument(self):
        assert sf.bessel_i(0.2, 0.0) == 0.0
        assert sf.bessel_i(0.0, 0.0) == 1.0

    def test_scaled_values_from_mpmath(self):
        assert sf.bessel_ive(0.5, 2.0) == pytest.approx(0.27692804543535513001, rel=1e-14)
        assert sf.bessel_ive(0.2083333333333333, 37.5) == pytest.approx(0.065329173315928084884, rel=1e-13)

    @given(st.floats(1e-6, 500.0))
    def test_scaled_half_order(self, z):
        expected = math.sqrt(2.0 / (math.pi * z)) * (-math.expm1(-2.0 * z)) / 2.0
        assert sf.bessel_ive(0.5, z) == pytest.approx(expected, rel=1e-12)

    @given(st.floats(0.01, 5.0), st.floats(1e-3, 1e4))
    def test_against_mpmath(self, nu, z):
        expected = mp.besseli(nu, z) * mp.exp(-z)
        assert sf.bessel_ive(nu, z) == pytest.approx(float(expected), rel=1e-12)

    def test_scaled_form_does_not_overflow(self):
        assert math.isfinite(sf.bessel_ive(0.3, 1e6))
        assert sf.bessel_i(0.3, 1e6) == math.inf

    @pytest.mark.parametrize("nu,z", [(-0.5, 1.0), (0.5, -1.0)])
    def test_rejects_negative(self, nu, z):
        with pytest.raises(ValueError):
            sf.bessel_i(nu, z)


class TestIncompleteGamma:
    def test_examples(self):
        assert sf.reg_gamma_lower(1.0, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)
        assert sf.reg_gamma_lower(2.0, 0.0) == 0.0
        assert sf.reg_gamma_lower(0.5, 2.0) == pytest.approx(2 * sf.norm_cdf(2.0) - 1, rel=1e-14)

    def test_upper_from_mpmath(self):
        assert sf.reg_gamma_upper(0.5, 0.5) == pytest.approx(0.31731050786291410283, rel=1e-14)
        assert sf.reg_gamma_lower(3.0, 2.0) == pytest.approx(0.32332358381693654053, rel=1e-14)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
    def test_monotone(self, a):
        x = np.linspace(0, 30, 1000)
        assert np.all(np.diff(sf.reg_gamma_lower(a, x)) >= 0)
        assert sf.reg_gamma_lower(a, 1e4) == 1.0

    @pytest.mark.parametrize("a,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0)])
    def test_rejects_bad_arguments(self, a, x):
        with pytest.raises(ValueError):
            sf.reg_gamma_lower(a, x)
