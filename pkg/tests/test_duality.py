import math

import numpy as np
import pytest
from scipy import integrate

from slmiv import duality as D
from slmiv import models, pricer
from slmiv.errors import DomainError

from conftest import M_CEV1


@pytest.fixture(scope="module")
def pair():
    return D.cev_dual_pair(1.0, 1.0)


class TestDualSigma:
    def test_cev_beta_one_dual_is_constant(self):
        dual = D.dual_sigma(lambda x: 0.7 * x * x)
        np.testing.assert_allclose(dual(np.array([0.1, 1.0, 7.0])), 0.7, rtol=1e-15)

    def test_black_scholes_self_dual(self):
        dual = D.dual_sigma(lambda x: 0.3 * x)
        for y in (0.5, 1.0, 4.0):
            assert dual(y) == pytest.approx(0.3 * y, rel=1e-15)

    def test_involution(self):
        f = lambda x: x**1.5  # noqa: E731
        ff = D.dual_sigma(D.dual_sigma(f))
        for x in (0.5, 1.0, 2.0):
            assert ff(x) == pytest.approx(f(x), rel=1e-14)

    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_integral_swap(self, eps):
        sigma = lambda x: x**1.7  # noqa: E731
        dual = D.dual_sigma(sigma)
        lhs = integrate.quad(lambda y: y / dual(y) ** 2, eps, 1.0, epsabs=0, epsrel=1e-12, limit=200)[0]
        rhs = integrate.quad(lambda x: x / sigma(x) ** 2, 1.0, 1.0 / eps, epsabs=0, epsrel=1e-12, limit=200)[0]
        assert lhs == pytest.approx(rhs, abs=1e-6)


class TestAbsorbedBM:
    def test_mass_equals_cev_defect(self, cev1):
        law = D.absorbed_bm_law(1.0, 1.0)
        assert law.mass_at_zero == pytest.approx(0.317311, abs=1e-6)
        assert law.mass_at_zero == pytest.approx(cev1.defect, abs=1e-12)

    def test_density_formula(self):
        law = D.absorbed_bm_law(0.8, 1.5)
        v = 0.8 * math.sqrt(1.5)
        phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)  # noqa: E731
        for m in (0.1, 0.9, 2.5):
            assert law.density(m) == pytest.approx((phi((m - 1) / v) - phi((m + 1) / v)) / v, rel=1e-12)


class TestPair:
    @pytest.mark.parametrize("sigma,T", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.25), (1.0, 1e-4)])
    def test_invariants(self, sigma, T):
        p = D.cev_dual_pair(sigma, T)
        assert p.s_law.mass_at_zero == 0.0
        assert abs(p.s_law.defect - p.m_law.mass_at_zero) <= 1e-7
        assert p.m_law.expectation == pytest.approx(1.0, abs=1e-7)
        assert D.defect_mass_consistent(p)

    def test_density_reflection(self, pair):
        assert pair.density_reflection_error(np.geomspace(0.02, 6.0, 200)) <= 1e-8

    def test_rejects_bridge(self, bridge04):
        with pytest.raises(DomainError):
            D.DualPair(bridge04, D.absorbed_bm_law(1.0, 1.0))

    def test_rejects_mismatched_defect(self, cev1):
        with pytest.raises(DomainError):
            D.DualPair(cev1, D.absorbed_bm_law(2.0, 1.0))

    def test_rejects_mass_on_positive_side(self):
        absorbed = D.absorbed_bm_law(1.0, 1.0)
        with pytest.raises(DomainError):
            D.DualPair(absorbed, absorbed)

    def test_rejects_non_martingale_dual(self, cev1):
        # right mass at zero, but E[M_T] = 1 - m
        fake = models.CevLaw(T=1.0, mass_at_zero=M_CEV1, beta=1.0, sigma=1.0)
        with pytest.raises(DomainError):
            D.DualPair(cev1, fake)


class TestPriceRelations:
    def test_examples(self, pair):
        c, p = D.dual_price_check(pair, 0.5, 1.0)
        assert abs(c) <= 1e-7 and abs(p) <= 1e-7
        c, p = D.dual_price_check(pair, 0.0, 0.0)
        assert abs(c) <= 1e-7 and abs(p) <= 1e-7

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
    def test_grid(self, pair, alpha):
        for x in np.linspace(-2, 3, 20):
            c, p = D.dual_price_check(pair, x, alpha)
            assert abs(c) <= 1e-7 and abs(p) <= 1e-7

    def test_other_parameters(self):
        pair = D.cev_dual_pair(0.6, 2.0)
        for x in (-1.0, 0.3, 1.5):
            assert max(map(abs, D.dual_price_check(pair, x, 0.25))) <= 1e-7


class TestSmileReflection:
    @pytest.mark.parametrize("x", [0.0, 2.0])
    def test_examples(self, pair, x):
        assert D.smile_reflection_check(pair, x) <= 1e-7

    def test_grid(self, pair):
        assert max(D.smile_reflection_check(pair, x) for x in np.linspace(-2, 4, 25)) <= 1e-7

    def test_put_smile_is_asymmetric(self, cev1):
        assert abs(pricer.put_smile(cev1, 1.0) - pricer.put_smile(cev1, -1.0)) > 0.01
