"""Duality between a positive strict local martingale and a true martingale.

If ``M`` is a true martingale under ``P`` that may hit zero, then ``S = 1/M``
under ``dQ = M_T dP`` is a strictly positive strict local martingale whose
defect equals ``P(M_T = 0)``.  Prices transfer as

    C_S^alpha(x) = e^x P_M(-x) + (alpha - 1) m,     P_S(x) = e^x C_M(-x),

so the put smile of ``S`` is the reflected smile of ``M``: ``I^p_S(x) = I_M(-x)``.

Only pairs with both terminal laws known in closed form are supported; for
CEV with ``beta = 1`` the dual is Brownian motion absorbed at zero.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import blackscholes as bs
from . import models, pricer
from .errors import DomainError

PAIR_TOL = 1e-7


def dual_sigma(sigma_fn):
    """``y -> y^2 sigma(1/y)``; an involution."""

    def dual(y):
        y = np.asarray(y, dtype=float)
        out = y * y * sigma_fn(1.0 / y)
        return float(out) if np.ndim(out) == 0 else out

    return dual


def absorbed_bm_law(sigma, T):
    """Brownian motion with volatility ``sigma`` from 1, absorbed at 0."""
    return models.absorbed_bm_terminal_law(sigma, T)


@dataclass(frozen=True)
class DualPair:
    s_law: models.TerminalLaw
    m_law: models.TerminalLaw

    def __post_init__(self):
        s, m = self.s_law, self.m_law
        if isinstance(s, models.DiracLaw) or isinstance(m, models.DiracLaw):
            raise DomainError("degenerate (Dirac) laws have no density dual")
        if s.mass_at_zero != 0.0:
            raise DomainError("the strict local martingale side must be strictly positive")
        if not s.T == m.T:
            raise DomainError("dual laws must share the maturity")
        if abs(s.defect - m.mass_at_zero) > PAIR_TOL:
            raise DomainError(
                f"defect {s.defect!r} does not match the dual mass at zero {m.mass_at_zero!r}"
            )
        if abs(m.expectation - 1.0) > PAIR_TOL:
            raise DomainError(f"dual side is not a true martingale: E[M_T] = {m.expectation!r}")

    @property
    def T(self):
        return self.s_law.T

    def reflected_density(self, m):
        """``m^-3 f_S(1/m)``, which must equal ``f_M(m)``."""
        m = np.asarray(m, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(m > 0, m**-3.0 * self.s_law.density(1.0 / m), 0.0)
        return float(out) if out.ndim == 0 else out

    def density_reflection_error(self, grid):
        """Largest relative mismatch between ``f_M`` and the reflected ``f_S`` on ``grid``."""
        grid = np.asarray(grid, dtype=float)
        fm = np.asarray(self.m_law.density(grid))
        fr = np.asarray(self.reflected_density(grid))
        scale = np.maximum(np.abs(fm), np.finfo(float).tiny)
        return float(np.max(np.abs(fm - fr) / scale))


def cev_dual_pair(sigma, T):
    """CEV ``beta = 1`` (``s0 = 1``) and its absorbed-Brownian dual."""
    s = models.cev_terminal_law(s0=1.0, beta=1.0, sigma=sigma, T=T)
    return DualPair(s, absorbed_bm_law(sigma, T))


def true_martingale_smile(law, x):
    """Black-Scholes implied volatility of a law whose parity holds (OTM inversion)."""
    if x >= 0.0:
        c = law.call_value(x)
        return bs.implied_vol_otm(x, law.T, log_otm=math.log(c) if c > 0 else -math.inf)
    return bs.implied_vol_otm(x, law.T, otm_price=law.put_value(x))


def dual_price_check(pair, x, alpha):
    """Residuals of both price relations, each side from its own quadrature."""
    s, m = pair.s_law, pair.m_law
    ex = math.exp(x)
    call_res = pricer.call_price(s, x, alpha) - (ex * m.put_value(-x) + (alpha - 1.0) * s.defect)
    put_res = s.put_value(x) - ex * m.call_value(-x)
    return call_res, put_res


def smile_reflection_check(pair, x):
    """``|I^p_S(x) - I_M(-x)|``."""
    return abs(pricer.put_smile(pair.s_law, x) - true_martingale_smile(pair.m_law, -x))


def defect_mass_consistent(pair, threshold=1e-10):
    """Positivity of the defect and of the dual mass at zero must agree."""
    return (pair.s_law.defect > threshold) == (pair.m_law.mass_at_zero > threshold)
