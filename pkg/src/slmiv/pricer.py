"""Put, call and collateralised-call prices from a terminal law.

``C^alpha(x) = E(S_T - e^x)_+ + alpha * m_T`` is the price of a call whose
short side posts collateral ``alpha`` per unit of stock.  Put-call parity
holds with the defect correction ``C - P = 1 - e^x - m_T`` and is restored
for ``alpha = 1``.

Implied volatilities are always inverted from the out-of-the-money value.
For the alpha-call at ``x < 0`` this is the time value
``C^alpha(x) - (1 - e^x) = P(x) - (1 - alpha) m_T``, which is negative exactly
below the existence boundary ``x*(alpha)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import blackscholes as bs
from .errors import DomainError, NonExistenceError


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"collateral fraction alpha must lie in [0, 1], got {alpha}")


def put_price(law, x):
    return law.put_value(x)


def call_price(law, x, alpha=0.0):
    _check_alpha(alpha)
    return law.call_value(x) + alpha * law.defect


def parity_residual(law, x):
    """``C(x) - P(x) - (1 - e^x - m_T)``; zero up to quadrature error."""
    return law.call_value(x) - law.put_value(x) - (-math.expm1(x) - law.defect)


@dataclass(frozen=True)
class PriceBounds:
    """Lower/upper bounds of the three prices at one log-strike."""

    call_lower: float
    call_upper: float
    put_lower: float
    put_upper: float
    alpha_call_lower: float
    alpha_call_upper: float


def price_bounds(m, x, alpha=0.0):
    """Defect-dependent no-arbitrage bounds for call, put and alpha-call prices."""
    k = math.exp(x)
    return PriceBounds(
        call_lower=max(1.0 - m - k, 0.0),
        call_upper=1.0 - m,
        put_lower=max(k - 1.0 + m, 0.0),
        put_upper=k,
        alpha_call_lower=max(1.0 - m - k, 0.0) + alpha * m,
        alpha_call_upper=1.0 + (alpha - 1.0) * m,
    )


def alpha_otm_value(law, x, alpha):
    """OTM-equivalent value of the alpha-call: ``C + alpha m`` (x >= 0) or ``P - (1 - alpha) m`` (x < 0)."""
    m = law.defect
    if x >= 0.0:
        return law.call_value(x) + alpha * m
    return law.put_value(x) - (1.0 - alpha) * m


# ---------------------------------------------------------------------------
# existence boundary


@dataclass(frozen=True)
class ExistenceBoundary:
    alpha: float
    x_star: float
    m: float

    @property
    def lower_bound(self):
        """``log((1 - alpha) m_T)`` (strict lower bound)."""
        v = (1.0 - self.alpha) * self.m
        return math.log(v) if v > 0 else -math.inf

    @property
    def upper_bound(self):
        """``log(1 - alpha m_T)``."""
        return math.log1p(-self.alpha * self.m) + 0.0

    def sandwich_holds(self):
        if self.x_star == -math.inf:
            return self.alpha == 1.0 or self.m == 0.0
        return self.lower_bound < self.x_star <= self.upper_bound


def existence_boundary(law, alpha, xtol=1e-12):
    """Smallest ``x <= 0`` at which the alpha-call lies in the no-arbitrage region.

    Root of the increasing function ``F(x) = E max(S_T, e^x) + alpha m - 1``
    on ``(-inf, 0]``, computed as ``P(x) - (1 - alpha) m``.  The known
    sandwich ``log((1-alpha) m) < x* <= log(1 - alpha m)`` gives the bracket.
    """
    _check_alpha(alpha)
    m = law.defect
    if alpha == 1.0 or m == 0.0:
        return ExistenceBoundary(alpha, -math.inf, m)

    def F(x):
        return law.put_value(x) - (1.0 - alpha) * m

    lo = math.log((1.0 - alpha) * m)
    hi = min(math.log1p(-alpha * m), 0.0) + 0.0  # no signed zero
    f_hi = F(hi)
    if f_hi < 0.0:
        # only through quadrature noise at a law attaining the upper bound
        return ExistenceBoundary(alpha, hi, m)
    if F(lo) >= 0.0:
        # the lower bound is strict; only reachable through rounding
        return ExistenceBoundary(alpha, lo, m)
    if f_hi > 0.0:
        x = optimize.brentq(F, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
        return ExistenceBoundary(alpha, x, m)
    # F(hi) == 0: plain bisection keeps the infimum when F has a flat zero stretch
    a, b = lo, hi
    while b - a > xtol:
        mid = 0.5 * (a + b)
        if F(mid) >= 0.0:
            b = mid
        else:
            a = mid
    return ExistenceBoundary(alpha, b, m)


# ---------------------------------------------------------------------------
# smiles


def put_smile(law, x):
    """Put-implied volatility ``I^p(x)``; equal to the fully collateralised call smile."""
    if x >= 0.0:
        m = law.defect
        lc = law.log_call_value(x)
        log_otm = float(np.logaddexp(lc, math.log(m))) if m > 0.0 else lc
    else:
        p = law.put_value(x)
        log_otm = math.log(p) if p > 0.0 else -math.inf
    return bs.implied_vol_otm(x, law.T, log_otm=log_otm)


def smile(law, x, alpha=1.0):
    """Implied volatility of the alpha-collateralised call.

    Raises :class:`NonExistenceError` (carrying ``x*``) when the price lies
    below the intrinsic value, i.e. for ``x < x*(alpha)``.
    """
    _check_alpha(alpha)
    if alpha == 1.0:
        return put_smile(law, x)
    m = law.defect
    if x >= 0.0:
        lc = law.log_call_value(x)
        log_otm = float(np.logaddexp(lc, math.log(alpha * m))) if alpha * m > 0.0 else lc
        return bs.implied_vol_otm(x, law.T, log_otm=log_otm)
    tv = law.put_value(x) - (1.0 - alpha) * m
    if tv < 0.0:
        xs = existence_boundary(law, alpha).x_star
        raise NonExistenceError(
            f"alpha={alpha} call price below intrinsic at x={x}; implied volatility exists only for x >= {xs}",
            xs,
        )
    return bs.implied_vol_otm(x, law.T, otm_price=tv)
