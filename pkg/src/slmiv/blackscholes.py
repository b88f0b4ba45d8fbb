"""Black-Scholes prices and implied volatility in log-strike form.

Prices are forward prices of a unit-forward underlying (``S0 = 1``, no
discounting), parametrised by the log-strike ``x = log K``.

The inversion always works on the out-of-the-money (OTM) option -- the call
for ``x >= 0``, the put for ``x < 0`` -- and in log space, so that prices far
out in either wing (down to the subnormal range) invert without cancellation.
Near the upper price bound the complementary gap ``B - OTM`` is used instead,
where ``B = min(1, e^x)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import OutOfBoundsError
from .specfun import LOG_SQRT_2PI

_SQRT2 = math.sqrt(2.0)
_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class BsInputs:
    x: float
    T: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise ValueError("log-strike must be finite")
        if not self.T > 0:
            raise ValueError("maturity must be positive")
        if not self.sigma >= 0:
            raise ValueError("volatility must be non-negative")

    def call(self):
        return bs_call(self.x, self.T, self.sigma)

    def put(self):
        return bs_put(self.x, self.T, self.sigma)


def d_plus(x, T, sigma):
    v = sigma * math.sqrt(T)
    return -x / v + 0.5 * v


def d_minus(x, T, sigma):
    v = sigma * math.sqrt(T)
    return -x / v - 0.5 * v


def _log_otm_call(x, v):
    """log of the call price for ``x >= 0`` and total vol ``v > 0``."""
    a = x / v - 0.5 * v  # -d_plus
    b = x / v + 0.5 * v  # -d_minus
    if a > 0.0:
        # e^x * exp(-b^2/2) == exp(-a^2/2); pull the common Gaussian factor out.
        diff = special.erfcx(a / _SQRT2) - special.erfcx(b / _SQRT2)
        if diff <= 0.0:
            return -math.inf
        return -0.5 * a * a + _LOG_HALF + math.log(diff)
    value = 0.5 * (math.erf(b / _SQRT2) - math.erf(a / _SQRT2)) - math.expm1(x) * special.ndtr(-b)
    return math.log(value) if value > 0.0 else -math.inf


def log_otm_price(x, T, sigma):
    """log of the OTM option price: call if ``x >= 0``, put if ``x < 0``.

    Uses the put-call symmetry ``P(x) = e^x C(-x)``.
    """
    if sigma <= 0.0:
        return -math.inf
    v = sigma * math.sqrt(T)
    if x >= 0.0:
        return _log_otm_call(x, v)
    return x + _log_otm_call(-x, v)


def log_upper_gap(x, T, sigma):
    """log of ``B - OTM`` with ``B = min(1, e^x)``; equals ``N(-d+) + e^x N(d-)``."""
    if sigma <= 0.0:
        return math.log(min(1.0, math.exp(x)))
    dp = d_plus(x, T, sigma)
    dm = dp - sigma * math.sqrt(T)
    return float(np.logaddexp(special.log_ndtr(-dp), x + special.log_ndtr(dm)))


def log_vega(x, T, sigma):
    """log of dC/dsigma = phi(d+) sqrt(T) (identical for the put)."""
    dp = d_plus(x, T, sigma)
    return -0.5 * dp * dp - LOG_SQRT_2PI + 0.5 * math.log(T)


def bs_call(x, T, sigma):
    """Black-Scholes call ``N(d+) - e^x N(d-)`` for a unit forward."""
    if sigma <= 0.0:
        return max(-math.expm1(x), 0.0)
    otm = math.exp(log_otm_price(x, T, sigma))
    if x >= 0.0:
        return otm
    return -math.expm1(x) + otm


def bs_put(x, T, sigma):
    """Black-Scholes put; evaluated directly (no parity subtraction) for ``x < 0``."""
    if sigma <= 0.0:
        return max(math.expm1(x), 0.0)
    otm = math.exp(log_otm_price(x, T, sigma))
    if x < 0.0:
        return otm
    return math.expm1(x) + otm


def bs_vega(x, T, sigma):
    if sigma <= 0.0:
        return 0.0
    return math.exp(log_vega(x, T, sigma))


# ---------------------------------------------------------------------------
# inversion


def _invert(x, T, log_lower=None, log_upper=None, max_iter=200):
    """Solve for sigma given log(OTM price) or log(B - OTM price).

    Exactly one of ``log_lower`` / ``log_upper`` is used: whichever target is
    the smaller of the two gaps carries more relative information.  Newton
    steps in sigma are kept inside a shrinking bracket; a step that leaves the
    bracket is replaced by a bisection in log(sigma).
    """
    sqrt_t = math.sqrt(T)
    use_lower = log_lower is not None

    def objective(sig):
        if use_lower:
            lp = log_otm_price(x, T, sig)
            h = lp - log_lower
            lv = log_vega(x, T, sig)
            slope = math.exp(lv - lp) if lp > -math.inf else math.inf
        else:
            lu = log_upper_gap(x, T, sig)
            h = log_upper - lu
            lv = log_vega(x, T, sig)
            slope = math.exp(lv - lu)
        return h, slope

    lo, hi = 1e-10 / sqrt_t, 10.0 / sqrt_t
    h_hi, _ = objective(hi)
    while h_hi < 0.0:
        lo, hi = hi, hi * 2.0
        if hi > 1e8:
            raise OutOfBoundsError("implied volatility bracket exceeded 1e8")
        h_hi, _ = objective(hi)
    h_lo, _ = objective(lo)
    if h_lo >= 0.0:
        return lo

    # the large-strike asymptote sqrt(2|x|/T) is a good start in both wings
    sig = min(max(math.sqrt(2.0 * abs(x) / T), 0.2 / sqrt_t), hi)
    if not lo < sig < hi:
        sig = math.sqrt(lo * hi)
    for _ in range(max_iter):
        h, slope = objective(sig)
        if h == 0.0:
            return sig
        if h > 0.0:
            hi = sig
        else:
            lo = sig
        if abs(h) < 4e-16 or (hi - lo) <= 4e-16 * hi:
            return sig
        step = -h / slope if slope > 0.0 and math.isfinite(slope) else math.nan
        if abs(step) <= 1e-15 * sig:
            return sig
        new = sig + step
        if not (lo < new < hi) or not math.isfinite(new):
            new = math.sqrt(lo * hi)
        sig = new
    return sig


def _solve(x, T, lower_gap, upper_gap):
    if lower_gap == 0.0:
        return 0.0
    if lower_gap <= upper_gap:
        return _invert(x, T, log_lower=math.log(lower_gap))
    return _invert(x, T, log_upper=math.log(upper_gap))


def _check_T(T):
    if not T > 0:
        raise ValueError("maturity must be positive")


def implied_vol_call(price, x, T):
    """Unique sigma >= 0 with ``bs_call(x, T, sigma) == price``.

    Raises :class:`OutOfBoundsError` outside ``[(1 - e^x)_+, 1)``; returns
    exactly 0 at the intrinsic value.
    """
    _check_T(T)
    intrinsic = max(-math.expm1(x), 0.0)
    if not (intrinsic <= price < 1.0):
        raise OutOfBoundsError(
            f"call price {price!r} outside no-static-arbitrage bounds [{intrinsic!r}, 1) at x={x!r}"
        )
    if x >= 0.0:
        lower = price
    else:
        lower = price - intrinsic
    return _solve(x, T, lower, 1.0 - price)


def implied_vol_put(price, x, T):
    """Unique sigma >= 0 with ``bs_put(x, T, sigma) == price``.

    Raises :class:`OutOfBoundsError` outside ``[(e^x - 1)_+, e^x)``.
    """
    _check_T(T)
    intrinsic = max(math.expm1(x), 0.0)
    bound = math.exp(x)
    if not (intrinsic <= price < bound):
        raise OutOfBoundsError(
            f"put price {price!r} outside no-static-arbitrage bounds [{intrinsic!r}, {bound!r}) at x={x!r}"
        )
    if x < 0.0:
        lower = price
    else:
        lower = price - intrinsic
    return _solve(x, T, lower, bound - price)


def implied_vol_otm(x, T, otm_price=None, log_otm=None):
    """Invert an OTM option value (call for ``x >= 0``, put for ``x < 0``).

    Pass either the price or its logarithm; the log form reaches prices that
    underflow in double precision.
    """
    _check_T(T)
    bound = min(1.0, math.exp(x))
    if log_otm is None:
        if otm_price is None:
            raise TypeError("need otm_price or log_otm")
        if not 0.0 <= otm_price < bound:
            raise OutOfBoundsError(f"OTM price {otm_price!r} outside [0, {bound!r}) at x={x!r}")
        return _solve(x, T, otm_price, bound - otm_price)
    if log_otm == -math.inf:
        return 0.0
    if not log_otm < math.log(bound):
        raise OutOfBoundsError(f"log OTM price {log_otm!r} not below log bound at x={x!r}")
    if log_otm < math.log(0.5 * bound):
        return _invert(x, T, log_lower=log_otm)
    return _invert(x, T, log_upper=math.log(bound - math.exp(log_otm)))
