"""Large-strike and large-maturity asymptotics of the implied volatility.

For a strict local martingale with defect ``m > 0`` the put smile (equivalently
the fully collateralised call smile) grows like

    I(x) = sqrt(2x / T) + N^{-1}(m) / sqrt(T) + o(1),     x -> inf,

and the alpha-call smile has the same form with ``m`` replaced by ``alpha m``.
For a true martingale ``I(x) - sqrt(2x / T) -> -inf`` instead.  A second-order
term ``n^2 / (2 sqrt(2 T x))`` is available when ``G(x) = E[S_T; S_T >= e^x]``
decays fast enough.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import pricer
from .errors import DomainError, TailUndeterminedError
from .specfun import norm_quantile


@dataclass(frozen=True)
class WingExpansion:
    """Order-one wing expansion with intercept numerator ``n = N^{-1}(m)``."""

    T: float
    m: float

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("maturity must be positive")
        if not 0.0 <= self.m <= 1.0:
            raise DomainError(f"martingale defect must lie in [0, 1], got {self.m}")

    @property
    def n(self):
        return norm_quantile(self.m)

    @classmethod
    def from_law(cls, law, alpha=1.0):
        """Expansion of the alpha-call smile of ``law`` (``alpha = 1``: put smile)."""
        return cls(law.T, alpha * law.defect)


def _check_wing(w, x):
    if not x > 0:
        raise DomainError(f"wing expansion needs x > 0, got {x}")
    if w.m == 0.0:
        raise DomainError("zero martingale defect: the wing has no finite intercept")


def wing_value(w, x):
    """``sqrt(2x/T) + n / sqrt(T)``."""
    _check_wing(w, x)
    return math.sqrt(2.0 * x / w.T) + w.n / math.sqrt(w.T)


class GDecay(enum.Enum):
    POLY_HALF = "PolyHalf"  # G(x) = o(x^{-1/2})
    EXPONENTIAL = "Exponential"  # G(x) = O(exp(-eps x))


@dataclass(frozen=True)
class HigherOrderExpansion:
    """Second-order wing expansion.

    With ``G = o(x^{-1/2})`` the scaled residual ``Psi`` has limsup in
    ``[0, 1]``; with exponential decay ``sqrt(2Tx) |Phi|`` has limsup at most 1.
    Both residuals are measured against exact smiles, never modelled.
    """

    base: WingExpansion
    g_decay: GDecay = GDecay.EXPONENTIAL
    epsilon: float = None

    def __post_init__(self):
        if self.g_decay is GDecay.EXPONENTIAL and not (self.epsilon is None or self.epsilon > 0):
            raise DomainError("exponential decay rate epsilon must be positive")

    @property
    def residual_bound(self):
        """Asymptotic bound on the scaled residual for this decay class."""
        return 1.0


def wing_value_order2(h, x):
    """``sqrt(2x/T) + n/sqrt(T) + n^2 / (2 sqrt(2 T x))``."""
    w = h.base if isinstance(h, HigherOrderExpansion) else h
    base = wing_value(w, x)
    n = w.n
    return base + n * n / (2.0 * math.sqrt(2.0 * w.T * x))


def scaled_order2_residual(iv, h, x):
    """``sqrt(2 T x) |I(x) - order-2 expansion|``; the quantity bounded by 1 asymptotically."""
    w = h.base if isinstance(h, HigherOrderExpansion) else h
    return math.sqrt(2.0 * w.T * x) * abs(iv - wing_value_order2(h, x))


# ---------------------------------------------------------------------------
# moment formula


def lee_slope(p):
    """``psi(p) = 2 - 4 (sqrt(p (p + 1)) - p)``, written without cancellation."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise DomainError("critical moment must be non-negative")
    with np.errstate(invalid="ignore", divide="ignore"):
        # sqrt(p(p+1)) - p = p / (sqrt(p(p+1)) + p)
        gap = np.where(p > 0, p / (np.sqrt(p * (p + 1.0)) + p), 0.0)
        out = np.where(np.isinf(p), 0.0, 2.0 - 4.0 * gap)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LeeSlope:
    p_star: float

    @property
    def psi(self):
        return lee_slope(self.p_star)


@dataclass(frozen=True)
class TailFit:
    exponent: float  # density ~ s^-exponent
    r_squared: float

    @property
    def p_star(self):
        return self.exponent - 1.0


def fit_tail(law, s_hi=1e3, n_points=41):
    """Log-log least squares of the density on ``[s_hi, 2^10 s_hi]``."""
    s = s_hi * np.exp2(np.linspace(0.0, 10.0, n_points))
    f = np.asarray(law.density(s), dtype=float)
    if np.any(~(f > 0)) or not np.all(np.isfinite(f)):
        raise TailUndeterminedError("density vanishes or is not finite on the tail window")
    u, v = np.log(s), np.log(f)
    slope, intercept = np.polyfit(u, v, 1)
    fitted = slope * u + intercept
    ss_res = float(np.sum((v - fitted) ** 2))
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    if r2 < 0.999:
        raise TailUndeterminedError(f"tail is not a power law on the window (R^2 = {r2:.6f})")
    return TailFit(float(-slope), r2)


def critical_moment(law, s_hi=1e3):
    """Moment index ``p* = sup{p >= 0 : E S_T^p < inf}`` from the density tail.

    A density ``~ s^-q`` has ``E S^p < inf`` iff ``p < q - 1``.  Raises
    :class:`TailUndeterminedError` when the tail is not a clean power law.
    """
    return fit_tail(law, s_hi).p_star


def g_function(law, x):
    """``G(x) = E[S_T 1{S_T >= e^x}]``; decreasing, tends to ``1 - m`` as ``x -> -inf``."""
    return law.upper_first_moment(x)


# ---------------------------------------------------------------------------
# large maturity


def tehranchi_value(expected_min, x):
    """Large-time total variance from ``E[S_T ^ e^x]``.

    ``-8 log E - 4 log(-log E) + 4x - 4 log(pi)``.
    """
    if not 0.0 < expected_min < 1.0:
        raise DomainError(f"E[min(S_T, e^x)] must lie in (0, 1), got {expected_min}")
    le = math.log(expected_min)
    return -8.0 * le - 4.0 * math.log(-le) + 4.0 * x - 4.0 * math.log(math.pi)


def expected_min(law, x):
    """``E[S_T ^ e^x] = (1 - m) - C(x)``."""
    return (1.0 - law.defect) - law.call_value(x)


def tehranchi_large_time(law_family, x, T):
    """Evaluate the large-time formula for ``law_family(T)`` at log-strike ``x``."""
    return tehranchi_value(expected_min(law_family(T), x), x)


def cev_large_time(T, x):
    """CEV beta = 1 specialisation ``4 log T - 4 log log T + 4x``."""
    if not T > 1:
        raise DomainError("need T > 1 for log log T")
    return 4.0 * math.log(T) - 4.0 * math.log(math.log(T)) + 4.0 * x


def exact_total_variance(law, x):
    """``I^p(x)^2 T`` from the exact put smile."""
    iv = pricer.put_smile(law, x)
    return iv * iv * law.T


# ---------------------------------------------------------------------------


def dplus_sandwich(l, u, x):
    """Bounds on total vol ``v = sigma sqrt(T)`` implied by ``l <= d+(x, v) <= u``.

    ``d+ = -x/v + v/2`` is increasing in ``v`` with inverse ``d + sqrt(d^2 + 2x)``.
    """
    if x < 0:
        raise DomainError("sandwich stated for x >= 0")
    return l + math.sqrt(l * l + 2.0 * x), u + math.sqrt(u * u + 2.0 * x)
