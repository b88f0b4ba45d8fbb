"""Terminal laws of the concrete models and martingale classification.

A :class:`TerminalLaw` describes the distribution of the normalised price
``S_T / S_0`` at a fixed horizon: a density on ``(0, inf)``, a point mass at
zero and, for degenerate laws, a Dirac atom.  Every law integrates payoffs
against itself through :meth:`TerminalLaw.integrate`; subclasses choose the
integration variable in which their density is smooth and lives on a bounded
interval, so no tail truncation is ever needed.

Model specification strings understood by :func:`parse_model`::

    cev:beta=<f>,sigma=<f>,s0=<f>
    bridge:mu=<f>
    absorbed-bm:sigma=<f>
    lognormal:sigma=<f>
"""

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate as _integrate
from scipy import special

from . import blackscholes as bs
from .errors import DomainError, IndeterminateError, QuadratureError
from .specfun import LOG_SQRT_2PI

QUAD_EPSREL = 1e-12
QUAD_LIMIT = 500
# Gaussian-like factors are below exp(-800) this many standard deviations out
_GAUSS_WIDTH = 40.0


def quad(fn, a, b, points=None, epsrel=QUAD_EPSREL):
    """Adaptive Gauss-Kronrod on ``[a, b]`` with optional interior breakpoints.

    Raises :class:`QuadratureError` if QUADPACK reports a failure and the
    error estimate is not small relative to the result.
    """
    if not b > a:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted({p for p in points if a < p < b})
        pts = pts or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        value, err, *info = _integrate.quad(
            fn, a, b, points=pts, epsabs=0.0, epsrel=epsrel, limit=QUAD_LIMIT, full_output=1
        )
    ier = info[1] if len(info) > 1 else 0
    if ier not in (0,) and err > 1e-9 * max(abs(value), 1e-300) and err > 1e-15:
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}]: value={value}, err={err}")
    return value


@dataclass(frozen=True)
class TerminalLaw:
    """Law of ``S_T`` (normalised so that ``S_0 = 1``) at horizon ``T``."""

    T: float
    mass_at_zero: float = 0.0

    #: location of a Dirac atom in ``(0, inf)``, or None
    atom = None

    def density(self, s):
        raise NotImplementedError

    def integrate(self, fn, lo=0.0, hi=math.inf):
        """``int_lo^hi fn(s) density(s) ds`` over the continuous part (plus any atom in ``[lo, hi)``)."""
        raise NotImplementedError

    @property
    def support_hint(self):
        return (0.0, math.inf)

    @cached_property
    def expectation(self):
        return self.integrate(lambda s: s)

    @cached_property
    def defect(self):
        """Martingale defect ``1 - E[S_T]`` clipped to ``[0, 1]``."""
        return min(max(1.0 - self.expectation, 0.0), 1.0)

    def total_mass(self):
        return self.mass_at_zero + self.integrate(lambda s: np.ones_like(s))

    def call_value(self, x):
        """Undiscounted ``E(S_T - e^x)_+``."""
        k = math.exp(x)
        return self.integrate(lambda s: s - k, k, math.inf)

    def log_call_value(self, x):
        c = self.call_value(x)
        return math.log(c) if c > 0.0 else -math.inf

    def put_value(self, x):
        """Undiscounted ``E(e^x - S_T)_+``, including the mass at zero."""
        k = math.exp(x)
        return self.integrate(lambda s: k - s, 0.0, k) + k * self.mass_at_zero

    def upper_first_moment(self, x):
        """``E(S_T 1{S_T >= e^x})``."""
        return self.integrate(lambda s: s, math.exp(x), math.inf)


# ---------------------------------------------------------------------------
# CEV


@dataclass(frozen=True)
class CevParams:
    """``dS = sigma S^(1+beta) dW``, ``S_0 = s0``; strict local martingale for beta > 0."""

    s0: float
    beta: float
    sigma: float
    T: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"strict-local CEV requires beta > 0, got {self.beta}")
        if not self.sigma > 0:
            raise DomainError("CEV sigma must be positive")
        if not self.s0 > 0:
            raise DomainError("CEV s0 must be positive")
        if not self.T > 0:
            raise DomainError("maturity must be positive")


@dataclass(frozen=True)
class CevLaw(TerminalLaw):
    """Terminal law of ``S_T / s0`` under CEV with ``beta > 0``.

    ``Y = S^-beta / (sigma beta)`` is a Bessel process of index
    ``nu = 1 / (2 beta)`` in unit time; integrals are taken in ``y`` where the
    transition density is a smooth, Gaussian-tailed function on a bounded
    interval.  Since ``S / s0`` is CEV with volatility ``sigma s0^beta`` started
    at one, the law is stored in that normalised form.
    """

    beta: float = 1.0
    sigma: float = 1.0
    s0: float = 1.0

    @property
    def sigma_n(self):
        return self.sigma * self.s0**self.beta

    @property
    def nu(self):
        return 0.5 / self.beta

    @property
    def y0(self):
        return 1.0 / (self.sigma_n * self.beta)

    def s_of_y(self, y):
        return (self.sigma_n * self.beta * y) ** (-1.0 / self.beta)

    def y_of_s(self, s):
        with np.errstate(divide="ignore"):
            return np.power(s, -self.beta) / (self.sigma_n * self.beta)

    def bessel_density(self, y):
        """Transition density of the Bessel process from ``y0`` at time ``T``."""
        y = np.asarray(y, dtype=float)
        T, y0, nu = self.T, self.y0, self.nu
        with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
            z = y * y0 / T
            log_g = (
                np.log(y / T)
                + nu * np.log(y / y0)
                - (y - y0) ** 2 / (2.0 * T)
                + np.log(special.ive(nu, z))
            )
            out = np.where(y > 0, np.exp(log_g), 0.0)
        return float(out) if out.ndim == 0 else out

    def density(self, s):
        """Transition density of ``S_T`` in the price variable.

        ``s^(-2b-3/2) / (sigma^2 b T) * exp(-(1 + s^-2b)/(2 sigma^2 b^2 T)) * I_nu(s^-b / (sigma^2 b^2 T))``
        with the Bessel factor exponentially scaled: the exponents combine to
        ``-(1 - s^-b)^2 / (2 sigma^2 b^2 T)``.
        """
        s = np.asarray(s, dtype=float)
        b, sig, T, nu = self.beta, self.sigma_n, self.T, self.nu
        c = sig * sig * b * b * T
        with np.errstate(divide="ignore", invalid="ignore", under="ignore", over="ignore"):
            sb = np.power(s, -b)
            log_f = (
                (-2.0 * b - 1.5) * np.log(s)
                - math.log(sig * sig * b * T)
                - (1.0 - sb) ** 2 / (2.0 * c)
                + np.log(special.ive(nu, sb / c))
            )
            out = np.where(s > 0, np.exp(log_f), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def _y_max(self):
        return self.y0 + _GAUSS_WIDTH * math.sqrt(self.T)

    def integrate(self, fn, lo=0.0, hi=math.inf):
        y_lo = 0.0 if hi == math.inf else float(self.y_of_s(hi))
        y_hi = self._y_max if lo <= 0.0 else min(float(self.y_of_s(lo)), self._y_max)
        rt = math.sqrt(self.T)
        points = [self.y0] + [self.y0 + k * rt for k in (-4, -2, 2, 4, 8)] + [rt * k for k in (0.5, 1, 2)]

        def integrand(y):
            return fn(self.s_of_y(y)) * self.bessel_density(y)

        return quad(integrand, y_lo, y_hi, points=points)

    @property
    def tail_exponent(self):
        """``f(s) ~ c s^-(2 beta + 2)`` as ``s -> inf``."""
        return 2.0 * self.beta + 2.0


def cev_terminal_law(p=None, **kwargs):
    """Build the CEV terminal law from :class:`CevParams` (or its fields)."""
    if p is None:
        p = CevParams(**kwargs)
    return CevLaw(T=p.T, mass_at_zero=0.0, beta=p.beta, sigma=p.sigma, s0=p.s0)


# ---------------------------------------------------------------------------
# absorbed Brownian motion (dual of CEV beta = 1)


@dataclass(frozen=True)
class AbsorbedBMLaw(TerminalLaw):
    """``dM = sigma dW`` from 1, absorbed at 0: reflection-principle law."""

    sigma: float = 1.0

    @property
    def _v(self):
        return self.sigma * math.sqrt(self.T)

    def density(self, m):
        m = np.asarray(m, dtype=float)
        v = self._v
        with np.errstate(under="ignore"):
            z = (m - 1.0) / v
            out = np.exp(-0.5 * z * z - LOG_SQRT_2PI) * (-np.expm1(-2.0 * m / (v * v))) / v
            out = np.where(m > 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def integrate(self, fn, lo=0.0, hi=math.inf):
        v = self._v
        a = max(lo, 0.0)
        b = min(hi, 1.0 + _GAUSS_WIDTH * v)
        points = [1.0] + [1.0 + k * v for k in (-4, -2, -1, 1, 2, 4)]
        return quad(lambda m: fn(m) * self.density(m), a, b, points=points)

    @cached_property
    def expectation(self):
        # the absorbed martingale keeps its mean; quadrature is still used so the
        # normalisation tests exercise the density
        return self.integrate(lambda m: m)


def absorbed_bm_terminal_law(sigma, T):
    if not (sigma > 0 and T > 0):
        raise DomainError("absorbed BM requires sigma > 0 and T > 0")
    v = sigma * math.sqrt(T)
    return AbsorbedBMLaw(T=T, mass_at_zero=float(special.erfc(1.0 / (v * math.sqrt(2.0)))), sigma=sigma)


# ---------------------------------------------------------------------------
# lognormal control (true martingale)


@dataclass(frozen=True)
class LognormalLaw(TerminalLaw):
    """Black-Scholes terminal law; closed-form prices via :mod:`blackscholes`."""

    sigma: float = 0.2

    def density(self, s):
        s = np.asarray(s, dtype=float)
        v = self.sigma * math.sqrt(self.T)
        with np.errstate(divide="ignore", under="ignore"):
            z = (np.log(s) + 0.5 * v * v) / v
            out = np.where(s > 0, np.exp(-0.5 * z * z - LOG_SQRT_2PI) / (v * s), 0.0)
        return float(out) if out.ndim == 0 else out

    def integrate(self, fn, lo=0.0, hi=math.inf):
        v = self.sigma * math.sqrt(self.T)
        mu = -0.5 * v * v
        u_lo = mu - _GAUSS_WIDTH * v if lo <= 0.0 else max(math.log(lo), mu - _GAUSS_WIDTH * v)
        u_hi = mu + _GAUSS_WIDTH * v if hi == math.inf else min(math.log(hi), mu + _GAUSS_WIDTH * v)

        def integrand(u):
            z = (u - mu) / v
            return fn(np.exp(u)) * np.exp(-0.5 * z * z - LOG_SQRT_2PI) / v

        return quad(integrand, u_lo, u_hi, points=[mu + k * v for k in (-4, -2, 0, 2, 4)])

    @cached_property
    def expectation(self):
        return 1.0

    def call_value(self, x):
        return bs.bs_call(x, self.T, self.sigma)

    def log_call_value(self, x):
        if x >= 0.0:
            return bs.log_otm_price(x, self.T, self.sigma)
        return math.log(bs.bs_call(x, self.T, self.sigma))

    def put_value(self, x):
        return bs.bs_put(x, self.T, self.sigma)

    def upper_first_moment(self, x):
        return float(special.ndtr(bs.d_plus(x, self.T, self.sigma)))


def lognormal_terminal_law(sigma, T):
    if not (sigma > 0 and T > 0):
        raise DomainError("lognormal law requires sigma > 0 and T > 0")
    return LognormalLaw(T=T, sigma=sigma)


# ---------------------------------------------------------------------------
# deterministic-endpoint bridge


@dataclass(frozen=True)
class BridgeParams:
    """``M_t = (1 - mu) exp(W_phi - phi/2) + mu``, ``phi_t = -log(1 - t/T)``; ``M_T = mu``."""

    mu: float
    T: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise DomainError("bridge endpoint mu must be non-negative")
        if self.mu == 1.0:
            raise DomainError("bridge with mu = 1 is a true martingale; mu != 1 required")
        if self.mu > 1.0:
            raise DomainError("bridge endpoint mu > 1 would give E[S_T] > 1 (not a supermartingale)")
        if not self.T > 0:
            raise DomainError("maturity must be positive")


@dataclass(frozen=True)
class DiracLaw(TerminalLaw):
    """Degenerate law ``S_T = mu`` almost surely (``mu = 0`` is pure mass at zero)."""

    mu: float = 0.0

    @property
    def atom(self):
        return self.mu if self.mu > 0.0 else None

    def density(self, s):
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0

    def integrate(self, fn, lo=0.0, hi=math.inf):
        if self.mu > 0.0 and lo <= self.mu < hi:
            return float(fn(self.mu))
        return 0.0

    @cached_property
    def expectation(self):
        return self.mu

    def call_value(self, x):
        return max(self.mu - math.exp(x), 0.0)

    def put_value(self, x):
        return max(math.exp(x) - self.mu, 0.0)

    def upper_first_moment(self, x):
        return self.mu if self.mu >= math.exp(x) else 0.0


def bridge_terminal_law(p=None, **kwargs):
    if p is None:
        p = BridgeParams(**kwargs)
    return DiracLaw(T=p.T, mass_at_zero=1.0 if p.mu == 0.0 else 0.0, mu=p.mu)


# ---------------------------------------------------------------------------


def martingale_defect(law):
    """``m_T = 1 - E[S_T]`` of a terminal law, clipped to ``[0, 1]``."""
    return law.defect


# ---------------------------------------------------------------------------
# quadratic volatility classification


class MartingaleClass(enum.Enum):
    TRUE_MARTINGALE = "TrueMartingale"
    STOPPED_TRUE_MARTINGALE = "StoppedTrueMartingale"
    STRICT_SUPERMARTINGALE = "StrictSupermartingale"
    STRICT_SUBMARTINGALE = "StrictSubmartingale"
    UNBOUNDED_STRICT_LOCAL = "UnboundedStrictLocal"


@dataclass(frozen=True)
class QuadraticVolSpec:
    """``dS = P(S) dW`` with ``P(s) = a s^2 + b s + c``."""

    a: float
    b: float
    c: float
    s0: float

    def __post_init__(self):
        if self.a == 0 and self.b == 0 and self.c == 0:
            raise DomainError("quadratic volatility polynomial is identically zero")

    def roots(self):
        """Real roots ``(l, u)`` in increasing order; ``()`` if none.

        Linear polynomials return one root; double roots return ``(r, r)``.
        """
        a, b, c = self.a, self.b, self.c
        if a == 0:
            return (-c / b + 0.0,) if b != 0 else ()
        disc = b * b - 4.0 * a * c
        if disc < 0:
            return ()
        if disc == 0:
            r = -b / (2.0 * a) + 0.0
            return (r, r)
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        r1, r2 = q / a, c / q
        return (min(r1, r2) + 0.0, max(r1, r2) + 0.0)


def classify_quadratic(spec):
    """Martingale class of the quadratic-volatility diffusion.

    Cases are checked in order and the first match wins:

    (i)   ``a = b = 0``, or two real roots ``l <= s0 <= u``: true martingale;
    (ii)  ``a = 0``, or a unique (double) root ``>= s0``: stopped process is a true martingale;
    (iii) two distinct roots with ``s0 > u`` / ``s0 < l``: strict super/submartingale;
    (iv)  double root ``u``, ``s0 > u``: strict supermartingale (``s0 < u`` is taken by (ii));
    (v)   no real root: unbounded strict local martingale.
    """
    a, b, s0 = spec.a, spec.b, spec.s0
    roots = spec.roots()
    if a == 0 and b == 0:
        return MartingaleClass.TRUE_MARTINGALE
    if a == 0:
        return MartingaleClass.STOPPED_TRUE_MARTINGALE
    if not roots:
        return MartingaleClass.UNBOUNDED_STRICT_LOCAL
    l, u = roots
    if l <= s0 <= u:
        return MartingaleClass.TRUE_MARTINGALE
    if l == u and u >= s0:
        return MartingaleClass.STOPPED_TRUE_MARTINGALE
    if s0 > u:
        return MartingaleClass.STRICT_SUPERMARTINGALE
    return MartingaleClass.STRICT_SUBMARTINGALE


# ---------------------------------------------------------------------------
# integral tests for driftless diffusions


@dataclass(frozen=True)
class _Verdict:
    finite: bool
    partial: float
    ratios: tuple = field(default_factory=tuple)


def _doubling_test(sigma_fn, toward_zero, growth, n_doublings):
    # integrate x / sigma(x)^2 in u = log x, one octave at a time
    def integrand(u):
        xv = math.exp(u)
        sv = sigma_fn(xv)
        return xv * xv / (sv * sv)

    ln2 = math.log(2.0)
    increments = []
    total = 0.0
    for k in range(n_doublings):
        a, b = (-(k + 1) * ln2, -k * ln2) if toward_zero else (k * ln2, (k + 1) * ln2)
        try:
            with np.errstate(all="ignore"):
                inc = quad(integrand, a, b, epsrel=1e-10)
        except (OverflowError, ZeroDivisionError):
            inc = math.inf
        if not math.isfinite(inc):
            return _Verdict(False, math.inf)
        increments.append(inc)
        total += inc
    tail = increments[-4:]
    ratios = tuple(tail[i + 1] / tail[i] if tail[i] > 0 else math.inf for i in range(3))
    if all(r <= 1.0 / growth for r in ratios):
        return _Verdict(True, total, ratios)
    if all(r >= 1.0 / growth for r in ratios):
        return _Verdict(False, total, ratios)
    raise IndeterminateError(f"octave increments neither decay nor persist: ratios={ratios}")


def diffusion_integral_tests(sigma_fn, growth=1.5, n_doublings=60):
    """Decide the integral criteria for ``dX = sigma(X) dW``, ``X_0 = 1``.

    Returns ``(hits_zero, strict_local)`` where ``hits_zero`` is True iff
    ``int_0^1 x / sigma^2 dx < inf`` and ``strict_local`` is True iff
    ``int_1^inf x / sigma^2 dx < inf``.

    Each integral is accumulated octave by octave (cutoffs halved / doubled).
    An integral is declared finite when the last three octave increments each
    shrink by at least the factor ``growth``, infinite when none of them does;
    anything else raises :class:`IndeterminateError`.
    """
    near_zero = _doubling_test(sigma_fn, True, growth, n_doublings)
    at_infinity = _doubling_test(sigma_fn, False, growth, n_doublings)
    return near_zero.finite, at_infinity.finite


# ---------------------------------------------------------------------------
# model specification grammar


def _parse_kv(body):
    out = {}
    if not body:
        return out
    for item in body.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"malformed model parameter {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError as exc:
            raise DomainError(f"non-numeric value in {item!r}") from exc
    return out


_ALLOWED = {
    "cev": {"beta", "sigma", "s0"},
    "bridge": {"mu"},
    "absorbed-bm": {"sigma"},
    "lognormal": {"sigma"},
}


def parse_model(spec, T):
    """Build a terminal law at horizon ``T`` from a model specification string."""
    name, _, body = spec.partition(":")
    name = name.strip()
    if name not in _ALLOWED:
        raise DomainError(f"unknown model {name!r}; expected one of {sorted(_ALLOWED)}")
    params = _parse_kv(body)
    unknown = set(params) - _ALLOWED[name]
    if unknown:
        raise DomainError(f"unknown parameter(s) {sorted(unknown)} for model {name!r}")
    if name == "cev":
        return cev_terminal_law(
            CevParams(s0=params.get("s0", 1.0), beta=params.get("beta", 1.0), sigma=params.get("sigma", 1.0), T=T)
        )
    if name == "bridge":
        if "mu" not in params:
            raise DomainError("bridge model requires mu")
        return bridge_terminal_law(BridgeParams(mu=params["mu"], T=T))
    if name == "absorbed-bm":
        return absorbed_bm_terminal_law(params.get("sigma", 1.0), T)
    return lognormal_terminal_law(params.get("sigma", 0.2), T)
