"""Bubble test from the right wing of a single-maturity smile.

Under a strict local martingale the residual ``r(x) = I(x) sqrt(T) - sqrt(2x)``
settles at ``n = N^{-1}(m)``; under a true martingale it drifts to ``-inf``.
With finitely many strikes this can only be a heuristic, so every threshold
is an explicit field of :class:`DetectConfig` and is echoed in the report.

Rule, applied to quotes with ``x >= x_min_wing``:

* least-squares slope of ``r`` against ``x`` and ``t = slope / se(slope)``;
* ``|slope| < flat_tol``                        -> StrictLocal,
  ``n_hat`` = mean residual over the upper half of the window, ``m_hat = N(n_hat)``;
* ``slope < -flat_tol`` and ``t < -t_threshold`` -> TrueMartingaleLike, ``m_hat = 0``;
* anything else (including too few wing points) -> Inconclusive.
"""

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NonWingDataError, TooFewQuotesError
from .specfun import norm_cdf


class Verdict(enum.Enum):
    STRICT_LOCAL = "StrictLocal"
    TRUE_MARTINGALE_LIKE = "TrueMartingaleLike"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DetectConfig:
    x_min_wing: float = 2.0
    x_max_wing: float = math.inf
    flat_tol: float = 0.01
    t_threshold: float = 3.0
    min_wing_points: int = 4

    def __post_init__(self):
        if not self.flat_tol > 0:
            raise DomainError("flat_tol must be positive")
        if not self.min_wing_points >= 2:
            raise DomainError("min_wing_points must be at least 2")
        if not self.x_max_wing > self.x_min_wing:
            raise DomainError("empty wing window")


@dataclass(frozen=True)
class QuoteSet:
    T: float
    x: np.ndarray
    iv: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        iv = np.asarray(self.iv, dtype=float)
        if not self.T > 0:
            raise DomainError("maturity must be positive")
        if x.ndim != 1 or x.shape != iv.shape:
            raise DomainError("log-strikes and implied vols must be 1-d of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(iv))):
            raise DomainError("quotes must be finite")
        if np.any(iv <= 0):
            raise DomainError("implied volatilities must be positive")
        order = np.argsort(x, kind="stable")
        x, iv = x[order], iv[order]
        if np.any(np.diff(x) == 0):
            raise DomainError("log-strikes must be distinct")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "iv", iv)

    @classmethod
    def from_pairs(cls, T, pairs):
        pairs = list(pairs)
        return cls(T, [p[0] for p in pairs], [p[1] for p in pairs])


@dataclass
class DetectionReport:
    n_hat: float
    m_hat: float
    verdict: Verdict
    residuals: list
    trend_stat: float
    slope: float = math.nan
    wing_x: list = field(default_factory=list)
    config: DetectConfig = field(default_factory=DetectConfig)

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["config"] = asdict(self.config)
        d["rule"] = (
            "StrictLocal if |slope| < flat_tol; TrueMartingaleLike if slope < -flat_tol "
            "and slope/se < -t_threshold; else Inconclusive"
        )
        return d


def _trend(x, r):
    """Least-squares slope of ``r`` on ``x`` and its t-statistic."""
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (r - r.mean())) / sxx
    resid = r - r.mean() - slope * xc
    dof = x.size - 2
    if dof <= 0:
        return slope, math.nan
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 / sxx)
    if se == 0.0:
        return slope, math.copysign(math.inf, slope) if slope != 0.0 else 0.0
    return slope, slope / se


def detect(q, cfg=None):
    cfg = cfg or DetectConfig()
    if q.x.size < cfg.min_wing_points:
        raise TooFewQuotesError(f"{q.x.size} quotes; at least {cfg.min_wing_points} needed")
    mask = (q.x >= cfg.x_min_wing) & (q.x <= cfg.x_max_wing)
    if not mask.any():
        raise NonWingDataError(f"no quotes with x >= {cfg.x_min_wing}")
    x = q.x[mask]
    r = q.iv[mask] * math.sqrt(q.T) - np.sqrt(2.0 * x)
    top = r[x.size // 2 :]
    n_hat = float(top.mean())
    if x.size < cfg.min_wing_points:
        return DetectionReport(n_hat, float(norm_cdf(n_hat)), Verdict.INCONCLUSIVE, r.tolist(), math.nan,
                               math.nan, x.tolist(), cfg)
    slope, t = _trend(x, r)
    if abs(slope) < cfg.flat_tol:
        verdict, m_hat = Verdict.STRICT_LOCAL, float(norm_cdf(n_hat))
    elif slope < -cfg.flat_tol and t < -cfg.t_threshold:
        verdict, m_hat = Verdict.TRUE_MARTINGALE_LIKE, 0.0
    else:
        verdict, m_hat = Verdict.INCONCLUSIVE, float(norm_cdf(n_hat))
    return DetectionReport(n_hat, m_hat, verdict, r.tolist(), t, slope, x.tolist(), cfg)


def read_quotes_csv(source, T):
    """Parse ``log_strike,implied_vol`` CSV text or file object into a :class:`QuoteSet`."""
    fh = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not {"log_strike", "implied_vol"} <= set(reader.fieldnames):
        raise DomainError("CSV header must contain log_strike,implied_vol")
    xs, ivs = [], []
    for line, row in enumerate(reader, start=2):
        try:
            xs.append(float(row["log_strike"]))
            ivs.append(float(row["implied_vol"]))
        except (TypeError, ValueError) as exc:
            raise DomainError(f"bad number on CSV line {line}") from exc
    return QuoteSet(T, xs, ivs)
