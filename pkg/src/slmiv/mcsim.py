"""Exact-path Monte Carlo for CEV ``beta = 1`` and the deterministic-endpoint bridge.

CEV with ``beta = 1`` and ``S_0 = 1`` is ``S = 1 / (sigma R)`` where ``R`` is
the radius of a three-dimensional Brownian motion started at distance
``1 / sigma`` from the origin, so paths are exact in law on any grid.  The
event ``sup S >= z`` is ``inf R <= r`` with ``r = 1 / (sigma z)``; between
grid points the radius is a Bessel(3) bridge and the probability that it dips
below ``r`` is known in closed form:

    p(u, v) = (exp(-2 (u - r)(v - r) / h) - exp(-2 u v / h)) / (1 - exp(-2 u v / h)).

Averaging ``1 - prod_k (1 - p_k)`` over paths estimates ``Q(sup S >= z)``
without the downward bias of the grid maximum.  ``z Q(sup S >= z)`` tends to
the martingale defect as ``z -> inf``.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LevelsTooLowError
from .specfun import norm_cdf

BATCH_SIZE = 5000


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    n_steps: int
    seed: int = 0
    z_levels: tuple = (8.0, 16.0, 32.0, 64.0)

    def __post_init__(self):
        if not (isinstance(self.n_paths, (int, np.integer)) and self.n_paths > 0):
            raise DomainError("n_paths must be a positive integer")
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps > 0):
            raise DomainError("n_steps must be a positive integer")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")
        z = np.asarray(self.z_levels, dtype=float)
        if z.ndim != 1 or z.size == 0 or np.any(z <= 1.0):
            raise DomainError("z levels must be reals > 1")
        if np.any(np.diff(z) <= 0):
            raise DomainError("z levels must be strictly increasing")
        object.__setattr__(self, "z_levels", tuple(float(v) for v in z))


@dataclass(frozen=True)
class SupPaths:
    """Per-path terminal value, grid supremum and level-crossing probabilities."""

    terminal: np.ndarray
    sup_grid: np.ndarray
    hit_prob: np.ndarray  # shape (n_paths, n_levels)
    z_levels: tuple


@dataclass(frozen=True)
class BridgePaths:
    times: np.ndarray
    values: np.ndarray  # shape (n_paths, n_steps + 1)
    mu: float

    @property
    def terminal(self):
        return self.values[:, -1]


@dataclass(frozen=True)
class McDefectEstimate:
    pi_hat_per_level: list
    pi_hat: float
    std_err: float
    pi_hat_grid: float = math.nan
    per_level_std_err: list = field(default_factory=list)


def _n_workers():
    env = os.environ.get("SLM_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return cap


def _run_batches(cfg, batch_fn):
    sizes = [BATCH_SIZE] * (cfg.n_paths // BATCH_SIZE)
    if cfg.n_paths % BATCH_SIZE:
        sizes.append(cfg.n_paths % BATCH_SIZE)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = [(np.random.Generator(np.random.Philox(s)), n) for s, n in zip(seeds, sizes)]
    workers = min(_n_workers(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda job: batch_fn(*job), jobs))
    else:
        results = [batch_fn(*job) for job in jobs]
    return [np.concatenate(parts) for parts in zip(*results)]


def _bessel3_crossing(u, v, r, h):
    """Probability that a Bessel(3) bridge from ``u`` to ``v`` over ``h`` dips to ``r``."""
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        c1 = 2.0 * r * (u + v - r) / h
        c2 = 2.0 * u * v / h
        p = np.exp(-2.0 * (u - r) * (v - r) / h) * (-np.expm1(-c1)) / (-np.expm1(-c2))
    return np.where((u <= r) | (v <= r), 1.0, np.minimum(p, 1.0))


def _brownian_crossing(a, b, c, var):
    """Probability that a Brownian bridge from ``a`` to ``b`` with variance ``var`` reaches ``c``."""
    with np.errstate(over="ignore", under="ignore"):
        p = np.exp(-2.0 * (c - a) * (c - b) / var)
    return np.where((a >= c) | (b >= c), 1.0, p)


def simulate_cev1_paths(sigma, T, cfg):
    """CEV ``beta = 1``, ``S_0 = 1``: exact grid paths with bridge-corrected crossing probabilities."""
    if not (sigma > 0 and T > 0):
        raise DomainError("sigma and T must be positive")
    h = T / cfg.n_steps
    sh = math.sqrt(h)
    radii = np.array([1.0 / (sigma * z) for z in cfg.z_levels])

    def batch(rng, n):
        pos = np.zeros((n, 3))
        pos[:, 0] = 1.0 / sigma
        u = np.full(n, 1.0 / sigma)
        rmin = u.copy()
        log_miss = np.zeros((n, radii.size))
        for _ in range(cfg.n_steps):
            pos += sh * rng.standard_normal((n, 3))
            v = np.sqrt(np.einsum("ij,ij->i", pos, pos))
            np.minimum(rmin, v, out=rmin)
            # crossing is negligible unless the path comes within ~6 sqrt(h) of a level
            near = np.minimum(u, v) < radii[0] + 6.0 * sh
            if near.any():
                idx = np.flatnonzero(near)
                for j, r in enumerate(radii):
                    p = _bessel3_crossing(u[idx], v[idx], r, h)
                    with np.errstate(divide="ignore"):
                        log_miss[idx, j] += np.log1p(-p)
            u = v
        return 1.0 / (sigma * u), 1.0 / (sigma * rmin), -np.expm1(log_miss)

    terminal, sup_grid, hit = _run_batches(cfg, batch)
    return SupPaths(terminal, sup_grid, hit, cfg.z_levels)


def simulate_lognormal_paths(sigma, T, cfg):
    """Geometric Brownian motion from 1 (true martingale control)."""
    if not (sigma > 0 and T > 0):
        raise DomainError("sigma and T must be positive")
    h = T / cfg.n_steps
    var = sigma * sigma * h
    levels = np.log(np.asarray(cfg.z_levels))

    def batch(rng, n):
        a = np.zeros(n)
        amax = a.copy()
        log_miss = np.zeros((n, levels.size))
        for _ in range(cfg.n_steps):
            b = a - 0.5 * var + math.sqrt(var) * rng.standard_normal(n)
            np.maximum(amax, b, out=amax)
            near = np.maximum(a, b) > levels[0] - 6.0 * math.sqrt(var)
            if near.any():
                idx = np.flatnonzero(near)
                for j, c in enumerate(levels):
                    with np.errstate(divide="ignore"):
                        log_miss[idx, j] += np.log1p(-_brownian_crossing(a[idx], b[idx], c, var))
            a = b
        return np.exp(a), np.exp(amax), -np.expm1(log_miss)

    terminal, sup_grid, hit = _run_batches(cfg, batch)
    return SupPaths(terminal, sup_grid, hit, cfg.z_levels)


def simulate_bridge(mu, T, cfg):
    """``M_t = (1 - mu) exp(W_phi - phi/2) + mu`` with ``phi_t = -log(1 - t/T)``; ``M_T = mu``."""
    if not (0.0 <= mu < 1.0):
        raise DomainError("bridge endpoint mu must lie in [0, 1)")
    if not T > 0:
        raise DomainError("maturity must be positive")
    times = np.linspace(0.0, T, cfg.n_steps + 1)
    phi = -np.log1p(-times[:-1] / T)
    dphi = np.diff(phi)

    def batch(rng, n):
        w = np.cumsum(rng.standard_normal((n, dphi.size)) * np.sqrt(dphi), axis=1)
        vals = np.empty((n, cfg.n_steps + 1))
        vals[:, 0] = 1.0
        vals[:, 1:-1] = (1.0 - mu) * np.exp(w - 0.5 * phi[1:]) + mu
        vals[:, -1] = mu
        return (vals,)

    (values,) = _run_batches(cfg, batch)
    return BridgePaths(times, values, mu)


def cev1_defect(sigma, T):
    """``2 N(-1 / (sigma sqrt(T)))``."""
    return 2.0 * norm_cdf(-1.0 / (sigma * math.sqrt(T)))


def estimate_pi(paths, cfg=None, min_exceedances=50):
    """Extrapolate ``z Q(sup S >= z)`` to ``z = inf`` from the two largest levels.

    The estimate is linear in ``1/z`` through the top two levels; its standard
    error is the sample standard deviation of the per-path combination.
    """
    if isinstance(paths, BridgePaths):
        raise DomainError("the supremum estimator needs a strict local martingale; bridge paths are degenerate at T")
    z = np.asarray(paths.z_levels if cfg is None else cfg.z_levels, dtype=float)
    if z.size != paths.hit_prob.shape[1] or not np.allclose(z, paths.z_levels):
        raise DomainError("z levels differ from those used for simulation")
    n = paths.hit_prob.shape[0]
    q = paths.hit_prob.mean(axis=0)
    q_se = paths.hit_prob.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(q)
    if n * q[-1] < min_exceedances:
        raise LevelsTooLowError(
            f"only {n * q[-1]:.1f} expected exceedances at z={z[-1]:g} (need {min_exceedances})"
        )
    per_level = [(float(zk), float(zk * qk)) for zk, qk in zip(z, q)]
    per_level_se = [float(zk * s) for zk, s in zip(z, q_se)]
    grid_frac = np.array([(paths.sup_grid >= zk).mean() for zk in z])
    if z.size == 1:
        pi = z[0] * paths.hit_prob[:, 0]
        grid = z[0] * grid_frac[0]
    else:
        z1, z2 = z[-2], z[-1]
        w1, w2 = 1.0 / z1, 1.0 / z2
        # intercept at w = 0 of the line through (w1, z1 q1) and (w2, z2 q2)
        c1, c2 = -w2 * z1 / (w1 - w2), w1 * z2 / (w1 - w2)
        pi = c1 * paths.hit_prob[:, -2] + c2 * paths.hit_prob[:, -1]
        grid = c1 * grid_frac[-2] + c2 * grid_frac[-1]
    se = float(pi.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McDefectEstimate(per_level, float(pi.mean()), se, float(grid), per_level_se)
