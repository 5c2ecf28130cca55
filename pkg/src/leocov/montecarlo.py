"""Seeded Monte Carlo estimate of the conditional coverage probability.

The constellation geometry is held fixed and only the fading is random.
Runs are processed in fixed-size blocks, each with its own random stream
derived from ``(seed, block index)``, so the result is bit-identical for any
number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.stats import norm

from .bounds import ChannelParams
from .curves import CoverageCurve, db_to_linear
from .exceptions import ConditioningError, InvalidArgumentError
from .geometry import GeometryConfig, path_loss
from .point_process import Observation, PointSet, observe

BLOCK_RUNS = 2048
WORKERS_ENV = "LEOCOV_MAX_WORKERS"
_Z95 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class SimConfig:
    runs: int = 50_000
    seed: int = 0
    thetas_db: np.ndarray = field(default_factory=lambda: np.arange(-15.0, 16.0))
    rotate_per_run: bool = False

    def __post_init__(self):
        if int(self.runs) != self.runs or self.runs < 1:
            raise InvalidArgumentError(f"runs must be a positive integer, got {self.runs}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        th = np.array(self.thetas_db, dtype=float).reshape(-1)
        if len(th) == 0 or np.any(np.diff(th) <= 0):
            raise InvalidArgumentError("thetas_db must be non-empty and strictly increasing")
        object.__setattr__(self, "thetas_db", th)


def sample_nakagami_power(m: int, rng: np.random.Generator, size=None):
    """Unit-mean Gamma(m, rate m) power gain, drawn as a sum of ``m`` Exp(rate m) variables."""
    if int(m) != m or m < 1:
        raise InvalidArgumentError(f"m must be a positive integer, got {m}")
    m = int(m)
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    draws = rng.standard_exponential(shape + (m,)).sum(axis=-1) / m
    return float(draws) if size is None else draws


def _check_observation(obs):
    if obs.empty:
        raise ConditioningError("no visible satellite: coverage is conditioned on r0 <= r_max")


def sinr_realization(obs: Observation, ch: ChannelParams, cfg: GeometryConfig, rng: np.random.Generator) -> float:
    """One SINR draw; ``inf`` when there is neither interference nor noise."""
    _check_observation(obs)
    h0 = sample_nakagami_power(ch.m, rng)
    hi = sample_nakagami_power(ch.m, rng, size=len(obs.interferer_distances_km))
    signal = h0 * path_loss(obs.serving_distance_km, ch.alpha, cfg)
    interference = ch.gbar * float(np.sum(hi * np.asarray(path_loss(obs.interferer_distances_km, ch.alpha, cfg))))
    denom = interference + ch.wbar
    return math.inf if denom == 0 else signal / denom


def wilson_interval(successes, trials, z: float = _Z95):
    """Wilson score interval for a binomial proportion."""
    successes = np.asarray(successes, dtype=float)
    p = successes / trials
    z2 = z * z
    center = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * np.sqrt(p * (1 - p) / trials + z2 / (4 * trials**2)) / (1 + z2 / trials)
    # keep the estimate inside its own interval despite rounding at p = 0 or 1
    return np.minimum(center - half, p), np.maximum(center + half, p)


def _block_rng(seed, block):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _fixed_block(obs, ch, cfg, thetas, seed, block, n):
    rng = _block_rng(seed, block)
    k = len(obs.interferer_distances_km)
    h0 = sample_nakagami_power(ch.m, rng, size=n)
    signal = h0 * path_loss(obs.serving_distance_km, ch.alpha, cfg)
    if k:
        hi = sample_nakagami_power(ch.m, rng, size=(n, k))
        loss = np.asarray(path_loss(obs.interferer_distances_km, ch.alpha, cfg))
        denom = ch.gbar * (hi * loss).sum(axis=1) + ch.wbar
    else:
        denom = np.full(n, ch.wbar)
    with np.errstate(divide="ignore"):
        sinr = np.where(denom > 0, signal / np.where(denom > 0, denom, 1.0), np.inf)
    return (sinr[:, None] > thetas[None, :]).sum(axis=0), n


def _rotating_block(points, ch, cfg, thetas, seed, block, n):
    rng = _block_rng(seed, block)
    counts = np.zeros(len(thetas), dtype=np.int64)
    valid = 0
    for _ in range(n):
        rot = Rotation.random(random_state=rng).as_matrix()
        obs = observe(points.rotated(rot), cfg)
        if obs.empty:
            continue
        valid += 1
        counts += sinr_realization(obs, ch, cfg, rng) > thetas
    return counts, valid


def max_workers(requested: int | None = None) -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def coverage_estimate(
    obs: Observation,
    ch: ChannelParams,
    cfg: GeometryConfig,
    sim: SimConfig,
    points: PointSet | None = None,
    workers: int | None = None,
) -> CoverageCurve:
    """Empirical coverage curve with 95% Wilson intervals.

    Every run draws one fading vector and is scored against all thresholds,
    so the curve is monotone in theta. With ``sim.rotate_per_run`` the point
    set (required via ``points``) is randomly rotated before each run; runs
    that then see no satellite are dropped, keeping the estimate conditional
    on a visible serving satellite.
    """
    thetas = db_to_linear(sim.thetas_db)
    if sim.rotate_per_run:
        if points is None:
            raise InvalidArgumentError("rotate_per_run needs the point set")
        task, target = _rotating_block, points
    else:
        _check_observation(obs)
        task, target = _fixed_block, obs
    sizes = [min(BLOCK_RUNS, sim.runs - start) for start in range(0, sim.runs, BLOCK_RUNS)]
    n_workers = min(max_workers(workers), len(sizes))
    if n_workers == 1:
        parts = [task(target, ch, cfg, thetas, sim.seed, b, n) for b, n in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            futures = [pool.submit(task, target, ch, cfg, thetas, sim.seed, b, n) for b, n in enumerate(sizes)]
            parts = [f.result() for f in futures]
    covered = np.sum([c for c, _ in parts], axis=0)
    trials = sum(v for _, v in parts)
    if trials == 0:
        raise ConditioningError("no run had a visible satellite")
    lo, hi = wilson_interval(covered, trials)
    return CoverageCurve(sim.thetas_db, covered / trials, lo, hi)
