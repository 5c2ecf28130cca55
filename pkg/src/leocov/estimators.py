"""scikit-learn style wrappers.

A "sample" here is one satellite, given as a 3-vector direction (or any
non-zero position, which is normalised onto the shell). ``fit`` takes the
constellation snapshot; ``predict`` takes SINR thresholds in dB and returns
coverage probabilities. The functional API in the other modules is the
primary interface; these classes only adapt it to ``get_params``/``set_params``,
``clone`` and pipeline tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bounds import BOUNDS, ChannelParams, coverage_curve
from .exceptions import InvalidArgumentError
from .geometry import GeometryConfig
from .montecarlo import SimConfig, coverage_estimate
from .point_process import (
    PointSet,
    RegulationParams,
    estimate_regulation_nu,
    fibonacci_regulation_params,
    half_min_distance,
    observe,
    verify_ball_regulation,
)


def _as_pointset(X, radius_km) -> PointSet:
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise InvalidArgumentError(f"expected 3 columns (x, y, z), got {X.shape[1]}")
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise InvalidArgumentError("satellite positions must be non-zero")
    return PointSet(float(radius_km), X / norms)


def _thresholds(theta_db):
    return check_array(np.asarray(theta_db, dtype=float).reshape(-1, 1), ensure_min_samples=1).ravel()


class RegulationEstimator(BaseEstimator):
    """Fit ``(sigma, rho, nu)`` ball-regulation parameters to a point set.

    ``method="fibonacci"`` uses the lattice closed form from the measured half
    minimum spacing; ``method="sampled"`` takes the worst ``(count - 1) / r**2``
    over random caps.
    """

    def __init__(self, radius_km=6870.0, method="fibonacci", centers=1000, radii=100, seed=0):
        self.radius_km = radius_km
        self.method = method
        self.centers = centers
        self.radii = radii
        self.seed = seed

    def fit(self, X, y=None):
        ps = _as_pointset(X, self.radius_km)
        if self.method == "fibonacci":
            self.half_min_distance_km_ = half_min_distance(ps)
            params = fibonacci_regulation_params(self.half_min_distance_km_, ps.radius_km)
        elif self.method == "sampled":
            params = estimate_regulation_nu(ps, seed=self.seed, centers=self.centers, radii=self.radii)
        else:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        self.params_ = params
        self.sigma_, self.rho_, self.nu_ = params.sigma, params.rho, params.nu
        self.n_features_in_ = 3
        return self

    def score(self, X, y=None):
        """Negative worst sampled excess of ``X`` over the fitted bound (0 or more is a pass)."""
        check_is_fitted(self, "params_")
        ps = _as_pointset(X, self.radius_km)
        report = verify_ball_regulation(ps, self.params_, self.centers, self.radii, self.seed)
        return -report.max_excess


class _CoverageBase(BaseEstimator):
    def _configs(self):
        ch = ChannelParams(self.m, self.alpha, self.gbar, self.wbar)
        cfg = GeometryConfig.from_degrees(self.earth_radius_km, self.orbit_altitude_km, self.min_elevation_deg)
        return ch, cfg

    def _fit_observation(self, X):
        ch, cfg = self._configs()
        ps = _as_pointset(X, cfg.orbit_radius_km)
        self.points_ = ps
        self.observation_ = observe(ps, cfg)
        self.r0_km_ = self.observation_.serving_distance_km
        self.n_visible_ = self.observation_.visible_count
        self.n_features_in_ = 3
        return ch, cfg, ps


class CoverageBoundEstimator(_CoverageBase):
    """Analytic coverage lower bound for the constellation passed to ``fit``.

    ``regulation`` may be a ``(sigma, rho, nu)`` triple; by default it is fitted
    with :class:`RegulationEstimator` using the lattice closed form.
    """

    def __init__(
        self,
        model="nakagami",
        m=2,
        alpha=2.0,
        gbar=0.1,
        wbar=0.0,
        earth_radius_km=6370.0,
        orbit_altitude_km=500.0,
        min_elevation_deg=25.0,
        regulation=None,
    ):
        self.model = model
        self.m = m
        self.alpha = alpha
        self.gbar = gbar
        self.wbar = wbar
        self.earth_radius_km = earth_radius_km
        self.orbit_altitude_km = orbit_altitude_km
        self.min_elevation_deg = min_elevation_deg
        self.regulation = regulation

    def fit(self, X, y=None):
        if self.model not in BOUNDS:
            raise InvalidArgumentError(f"model must be one of {sorted(BOUNDS)}, got {self.model!r}")
        _, cfg, _ = self._fit_observation(X)
        if self.regulation is None:
            reg = RegulationEstimator(radius_km=cfg.orbit_radius_km).fit(X)
            self.params_ = reg.params_
        else:
            self.params_ = RegulationParams(*self.regulation)
        return self

    def predict(self, theta_db):
        check_is_fitted(self, "params_")
        ch, cfg = self._configs()
        if self.observation_.empty:
            return np.zeros(len(_thresholds(theta_db)))
        curve = coverage_curve(_thresholds(theta_db), self.model, self.r0_km_, ch, cfg, self.params_)
        return curve.probability


class MonteCarloCoverage(_CoverageBase):
    """Seeded Monte Carlo coverage estimate; ``predict_interval`` adds the Wilson band."""

    def __init__(
        self,
        m=2,
        alpha=2.0,
        gbar=0.1,
        wbar=0.0,
        earth_radius_km=6370.0,
        orbit_altitude_km=500.0,
        min_elevation_deg=25.0,
        runs=50_000,
        seed=0,
        workers=None,
    ):
        self.m = m
        self.alpha = alpha
        self.gbar = gbar
        self.wbar = wbar
        self.earth_radius_km = earth_radius_km
        self.orbit_altitude_km = orbit_altitude_km
        self.min_elevation_deg = min_elevation_deg
        self.runs = runs
        self.seed = seed
        self.workers = workers

    def fit(self, X, y=None):
        self._fit_observation(X)
        return self

    def _curve(self, theta_db):
        check_is_fitted(self, "observation_")
        ch, cfg = self._configs()
        th = _thresholds(theta_db)
        order = np.argsort(th)
        sim = SimConfig(self.runs, self.seed, th[order])
        curve = coverage_estimate(self.observation_, ch, cfg, sim, workers=self.workers)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        return curve, inverse

    def predict(self, theta_db):
        curve, inverse = self._curve(theta_db)
        return curve.probability[inverse]

    def predict_interval(self, theta_db):
        curve, inverse = self._curve(theta_db)
        return curve.ci_low[inverse], curve.ci_high[inverse]
