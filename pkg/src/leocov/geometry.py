"""Spherical and link geometry between the Earth and a concentric orbital shell.

Distances on the orbital sphere are great-circle (spherical) distances in km.
All angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

UNIT_TOL = 1e-9
_BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class GeometryConfig:
    """Earth radius, orbital altitude and the user's minimum elevation angle."""

    earth_radius_km: float = 6370.0
    orbit_altitude_km: float = 500.0
    min_elevation_rad: float = 0.0

    def __post_init__(self):
        if not (self.earth_radius_km > 0 and math.isfinite(self.earth_radius_km)):
            raise InvalidArgumentError(f"earth_radius_km must be positive, got {self.earth_radius_km}")
        if not (self.orbit_altitude_km > 0 and math.isfinite(self.orbit_altitude_km)):
            raise InvalidArgumentError(f"orbit_altitude_km must be positive, got {self.orbit_altitude_km}")
        if not (0.0 <= self.min_elevation_rad <= math.pi / 2):
            raise InvalidArgumentError(
                f"min_elevation_rad must lie in [0, pi/2], got {self.min_elevation_rad}"
            )

    @classmethod
    def from_degrees(cls, earth_radius_km=6370.0, orbit_altitude_km=500.0, min_elevation_deg=0.0):
        return cls(earth_radius_km, orbit_altitude_km, math.radians(min_elevation_deg))

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.orbit_altitude_km

    @property
    def zenith(self) -> np.ndarray:
        """Unit vector of the user's zenith point on the orbital sphere (the north pole)."""
        return np.array([0.0, 0.0, 1.0])

    @property
    def max_visible_radius_km(self) -> float:
        return max_visible_spherical_radius(self)


def _check_unit(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise InvalidArgumentError(f"{name} must be a 3-vector")
    norm = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise InvalidArgumentError(f"{name} is not a unit vector (norm {norm})")
    return v


def central_angle(p, q):
    """Angle between unit vectors, vectorised over leading axes.

    Uses atan2(|p x q|, p.q), which equals arccos(clip(p.q)) but keeps full
    precision for nearly coincident or antipodal pairs.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    cross = np.linalg.norm(np.cross(p, q), axis=-1)
    dot = np.sum(p * q, axis=-1)
    return np.arctan2(cross, dot)


def spherical_distance(p, q, radius_km: float):
    """Great-circle distance between the directions ``p`` and ``q`` on a sphere of ``radius_km``."""
    if not radius_km > 0:
        raise InvalidArgumentError(f"radius_km must be positive, got {radius_km}")
    p = _check_unit(p, "p")
    q = _check_unit(q, "q")
    d = radius_km * central_angle(p, q)
    return float(d) if np.ndim(d) == 0 else d


def _check_arc(r, upper, name="r"):
    r_arr = np.asarray(r, dtype=float)
    # a few ulps of slack so that pi*R computed elsewhere is accepted
    if np.any(~np.isfinite(r_arr)) or np.any(r_arr < 0) or np.any(r_arr > upper * (1 + 1e-12)):
        raise InvalidArgumentError(f"{name} must lie in [0, {upper}], got {r}")
    return r_arr


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


def euclidean_slant_distance(r, cfg: GeometryConfig):
    """User-to-satellite distance (km) for a satellite at spherical distance ``r`` from the zenith."""
    rs, re = cfg.orbit_radius_km, cfg.earth_radius_km
    r = _check_arc(r, math.pi * rs)
    d = np.sqrt(cfg.orbit_altitude_km**2 + 4.0 * rs * re * np.sin(r / (2.0 * rs)) ** 2)
    return _as_output(d)


def path_loss(r, alpha: float, cfg: GeometryConfig):
    """Power-law path loss ``D(r)**-alpha``."""
    if not alpha >= 2:
        raise InvalidArgumentError(f"alpha must be >= 2, got {alpha}")
    return _as_output(np.asarray(euclidean_slant_distance(r, cfg)) ** (-alpha))


def elevation_angle(psi, cfg: GeometryConfig):
    """Elevation of a satellite seen from the user, as a function of the Earth-central angle ``psi``."""
    rs, re = cfg.orbit_radius_km, cfg.earth_radius_km
    psi = np.asarray(psi, dtype=float)
    d = np.sqrt(rs**2 + re**2 - 2.0 * rs * re * np.cos(psi))
    return _as_output(np.arcsin(np.clip((rs * np.cos(psi) - re) / d, -1.0, 1.0)))


def max_visible_spherical_radius(cfg: GeometryConfig) -> float:
    """Spherical radius of the cap of satellites seen at elevation >= ``cfg.min_elevation_rad``.

    At zero elevation this is the horizon value ``R_S * arccos(R_E / R_S)``.
    Otherwise the elevation equation is solved by bisection on the
    Earth-central angle, which is valid because elevation decreases
    monotonically with that angle.
    """
    rs, re = cfg.orbit_radius_km, cfg.earth_radius_km
    psi_horizon = math.acos(re / rs)
    w = cfg.min_elevation_rad
    if w == 0.0:
        return rs * psi_horizon
    if w >= math.pi / 2:
        return 0.0
    lo, hi = 0.0, psi_horizon
    while hi - lo > _BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if elevation_angle(mid, cfg) >= w:
            lo = mid
        else:
            hi = mid
    return rs * lo


def spherical_cap_area(r, radius_km: float):
    """Area (km^2) of a cap of spherical radius ``r`` on a sphere of ``radius_km``."""
    if not radius_km > 0:
        raise InvalidArgumentError(f"radius_km must be positive, got {radius_km}")
    r = _check_arc(r, math.pi * radius_km)
    return _as_output(2.0 * math.pi * radius_km**2 * (1.0 - np.cos(r / radius_km)))
