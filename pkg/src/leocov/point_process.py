"""Point sets on a sphere: Fibonacci lattices, cap counts and ball regulation.

A process is ``(sigma, rho, nu)``-ball-regulated when every cap of spherical
radius ``r`` holds at most ``sigma + rho*r + nu*r**2`` points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import InputFormatError, InvalidArgumentError
from .geometry import UNIT_TOL, GeometryConfig, central_angle, max_visible_spherical_radius

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

# 2*sqrt(N)*sin(H/R) tends to this constant for the Fibonacci lattice.
FIBONACCI_SPACING_CONSTANT = 3.0921

_BRUTE_FORCE_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class PointSet:
    """Directions on a sphere of radius ``radius_km``, optionally with string identifiers."""

    radius_km: float
    points: np.ndarray
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.radius_km > 0:
            raise InvalidArgumentError(f"radius_km must be positive, got {self.radius_km}")
        pts = np.array(self.points, dtype=float).reshape(-1, 3)
        if len(pts) and np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > UNIT_TOL):
            raise InvalidArgumentError("all points must be unit vectors")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != len(pts):
                raise InvalidArgumentError("ids and points differ in length")
            if len(set(ids)) != len(ids):
                raise InvalidArgumentError("point identifiers must be unique")
            object.__setattr__(self, "ids", ids)

    def __len__(self):
        return len(self.points)

    @property
    def density(self) -> float:
        """Points per km^2 of sphere surface."""
        return len(self) / (4.0 * math.pi * self.radius_km**2)

    def distances_from(self, center) -> np.ndarray:
        """Spherical distance (km) from the unit vector ``center`` to every point."""
        center = np.asarray(center, dtype=float)
        return self.radius_km * central_angle(self.points, center)

    def rotated(self, matrix) -> "PointSet":
        pts = self.points @ np.asarray(matrix, dtype=float).T
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        return PointSet(self.radius_km, pts, self.ids)


@dataclass(frozen=True)
class RegulationParams:
    """Ball-regulation constants; ``nu`` is in points per km^2, ``rho`` per km."""

    sigma: float
    rho: float
    nu: float

    def __post_init__(self):
        if not (self.sigma >= 0 and self.nu >= 0 and math.isfinite(self.rho)):
            raise InvalidArgumentError(f"need sigma >= 0, nu >= 0 and finite rho, got {self}")

    def cap_bound(self, r):
        """Admissible number of points in a cap of spherical radius ``r``."""
        return self.sigma + self.rho * np.asarray(r) + self.nu * np.asarray(r) ** 2


@dataclass(frozen=True, eq=False)
class Observation:
    """What a user at the north pole sees: the serving distance and the interferers' distances."""

    serving_distance_km: float | None
    interferer_distances_km: np.ndarray = field(default_factory=lambda: np.empty(0))
    r_max_km: float = 0.0
    serving_index: int | None = None
    interferer_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def empty(self) -> bool:
        return self.serving_distance_km is None

    @property
    def visible_count(self) -> int:
        return 0 if self.empty else 1 + len(self.interferer_distances_km)


@dataclass(frozen=True)
class RegulationReport:
    max_excess: float
    worst_center: np.ndarray
    worst_radius: float

    @property
    def passed(self) -> bool:
        return self.max_excess <= 0


def fibonacci_lattice(n: int, radius_km: float) -> PointSet:
    """Fibonacci lattice of ``n`` (odd) points on a sphere of ``radius_km``.

    Point ``i`` for ``i`` in ``-k..k`` has latitude ``arcsin(2i/n)`` and
    longitude ``2*pi*i/phi`` (mod 2*pi), with ``k = (n-1)/2``. Points are
    stored in order of increasing ``i``, so the last one is nearest the
    north pole.
    """
    if int(n) != n or n < 3 or n % 2 == 0:
        raise InvalidArgumentError(f"n must be an odd integer >= 3, got {n}")
    if not radius_km > 0:
        raise InvalidArgumentError(f"radius_km must be positive, got {radius_km}")
    n = int(n)
    k = (n - 1) // 2
    i = np.arange(-k, k + 1, dtype=float)
    lat = np.arcsin(2.0 * i / n)
    lon = np.mod(2.0 * math.pi * i / GOLDEN_RATIO, 2.0 * math.pi)
    pts = np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
    ids = tuple(str(j) for j in range(-k, k + 1))
    return PointSet(radius_km, pts, ids)


def _check_half_distance(h_km, radius_km):
    if not radius_km > 0:
        raise InvalidArgumentError(f"radius_km must be positive, got {radius_km}")
    if not 0 < h_km < math.pi / 2 * radius_km:
        raise InvalidArgumentError(f"h_km must lie in (0, pi/2 * radius_km), got {h_km}")


def lattice_size_for_half_distance(h_km: float, radius_km: float) -> int:
    """Number of Fibonacci points whose half minimum spacing is about ``h_km``.

    Returns the largest odd integer not exceeding ``(C / (2 sin(h/R)))**2``
    (at least 3).
    """
    _check_half_distance(h_km, radius_km)
    n_raw = (FIBONACCI_SPACING_CONSTANT / (2.0 * math.sin(h_km / radius_km))) ** 2
    n = int(math.floor(n_raw))
    if n % 2 == 0:
        n -= 1
    return max(n, 3)


def serving_distance_for_lattice(n: int, radius_km: float) -> float:
    """Distance from the north pole to the nearest Fibonacci point, ``R*arccos((n-1)/n)``."""
    return radius_km * math.acos((n - 1) / n)


def _pairwise_min_angle_brute(pts):
    best = math.inf
    chunk = 512
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        ang = central_angle(block[:, None, :], pts[None, :, :])
        rows = np.arange(len(block))
        ang[rows, start + rows] = np.inf
        best = min(best, float(ang.min()))
    return best


def _pairwise_min_angle_kdtree(pts):
    tree = cKDTree(pts)
    chord, _ = tree.query(pts, k=2)
    # re-measure every near-tied pair with the angle formula used by the brute-force scan
    pairs = tree.query_pairs(chord[:, 1].min() * (1 + 1e-9) + 1e-15, output_type="ndarray")
    return float(central_angle(pts[pairs[:, 0]], pts[pairs[:, 1]]).min())


def half_min_distance(ps: PointSet, method: str = "auto") -> float:
    """Half of the minimum pairwise spherical distance (km).

    ``method`` is ``"brute"`` (exact all-pairs scan), ``"kdtree"`` (nearest
    neighbour candidates re-measured with the same formula) or ``"auto"``.
    Both return the same value.
    """
    if len(ps) < 2:
        raise InvalidArgumentError("half_min_distance needs at least two points")
    if method == "auto":
        method = "brute" if len(ps) <= _BRUTE_FORCE_LIMIT else "kdtree"
    if method == "brute":
        ang = _pairwise_min_angle_brute(ps.points)
    elif method == "kdtree":
        ang = _pairwise_min_angle_kdtree(ps.points)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return 0.5 * ps.radius_km * ang


def fibonacci_regulation_params(h_km: float, radius_km: float) -> RegulationParams:
    """Regulation constants ``(1, 0, (C / (4 R sin(H/R)))**2)`` of a Fibonacci lattice."""
    _check_half_distance(h_km, radius_km)
    nu = (FIBONACCI_SPACING_CONSTANT / (4.0 * radius_km * math.sin(h_km / radius_km))) ** 2
    return RegulationParams(1.0, 0.0, nu)


def count_in_cap(ps: PointSet, center, r_km):
    """Number of points within spherical distance ``r_km`` (inclusive) of ``center``.

    ``r_km`` may be an array, in which case one count per radius is returned.
    """
    r = np.asarray(r_km, dtype=float)
    if np.any(r < 0) or np.any(r > math.pi * ps.radius_km * (1 + 1e-12)):
        raise InvalidArgumentError(f"r_km must lie in [0, pi*R], got {r_km}")
    d = np.sort(ps.distances_from(center))
    counts = np.searchsorted(d, r, side="right")
    return int(counts) if counts.ndim == 0 else counts


def _uniform_directions(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sampled_caps(ps, seed, n_centers):
    # centers are drawn from per-index streams so the set does not depend on evaluation order
    root = np.random.SeedSequence(seed)
    centers = np.empty((n_centers, 3))
    for j in range(n_centers):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(0, j)))
        centers[j] = _uniform_directions(rng, 1)[0]
    sorted_d = np.empty((n_centers, len(ps)))
    step = max(1, 2_000_000 // max(len(ps), 1))
    for s in range(0, n_centers, step):
        block = centers[s : s + step]
        ang = central_angle(block[:, None, :], ps.points[None, :, :])
        sorted_d[s : s + step] = np.sort(ps.radius_km * ang, axis=1)
    return root, centers, sorted_d


def verify_ball_regulation(
    ps: PointSet, params: RegulationParams, centers: int = 1000, radii: int = 100, seed: int = 0
) -> RegulationReport:
    """Largest observed ``count - (sigma + rho*r + nu*r**2)`` over random caps.

    Cap centres are uniform on the sphere and radii uniform on ``(0, pi*R]``.
    A positive excess means some sampled cap violates the regulation bound.
    """
    if centers < 1 or radii < 1:
        raise InvalidArgumentError("centers and radii must be >= 1")
    root, cen, sorted_d = _sampled_caps(ps, seed, centers)
    rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(1,)))
    # uniform on (0, pi R]: 1 - U maps [0, 1) onto (0, 1]
    rr = math.pi * ps.radius_km * (1.0 - rng.random(radii))
    counts = np.stack([np.searchsorted(row, rr, side="right") for row in sorted_d])
    excess = counts - params.cap_bound(rr)[None, :]
    j, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
    return RegulationReport(float(excess[j, k]), cen[j].copy(), float(rr[k]))


def estimate_regulation_nu(
    ps: PointSet, seed: int = 0, centers: int = 1000, radii: int = 100
) -> RegulationParams:
    """Fit ``nu`` with ``sigma = 1`` and ``rho = 0`` from sampled caps.

    ``nu`` is the largest ``(count - 1) / r**2`` over random cap centres and
    log-spaced radii from the minimum point spacing up to ``pi*R``. Caps
    narrower than the minimum spacing are skipped: they capture a close pair
    with radius only ``H`` and would inflate the estimate by a fixed factor
    unrelated to density.
    """
    if len(ps) == 0:
        raise InvalidArgumentError("cannot estimate regulation of an empty point set")
    if len(ps) == 1:
        return RegulationParams(1.0, 0.0, 0.0)
    spacing = 2.0 * half_min_distance(ps)
    r_hi = math.pi * ps.radius_km
    if spacing >= r_hi:
        rr = np.array([r_hi])
    else:
        rr = np.geomspace(spacing, r_hi, radii)
        rr[0], rr[-1] = spacing, r_hi
    _, _, sorted_d = _sampled_caps(ps, seed, centers)
    counts = np.stack([np.searchsorted(row, rr, side="right") for row in sorted_d])
    nu = float(np.max((counts - 1) / rr[None, :] ** 2))
    return RegulationParams(1.0, 0.0, max(nu, 0.0))


def observe(ps: PointSet, cfg: GeometryConfig) -> Observation:
    """Split the points visible from the user into the serving one and the interferers.

    The serving satellite is the nearest visible point; ties go to the lower index.
    """
    rs = cfg.orbit_radius_km
    if abs(ps.radius_km - rs) > 1e-6 * rs:
        raise InvalidArgumentError(f"point set radius {ps.radius_km} does not match orbit radius {rs}")
    r_max = max_visible_spherical_radius(cfg)
    if len(ps) == 0:
        return Observation(None, r_max_km=r_max)
    d = ps.distances_from(cfg.zenith)
    visible = np.nonzero(d <= r_max)[0]
    if len(visible) == 0:
        return Observation(None, r_max_km=r_max)
    serving = int(visible[np.argmin(d[visible])])
    others = visible[visible != serving]
    return Observation(float(d[serving]), d[others].copy(), r_max, serving, others)


def shot_noise_sum(ps: PointSet, center, r_km: float, weight) -> float:
    """Sum of ``weight(distance)`` over points in the cap ``B(center, r_km)``."""
    d = ps.distances_from(center)
    return float(np.sum(weight(d[d <= r_km])))


def write_pointset(path, ps: PointSet) -> None:
    """Write ``# radius_km=<R>`` followed by ``id,x,y,z`` rows at 17 significant digits."""
    ids = ps.ids if ps.ids is not None else [str(i) for i in range(len(ps))]
    lines = [f"# radius_km={ps.radius_km!r}"]
    lines += [f"{i},{x:.17g},{y:.17g},{z:.17g}" for i, (x, y, z) in zip(ids, ps.points)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pointset(path) -> PointSet:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# radius_km="):
        raise InputFormatError("expected '# radius_km=<value>' header", line=0)
    try:
        radius = float(lines[0].split("=", 1)[1])
    except ValueError as exc:
        raise InputFormatError(f"bad radius in header: {exc}", line=0) from None
    ids, pts = [], []
    for lineno, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise InputFormatError(f"expected 4 fields, got {len(parts)}", line=lineno)
        try:
            pts.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise InputFormatError(str(exc), line=lineno) from None
        ids.append(parts[0])
    try:
        return PointSet(radius, np.array(pts).reshape(-1, 3), tuple(ids))
    except InvalidArgumentError as exc:
        raise InputFormatError(str(exc)) from None
