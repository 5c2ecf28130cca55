import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocov.exceptions import InvalidArgumentError
from leocov.geometry import (
    GeometryConfig,
    central_angle,
    elevation_angle,
    euclidean_slant_distance,
    max_visible_spherical_radius,
    path_loss,
    spherical_cap_area,
    spherical_distance,
)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _slant_by_vectors(r, cfg):
    psi = r / cfg.orbit_radius_km
    user = np.array([0.0, 0.0, cfg.earth_radius_km])
    sat = cfg.orbit_radius_km * np.array([math.sin(psi), 0.0, math.cos(psi)])
    return float(np.linalg.norm(sat - user))


def test_distance_between_axes_is_quarter_circle():
    assert spherical_distance([1, 0, 0], [0, 1, 0], 6870.0) == pytest.approx(6870.0 * math.pi / 2, rel=1e-15)


def test_distance_antipodal_and_coincident():
    assert spherical_distance([0, 0, 1], [0, 0, -1], 1.0) == pytest.approx(math.pi, rel=1e-15)
    assert spherical_distance([0, 0, 1], [0, 0, 1], 1.0) == 0.0


def test_central_angle_keeps_precision_for_tiny_angles():
    eps = 1e-9
    q = np.array([math.sin(eps), 0.0, math.cos(eps)])
    assert central_angle(np.array([0.0, 0.0, 1.0]), q) == pytest.approx(eps, rel=1e-12)


def test_non_unit_vectors_are_rejected():
    with pytest.raises(InvalidArgumentError):
        spherical_distance([1, 0, 0], [0, 2, 0], 1.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
    st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
)
def test_distance_symmetric_and_bounded(a, b):
    p, q = _unit(a), _unit(b)
    d1 = spherical_distance(p, q, 2.0)
    assert d1 == pytest.approx(spherical_distance(q, p, 2.0), abs=1e-12)
    assert 0.0 <= d1 <= 2.0 * math.pi + 1e-12


@pytest.mark.parametrize("r", [0.0, 179.46, 594.77, 2000.0])
def test_slant_distance_matches_vector_construction(r):
    cfg = GeometryConfig.from_degrees(6370.0, 550.0, 0.0)
    assert euclidean_slant_distance(r, cfg) == pytest.approx(_slant_by_vectors(r, cfg), rel=1e-12)


def test_path_loss_at_zenith_is_altitude_power():
    cfg = GeometryConfig(6370.0, 500.0)
    assert path_loss(0.0, 2.0, cfg) == pytest.approx(500.0**-2, rel=1e-15)
    assert path_loss(0.0, 3.5, cfg) == pytest.approx(500.0**-3.5, rel=1e-14)


def test_path_loss_rejects_alpha_below_two():
    with pytest.raises(InvalidArgumentError):
        path_loss(10.0, 1.5, GeometryConfig())


def test_path_loss_is_vectorised_and_decreasing():
    cfg = GeometryConfig()
    r = np.linspace(0, 2500, 50)
    loss = path_loss(r, 2.0, cfg)
    assert loss.shape == r.shape
    assert np.all(np.diff(loss) < 0)


def test_arc_outside_sphere_is_rejected():
    cfg = GeometryConfig()
    with pytest.raises(InvalidArgumentError):
        euclidean_slant_distance(math.pi * cfg.orbit_radius_km * 1.01, cfg)
    with pytest.raises(InvalidArgumentError):
        euclidean_slant_distance(-1.0, cfg)


def test_horizon_radius_closed_form():
    cfg = GeometryConfig(6370.0, 500.0, 0.0)
    assert max_visible_spherical_radius(cfg) == pytest.approx(6870.0 * math.acos(6370.0 / 6870.0), rel=1e-15)


@pytest.mark.parametrize("elev_deg", [5.0, 25.0, 40.0, 89.0])
def test_visible_radius_matches_closed_form(elev_deg):
    # central angle at elevation w: acos(R_E cos w / R_S) - w
    cfg = GeometryConfig.from_degrees(6370.0, 550.0, elev_deg)
    w = math.radians(elev_deg)
    expected = 6920.0 * (math.acos(6370.0 * math.cos(w) / 6920.0) - w)
    assert max_visible_spherical_radius(cfg) == pytest.approx(expected, abs=1e-6)


def test_visible_radius_at_twenty_five_degrees():
    cfg = GeometryConfig.from_degrees(6370.0, 550.0, 25.0)
    assert max_visible_spherical_radius(cfg) == pytest.approx(1021.7, abs=0.1)


def test_visible_radius_zero_at_vertical():
    assert max_visible_spherical_radius(GeometryConfig(6370.0, 500.0, math.pi / 2)) == 0.0


def test_elevation_at_zenith_and_horizon():
    cfg = GeometryConfig(6370.0, 500.0)
    assert elevation_angle(0.0, cfg) == pytest.approx(math.pi / 2)
    assert elevation_angle(math.acos(6370.0 / 6870.0), cfg) == pytest.approx(0.0, abs=1e-12)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        GeometryConfig(-1.0, 500.0)
    with pytest.raises(InvalidArgumentError):
        GeometryConfig(6370.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        GeometryConfig(6370.0, 500.0, -0.1)


def test_cap_area_full_sphere():
    assert spherical_cap_area(math.pi * 3.0, 3.0) == pytest.approx(4 * math.pi * 9.0, rel=1e-15)
    assert spherical_cap_area(0.0, 3.0) == 0.0
