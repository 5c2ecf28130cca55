import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leocov.exceptions import InputFormatError, InvalidArgumentError
from leocov.geometry import GeometryConfig, path_loss
from leocov.point_process import (
    PointSet,
    RegulationParams,
    count_in_cap,
    estimate_regulation_nu,
    fibonacci_lattice,
    fibonacci_regulation_params,
    half_min_distance,
    lattice_size_for_half_distance,
    observe,
    read_pointset,
    serving_distance_for_lattice,
    shot_noise_sum,
    verify_ball_regulation,
    write_pointset,
)

PHI = (1 + math.sqrt(5)) / 2
OCTAHEDRON = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


def test_lattice_matches_direct_formula():
    n = 11
    ps = fibonacci_lattice(n, 1.0)
    for row, i in enumerate(range(-5, 6)):
        lat = math.asin(2 * i / n)
        lon = (2 * math.pi * i / PHI) % (2 * math.pi)
        expected = [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
        np.testing.assert_allclose(ps.points[row], expected, atol=1e-15)
        assert ps.ids[row] == str(i)


def test_five_point_lattice_top_point():
    ps = fibonacci_lattice(5, 1.0)
    assert math.asin(ps.points[-1, 2]) == pytest.approx(math.asin(0.8), abs=1e-15)
    assert ps.distances_from([0, 0, 1])[-1] == pytest.approx(math.acos(0.8), abs=1e-15)
    assert serving_distance_for_lattice(5, 1.0) == pytest.approx(0.6435011087932844, abs=1e-15)


@pytest.mark.parametrize("n", [0, 1, 4, 2.5])
def test_lattice_rejects_bad_sizes(n):
    with pytest.raises(InvalidArgumentError):
        fibonacci_lattice(n, 1.0)


def test_lattice_points_are_unit_and_ids_unique():
    ps = fibonacci_lattice(1369, 6870.0)
    np.testing.assert_allclose(np.linalg.norm(ps.points, axis=1), 1.0, atol=1e-14)
    assert len(set(ps.ids)) == len(ps)
    assert count_in_cap(ps, [0, 0, 1], math.pi * 6870.0) == 1369


def test_pointset_is_read_only():
    ps = fibonacci_lattice(5, 1.0)
    with pytest.raises(ValueError):
        ps.points[0, 0] = 2.0


def test_pointset_rejects_duplicate_ids_and_non_unit():
    with pytest.raises(InvalidArgumentError):
        PointSet(1.0, OCTAHEDRON[:2], ("a", "a"))
    with pytest.raises(InvalidArgumentError):
        PointSet(1.0, 2 * OCTAHEDRON)


def test_lattice_size_decreases_with_spacing():
    sizes = [lattice_size_for_half_distance(h, 6870.0) for h in (100.0, 200.0, 400.0, 800.0)]
    assert sizes == sorted(sizes, reverse=True)
    assert all(n % 2 == 1 for n in sizes)


def test_half_min_distance_octahedron():
    ps = PointSet(1.0, OCTAHEDRON)
    assert half_min_distance(ps) == pytest.approx(math.pi / 4, abs=1e-15)


def test_half_min_distance_antipodal_pair():
    ps = PointSet(1.0, OCTAHEDRON[4:])
    assert half_min_distance(ps) == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("n", [101, 1369, 2973])
def test_half_min_distance_methods_agree(n):
    ps = fibonacci_lattice(n, 6870.0)
    assert half_min_distance(ps, "kdtree") == half_min_distance(ps, "brute")


def test_half_min_distance_needs_two_points():
    with pytest.raises(InvalidArgumentError):
        half_min_distance(PointSet(1.0, OCTAHEDRON[:1]))


def test_regulation_params_closed_form():
    p = fibonacci_regulation_params(650.0, 6870.0)
    assert (p.sigma, p.rho) == (1.0, 0.0)
    assert p.nu == pytest.approx((3.0921 / (4 * 6870.0 * math.sin(650.0 / 6870.0))) ** 2, rel=1e-15)
    assert p.nu == pytest.approx(1.419e-6, rel=1e-3)
    # cross-check: nu ~ N/(4 R^2) for the unrounded size
    assert p.nu == pytest.approx(267.81 / (4 * 6870.0**2), rel=1e-3)


def test_regulation_params_at_quarter_circle():
    p = fibonacci_regulation_params(math.pi / 2 * 6870.0 * (1 - 1e-12), 6870.0)
    assert p.nu == pytest.approx((3.0921 / (4 * 6870.0)) ** 2, rel=1e-9)


def test_count_in_cap_boundary_inclusive():
    ps = fibonacci_lattice(101, 6870.0)
    assert count_in_cap(ps, ps.points[17], 0.0) == 1
    d = ps.distances_from(ps.points[17])
    r = np.sort(d)[5]
    assert count_in_cap(ps, ps.points[17], r) == 6


def test_count_in_cap_vectorised():
    ps = PointSet(1.0, OCTAHEDRON)
    counts = count_in_cap(ps, [0, 0, 1], np.array([0.0, math.pi / 2, math.pi]))
    np.testing.assert_array_equal(counts, [1, 5, 6])


def test_pole_cap_of_half_spacing_has_one_point():
    ps = fibonacci_lattice(1369, 6870.0)
    assert count_in_cap(ps, ps.points[-1], 287.0) == 1


def test_count_in_cap_rejects_negative_radius():
    with pytest.raises(InvalidArgumentError):
        count_in_cap(PointSet(1.0, OCTAHEDRON), [0, 0, 1], -0.1)


def test_verify_with_sigma_n_never_exceeds():
    ps = fibonacci_lattice(267, 6870.0)
    report = verify_ball_regulation(ps, RegulationParams(len(ps), 0.0, 0.0), centers=50, radii=20, seed=3)
    assert report.max_excess <= 0
    assert report.passed


def test_verify_is_deterministic_for_fixed_seed():
    ps = fibonacci_lattice(267, 6870.0)
    params = fibonacci_regulation_params(650.0, 6870.0)
    a = verify_ball_regulation(ps, params, centers=1, radii=1, seed=9)
    b = verify_ball_regulation(ps, params, centers=1, radii=1, seed=9)
    assert a.max_excess == b.max_excess and a.worst_radius == b.worst_radius
    np.testing.assert_array_equal(a.worst_center, b.worst_center)


def test_verify_matches_brute_force_count():
    ps = fibonacci_lattice(267, 6870.0)
    params = fibonacci_regulation_params(650.0, 6870.0)
    rep = verify_ball_regulation(ps, params, centers=20, radii=10, seed=1)
    count = int(np.sum(ps.distances_from(rep.worst_center) <= rep.worst_radius))
    assert rep.max_excess == pytest.approx(count - params.cap_bound(rep.worst_radius), abs=1e-9)


def test_estimate_nu_single_point():
    assert estimate_regulation_nu(PointSet(1.0, OCTAHEDRON[:1])) == RegulationParams(1.0, 0.0, 0.0)


def test_estimate_nu_two_points():
    d_ang = 1.0
    pts = np.array([[0, 0, 1], [math.sin(d_ang), 0, math.cos(d_ang)]])
    est = estimate_regulation_nu(PointSet(10.0, pts), seed=0)
    assert est.nu == pytest.approx(1.0 / (10.0 * d_ang) ** 2, rel=1e-12)


def test_estimate_nu_lattice_within_factor():
    ps = fibonacci_lattice(1369, 6870.0)
    ref = fibonacci_regulation_params(287.0, 6870.0).nu
    est = estimate_regulation_nu(ps, seed=0, centers=300, radii=60).nu
    assert ref / 1.5 <= est <= 1.5 * ref


def test_observe_single_point_at_zenith():
    cfg = GeometryConfig(6370.0, 500.0)
    obs = observe(PointSet(6870.0, [[0, 0, 1]]), cfg)
    assert obs.serving_distance_km == 0.0
    assert obs.visible_count == 1
    assert len(obs.interferer_distances_km) == 0


def test_observe_nothing_visible():
    cfg = GeometryConfig(6370.0, 500.0)
    obs = observe(PointSet(6870.0, [[0, 0, -1]]), cfg)
    assert obs.empty and obs.visible_count == 0


def test_observe_tie_goes_to_lowest_index():
    cfg = GeometryConfig(6370.0, 500.0)
    a = 0.05
    pts = [[math.sin(a), 0, math.cos(a)], [-math.sin(a), 0, math.cos(a)]]
    obs = observe(PointSet(6870.0, pts), cfg)
    assert obs.serving_index == 0
    np.testing.assert_array_equal(obs.interferer_indices, [1])


def test_observe_radius_mismatch():
    with pytest.raises(InvalidArgumentError):
        observe(fibonacci_lattice(5, 6000.0), GeometryConfig(6370.0, 500.0))


def test_observe_lattice_serving_is_top_point():
    ps = fibonacci_lattice(267, 6870.0)
    obs = observe(ps, GeometryConfig(6370.0, 500.0))
    assert obs.serving_index == len(ps) - 1
    assert obs.serving_distance_km == pytest.approx(serving_distance_for_lattice(267, 6870.0), rel=1e-12)


def test_shot_noise_sum_matches_loop():
    cfg = GeometryConfig(6370.0, 500.0)
    ps = fibonacci_lattice(267, 6870.0)
    r = 2000.0
    expected = sum(path_loss(d, 2.0, cfg) for d in ps.distances_from([0, 0, 1]) if d <= r)
    got = shot_noise_sum(ps, [0, 0, 1], r, lambda d: path_loss(d, 2.0, cfg))
    assert got == pytest.approx(expected, rel=1e-13)


def test_pointset_round_trip(tmp_path):
    ps = fibonacci_lattice(101, 6920.0)
    path = tmp_path / "pts.csv"
    write_pointset(path, ps)
    back = read_pointset(path)
    assert back.radius_km == ps.radius_km
    assert back.ids == ps.ids
    np.testing.assert_array_equal(back.points, ps.points)


def test_read_pointset_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# radius_km=1.0\na,1,0,0\nb,0,1\n")
    with pytest.raises(InputFormatError) as err:
        read_pointset(path)
    assert err.value.line == 2


def test_read_pointset_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,1,0,0\n")
    with pytest.raises(InputFormatError) as err:
        read_pointset(path)
    assert err.value.line == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 400).map(lambda k: 2 * k + 1), st.floats(100.0, 20000.0))
def test_lattice_property_unit_and_count(n, radius):
    ps = fibonacci_lattice(n, radius)
    assert len(ps) == n
    np.testing.assert_allclose(np.linalg.norm(ps.points, axis=1), 1.0, atol=1e-12)
    assert ps.points[-1, 2] == pytest.approx((n - 1) / n, abs=1e-15)
