from src.KnMaps_Core import PolyhedronSpec
from src.KnMaps_SphereMap import forward_array
from src.KnMaps_Verify import (VerificationReport, spherical_polygon_area, planar_polygon_area, monte_carlo_volume,
                               SeamDescription, seam_pairs, seam_gap, reports_to_json_ready)
from src.KnMaps_HelperFuncs_Parallel import run_partitioned, get_nworkers
from src.KnMaps_Errors import OpenCurve, DegenerateCurve, NonPlanar
import numpy as np
import pytest


def parallel(phi: float, theta_from: float, theta_to: float, count: int = 400, r: float = 1.0) -> np.ndarray:
    theta = np.linspace(theta_from, theta_to, count, endpoint=False)
    return r * np.column_stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.full(count, np.cos(phi))])


def meridian(theta: float, phi_from: float, phi_to: float, count: int = 400, r: float = 1.0) -> np.ndarray:
    phi = np.linspace(phi_from, phi_to, count, endpoint=False)
    return r * np.column_stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])


def close(loop: np.ndarray) -> np.ndarray:
    return np.vstack([loop, loop[:1]])


def test_report_judgement():
    report = VerificationReport.judge("x", 1.0 + 1e-11, 1.0, 1e-10, samples=5, seed=2)
    assert report.passed
    assert not VerificationReport.judge("x", 1.1, 1.0, 1e-3).passed
    assert VerificationReport.judge("x", 101.0, 100.0, 0.02, mode="rel").passed
    as_dict = reports_to_json_ready([report])[0]
    assert as_dict["check"] == "x" and as_dict["samples"] == 5 and as_dict["passed"] is True


def test_polar_cap_area():
    boundary = close(parallel(0.7, 0.0, 2 * np.pi, r=2.0))
    assert spherical_polygon_area(boundary, 2.0) == pytest.approx(2 * np.pi * 4 * (1 - np.cos(0.7)), rel=1e-12)
    # clockwise traversal encloses the complement
    reverse = boundary[::-1]
    assert spherical_polygon_area(reverse, 2.0) == pytest.approx(2 * np.pi * 4 * (1 + np.cos(0.7)), rel=1e-12)


def test_lat_long_rectangle_area():
    phi_1, phi_2, theta_1, theta_2 = 0.6, 1.9, 0.4, 1.5
    loop = np.vstack([parallel(phi_2, theta_1, theta_2), meridian(theta_2, phi_2, phi_1),
                      parallel(phi_1, theta_2, theta_1), meridian(theta_1, phi_1, phi_2)])
    expected = (theta_2 - theta_1) * (np.cos(phi_1) - np.cos(phi_2))
    assert spherical_polygon_area(close(loop)) == pytest.approx(expected, rel=1e-12)


def test_polar_triangle_area():
    theta_1, theta_2, phi_0 = 0.2, 1.2, 1.0
    loop = np.vstack([meridian(theta_1, 0.0, phi_0), parallel(phi_0, theta_1, theta_2),
                      meridian(theta_2, phi_0, 0.0)])
    assert spherical_polygon_area(close(loop)) == pytest.approx((theta_2 - theta_1) * (1 - np.cos(phi_0)), rel=1e-12)


def test_curve_errors():
    with pytest.raises(OpenCurve):
        spherical_polygon_area(parallel(0.5, 0.0, np.pi))
    with pytest.raises(DegenerateCurve):
        spherical_polygon_area(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]))


def test_planar_polygon_area():
    square = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 0.0]])
    assert planar_polygon_area(square) == pytest.approx(np.sqrt(2))
    assert planar_polygon_area(close(square)) == pytest.approx(np.sqrt(2))
    with pytest.raises(NonPlanar):
        planar_polygon_area(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.5], [0.0, 1.0, 0.0]]))
    with pytest.raises(DegenerateCurve):
        planar_polygon_area(square[:2])


def test_monte_carlo_ball_volume():
    def in_ball(pts):
        return np.sum(pts ** 2, axis=1) <= 1.0

    estimate, stderr = monte_carlo_volume(in_ball, [-1, -1, -1], [1, 1, 1], 200000, seed=9, nworkers=1)
    assert abs(estimate - 4 * np.pi / 3) <= 4 * stderr
    # the estimate does not depend on the number of workers or on repeated runs
    again = monte_carlo_volume(in_ball, [-1, -1, -1], [1, 1, 1], 200000, seed=9, nworkers=3)
    assert again == (estimate, stderr)
    other = monte_carlo_volume(in_ball, [-1, -1, -1], [1, 1, 1], 200000, seed=10, nworkers=1)
    assert other[0] != estimate


def test_run_partitioned_keeps_order():
    assert run_partitioned(lambda x: x * x, range(11), nworkers=4) == [x * x for x in range(11)]
    assert run_partitioned(lambda x: x, [], nworkers=2) == []
    assert get_nworkers(3) == 3
    assert get_nworkers() >= 1


def test_seam_pairs_straddle_the_seam():
    seam = SeamDescription("zone", "sphere", 4, 1.0, 0.25, samples=50, seed=1)
    first, second = seam_pairs(seam, 1e-9)
    assert first.shape == second.shape == (50, 3)
    assert np.allclose(np.linalg.norm(first, axis=1), 1.0)
    assert np.max(np.linalg.norm(first - second, axis=1)) < 1e-8


@pytest.mark.parametrize("kind", ["zone", "belt", "control"])
def test_sphere_map_is_continuous(kind):
    spec = PolyhedronSpec(5, 1.0, 0.3)
    seam = SeamDescription(kind, "sphere", 5, 1.0, 0.3, samples=300, seed=4)
    gap = seam_gap(lambda pts: forward_array(pts, spec), seam, 1e-9)
    assert gap < 1e-6


def test_seam_gap_detects_a_jump():
    seam = SeamDescription("zone", "sphere", 4, samples=50, seed=2)

    def jumpy(pts):
        return pts + (np.arctan2(pts[:, 1], pts[:, 0]) > 0)[:, None]

    assert seam_gap(jumpy, seam, 1e-9) > 0.5
