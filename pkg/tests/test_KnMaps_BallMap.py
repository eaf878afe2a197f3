from src.KnMaps_Core import Region, region_code_array
from src.KnMaps_BallMap import (make_volume_spec, admissible_epsilons, admissibility_gap, nearest_admissible,
                                jacobian_closed_form, tangent_sphere_check, ball_to_poly_array, poly_to_ball_array,
                                ball_to_poly, poly_to_ball, jacobian_fd, BallPoint)
from src.KnMaps_Errors import NotAdmissible, OutsideBall, OutsidePolyhedron, StepTooLarge, InvalidEpsilon
import numpy as np
import pytest


def random_ball(count: int, r: float = 1.0, seed: int = 11) -> np.ndarray:
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    return r * directions * rng.random(count)[:, None] ** (1 / 3)


@pytest.mark.parametrize("n,expected", [(3, [0.0, 0.10522]), (4, [0.0, 0.20861, 0.59139]),
                                        (5, [0.0, 0.29790, 0.50210]), (6, [0.0]), (12, [0.0])])
def test_admissible_roots(n, expected):
    roots = admissible_epsilons(n)
    assert roots == pytest.approx(expected, abs=5e-5)
    for eps in roots[1:]:
        assert admissibility_gap(n, eps) < 1e-10


def test_snapping_of_printed_roots():
    vspec = make_volume_spec(4, 1.0, 0.20861)
    assert vspec.admissible
    assert vspec.epsilon == pytest.approx(0.2086106, abs=1e-6)
    assert not make_volume_spec(4, 1.0, 0.20861, snap=False).admissible
    root, distance = nearest_admissible(5, 0.3)
    assert root == pytest.approx(0.2979, abs=1e-4)
    assert distance == pytest.approx(0.3 - root)
    assert not make_volume_spec(5, 1.0, 0.3).admissible


@pytest.mark.parametrize("n,eps", [(3, 0.0), (4, 0.4), (5, 0.2979)])
def test_volumes_and_scale(n, eps):
    vspec = make_volume_spec(n, 2.0, eps)
    base_area = (np.pi ** 2 / n) / np.tan(np.pi / n)
    assert vspec.gamma == pytest.approx(base_area * (2 * vspec.epsilon + 2 * vspec.c_eps / 3), rel=1e-12)
    assert vspec.beta == pytest.approx(4 * np.pi / 3)
    assert vspec.gamma * vspec.xi ** 3 == pytest.approx(vspec.beta, rel=1e-12)
    assert vspec.outer_radius == pytest.approx(2.0 * vspec.xi)


def test_tangent_sphere():
    for n in (3, 4, 5):
        for eps in admissible_epsilons(n):
            assert tangent_sphere_check(make_volume_spec(n, 1.0, eps))
    assert not tangent_sphere_check(make_volume_spec(4, 1.0, 0.4))


def test_closed_form_jacobian_is_one_at_roots():
    for n in (3, 4, 5):
        for eps in admissible_epsilons(n)[1:]:
            vspec = make_volume_spec(n, 1.0, eps)
            assert jacobian_closed_form(vspec, Region.Prism) == pytest.approx(1.0, abs=1e-9)
            assert jacobian_closed_form(vspec, Region.PyramidPlus) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n,eps", [(4, 0.20861), (5, 0.50210), (3, 0.0)])
def test_roundtrip_and_boundary(n, eps):
    vspec = make_volume_spec(n, 1.5, eps)
    pts = random_ball(4000, 1.5)
    image, regions, zones = ball_to_poly_array(pts, vspec)
    back, back_regions, back_zones = poly_to_ball_array(image, vspec)
    assert np.max(np.linalg.norm(back - pts, axis=1)) <= 1e-9 * 1.5
    assert np.array_equal(zones, back_zones)
    # the boundary sphere lands on the outer shell
    on_sphere = pts / np.linalg.norm(pts, axis=1)[:, None] * 1.5
    shell = ball_to_poly_array(on_sphere, vspec)[0]
    region_code_array(shell, vspec.outer_spec)


def test_origin_and_scalar_forms():
    vspec = make_volume_spec(4, 1.0, 0.20861)
    image, _, _ = ball_to_poly_array(np.zeros((1, 3)), vspec)
    assert np.allclose(image, 0.0)
    q = ball_to_poly(BallPoint(0.1, 0.2, 0.3), vspec)
    assert q.shell_rho == pytest.approx(vspec.xi * np.sqrt(0.14))
    p = poly_to_ball(q, vspec)
    assert (p.x, p.y, p.z) == pytest.approx((0.1, 0.2, 0.3), abs=1e-12)


@pytest.mark.parametrize("n,eps", [(4, 0.20861), (4, 0.59139), (5, 0.29790), (3, 0.0)])
def test_fd_jacobian_at_admissible(n, eps):
    vspec = make_volume_spec(n, 1.0, eps)
    rng = np.random.default_rng(5)
    width = 2 * np.pi / n
    for _ in range(40):
        theta = (rng.integers(0, n) + rng.uniform(0.1, 0.9)) * width
        if vspec.epsilon > 0 and rng.random() < 0.5:
            cos_phi = rng.uniform(-0.9, 0.9) * vspec.epsilon
        else:
            cos_phi = rng.choice([-1, 1]) * rng.uniform(vspec.epsilon + 0.1 * (1 - vspec.epsilon), 0.9)
        rho = rng.uniform(0.3, 0.9)
        sin_phi = np.sqrt(1 - cos_phi ** 2)
        p = rho * np.array([sin_phi * np.cos(theta), sin_phi * np.sin(theta), cos_phi])
        assert jacobian_fd(lambda pts: ball_to_poly_array(pts, vspec), p) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n,eps", [(4, 0.4), (3, 0.3)])
def test_fd_jacobian_matches_closed_form_when_not_admissible(n, eps):
    vspec = make_volume_spec(n, 1.0, eps)
    assert not vspec.admissible

    def mapping(pts):
        return ball_to_poly_array(pts, vspec, unchecked=True)

    cap_point = 0.6 * np.array([np.sin(0.3) * np.cos(0.4), np.sin(0.3) * np.sin(0.4), np.cos(0.3)])
    belt_point = 0.6 * np.array([np.cos(0.4), np.sin(0.4), 0.0])
    assert jacobian_fd(mapping, cap_point) == pytest.approx(jacobian_closed_form(vspec, Region.PyramidPlus), abs=1e-6)
    assert jacobian_fd(mapping, belt_point) == pytest.approx(jacobian_closed_form(vspec, Region.Prism), abs=1e-6)


def test_errors():
    with pytest.raises(NotAdmissible):
        ball_to_poly_array(np.zeros((1, 3)), make_volume_spec(6, 1.0, 0.3))
    with pytest.raises(InvalidEpsilon):
        make_volume_spec(6, 1.0, 0.6)
    vspec = make_volume_spec(4, 1.0, 0.20861)
    with pytest.raises(OutsideBall) as err:
        ball_to_poly_array(np.array([[0.0, 0.0, 0.5], [0.0, 0.9, 0.9]]), vspec)
    assert err.value.details["index"] == 1
    with pytest.raises(OutsidePolyhedron):
        poly_to_ball_array(np.array([[0.0, 0.0, 3.0 * vspec.outer_radius]]), vspec)
    with pytest.raises(StepTooLarge):
        jacobian_fd(lambda pts: ball_to_poly_array(pts, vspec), np.array([0.5, 0.0, 0.1]), step=1e-3)
