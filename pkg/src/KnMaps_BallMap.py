from src.KnMaps_Core import (PolyhedronSpec, Region, ZoneTag, SURFACE_TOL, altitude_factor, epsilon_max,
                             zone_index_array, rotate_about_z)
from src.KnMaps_SphereMap import forward_array, invert_array, MapResult
from src.KnMaps_Errors import NotAdmissible, OutsideBall, OutsidePolyhedron, StepTooLarge
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple
import logging
import numpy as np


########################################################################################################################
# PREFACE
# Volume-preserving map V_n from the closed ball of radius r onto the solid polyhedron K_n(r*xi, eps).
#   1. scale by xi = (beta / gamma)^(1/3) so that ball and solid polyhedron have the same volume
#   2. map every sphere of radius rho onto the surface of K_n(rho, eps) with the area-preserving shell map
# The composition has Jacobian 1 exactly when c(eps) = 2 - 3 eps (or eps = 0), i.e. when K_n is circumscribed about a
# sphere; these are the admissible values of eps.
#
# The inverse finds the shell K_n(rho, eps) through the point from the plane of the face it lies on, then inverts the
# shell map and divides by xi.
########################################################################################################################
logger = logging.getLogger("KnMaps.BallMap")

ADMISSIBLE_TOL = 1e-10
ADMISSIBLE_SNAP = 5e-5


@dataclass(frozen=True)
class VolumeSpec:
    n: int
    r: float
    epsilon: float
    c_eps: float
    gamma: float
    beta: float
    xi: float
    admissible: bool

    @property
    def outer_radius(self) -> float:
        """Radius r * xi of the outer shell K_n(r * xi, eps)."""
        return self.r * self.xi

    @property
    def unit_spec(self) -> PolyhedronSpec:
        return PolyhedronSpec(self.n, 1.0, self.epsilon)

    @property
    def outer_spec(self) -> PolyhedronSpec:
        return PolyhedronSpec(self.n, self.outer_radius, self.epsilon)


@dataclass(frozen=True)
class BallPoint:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class SolidPolyPoint:
    X: float
    Y: float
    Z: float
    shell_rho: float
    region: Region
    zone: ZoneTag = ZoneTag(0, 1)


def admissibility_gap(n: int, epsilon: float) -> float:
    return abs(altitude_factor(n, epsilon) - (2 - 3 * epsilon))


def admissible_epsilons(n: int) -> List[float]:
    """
    Values of eps making V_n volume preserving: 0 and the roots of 5 eps^2 - 4 eps + q = 0 with 2 - 3 eps >= 0

    :param n: number of prism faces
    :return: ascending list starting with 0.0
    """
    q = (np.pi / n) ** 2 / np.tan(np.pi / n) ** 2
    discriminant = 4 - 5 * q
    roots = [0.0]
    if discriminant >= 0:
        upper = min(2 / 3, epsilon_max(n))
        for root in sorted([(2 - np.sqrt(discriminant)) / 5, (2 + np.sqrt(discriminant)) / 5]):
            if 0 < root < upper:
                roots.append(float(root))
    return roots


def nearest_admissible(n: int, epsilon: float) -> Tuple[float, float]:
    """:return: the admissible value closest to epsilon and its distance"""
    roots = np.array(admissible_epsilons(n))
    idx = int(np.argmin(np.abs(roots - epsilon)))
    return float(roots[idx]), float(abs(roots[idx] - epsilon))


def make_volume_spec(n: int, r: float = 1.0, epsilon: float = 0.0, snap: bool = True) -> VolumeSpec:
    """
    Builds the volume-map parameters of K_n(., eps)

    :param n: number of prism faces
    :param r: ball radius
    :param epsilon: belt fraction; must satisfy the same bound as PolyhedronSpec
    :param snap: replace epsilon by an admissible root lying within ADMISSIBLE_SNAP of it
    :return: the parameters, flagged admissible or not
    """
    base = PolyhedronSpec(n, r, epsilon)
    eps = base.epsilon
    if snap and eps > 0:
        root, distance = nearest_admissible(n, eps)
        if 0 < distance <= ADMISSIBLE_SNAP:
            logger.debug(f"Snapping epsilon={eps} to the admissible root {root!r} for n={n}")
            eps = root
    c_eps = altitude_factor(n, eps)
    gamma = 2 * (eps + c_eps / 3) * (np.pi ** 2 / n) / np.tan(np.pi / n)
    beta = 4 * np.pi / 3
    admissible = eps == 0 or admissibility_gap(n, eps) <= ADMISSIBLE_TOL
    return VolumeSpec(n=base.n, r=base.r, epsilon=eps, c_eps=float(c_eps), gamma=float(gamma), beta=beta,
                      xi=float((beta / gamma) ** (1 / 3)), admissible=bool(admissible))


def jacobian_closed_form(vspec: VolumeSpec, region: Region) -> float:
    """Jacobian determinant of V_n in the cap cones (pyramid regions) and in the belt cone (prism region)."""
    c, eps = vspec.c_eps, vspec.epsilon
    if region == Region.Prism:
        return 2 / (3 * eps + c)
    return (c + eps) / ((1 - eps) * (c + 3 * eps))


def tangent_sphere_check(vspec: VolumeSpec) -> bool:
    """
    Whether K_n(r * xi, eps) has an inscribed sphere touching every face

    :param vspec: the volume-map parameters
    :return: True when the pyramid-face and prism-face distances from the origin agree
    """
    if vspec.epsilon == 0:
        # no prism faces; the 2n pyramid faces are congruent
        return True
    spec = vspec.outer_spec
    d = spec.derived
    pyramid_distance = d.r_n * (spec.belt_height + d.b_n) / d.a_n
    prism_distance = d.r_n
    return bool(abs(pyramid_distance / prism_distance - 1) * 2 * (1 - vspec.epsilon) <= ADMISSIBLE_TOL)


########################################################################################################################
# Forward and inverse maps
########################################################################################################################
def ball_to_poly_array(points: np.ndarray, vspec: VolumeSpec, unchecked: bool = False) -> MapResult:
    """
    Applies V_n to points of the ball

    :param points: (N, 3) points with norm <= r
    :param vspec: the volume-map parameters
    :param unchecked: allow non-admissible specs (the map is then not volume preserving)
    :return: the image points in K_n(r * xi, eps), their Region codes and zone indices
    """
    if not vspec.admissible and not unchecked:
        raise NotAdmissible(n=vspec.n, epsilon=vspec.epsilon, gap=admissibility_gap(vspec.n, vspec.epsilon),
                            roots=admissible_epsilons(vspec.n))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(points, axis=1)
    outside = norms > vspec.r * (1 + SURFACE_TOL)
    if np.any(outside):
        idx = int(np.flatnonzero(outside)[0])
        raise OutsideBall(index=idx, norm=norms[idx], r=vspec.r)
    out = np.zeros_like(points)
    regions = np.zeros(len(points), dtype=int)
    zones = np.zeros(len(points), dtype=int)
    inner = norms > 0
    if np.any(inner):
        directions = points[inner] / norms[inner, None]
        shell_points, regions[inner], zones[inner] = forward_array(directions, vspec.unit_spec)
        out[inner] = shell_points * (vspec.xi * norms[inner])[:, None]
    return out, regions, zones


def shell_radius_array(points: np.ndarray, vspec: VolumeSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Radius of the shell K_n(rho, eps) through each point of the solid polyhedron

    :return: rho and the Region code; |Z| <= eps * rho_prism is the prism cone (ties included)
    """
    n, eps, c = vspec.n, vspec.epsilon, vspec.c_eps
    half_angle = np.pi / n
    zones = zone_index_array(points, n)
    local = rotate_about_z(points, -2 * np.pi * zones / n)
    apothem = local[:, 0] * np.cos(half_angle) + local[:, 1] * np.sin(half_angle)
    k = (np.pi / n) / np.tan(half_angle)  # inradius of the unit base polygon
    abs_z = np.abs(points[:, 2])
    rho_prism = apothem / k
    rho_pyramid = (c * apothem / k + abs_z) / (c + eps)
    prism = abs_z <= eps * rho_prism
    rho = np.where(prism, rho_prism, rho_pyramid)
    return rho, np.where(prism, Region.Prism.value, np.sign(points[:, 2]).astype(int))


def poly_to_ball_array(points: np.ndarray, vspec: VolumeSpec) -> MapResult:
    """
    Applies the inverse of V_n to points of the solid polyhedron K_n(r * xi, eps)

    :param points: (N, 3) points inside or on the outer shell
    :param vspec: the volume-map parameters
    :return: the ball points, the Region codes and zone indices of the input points
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rho, regions = shell_radius_array(points, vspec)
    outside = rho > vspec.outer_radius * (1 + SURFACE_TOL)
    if np.any(outside):
        idx = int(np.flatnonzero(outside)[0])
        raise OutsidePolyhedron(index=idx, rho=rho[idx], rho_max=vspec.outer_radius)
    zones = zone_index_array(points, vspec.n)
    out = np.zeros_like(points)
    inner = rho > 0
    if np.any(inner):
        on_unit_shell = points[inner] / rho[inner, None]
        directions, _, _ = invert_array(on_unit_shell, vspec.unit_spec)
        out[inner] = directions * (rho[inner] / vspec.xi)[:, None]
    regions = np.where(inner, regions, Region.Prism.value)
    return out, regions, zones


def ball_to_poly(p: BallPoint, vspec: VolumeSpec, unchecked: bool = False) -> SolidPolyPoint:
    coords, regions, zones = ball_to_poly_array(np.array([[p.x, p.y, p.z]]), vspec, unchecked=unchecked)
    X, Y, Z = (float(v) for v in coords[0])
    rho = vspec.xi * float(np.sqrt(p.x ** 2 + p.y ** 2 + p.z ** 2))
    return SolidPolyPoint(X, Y, Z, rho, Region(int(regions[0])), ZoneTag(int(zones[0]), 1 if Z >= 0 else -1))


def poly_to_ball(q: SolidPolyPoint, vspec: VolumeSpec) -> BallPoint:
    coords, _, _ = poly_to_ball_array(np.array([[q.X, q.Y, q.Z]]), vspec)
    return BallPoint(*(float(v) for v in coords[0]))


########################################################################################################################
# Finite-difference Jacobian
########################################################################################################################
def jacobian_fd(mapping: Callable[[np.ndarray], MapResult], p: np.ndarray, step: Optional[float] = None,
                scale: float = 1.0) -> float:
    """
    Central-difference Jacobian determinant of a tagged map

    :param mapping: function of an (N, 3) array returning (coords, region codes, zone indices)
    :param p: the interior point
    :param step: difference step; defaults to 1e-5 * scale
    :param scale: length scale of the problem (the ball radius)
    :return: det of the 3x3 difference quotient
    """
    step = 1e-5 * scale if step is None else step
    p = np.asarray(p, dtype=float).reshape(3)
    stencil = np.vstack([p, p + step * np.eye(3), p - step * np.eye(3)])
    coords, regions, zones = mapping(stencil)
    if np.any(regions != regions[0]) or np.any(zones != zones[0]):
        raise StepTooLarge(step=step, x=p[0], y=p[1], z=p[2])
    jac = (coords[1:4] - coords[4:7]).T / (2 * step)
    return float(np.linalg.det(jac))
