from src.KnMaps_Core import (PolyhedronSpec, SpherePoint, PolySurfacePoint, ZoneTag, Region, SURFACE_TOL,
                             BOUNDARY_SLACK, zone_index_array, rotate_about_z, azimuth, region_code_array)
from src.KnMaps_Errors import DomainError
from enum import Enum
from typing import Tuple, Union
import numpy as np


########################################################################################################################
# PREFACE
# The area-preserving bijection T_n between the sphere S^2(r) and the surface of K_n(r, eps), and its inverse.
#
# Every computation happens in zone 0: points are rotated by -alpha_i, mapped with the zone-0 formulas and rotated back.
#   - caps (|z| > eps*r) map onto the pyramid faces; parallels go to horizontal segments and the zone-local longitude
#     enters linearly, so spherical trapezoids map to planar trapezoids of the same area
#   - the belt (|z| <= eps*r) maps onto the prism by a Lambert cylindrical projection
#   - the south cap is the mirror image of the north cap through z = 0
#
# Array functions take (N, 3) arrays and return (coords, region codes, zone indices); the scalar functions wrap them.
########################################################################################################################


class MapDirection(Enum):
    SphereToPoly = "sphere-to-poly"
    PolyToSphere = "poly-to-sphere"


MapResult = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _as_array(points: Union[np.ndarray, SpherePoint, PolySurfacePoint]) -> np.ndarray:
    if isinstance(points, (SpherePoint, PolySurfacePoint)):
        return points.as_array()[None, :]
    return np.atleast_2d(np.asarray(points, dtype=float))


def _local_longitude(local: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    """Zone-local azimuth of zone-0 points, clipped into [0, 2pi/n]."""
    return np.clip(azimuth(local[:, 0], local[:, 1]), 0.0, spec.zone_width)


########################################################################################################################
# Forward kernels (zone-0 coordinates)
########################################################################################################################
def _cap_kernel(local: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    """Maps zone-0 cap points onto the pyramid face; the south cap is handled through |z| and the sign of z."""
    r, eps, n = spec.r, spec.epsilon, spec.n
    half_angle = np.pi / n
    lam = _local_longitude(local, spec)
    depth = np.clip(r - np.abs(local[:, 2]), 0.0, None)
    s = np.sqrt(r * depth / (1 - eps))
    out = np.empty_like(local)
    out[:, 0] = s * (np.pi / (n * np.sin(half_angle)) - np.sin(half_angle) * lam)
    out[:, 1] = s * np.cos(half_angle) * lam
    height = eps * r + spec.derived.b_n * (1 - s / r)
    out[:, 2] = np.where(local[:, 2] < 0, -height, height)
    return out


def _belt_kernel(local: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    """Lambert cylindrical projection of zone-0 belt points onto the prism face."""
    half_angle = np.pi / spec.n
    lam = _local_longitude(local, spec)
    out = np.empty_like(local)
    out[:, 0] = spec.derived.R_n - spec.r * np.sin(half_angle) * lam
    out[:, 1] = spec.r * np.cos(half_angle) * lam
    out[:, 2] = local[:, 2]
    return out


def _sphere_regions(points: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    z = points[:, 2]
    return np.where(z > spec.belt_height, 1, np.where(z < -spec.belt_height, -1, 0))


def forward_array(points: np.ndarray, spec: PolyhedronSpec) -> MapResult:
    """
    Maps sphere points onto the surface of K_n

    :param points: (N, 3) points on the sphere of radius spec.r
    :param spec: the polyhedron
    :return: the surface points, their Region codes and zone indices
    """
    points = _as_array(points)
    norms = np.linalg.norm(points, axis=1)
    off = np.abs(norms - spec.r) > SURFACE_TOL * spec.r
    if np.any(off):
        idx = int(np.flatnonzero(off)[0])
        raise DomainError(index=idx, detail=f"norm {norms[idx]:.17g} is not the sphere radius {spec.r:.17g}")
    return _forward_unchecked(points, spec)


def _forward_unchecked(points: np.ndarray, spec: PolyhedronSpec) -> MapResult:
    zones = zone_index_array(points, spec.n)
    regions = _sphere_regions(points, spec)
    local = rotate_about_z(points, -spec.alpha(zones))
    caps = regions != 0
    out = np.empty_like(local)
    if np.any(caps):
        out[caps] = _cap_kernel(local[caps], spec)
    if np.any(~caps):
        out[~caps] = _belt_kernel(local[~caps], spec)
    return rotate_about_z(out, spec.alpha(zones)), regions, zones


def _to_surface_point(result: MapResult) -> PolySurfacePoint:
    coords, regions, zones = result
    X, Y, Z = (float(v) for v in coords[0])
    return PolySurfacePoint(X, Y, Z, Region(int(regions[0])), ZoneTag(int(zones[0]), 1 if Z >= 0 else -1))


def _check_band(z: float, lower: float, upper: float, spec: PolyhedronSpec, what: str):
    slack = BOUNDARY_SLACK * spec.r
    if z < lower - slack or z > upper + slack:
        raise DomainError(index=0, detail=f"z={z:.17g} is outside the {what} [{lower:.17g}, {upper:.17g}]")


def forward_cap(p: SpherePoint, spec: PolyhedronSpec) -> PolySurfacePoint:
    """
    Maps a point of the north cap onto the pyramid face of its zone

    :param p: sphere point with z >= eps * r
    :param spec: the polyhedron
    :return: the image on the north pyramid
    """
    _check_band(p.z, spec.belt_height, spec.r, spec, "north cap")
    pts = _as_array(p).copy()
    pts[:, 2] = max(pts[0, 2], spec.belt_height)
    zones = zone_index_array(pts, spec.n)
    local = rotate_about_z(pts, -spec.alpha(zones))
    coords = rotate_about_z(_cap_kernel(local, spec), spec.alpha(zones))
    return _to_surface_point((coords, np.array([Region.PyramidPlus.value]), zones))


def forward_cap_south(p: SpherePoint, spec: PolyhedronSpec) -> PolySurfacePoint:
    """Mirror image of forward_cap through z = 0."""
    _check_band(p.z, -spec.r, -spec.belt_height, spec, "south cap")
    mirrored = forward_cap(SpherePoint(p.x, p.y, -p.z), spec)
    return PolySurfacePoint(mirrored.X, mirrored.Y, -mirrored.Z, Region.PyramidMinus, ZoneTag(mirrored.zone.i, -1))


def forward_belt(p: SpherePoint, spec: PolyhedronSpec) -> PolySurfacePoint:
    _check_band(p.z, -spec.belt_height, spec.belt_height, spec, "belt")
    pts = _as_array(p)
    zones = zone_index_array(pts, spec.n)
    local = rotate_about_z(pts, -spec.alpha(zones))
    coords = rotate_about_z(_belt_kernel(local, spec), spec.alpha(zones))
    return _to_surface_point((coords, np.array([Region.Prism.value]), zones))


def forward(p: SpherePoint, spec: PolyhedronSpec) -> PolySurfacePoint:
    return _to_surface_point(forward_array(_as_array(p), spec))


########################################################################################################################
# Inverse kernels (zone-0 coordinates)
########################################################################################################################
def _invert_cap_kernel(local: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    r, eps, n = spec.r, spec.epsilon, spec.n
    half_angle = np.pi / n
    height = np.abs(local[:, 2])
    t = np.clip(1.0 - (height - eps * r) / spec.derived.b_n, 0.0, 1.0)
    depth = r * (1 - eps) * t ** 2  # r - |z|
    rho = np.sqrt(depth * (2 * r - depth))
    denominator = local[:, 0] * np.cos(half_angle) + local[:, 1] * np.sin(half_angle)
    safe = denominator > 0
    lam = np.zeros(len(local))
    lam[safe] = (np.pi / (n * np.sin(half_angle))) * local[safe, 1] / denominator[safe]
    lam = np.clip(lam, 0.0, spec.zone_width)
    out = np.empty_like(local)
    out[:, 0] = rho * np.cos(lam)
    out[:, 1] = rho * np.sin(lam)
    out[:, 2] = np.where(local[:, 2] < 0, -(r - depth), r - depth)
    return out


def _invert_belt_kernel(local: np.ndarray, spec: PolyhedronSpec) -> np.ndarray:
    r = spec.r
    lam = np.clip(local[:, 1] / (r * np.cos(np.pi / spec.n)), 0.0, spec.zone_width)
    z = np.clip(local[:, 2], -spec.belt_height, spec.belt_height)
    rho = np.sqrt((r - z) * (r + z))
    return np.column_stack([rho * np.cos(lam), rho * np.sin(lam), z])


def invert_array(points: np.ndarray, spec: PolyhedronSpec) -> MapResult:
    """
    Maps surface points of K_n back onto the sphere

    :param points: (N, 3) points on the surface of K_n
    :param spec: the polyhedron
    :return: the sphere points, and the Region codes and zone indices of the input points
    """
    points = _as_array(points)
    regions = region_code_array(points, spec)
    zones = zone_index_array(points, spec.n)
    local = rotate_about_z(points, -spec.alpha(zones))
    caps = regions != 0
    out = np.empty_like(local)
    if np.any(caps):
        out[caps] = _invert_cap_kernel(local[caps], spec)
    if np.any(~caps):
        out[~caps] = _invert_belt_kernel(local[~caps], spec)
    return rotate_about_z(out, spec.alpha(zones)), regions, zones


def _to_sphere_point(coords: np.ndarray) -> SpherePoint:
    return SpherePoint(*(float(v) for v in coords[0]))


def invert_cap(q: PolySurfacePoint, spec: PolyhedronSpec) -> SpherePoint:
    """
    Maps a point of a north pyramid face back onto the north cap; the apex goes to the pole

    :param q: point with eps * r <= Z <= eps * r + b_n on a north pyramid face
    :param spec: the polyhedron
    :return: the preimage on the sphere
    """
    _check_band(q.Z, spec.belt_height, spec.belt_height + spec.derived.b_n, spec, "north pyramid")
    if q.X == 0 and q.Y == 0:
        return SpherePoint(0.0, 0.0, spec.r)
    pts = _as_array(q).copy()
    pts[:, 2] = max(pts[0, 2], spec.belt_height)
    zones = zone_index_array(pts, spec.n)
    local = rotate_about_z(pts, -spec.alpha(zones))
    return _to_sphere_point(rotate_about_z(_invert_cap_kernel(local, spec), spec.alpha(zones)))


def invert_belt(q: PolySurfacePoint, spec: PolyhedronSpec) -> SpherePoint:
    _check_band(q.Z, -spec.belt_height, spec.belt_height, spec, "prism")
    pts = _as_array(q)
    zones = zone_index_array(pts, spec.n)
    local = rotate_about_z(pts, -spec.alpha(zones))
    return _to_sphere_point(rotate_about_z(_invert_belt_kernel(local, spec), spec.alpha(zones)))


def invert(q: PolySurfacePoint, spec: PolyhedronSpec) -> SpherePoint:
    return _to_sphere_point(invert_array(_as_array(q), spec)[0])


########################################################################################################################
# First fundamental form of the north-cap map in spherical coordinates
########################################################################################################################
def fundamental_form(phi: Union[float, np.ndarray], theta: Union[float, np.ndarray], spec: PolyhedronSpec,
                     i: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Closed-form coefficients E', F', G' of the pulled-back metric of the cap map on zone i

    :param phi: colatitude(s) in the north cap
    :param theta: longitude(s) in zone i
    :param spec: the polyhedron
    :param i: zone index
    :return: (E', F', G'); E'G' - F'^2 = r^4 sin^2(phi)
    """
    r, eps, n = spec.r, spec.epsilon, spec.n
    offset = np.asarray(theta, dtype=float) - (2 * i + 1) * np.pi / n
    phi = np.asarray(phi, dtype=float)
    scale = r ** 2 / (2 * (1 - eps))
    E = scale * (4 * (1 - eps) ** 2 + offset ** 2) * np.cos(phi / 2) ** 2
    F = scale * offset * np.sin(phi)
    G = 2 * r ** 2 * np.sin(phi / 2) ** 2 / (1 - eps)
    return E, F, G
