from src.KnMaps_Errors import InvalidSpec, InvalidEpsilon, NotOnSurface
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from typing import Tuple, Union
import numpy as np


########################################################################################################################
# PREFACE
# Geometry of the polyhedron family K_n(r, eps): a regular n-gonal prism of height 2*eps*r capped by two pyramids whose
# lateral areas equal those of the spherical caps above/below z = +-eps*r. This module holds the polyhedron parameter
# type, its derived constants, the 2n azimuthal zones and the classification of points into zones and regions.
# Every other module consumes it.
#
# Array conventions: points are numpy arrays of shape (N, 3); regions are integer codes (see Region) and zones are the
# integer index i in [0, n-1]; the hemisphere is the sign of z.
########################################################################################################################

# Tolerances, all relative to the radius r
SURFACE_TOL = 1e-9
ROUNDTRIP_TOL = 1e-10
IDENTITY_TOL = 1e-12
BOUNDARY_SLACK = 1e-12


class Region(Enum):
    PyramidPlus = 1
    Prism = 0
    PyramidMinus = -1

    @property
    def short(self) -> str:
        return {1: "P+", 0: "E", -1: "P-"}[self.value]


def epsilon_max(n: int) -> float:
    """
    Upper bound of the belt fraction for which the pyramid altitude stays real and positive

    :param n: number of prism faces
    :return: 1 - (pi / 2n) cot(pi / n)
    """
    return 1.0 - (np.pi / (2 * n)) / np.tan(np.pi / n)


def altitude_factor(n: int, epsilon: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """c(eps) = b_n / r = sqrt(4(1 - eps)^2 - (pi^2 / n^2) cot^2(pi / n)); nan where the radicand is negative."""
    q = (np.pi / n) ** 2 / np.tan(np.pi / n) ** 2
    radicand = 4.0 * (1.0 - np.asarray(epsilon, dtype=float)) ** 2 - q
    with np.errstate(invalid="ignore"):
        result = np.sqrt(radicand)
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True)
class DerivedParams:
    ell_n: float  # edge of the base polygon
    R_n: float  # circumradius of the base polygon
    r_n: float  # inradius of the base polygon
    a_n: float  # slant height of a pyramid face
    b_n: float  # pyramid altitude
    A_n: float  # area of one pyramid face
    cap_area: float
    belt_area: float


@dataclass(frozen=True)
class PolyhedronSpec:
    n: int
    r: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3 or not self.r > 0:
            raise InvalidSpec(n=self.n, r=self.r)
        eps_max = epsilon_max(self.n)
        if not 0.0 <= self.epsilon < eps_max:
            raise InvalidEpsilon(n=self.n, epsilon=self.epsilon, eps_max=eps_max)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @cached_property
    def derived(self) -> DerivedParams:
        return derive_params(self)

    @property
    def belt_height(self) -> float:
        """Half-height eps * r of the prism."""
        return self.epsilon * self.r

    @property
    def zone_width(self) -> float:
        return 2 * np.pi / self.n

    def alpha(self, i: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
        return 2 * np.pi * np.asarray(i) / self.n


def derive_params(spec: PolyhedronSpec) -> DerivedParams:
    """
    Computes the lengths and areas of K_n(r, eps)

    :param spec: validated polyhedron parameters
    :return: the derived constants; a_n^2 = r_n^2 + b_n^2 and n * A_n equals the cap area
    """
    n, r, eps = spec.n, spec.r, spec.epsilon
    half_angle = np.pi / n
    ell_n = 2 * np.pi * r / n
    R_n = np.pi * r / (n * np.sin(half_angle))
    r_n = R_n * np.cos(half_angle)
    a_n = 2 * (1 - eps) * r
    b_n = r * altitude_factor(n, eps)
    return DerivedParams(ell_n=ell_n, R_n=R_n, r_n=r_n, a_n=a_n, b_n=b_n,
                         A_n=ell_n * a_n / 2,
                         cap_area=2 * np.pi * (1 - eps) * r ** 2,
                         belt_area=4 * np.pi * eps * r ** 2)


########################################################################################################################
# Points and zones
########################################################################################################################
@dataclass(frozen=True)
class ZoneTag:
    i: int
    hemisphere: int  # +1 for z >= 0, -1 for z < 0


@dataclass(frozen=True)
class SpherePoint:
    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, phi: float, theta: float, r: float = 1.0) -> "SpherePoint":
        """Builds the point of colatitude phi and longitude theta on the sphere of radius r."""
        return cls(r * np.sin(phi) * np.cos(theta), r * np.sin(phi) * np.sin(theta), r * np.cos(phi))

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))

    @property
    def phi(self) -> float:
        return float(np.arccos(np.clip(self.z / self.radius, -1.0, 1.0)))

    @property
    def theta(self) -> float:
        return float(azimuth(self.x, self.y))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class PolySurfacePoint:
    X: float
    Y: float
    Z: float
    region: Region = field(default=Region.Prism)
    zone: ZoneTag = field(default=ZoneTag(0, 1))

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=float)


def azimuth(x: Union[float, np.ndarray], y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Two-argument angle normalized to [0, 2*pi); the axis gets 0."""
    angle = np.mod(np.arctan2(y, x), 2 * np.pi)
    return np.where(angle >= 2 * np.pi, 0.0, angle)


def zone_index_array(points: np.ndarray, n: int) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    idx = np.floor(n * azimuth(points[:, 0], points[:, 1]) / (2 * np.pi)).astype(int)
    return np.mod(idx, n)


def classify_zone(x: float, y: float, z: float, n: int) -> ZoneTag:
    """
    Finds the azimuthal zone containing a point

    :param x: first coordinate
    :param y: second coordinate
    :param z: third coordinate; its sign decides the hemisphere
    :param n: number of zones per hemisphere
    :return: the zone tag; points on the axis belong to zone 0
    """
    i = int(zone_index_array(np.array([[x, y, z]]), n)[0])
    return ZoneTag(i=i, hemisphere=1 if z >= 0 else -1)


def rotation_matrix(angle: float) -> np.ndarray:
    """Rotation by angle about the z axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_about_z(points: np.ndarray, angles: Union[float, np.ndarray]) -> np.ndarray:
    """Rotates each row of points by its own angle (or a common one) about the z axis."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    c, s = np.cos(angles), np.sin(angles)
    out = np.empty_like(points)
    out[:, 0] = c * points[:, 0] - s * points[:, 1]
    out[:, 1] = s * points[:, 0] + c * points[:, 1]
    out[:, 2] = points[:, 2]
    return out


def to_zone_frame(points: np.ndarray, spec: PolyhedronSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rotates every point into zone 0

    :return: the rotated points and the zone index of each original point
    """
    zones = zone_index_array(points, spec.n)
    return rotate_about_z(points, -spec.alpha(zones)), zones


########################################################################################################################
# Face planes and region classification
########################################################################################################################
def _plane_residuals(local: np.ndarray, spec: PolyhedronSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Distances of zone-0 points to the prism plane and to the (hemisphere-matched) pyramid plane."""
    d = spec.derived
    half_angle = np.pi / spec.n
    apothem = local[:, 0] * np.cos(half_angle) + local[:, 1] * np.sin(half_angle)
    height = np.abs(local[:, 2]) - spec.belt_height
    prism_res = np.abs(apothem - d.r_n)
    pyramid_res = np.abs(d.b_n * apothem + d.r_n * height - d.r_n * d.b_n) / d.a_n
    return prism_res, pyramid_res


def face_plane_residual(points: np.ndarray, spec: PolyhedronSpec, regions: np.ndarray) -> np.ndarray:
    """
    Distance of each point to the plane of the face it is tagged with

    :param points: (N, 3) surface points
    :param spec: the polyhedron
    :param regions: integer Region codes, one per point
    :return: (N,) distances
    """
    local, _ = to_zone_frame(points, spec)
    prism_res, pyramid_res = _plane_residuals(local, spec)
    return np.where(np.asarray(regions) == Region.Prism.value, prism_res, pyramid_res)


def region_code_array(points: np.ndarray, spec: PolyhedronSpec, tol: float = SURFACE_TOL) -> np.ndarray:
    """
    Tags surface points with their region; |Z| = eps * r goes to the prism

    :param points: (N, 3) candidate surface points
    :param spec: the polyhedron
    :param tol: on-surface tolerance relative to r
    :return: (N,) integer Region codes
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    local, _ = to_zone_frame(points, spec)
    prism_res, pyramid_res = _plane_residuals(local, spec)
    abs_tol = tol * spec.r
    abs_z = np.abs(points[:, 2])
    in_belt = (abs_z <= spec.belt_height) & (prism_res <= abs_tol)
    on_pyramid = ((abs_z > spec.belt_height) & (abs_z <= spec.belt_height + spec.derived.b_n + abs_tol)
                  & (pyramid_res <= abs_tol))
    bad = ~(in_belt | on_pyramid)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        x, y, z = points[idx]
        raise NotOnSurface(index=idx, x=x, y=y, z=z, residual=min(prism_res[idx], pyramid_res[idx]), tol=abs_tol)
    return np.where(in_belt, Region.Prism.value, np.sign(points[:, 2]).astype(int))


def classify_region(X: float, Y: float, Z: float, spec: PolyhedronSpec) -> Region:
    """Scalar form of region_code_array."""
    return Region(int(region_code_array(np.array([[X, Y, Z]]), spec)[0]))
