from src.KnMaps_Core import PolyhedronSpec, PolySurfacePoint, SpherePoint, Region, ZoneTag, rotate_about_z
from src.KnMaps_SphereMap import invert_array
from src.KnMaps_BallMap import VolumeSpec, poly_to_ball_array, admissibility_gap, admissible_epsilons
from src.KnMaps_Verify import planar_polygon_area, spherical_polygon_area
from src.KnMaps_HelperFuncs_Parallel import run_partitioned
from src.KnMaps_Errors import DomainError, NotAdmissible
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, List, Optional, Tuple, Union
import logging
import numpy as np


########################################################################################################################
# PREFACE
# Equal-area grids on K_n(r, p/(p+1)) and on the sphere, and equal-volume tetrahedral grids of the solid polyhedron and
# of the ball.
#
# Surface grids: with eps = p/(p+1) the surface splits into n(p+1) rhombic cells of equal area 4 pi r^2 / (n(p+1)):
#   - row 0: n north rhombi, each a north pyramid face plus the prism triangle hanging below its base edge
#   - rows 1..p-1: n(p-1) diamonds of the prism, alternately centred on face middles and on vertical edges
#   - row p: n south rhombi; for odd p the bottom diamonds straddle a vertical edge, so the south pyramid is rotated by
#     -pi/n to bring its faces under them
# Every rhombus is parametrized by (a, b) in [0, 1]^2 with the loop (0,0) -> (1,0) -> (1,1) -> (0,1) running
# counterclockwise seen from outside; the k x k squares of that parameter square are the refined cells. Pyramid halves
# use a + b <= 1, where (a, b) are the barycentric weights of the two base vertices (swapped in the south).
#
# Ball grids: 4n tetrahedra with apex at the origin over the pyramid faces and the triangulated prism faces, each split
# at its centroid into four tetrahedra of a quarter of its volume, levels times. A ball-side cell is measured as the
# volume enclosed by the mapped surface of its tetrahedron.
########################################################################################################################
logger = logging.getLogger("KnMaps.Grids")

MAX_CHORD = 1e-3
MIN_EDGE_SAMPLES = 1024
PIECE_AREA_FLOOR = 1e-13
VOLUME_MESH_DIVISIONS = 64


class Carrier(Enum):
    PolySurface = "poly"
    Sphere = "sphere"
    SolidPoly = "solid"
    Ball = "ball"


@dataclass(frozen=True)
class CellId:
    region: Region
    face: int
    row: int
    col: int
    level: int

    @property
    def label(self) -> str:
        return f"{self.region.short}/{self.face}/{self.row}/{self.col}/{self.level}"


@dataclass
class GridCell:
    cell_id: CellId
    boundary: List[np.ndarray]  # closed polylines (last sample repeats the first)
    measure: float
    source: Any = field(default=None, repr=False, compare=False)


@dataclass
class Grid:
    carrier: Carrier
    cells: List[GridCell]
    spec: Any
    p: Optional[int] = None
    k: int = 1

    def __len__(self) -> int:
        return len(self.cells)

    def measures(self) -> np.ndarray:
        return np.array([cell.measure for cell in self.cells])

    def total_measure(self) -> float:
        return float(np.sum(self.measures()))


@dataclass(frozen=True)
class FaceParam:
    u: float
    v: float
    i: int

    def __post_init__(self):
        slack = 1e-12
        if not (-slack <= self.u <= 1 + slack and -slack <= self.v <= 1 - self.u + slack):
            raise DomainError(index=0, detail=f"face parameters (u={self.u}, v={self.v}) leave the triangle")


def epsilon_for(p: int) -> float:
    """
    Belt fraction at which the prism holds n p cells and each pyramid face half a cell

    :param p: positive integer number of cell rows in the prism
    :return: p / (p + 1)
    """
    if int(p) != p or p < 1:
        raise DomainError(index=0, detail=f"p={p} must be a positive integer")
    return p / (p + 1)


def face_param_sphere_image(u: np.ndarray, v: np.ndarray, base_angle: Union[float, np.ndarray], hemisphere: int,
                            n: int, epsilon: float, r: float = 1.0) -> np.ndarray:
    """
    Sphere image of the pyramid-face point u * V_0 + v * V_1 + (1 - u - v) * apex

    :param u: weight of the base vertex at base_angle
    :param v: weight of the base vertex at base_angle + 2 pi / n
    :param base_angle: longitude of the first base vertex
    :param hemisphere: +1 north, -1 south
    :return: (m, 3) points; z = r(1 - (1 - eps)(u + v)^2), longitude base_angle + (2 pi / n) v / (u + v)
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    u, v = u.ravel(), v.ravel()
    s = u + v
    ratio = np.divide(v, s, out=np.zeros_like(s), where=s > 0)
    theta = base_angle + (2 * np.pi / n) * ratio
    depth = r * (1 - epsilon) * s ** 2
    planar = np.sqrt(np.clip(depth * (2 * r - depth), 0.0, None))
    return np.column_stack([planar * np.cos(theta), planar * np.sin(theta), hemisphere * (r - depth)])


def pyramid_face_point(fp: FaceParam, spec: PolyhedronSpec) -> Tuple[PolySurfacePoint, SpherePoint]:
    """
    Point of the north pyramid face fp.i with parameters (u, v) and its sphere image

    :return: the surface point and the sphere point; the apex pairs with the north pole
    """
    d = spec.derived
    a0, a1 = spec.alpha(fp.i), spec.alpha(fp.i + 1)
    X = d.R_n * (fp.u * np.cos(a0) + fp.v * np.cos(a1))
    Y = d.R_n * (fp.u * np.sin(a0) + fp.v * np.sin(a1))
    Z = spec.belt_height + d.b_n * (1 - fp.u - fp.v)
    on_sphere = face_param_sphere_image(fp.u, fp.v, a0, 1, spec.n, spec.epsilon, spec.r)[0]
    surface = PolySurfacePoint(float(X), float(Y), float(Z), Region.PyramidPlus, ZoneTag(fp.i, 1))
    return surface, SpherePoint(*(float(c) for c in on_sphere))


########################################################################################################################
# Rhombic layout
########################################################################################################################
@dataclass(frozen=True)
class RhombicLayout:
    n: int
    p: int
    r: float = 1.0

    @property
    def epsilon(self) -> float:
        return epsilon_for(self.p)

    @property
    def row_height(self) -> float:
        """Vertical diagonal of a prism diamond."""
        return 4 * self.r / (self.p + 1)

    @property
    def cell_area(self) -> float:
        return 4 * np.pi * self.r ** 2 / (self.n * (self.p + 1))

    def rhombi(self) -> List["Rhombus"]:
        cells = []
        for j in range(self.p + 1):
            kind = Region.PyramidPlus if j == 0 else (Region.PyramidMinus if j == self.p else Region.Prism)
            for i in range(self.n):
                t_c = i + 0.5 if j % 2 == 0 else float(i)
                cells.append(Rhombus(self, kind, i, j, t_c))
        return cells


def _clip(polygon: np.ndarray, weights: Tuple[float, float, float]) -> np.ndarray:
    """Sutherland-Hodgman clip of an (a, b) polygon to w_a * a + w_b * b + w_0 <= 0."""
    if len(polygon) == 0:
        return polygon
    values = polygon @ np.array(weights[:2]) + weights[2]
    kept = []
    for idx in range(len(polygon)):
        cur, nxt = polygon[idx], polygon[(idx + 1) % len(polygon)]
        f_cur, f_nxt = values[idx], values[(idx + 1) % len(polygon)]
        if f_cur <= 0:
            kept.append(cur)
        if (f_cur < 0 < f_nxt) or (f_nxt < 0 < f_cur):
            kept.append(cur + (nxt - cur) * f_cur / (f_cur - f_nxt))
    return np.array(kept).reshape(-1, 2)


def _ab_area(polygon: np.ndarray) -> float:
    if len(polygon) < 3:
        return 0.0
    a, b = polygon[:, 0], polygon[:, 1]
    return float(abs(0.5 * np.sum(a * np.roll(b, -1) - np.roll(a, -1) * b)))


def _square_loop(square: Tuple[float, float, float, float], per_edge: int) -> np.ndarray:
    """Closed counterclockwise sampling of [a0, a1] x [b0, b1] with per_edge samples on each side."""
    a0, a1, b0, b1 = square
    corners = np.array([[a0, b0], [a1, b0], [a1, b1], [a0, b1], [a0, b0]])
    steps = np.arange(per_edge) / per_edge
    edges = [corners[e] + np.outer(steps, corners[e + 1] - corners[e]) for e in range(4)]
    return np.vstack(edges + [corners[:1]])


@dataclass(frozen=True)
class Rhombus:
    layout: RhombicLayout
    region: Region
    face: int
    row: int
    t_c: float  # centre longitude in units of the zone width

    @property
    def zone_width(self) -> float:
        return 2 * np.pi / self.layout.n

    @property
    def base_angle(self) -> float:
        """Longitude of the first base vertex of the pyramid half."""
        return (self.t_c - 0.5) * self.zone_width

    @property
    def twist(self) -> float:
        """Rotation of the pyramid carrying the cap half relative to K_n: -pi/n for odd-p south rhombi."""
        if self.region == Region.Prism:
            return 0.0
        return self.base_angle - self.face * self.zone_width

    def _cap_mask(self, ab: np.ndarray) -> np.ndarray:
        if self.region == Region.Prism:
            return np.zeros(len(ab), dtype=bool)
        return ab[:, 0] + ab[:, 1] <= 1.0

    def _cap_uv(self, ab: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.region == Region.PyramidPlus:
            return ab[:, 0], ab[:, 1]
        return ab[:, 1], ab[:, 0]

    def belt_chart(self, ab: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(t, Z): longitude in zone widths and height, for the prism half."""
        a, b = ab[:, 0], ab[:, 1]
        layout = self.layout
        half = layout.row_height / 2
        eps_r = layout.epsilon * layout.r
        if self.region == Region.PyramidPlus:
            return self.t_c + (b - a) / 2, eps_r - half * (a + b - 1)
        if self.region == Region.PyramidMinus:
            return self.t_c + (a - b) / 2, -eps_r + half * (a + b - 1)
        z_centre = eps_r - self.row * half
        return self.t_c + (b - a) / 2, z_centre + half - half * (a + b)

    def to_sphere(self, ab: np.ndarray) -> np.ndarray:
        """Intrinsic sphere image of rhombus parameters."""
        ab = np.atleast_2d(ab)
        layout = self.layout
        out = np.empty((len(ab), 3))
        cap = self._cap_mask(ab)
        if np.any(cap):
            u, v = self._cap_uv(ab[cap])
            out[cap] = face_param_sphere_image(u, v, self.base_angle, self.region.value, layout.n, layout.epsilon,
                                               layout.r)
        if np.any(~cap):
            t, z = self.belt_chart(ab[~cap])
            theta = t * self.zone_width
            planar = np.sqrt(np.clip((layout.r - z) * (layout.r + z), 0.0, None))
            out[~cap] = np.column_stack([planar * np.cos(theta), planar * np.sin(theta), z])
        return out

    def to_surface(self, ab: np.ndarray, spec: PolyhedronSpec) -> Tuple[np.ndarray, np.ndarray]:
        """
        Point on the (possibly rotated) polyhedron surface

        :return: (m, 3) points and the rotation of the face each point lies on
        """
        ab = np.atleast_2d(ab)
        d = spec.derived
        out = np.empty((len(ab), 3))
        twist = np.zeros(len(ab))
        cap = self._cap_mask(ab)
        if np.any(cap):
            u, v = self._cap_uv(ab[cap])
            a0, a1 = self.base_angle, self.base_angle + self.zone_width
            height = spec.belt_height + d.b_n * (1 - u - v)
            out[cap] = np.column_stack([d.R_n * (u * np.cos(a0) + v * np.cos(a1)),
                                        d.R_n * (u * np.sin(a0) + v * np.sin(a1)),
                                        self.region.value * height])
            twist[cap] = self.twist
        if np.any(~cap):
            t, z = self.belt_chart(ab[~cap])
            face = np.floor(t)
            tau = (t - face)[:, None]
            v0 = np.column_stack([np.cos(face * self.zone_width), np.sin(face * self.zone_width)])
            v1 = np.column_stack([np.cos((face + 1) * self.zone_width), np.sin((face + 1) * self.zone_width)])
            out[~cap] = np.column_stack([d.R_n * ((1 - tau) * v0 + tau * v1), z])
        return out, twist

    def pieces(self, square: Tuple[float, float, float, float]) -> List[np.ndarray]:
        """Parts of a parameter square that each lie on a single face, as (a, b) polygons."""
        a0, a1, b0, b1 = square
        polygon = np.array([[a0, b0], [a1, b0], [a1, b1], [a0, b1]], dtype=float)
        if self.region == Region.Prism:
            cap_part, belt_part = np.empty((0, 2)), polygon
        else:
            cap_part, belt_part = _clip(polygon, (1.0, 1.0, -1.0)), _clip(polygon, (-1.0, -1.0, 1.0))
        belt_parts = [belt_part]
        if len(belt_part) >= 3:
            t = self.belt_chart(belt_part)[0]
            # t is affine in (a, b): t = t_c + s * (b - a) / 2
            s = 1.0 if self.region != Region.PyramidMinus else -1.0
            for m in np.arange(np.floor(t.min()) + 1, np.ceil(t.max())):
                split = []
                for part in belt_parts:
                    w0 = 2 * (self.t_c - m)
                    split.append(_clip(part, (-s, s, w0)))
                    split.append(_clip(part, (s, -s, -w0)))
                belt_parts = split
        return [part for part in [cap_part] + belt_parts if _ab_area(part) > PIECE_AREA_FLOOR]


def _squares(k: int) -> List[Tuple[int, int, Tuple[float, float, float, float]]]:
    return [(ia, ib, (ia / k, (ia + 1) / k, ib / k, (ib + 1) / k)) for ia in range(k) for ib in range(k)]


def _closed(points: np.ndarray) -> np.ndarray:
    return np.vstack([points, points[:1]])


def _edge_samples(rhombus: Rhombus, square: Tuple[float, float, float, float], r: float, max_chord: float,
                  min_samples: int) -> int:
    pilot = rhombus.to_sphere(_square_loop(square, 64))
    longest = max(np.sum(np.linalg.norm(np.diff(pilot[e * 64:(e + 1) * 64 + 1], axis=0), axis=1)) for e in range(4))
    return int(max(min_samples, np.ceil(1.02 * longest / (max_chord * r))))


########################################################################################################################
# Surface and sphere grids
########################################################################################################################
def build_surface_grid(n: int, p: int, k: int, r: float = 1.0) -> Grid:
    """
    Equal-area rhombic grid on K_n(r, p/(p+1))

    :param n: number of prism faces
    :param p: cell rows of the prism
    :param k: subdivision of every base rhombus into k x k cells
    :param r: sphere radius
    :return: n (p + 1) k^2 cells on the PolySurface carrier; each boundary is a list of planar pieces
    """
    spec = PolyhedronSpec(n, r, epsilon_for(p))
    layout = RhombicLayout(n, p, r)
    cells = []
    for rhombus in layout.rhombi():
        for ia, ib, square in _squares(k):
            boundary = [_closed(rhombus.to_surface(piece, spec)[0]) for piece in rhombus.pieces(square)]
            measure = sum(planar_polygon_area(piece, r) for piece in boundary)
            cell_id = CellId(rhombus.region, rhombus.face, rhombus.row * k + ia, ib, k)
            cells.append(GridCell(cell_id, boundary, measure, source=(rhombus, square)))
    logger.info(f"Surface grid n={n} p={p} k={k}: {len(cells)} cells of area {layout.cell_area / k ** 2:.12g}")
    return Grid(Carrier.PolySurface, cells, spec, p=p, k=k)


def grid_to_sphere(g: Grid, spec: Optional[PolyhedronSpec] = None, max_chord: float = MAX_CHORD,
                   min_samples: int = MIN_EDGE_SAMPLES, nworkers: Optional[int] = None) -> Grid:
    """
    Transports a surface grid to the sphere through the inverse map

    :param g: grid from build_surface_grid
    :param spec: polyhedron the grid lives on; defaults to g.spec
    :param max_chord: largest sphere chord between boundary samples, relative to r
    :param min_samples: lower bound of samples per cell edge
    :param nworkers: worker threads
    :return: the grid on the Sphere carrier, cell measures from the boundary integral
    """
    spec = g.spec if spec is None else spec

    def transport(cell: GridCell) -> GridCell:
        rhombus, square = cell.source
        per_edge = _edge_samples(rhombus, square, spec.r, max_chord, min_samples)
        surface, twist = rhombus.to_surface(_square_loop(square, per_edge), spec)
        on_sphere, _, _ = invert_array(rotate_about_z(surface, -twist), spec)
        on_sphere = rotate_about_z(on_sphere, twist)
        return GridCell(cell.cell_id, [on_sphere], spherical_polygon_area(on_sphere, spec.r), source=cell.source)

    cells = run_partitioned(transport, g.cells, nworkers)
    return Grid(Carrier.Sphere, cells, spec, p=g.p, k=g.k)


def build_sphere_grid(n: int, p: int, k: int, r: float = 1.0, max_chord: float = MAX_CHORD,
                      min_samples: int = MIN_EDGE_SAMPLES, nworkers: Optional[int] = None) -> Grid:
    """
    Equal-area sphere grid from the rhombus parameters, for any p

    For p/(p+1) below the polyhedron bound this coincides with grid_to_sphere(build_surface_grid(n, p, k)).
    """
    layout = RhombicLayout(n, p, r)

    def sample(item: Tuple[Rhombus, int, int, Tuple[float, float, float, float]]) -> GridCell:
        rhombus, ia, ib, square = item
        per_edge = _edge_samples(rhombus, square, r, max_chord, min_samples)
        loop = rhombus.to_sphere(_square_loop(square, per_edge))
        cell_id = CellId(rhombus.region, rhombus.face, rhombus.row * k + ia, ib, k)
        return GridCell(cell_id, [loop], spherical_polygon_area(loop, r), source=(rhombus, square))

    items = [(rhombus, ia, ib, square) for rhombus in layout.rhombi() for ia, ib, square in _squares(k)]
    cells = run_partitioned(sample, items, nworkers)
    logger.info(f"Sphere grid n={n} p={p} k={k}: {len(cells)} cells")
    return Grid(Carrier.Sphere, cells, layout, p=p, k=k)


########################################################################################################################
# HEALPix correspondence (n = 4, p = 2)
########################################################################################################################
def _wrapped(angle: np.ndarray) -> np.ndarray:
    return np.mod(angle + np.pi, 2 * np.pi) - np.pi


def healpix_residuals(k: int, ell: int, n: int = 4, p: int = 2, samples: int = 257) -> float:
    """
    Largest deviation of the grid curves from the HEALPix boundary equations

    Samples the curves a = ell/k and b = ell/k of every rhombus of the n = 4, p = 2 layout through Rhombus.to_sphere.
    On a pyramid face the curve is checked against the polar-cap family for its fixed face parameter, with the
    longitude theta_t measured from the face's base meridian. In the belt it must lie on one of the lines
    z = 2/3 - s (4/3) (2 theta_t / pi - m / k), with s = +1 for a = const and -1 for b = const, for some integer m.

    :param k: subdivision
    :param ell: curve index in [0, k]
    :param samples: interior samples per curve piece
    :return: max |z - z_healpix| over all samples; the degenerate pyramid curves at ell = 0 contribute 0
    """
    if n != 4 or p != 2:
        raise DomainError(index=0, detail=f"HEALPix curves exist for n=4, p=2 only, not n={n}, p={p}")
    if not 0 <= ell <= k:
        raise DomainError(index=0, detail=f"curve index {ell} outside [0, {k}]")
    layout = RhombicLayout(n, p)
    level = ell / k
    mids = (np.arange(samples) + 0.5) / samples
    fixed = np.full(samples, level)
    residual = 0.0
    for rhombus in layout.rhombi():
        pieces = [(0.0, 1.0, False)] if rhombus.region == Region.Prism else \
            [(0.0, 1.0 - level, True), (1.0 - level, 1.0, False)]
        for fixed_a in (True, False):
            for lo, hi, on_cap in pieces:
                if hi <= lo or (on_cap and level == 0):
                    continue
                free = lo + (hi - lo) * mids
                ab = np.column_stack([fixed, free] if fixed_a else [free, fixed])
                points = rhombus.to_sphere(ab)
                if on_cap:
                    fixed_u = fixed_a == (rhombus.region == Region.PyramidPlus)
                    theta_t = _wrapped(np.arctan2(points[:, 1], points[:, 0]) - rhombus.base_angle)
                    if fixed_u:
                        predicted = 1 - level ** 2 * (np.pi / (2 * theta_t - np.pi)) ** 2 / 3
                    else:
                        predicted = 1 - level ** 2 * (np.pi / (2 * theta_t)) ** 2 / 3
                    deviation = np.abs(np.abs(points[:, 2]) - predicted)
                else:
                    s = 1.0 if fixed_a else -1.0
                    t = np.arctan2(points[:, 1], points[:, 0]) / rhombus.zone_width
                    # top-rim crossing of the line through each sample, in zone widths
                    t_top = t + s * 0.75 * (points[:, 2] - 2 / 3)
                    deviation = (4 / 3) * np.abs(t_top - np.round(t_top * k) / k)
                residual = max(residual, float(np.max(deviation)))
    return residual


########################################################################################################################
# Tetrahedral ball grids
########################################################################################################################
TETRA_FACES = ((0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2))


def tetra_volume(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    return float(abs(np.linalg.det(v[1:] - v[0])) / 6)


def refine_tetra(vertices: np.ndarray) -> List[np.ndarray]:
    """Centroid split: child m replaces vertex m by the centroid, so each child holds a quarter of the volume."""
    vertices = np.asarray(vertices, dtype=float)
    centroid = vertices.mean(axis=0)
    children = []
    for m in range(4):
        child = vertices.copy()
        child[m] = centroid
        children.append(child)
    return children


def tetra_contains(vertices: np.ndarray, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Membership of (m, 3) points through their barycentric coordinates."""
    vertices = np.asarray(vertices, dtype=float)
    edges = (vertices[1:] - vertices[0]).T
    coords = np.linalg.solve(edges, (np.atleast_2d(points) - vertices[0]).T).T
    return np.all(coords >= -tol, axis=1) & (coords.sum(axis=1) <= 1 + tol)


@lru_cache(maxsize=8)
def _face_lattice(divisions: int) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric weights of the lattice points of a triangle and its divisions^2 sub-triangles, same orientation."""
    i, j = np.meshgrid(np.arange(divisions + 1), np.arange(divisions + 1), indexing="ij")
    keep = i + j <= divisions
    i, j = i[keep], j[keep]
    index = np.full((divisions + 1, divisions + 1), -1)
    index[i, j] = np.arange(len(i))
    up = i + j <= divisions - 1
    down = i + j <= divisions - 2
    triangles = np.vstack([
        np.column_stack([index[i[up], j[up]], index[i[up] + 1, j[up]], index[i[up], j[up] + 1]]),
        np.column_stack([index[i[down] + 1, j[down]], index[i[down] + 1, j[down] + 1], index[i[down], j[down] + 1]])
    ])
    return np.column_stack([i, j]) / divisions, triangles


def tetra_surface_points(vertices: np.ndarray, divisions: int = VOLUME_MESH_DIVISIONS) -> np.ndarray:
    """Lattice points of the four faces, face by face in TETRA_FACES order."""
    vertices = np.asarray(vertices, dtype=float)
    weights = _face_lattice(divisions)[0]
    faces = []
    for tri in TETRA_FACES:
        a, b, c = vertices[list(tri)]
        faces.append(a + weights[:, :1] * (b - a) + weights[:, 1:] * (c - a))
    return np.vstack(faces)


def mapped_tetra_volume(vertices: np.ndarray, mapping: Callable[[np.ndarray], np.ndarray],
                        divisions: int = VOLUME_MESH_DIVISIONS) -> float:
    """
    Volume enclosed by the image of a tetrahedron's surface

    Every face is cut into divisions^2 triangles; their mapped corners span flat facets and the signed volumes of the
    cones from the origin over these facets add up to the enclosed volume. Exact for affine maps, second order in
    1 / divisions otherwise.

    :param vertices: (4, 3) tetrahedron
    :param mapping: point map of an (m, 3) array, continuous on the tetrahedron
    :param divisions: lattice subdivisions of every edge
    :return: the enclosed volume
    """
    triangles = _face_lattice(divisions)[1]
    image = mapping(tetra_surface_points(vertices, divisions)).reshape(len(TETRA_FACES), -1, 3)
    total = 0.0
    for face in image:
        total += float(np.sum(np.cross(face[triangles[:, 0]], face[triangles[:, 1]]) * face[triangles[:, 2]]))
    return abs(total) / 6


def base_tetrahedra(vspec: VolumeSpec) -> List[Tuple[Region, int, int, np.ndarray]]:
    """
    The 4n tetrahedra with apex at the origin over the faces of K_n(r xi, eps)

    Prism faces are cut along the diagonal from the lower vertex at alpha_i to the upper vertex at alpha_{i+1}. For
    eps = 0 the prism is empty and only the 2n pyramid tetrahedra remain.

    :return: (region, face, row, vertices) tuples; row numbers the two prism triangles
    """
    spec = vspec.outer_spec
    d = spec.derived
    origin = np.zeros(3)
    top_apex = np.array([0.0, 0.0, spec.belt_height + d.b_n])
    bottom_apex = -top_apex

    def rim(i: int, height: float) -> np.ndarray:
        angle = spec.alpha(i)
        return np.array([d.R_n * np.cos(angle), d.R_n * np.sin(angle), height])

    tets = []
    for i in range(spec.n):
        t0, t1 = rim(i, spec.belt_height), rim(i + 1, spec.belt_height)
        b0, b1 = rim(i, -spec.belt_height), rim(i + 1, -spec.belt_height)
        tets.append((Region.PyramidPlus, i, 0, np.array([origin, t0, t1, top_apex])))
        if spec.epsilon > 0:
            tets.append((Region.Prism, i, 0, np.array([origin, b0, b1, t1])))
            tets.append((Region.Prism, i, 1, np.array([origin, b0, t1, t0])))
        tets.append((Region.PyramidMinus, i, 0, np.array([origin, b1, b0, bottom_apex])))
    return tets


def _ball_face_loop(vertices: np.ndarray, face: Tuple[int, int, int], mapping: Callable, r: float,
                    max_chord: float) -> np.ndarray:
    samples = []
    for start, end in zip(face, face[1:] + face[:1]):
        pilot = mapping(vertices[start] + np.outer(np.linspace(0, 1, 17), vertices[end] - vertices[start]))
        length = np.sum(np.linalg.norm(np.diff(pilot, axis=0), axis=1))
        count = int(max(2, np.ceil(1.05 * length / (max_chord * r))))
        steps = np.arange(count) / count
        samples.append(mapping(vertices[start] + np.outer(steps, vertices[end] - vertices[start])))
    loop = np.vstack(samples)
    return _closed(loop)


def build_ball_grid(vspec: VolumeSpec, levels: int, max_chord: float = MAX_CHORD, nworkers: Optional[int] = None,
                    mesh_divisions: int = VOLUME_MESH_DIVISIONS) -> Tuple[Grid, Grid]:
    """
    Equal-volume tetrahedral grid of the solid polyhedron and its image in the ball

    :param vspec: admissible volume-map parameters
    :param levels: number of centroid refinements
    :param max_chord: largest chord between boundary samples of the ball cells, relative to r
    :param nworkers: worker threads for the ball-side sampling
    :param mesh_divisions: subdivisions of every tetrahedron edge when measuring the ball-side cells
    :return: (grid on SolidPoly, grid on Ball); cells hold their four triangular faces as closed polylines
    """
    if not vspec.admissible:
        raise NotAdmissible(n=vspec.n, epsilon=vspec.epsilon, gap=admissibility_gap(vspec.n, vspec.epsilon),
                            roots=admissible_epsilons(vspec.n))
    if levels < 0:
        raise DomainError(index=0, detail=f"levels={levels} must be non-negative")
    solid_cells = []
    for region, face, row, vertices in base_tetrahedra(vspec):
        family = [(0, vertices)]
        for _ in range(levels):
            family = [(col * 4 + m, child) for col, tet in family for m, child in enumerate(refine_tetra(tet))]
        for col, tet in family:
            boundary = [_closed(tet[list(tri)]) for tri in TETRA_FACES]
            solid_cells.append(GridCell(CellId(region, face, row, col, levels), boundary, tetra_volume(tet),
                                        source=tet))

    def to_ball(points: np.ndarray) -> np.ndarray:
        return poly_to_ball_array(points, vspec)[0]

    def ball_cell(cell: GridCell) -> GridCell:
        boundary = [_ball_face_loop(cell.source, tri, to_ball, vspec.r, max_chord) for tri in TETRA_FACES]
        measure = mapped_tetra_volume(cell.source, to_ball, mesh_divisions)
        return GridCell(cell.cell_id, boundary, measure, source=cell.source)

    ball_cells = run_partitioned(ball_cell, solid_cells, nworkers)
    logger.info(f"Ball grid n={vspec.n} eps={vspec.epsilon:.10g} levels={levels}: {len(solid_cells)} tetrahedra")
    return (Grid(Carrier.SolidPoly, solid_cells, vspec, k=levels),
            Grid(Carrier.Ball, ball_cells, vspec, k=levels))
