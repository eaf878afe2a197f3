from src.KnMaps_Errors import OpenCurve, DegenerateCurve, NonPlanar
from src.KnMaps_HelperFuncs_Parallel import run_partitioned
from dataclasses import dataclass, asdict
from typing import Callable, List, Optional, Sequence, Tuple, Union
import logging
import numpy as np


########################################################################################################################
# PREFACE
# Numerical oracles. None of these routines evaluate the closed-form maps they are used to check: areas come from
# boundary integrals and shoelace formulas, volumes from Monte Carlo hit counting, continuity from sampled point pairs
# pushed through whatever map the caller hands in.
########################################################################################################################
logger = logging.getLogger("KnMaps.Verify")

POLE_TOL = 1e-12
MC_CHUNK = 65536


@dataclass(frozen=True)
class VerificationReport:
    check: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    samples: int
    seed: int
    mode: str = "abs"

    @classmethod
    def judge(cls, check: str, measured: float, expected: float, tolerance: float, samples: int = 0, seed: int = 0,
              mode: str = "abs") -> "VerificationReport":
        """
        Builds a report whose pass flag follows from the numbers

        :param mode: "abs" compares |measured - expected| with tolerance; "rel" scales tolerance by |expected|
        """
        limit = tolerance * abs(expected) if mode == "rel" else tolerance
        passed = bool(abs(measured - expected) <= limit)
        return cls(check=check, measured=float(measured), expected=float(expected), tolerance=float(tolerance),
                   passed=passed, samples=int(samples), seed=int(seed), mode=mode)

    def to_dict(self) -> dict:
        return asdict(self)


########################################################################################################################
# Areas
########################################################################################################################
def _open_cycle(boundary: np.ndarray, scale: float) -> np.ndarray:
    boundary = np.atleast_2d(np.asarray(boundary, dtype=float))
    if len(boundary) < 2:
        raise DegenerateCurve(count=len(boundary))
    gap = float(np.linalg.norm(boundary[-1] - boundary[0]))
    if gap > 1e-12 * scale:
        raise OpenCurve(gap=gap)
    cycle = boundary[:-1]
    if len(cycle) < 3:
        raise DegenerateCurve(count=len(cycle))
    return cycle


def spherical_polygon_area(boundary: np.ndarray, r: Optional[float] = None) -> float:
    """
    Area enclosed by a closed curve on the sphere, r^2 * loop integral of (1 - cos(phi)) d(theta), trapezoid rule

    :param boundary: (M, 3) samples, last sample equal to the first, counterclockwise seen from outside
    :param r: sphere radius; defaults to the mean sample norm
    :return: the enclosed area in [0, 4 pi r^2)
    """
    boundary = np.atleast_2d(np.asarray(boundary, dtype=float))
    r = float(np.mean(np.linalg.norm(boundary, axis=1))) if r is None else float(r)
    cycle = _open_cycle(boundary, r)
    g = 1.0 - np.clip(cycle[:, 2] / r, -1.0, 1.0)
    on_axis = np.hypot(cycle[:, 0], cycle[:, 1]) <= POLE_TOL * r
    keep = np.flatnonzero(~on_axis)
    if len(keep) < 2:
        raise DegenerateCurve(count=len(keep))
    theta = np.arctan2(cycle[keep, 1], cycle[keep, 0])
    nxt = np.roll(np.arange(len(keep)), -1)
    d_theta = np.mod(theta[nxt] - theta + np.pi, 2 * np.pi) - np.pi
    # a pole between two kept samples: the curve runs through the pole where the integrand is constant
    skipped = np.mod(keep[nxt] - keep, len(cycle)) > 1
    weight = 0.5 * (g[keep] + g[keep[nxt]])
    weight = np.where(skipped, g[np.mod(keep + 1, len(cycle))], weight)
    area = r ** 2 * float(np.sum(weight * d_theta))
    if area < 0:
        area += 4 * np.pi * r ** 2
    return area


def planar_polygon_area(vertices: np.ndarray, r: Optional[float] = None) -> float:
    """
    Area of a planar polygon in 3D, shoelace formula in an orthonormal frame of its plane

    :param vertices: (M, 3) vertices in order; a repeated closing vertex is ignored
    :param r: length scale for the planarity tolerance; defaults to the largest vertex norm
    :return: the area
    """
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    if len(vertices) > 1 and np.allclose(vertices[0], vertices[-1], rtol=0, atol=0):
        vertices = vertices[:-1]
    if len(vertices) < 3:
        raise DegenerateCurve(count=len(vertices))
    scale = float(np.max(np.linalg.norm(vertices, axis=1))) if r is None else float(r)
    centered = vertices - vertices.mean(axis=0)
    normal = np.sum(np.cross(centered, np.roll(centered, -1, axis=0)), axis=0)
    norm = np.linalg.norm(normal)
    if norm == 0:
        return 0.0
    normal /= norm
    distance = float(np.max(np.abs(centered @ normal)))
    if distance > 1e-9 * max(scale, 1e-300):
        raise NonPlanar(distance=distance, tol=1e-9 * scale)
    e1 = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 0.5:
        e1 = np.cross(normal, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    u, v = centered @ e1, centered @ e2
    return float(abs(0.5 * np.sum(u * np.roll(v, -1) - np.roll(u, -1) * v)))


########################################################################################################################
# Monte Carlo volumes
########################################################################################################################
def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    """Philox stream keyed by the seed, chunk index in the third counter word."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, chunk, 0]))


def monte_carlo_volume(predicate: Callable[[np.ndarray], np.ndarray], box_lo: Sequence[float],
                       box_hi: Sequence[float], N: int, seed: int, nworkers: Optional[int] = None,
                       chunk_size: int = MC_CHUNK) -> Tuple[float, float]:
    """
    Hit-or-miss volume estimate of the region described by predicate

    :param predicate: boolean membership of an (m, 3) array of points
    :param box_lo: lower corner of a box enclosing the region
    :param box_hi: upper corner of the box
    :param N: number of samples
    :param seed: key of the counter-based generator
    :param nworkers: threads to use; the estimate does not depend on it
    :param chunk_size: samples per independent stream
    :return: (estimate, standard error)
    """
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    box_volume = float(np.prod(box_hi - box_lo))
    n_chunks = -(-N // chunk_size)

    def count_hits(chunk: int) -> int:
        size = min(chunk_size, N - chunk * chunk_size)
        points = box_lo + (box_hi - box_lo) * chunk_generator(seed, chunk).random((size, 3))
        return int(np.count_nonzero(predicate(points)))

    hits = sum(run_partitioned(count_hits, range(n_chunks), nworkers))
    fraction = hits / N
    estimate = fraction * box_volume
    stderr = box_volume * np.sqrt(fraction * (1 - fraction) / N)
    logger.debug(f"Monte Carlo: {hits}/{N} hits in a box of volume {box_volume:.6g} (seed {seed})")
    return estimate, float(stderr)


########################################################################################################################
# Seam gaps
########################################################################################################################
@dataclass(frozen=True)
class SeamDescription:
    kind: str  # "zone", "belt", "cone" or "control"
    domain: str  # "sphere" or "ball"
    n: int
    r: float = 1.0
    epsilon: float = 0.0
    samples: int = 1000
    seed: int = 0


def _spherical(rho: np.ndarray, z_over_rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    z = rho * z_over_rho
    planar = np.sqrt(np.clip(rho ** 2 - z ** 2, 0.0, None))
    return np.column_stack([planar * np.cos(theta), planar * np.sin(theta), z])


def seam_pairs(seam: SeamDescription, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Point pairs straddling a seam at distance about delta on each side

    :return: two (M, 3) arrays of partner points
    """
    rng = np.random.default_rng(seam.seed)
    m = seam.samples
    r, eps, n = seam.r, seam.epsilon, seam.n
    rho = np.full(m, r) if seam.domain == "sphere" else r * rng.uniform(0.2, 0.95, m)
    if seam.kind == "zone":
        plane = rng.integers(0, n, m) * 2 * np.pi / n
        cos_phi = rng.uniform(-0.95, 0.95, m)
        planar = rho * np.sqrt(1 - cos_phi ** 2)
        offset = delta / planar
        return _spherical(rho, cos_phi, plane - offset), _spherical(rho, cos_phi, plane + offset)
    if seam.kind in ("belt", "cone"):
        theta = rng.uniform(0, 2 * np.pi, m)
        side = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        level = side * eps
        return (_spherical(rho, level - delta / rho, theta), _spherical(rho, level + delta / rho, theta))
    theta_span = 2 * np.pi / n
    theta = (rng.integers(0, n, m) + rng.uniform(0.25, 0.75, m)) * theta_span
    if eps > 0:
        level = rng.uniform(-0.5, 0.5, m) * eps
    else:
        level = np.where(rng.random(m) < 0.5, -1.0, 1.0) * rng.uniform(0.3, 0.7, m)
    return (_spherical(rho, level - delta / rho, theta), _spherical(rho, level + delta / rho, theta))


def seam_gap(mapping: Callable[[np.ndarray], Union[np.ndarray, tuple]], seam: SeamDescription,
             delta: float) -> float:
    """
    Largest image distance between partner points on both sides of a seam

    :param mapping: map of an (M, 3) array; a tuple result is reduced to its first element
    :param seam: which seam to straddle and where
    :param delta: offset from the seam, at most 1e-6 * r
    :return: max distance between the images of partners
    """
    first, second = seam_pairs(seam, delta)
    image_1, image_2 = mapping(first), mapping(second)
    if isinstance(image_1, tuple):
        image_1, image_2 = image_1[0], image_2[0]
    return float(np.max(np.linalg.norm(image_1 - image_2, axis=1)))


def reports_to_json_ready(reports: List[VerificationReport]) -> List[dict]:
    return [report.to_dict() for report in reports]
