from src.KnMaps_Core import PolyhedronSpec, Region, epsilon_max
from src.KnMaps_SphereMap import forward_array, invert_array, fundamental_form
from src.KnMaps_BallMap import (make_volume_spec, admissible_epsilons, admissibility_gap, ball_to_poly_array,
                                poly_to_ball_array, jacobian_fd, jacobian_closed_form, VolumeSpec)
from src.KnMaps_Grids import (healpix_residuals, build_ball_grid, tetra_contains, tetra_surface_points,
                              tetra_volume)
from src.KnMaps_Verify import (VerificationReport, planar_polygon_area, monte_carlo_volume, seam_gap,
                               SeamDescription)
from src.KnMaps_HelperFuncs_FileOps import load_json_logic
from typing import Callable, Dict, List, Optional, Tuple
import logging
import numpy as np


########################################################################################################################
# PREFACE
# The verification suites behind `verify`. Each suite draws its defaults (sample counts, seeds, tolerances) from
# JSON_LOGIC/VerificationSuites.json and returns a list of VerificationReport objects, one per check. Randomness comes
# from seeded numpy generators only, so a suite run is reproducible for fixed flags.
########################################################################################################################
logger = logging.getLogger("KnMaps.VerifySuites")

SUITE_NAMES = ["area", "volume", "jacobian", "seams", "healpix"]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _valid_epsilons(n: int, candidates: List[float]) -> List[float]:
    return [eps for eps in candidates if eps < epsilon_max(n)]


########################################################################################################################
# Independent geometry helpers
########################################################################################################################
def solid_halfspaces(n: int, rho: float, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Outward face normals and offsets of the solid K_n(rho, eps), from its vertices alone

    :return: (F, 3) normals and (F,) offsets; x is inside iff normals @ x <= offsets
    """
    half_angle = np.pi / n
    R = np.pi * rho / (n * np.sin(half_angle))
    apothem = R * np.cos(half_angle)
    apex = epsilon * rho + np.sqrt(4 * (1 - epsilon) ** 2 * rho ** 2 - apothem ** 2)
    angles = 2 * np.pi * np.arange(n + 1) / n
    rim = np.column_stack([R * np.cos(angles), R * np.sin(angles)])
    faces = []
    for i in range(n):
        top_0, top_1 = np.append(rim[i], epsilon * rho), np.append(rim[i + 1], epsilon * rho)
        bot_0, bot_1 = np.append(rim[i], -epsilon * rho), np.append(rim[i + 1], -epsilon * rho)
        faces.append((top_0, top_1, np.array([0.0, 0.0, apex])))
        faces.append((bot_1, bot_0, np.array([0.0, 0.0, -apex])))
        if epsilon > 0:
            faces.append((bot_0, bot_1, top_1))
    normals, offsets = [], []
    for v0, v1, v2 in faces:
        normal = np.cross(v1 - v0, v2 - v0)
        normal /= np.linalg.norm(normal)
        if normal @ v0 < 0:
            normal = -normal
        normals.append(normal)
        offsets.append(normal @ v0)
    return np.array(normals), np.array(offsets)


def inside_solid(points: np.ndarray, halfspaces: Tuple[np.ndarray, np.ndarray], slack: float = 1e-12) -> np.ndarray:
    normals, offsets = halfspaces
    return np.all(points @ normals.T <= offsets * (1 + slack), axis=1)


def _random_directions(rng: np.random.Generator, count: int) -> np.ndarray:
    points = rng.standard_normal((count, 3))
    return points / np.linalg.norm(points, axis=1)[:, None]


def _points_in_region(rng: np.random.Generator, count: int, n: int, epsilon: float, region: Region,
                      radius_range: Tuple[float, float] = (1.0, 1.0)) -> np.ndarray:
    """Points well inside one zone-region: zone-local longitude in the middle 80%, away from the belt circles."""
    width = 2 * np.pi / n
    theta = (rng.integers(0, n, count) + rng.uniform(0.1, 0.9, count)) * width
    if region == Region.Prism:
        cos_phi = rng.uniform(-0.9, 0.9, count) * epsilon
    else:
        cos_phi = region.value * rng.uniform(epsilon + 0.1 * (1 - epsilon), 0.9, count)
    rho = rng.uniform(*radius_range, count)
    planar = rho * np.sqrt(1 - cos_phi ** 2)
    return np.column_stack([planar * np.cos(theta), planar * np.sin(theta), rho * cos_phi])


def _regions_for(epsilon: float) -> List[Region]:
    return [Region.PyramidPlus, Region.Prism, Region.PyramidMinus] if epsilon > 0 else \
        [Region.PyramidPlus, Region.PyramidMinus]


########################################################################################################################
# Suites
########################################################################################################################
def suite_area(config: dict, n_values: List[int], samples: int, seed: int) -> List[VerificationReport]:
    reports = []
    for n in n_values:
        for eps in _valid_epsilons(n, config["epsilon_values"]):
            spec = PolyhedronSpec(n, 1.0, eps)
            tag = f"n={n}/eps={_fmt(eps)}"
            rng = np.random.default_rng([seed, n, int(round(eps * 1e6))])

            # Parallel/meridian cells inside one zone-region
            regions = _regions_for(eps)
            width = spec.zone_width
            chosen = rng.integers(0, len(regions), samples)
            zone = rng.integers(0, n, samples)
            theta_1 = (zone + 0.8 * rng.random(samples)) * width
            theta_2 = theta_1 + width * rng.uniform(0.1, 0.2, samples)
            lower = np.array([{1: eps, 0: -eps, -1: -1.0}[regions[c].value] for c in chosen])
            span = np.array([{1: 1 - eps, 0: 2 * eps, -1: 1 - eps}[regions[c].value] for c in chosen])
            cos_2 = lower + span * 0.8 * rng.random(samples)
            cos_1 = cos_2 + span * rng.uniform(0.1, 0.2, samples)
            corners = []
            for cos_phi, theta in ((cos_1, theta_1), (cos_1, theta_2), (cos_2, theta_2), (cos_2, theta_1)):
                planar = np.sqrt(np.clip(1 - cos_phi ** 2, 0.0, None))
                corners.append(np.column_stack([planar * np.cos(theta), planar * np.sin(theta), cos_phi]))
            images = forward_array(np.vstack(corners), spec)[0].reshape(4, samples, 3)
            expected = (theta_2 - theta_1) * (cos_1 - cos_2)
            worst = 0.0
            for m in range(samples):
                area = planar_polygon_area(images[:, m, :], 1.0)
                worst = max(worst, abs(area - expected[m]) / expected[m])
            reports.append(VerificationReport.judge(f"area/cells/{tag}", worst, 0.0, config["area_rtol"],
                                                    samples, seed))

            # First fundamental form: determinant identity and finite differences
            count = max(1, samples // 10)
            i = rng.integers(0, n, count)
            theta = (i + rng.uniform(0.1, 0.9, count)) * width
            cos_phi = rng.uniform(eps + 0.05 * (1 - eps), 0.95, count)
            phi = np.arccos(cos_phi)
            E, F, G = fundamental_form(phi, theta, spec, i)
            identity = np.max(np.abs(E * G - F ** 2 - np.sin(phi) ** 2) / np.sin(phi) ** 2)
            reports.append(VerificationReport.judge(f"area/form_identity/{tag}", identity, 0.0, config["form_rtol"],
                                                    count, seed))
            h = 1e-6

            def surface(ph: np.ndarray, th: np.ndarray) -> np.ndarray:
                return forward_array(np.column_stack([np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th),
                                                      np.cos(ph)]), spec)[0]

            d_phi = (surface(phi + h, theta) - surface(phi - h, theta)) / (2 * h)
            d_theta = (surface(phi, theta + h) - surface(phi, theta - h)) / (2 * h)
            fd = np.column_stack([np.sum(d_phi ** 2, axis=1), np.sum(d_phi * d_theta, axis=1),
                                  np.sum(d_theta ** 2, axis=1)])
            closed = np.column_stack([E, F, G])
            fd_error = np.max(np.abs(fd - closed) / (E + G)[:, None])
            reports.append(VerificationReport.judge(f"area/form_fd/{tag}", fd_error, 0.0, config["form_fd_tol"],
                                                    count, seed))

            # Roundtrips in both directions
            count = config["roundtrip_samples"]
            on_sphere = _random_directions(rng, count)
            on_surface = forward_array(on_sphere, spec)[0]
            back = invert_array(on_surface, spec)[0]
            again = forward_array(back, spec)[0]
            roundtrip = max(np.max(np.linalg.norm(back - on_sphere, axis=1)),
                            np.max(np.linalg.norm(again - on_surface, axis=1)))
            reports.append(VerificationReport.judge(f"area/roundtrip/{tag}", roundtrip, 0.0,
                                                    config["roundtrip_tol"], count, seed))
    return reports


def _box_image_bounds(box_lo: np.ndarray, box_hi: np.ndarray, vspec: VolumeSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Bounding box of the image of a box, from dense samples of its faces."""
    grid = np.linspace(0, 1, 41)
    uu, vv = np.meshgrid(grid, grid)
    faces = []
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for side in (box_lo[axis], box_hi[axis]):
            pts = np.empty((uu.size, 3))
            pts[:, axis] = side
            pts[:, others[0]] = box_lo[others[0]] + uu.ravel() * (box_hi[others[0]] - box_lo[others[0]])
            pts[:, others[1]] = box_lo[others[1]] + vv.ravel() * (box_hi[others[1]] - box_lo[others[1]])
            faces.append(pts)
    image = ball_to_poly_array(np.vstack(faces), vspec)[0]
    pad = 0.02 * (image.max(axis=0) - image.min(axis=0))
    return image.min(axis=0) - pad, image.max(axis=0) + pad


def _ball_cell_reports(config: dict, vspec: VolumeSpec, tag: str, samples: int, seed: int,
                       nworkers: Optional[int] = None) -> List[VerificationReport]:
    """
    Monte Carlo volumes of sampled ball-side grid cells, counted through the forward map, against the volumes of the
    tetrahedra they map onto
    """
    grid = build_ball_grid(vspec, config["cell_levels"], max_chord=config["cell_max_chord"], nworkers=nworkers)[1]
    rng = np.random.default_rng([seed, vspec.n, int(round(vspec.epsilon * 1e6))])
    chosen = np.sort(rng.choice(len(grid), size=min(config["cells_sampled"], len(grid)), replace=False))
    r = vspec.r
    reports = []
    for idx in chosen:
        cell = grid.cells[int(idx)]
        tet = cell.source
        outline = poly_to_ball_array(tetra_surface_points(tet, config["cell_box_divisions"]), vspec)[0]
        lo = np.maximum(outline.min(axis=0) - 0.02 * r, -r)
        hi = np.minimum(outline.max(axis=0) + 0.02 * r, r)

        def in_cell(pts: np.ndarray, tet=tet) -> np.ndarray:
            hits = np.zeros(len(pts), dtype=bool)
            inside = np.sum(pts ** 2, axis=1) <= r ** 2
            if np.any(inside):
                hits[inside] = tetra_contains(tet, ball_to_poly_array(pts[inside], vspec)[0])
            return hits

        cell_seed = seed + int(idx)
        estimate, stderr = monte_carlo_volume(in_cell, lo, hi, samples, cell_seed, nworkers)
        reports.append(VerificationReport.judge(f"volume/ball_cell/{tag}/{cell.cell_id.label}", estimate,
                                                tetra_volume(tet), config["sigma_multiple"] * stderr, samples,
                                                cell_seed))
    return reports


def suite_volume(config: dict, n_values: List[int], samples: int, seed: int,
                 nworkers: Optional[int] = None) -> List[VerificationReport]:
    reports = []
    k_sigma = config["sigma_multiple"]

    def mc_report(name: str, predicate: Callable, lo, hi, expected: float, mc_seed: int):
        estimate, stderr = monte_carlo_volume(predicate, lo, hi, samples, mc_seed, nworkers)
        reports.append(VerificationReport.judge(name, estimate, expected, k_sigma * stderr, samples, mc_seed))

    mc_report("volume/unit_ball", lambda pts: np.sum(pts ** 2, axis=1) <= 1.0, [-1] * 3, [1] * 3, 4 * np.pi / 3,
              seed)
    box_lo, box_hi = np.array([0.1, -0.2, 0.0]), np.array([0.5, 0.3, 0.4])
    for n in n_values:
        for eps in admissible_epsilons(n):
            vspec = make_volume_spec(n, 1.0, eps)
            tag = f"n={n}/eps={_fmt(eps)}"
            if eps > 0:
                reports.append(VerificationReport.judge(f"volume/root/{tag}", admissibility_gap(n, eps), 0.0,
                                                        config["root_tol"], 1, seed))
            unit_solid = solid_halfspaces(n, 1.0, eps)
            height = eps + vspec.c_eps
            R = np.pi / (n * np.sin(np.pi / n))
            mc_report(f"volume/solid/{tag}", lambda pts, hs=unit_solid: inside_solid(pts, hs),
                      [-R, -R, -height], [R, R, height], vspec.gamma, seed + 1)

            outer = solid_halfspaces(n, vspec.outer_radius, eps)

            def in_box_image(pts: np.ndarray, hs=outer, vs=vspec) -> np.ndarray:
                hits = np.zeros(len(pts), dtype=bool)
                inside = inside_solid(pts, hs)
                if np.any(inside):
                    pre = poly_to_ball_array(pts[inside], vs)[0]
                    hits[inside] = np.all((pre >= box_lo) & (pre <= box_hi), axis=1)
                return hits

            lo, hi = _box_image_bounds(box_lo, box_hi, vspec)
            mc_report(f"volume/box_image/{tag}", in_box_image, lo, hi, float(np.prod(box_hi - box_lo)), seed + 2)

            rng = np.random.default_rng([seed, n, int(round(eps * 1e6))])
            count = max(1, samples // 10)
            ball = _random_directions(rng, count) * rng.random(count)[:, None] ** (1 / 3)
            back = poly_to_ball_array(ball_to_poly_array(ball, vspec)[0], vspec)[0]
            reports.append(VerificationReport.judge(f"volume/roundtrip/{tag}",
                                                    float(np.max(np.linalg.norm(back - ball, axis=1))), 0.0,
                                                    config["roundtrip_tol"], count, seed))
            reports.extend(_ball_cell_reports(config, vspec, tag, samples, seed + 3, nworkers))
    return reports


def _jacobian_errors(vspec: VolumeSpec, region: Region, count: int, rng: np.random.Generator,
                     target: float) -> float:
    points = _points_in_region(rng, count, vspec.n, vspec.epsilon, region, (0.3, 0.9))

    def mapping(pts: np.ndarray):
        return ball_to_poly_array(pts, vspec, unchecked=True)

    return max(abs(jacobian_fd(mapping, p, scale=vspec.r) - target) for p in points)


def suite_jacobian(config: dict, n_values: List[int], samples: int, seed: int) -> List[VerificationReport]:
    reports = []
    for n in n_values:
        for eps in admissible_epsilons(n):
            vspec = make_volume_spec(n, 1.0, eps)
            for region in _regions_for(eps):
                rng = np.random.default_rng([seed, n, int(round(eps * 1e6)), region.value + 1])
                worst = _jacobian_errors(vspec, region, samples, rng, 1.0)
                reports.append(VerificationReport.judge(f"jacobian/unit/n={n}/eps={_fmt(eps)}/{region.name}",
                                                        worst, 0.0, config["tol"], samples, seed))
    for n, eps in config["non_admissible"]:
        if n not in n_values:
            continue
        vspec = make_volume_spec(n, 1.0, eps)
        for region in _regions_for(eps):
            rng = np.random.default_rng([seed, n, int(round(eps * 1e6)), region.value + 1])
            worst = _jacobian_errors(vspec, region, samples, rng, jacobian_closed_form(vspec, region))
            reports.append(VerificationReport.judge(f"jacobian/closed_form/n={n}/eps={_fmt(eps)}/{region.name}",
                                                    worst, 0.0, config["tol"], samples, seed))
    return reports


def suite_seams(config: dict, n_values: List[int], samples: int, seed: int) -> List[VerificationReport]:
    reports = []
    delta = config["delta"]
    for n in n_values:
        for eps in _valid_epsilons(n, [0.0, 1 / 3]):
            spec = PolyhedronSpec(n, 1.0, eps)
            for kind in ("zone", "belt", "control"):
                seam = SeamDescription(kind, "sphere", n, 1.0, eps, samples, seed)
                gap = seam_gap(lambda pts: forward_array(pts, spec)[0], seam, delta)
                tol = config["control_tol"] if kind == "control" else config["tol"]
                reports.append(VerificationReport.judge(f"seams/sphere/{kind}/n={n}/eps={_fmt(eps)}", gap, 0.0, tol,
                                                        samples, seed))
        for eps in admissible_epsilons(n):
            vspec = make_volume_spec(n, 1.0, eps)
            kinds = ("zone", "cone", "control") if eps > 0 else ("zone", "control")
            for kind in kinds:
                seam = SeamDescription(kind, "ball", n, 1.0, eps, samples, seed)
                gap = seam_gap(lambda pts: ball_to_poly_array(pts, vspec)[0], seam, delta)
                tol = config["control_tol"] if kind == "control" else config["tol"]
                reports.append(VerificationReport.judge(f"seams/ball/{kind}/n={n}/eps={_fmt(eps)}", gap, 0.0, tol,
                                                        samples, seed))
    return reports


def suite_healpix(config: dict, samples: int, seed: int) -> List[VerificationReport]:
    reports = []
    for k in config["k_values"]:
        worst = max(healpix_residuals(k, ell, samples=samples) for ell in range(k + 1))
        reports.append(VerificationReport.judge(f"healpix/k={k}", worst, 0.0, config["tol"], samples, seed))
    return reports


def run_suite(name: str, n: Optional[int] = None, samples: Optional[int] = None, seed: Optional[int] = None,
              nworkers: Optional[int] = None) -> List[VerificationReport]:
    """
    Runs one verification suite, or all of them

    :param name: one of SUITE_NAMES or "all"
    :param n: restrict the suite to this number of prism faces
    :param samples: override of the suite's sample count
    :param seed: override of the suite's seed
    :param nworkers: worker threads for Monte Carlo
    :return: the reports, in a fixed order
    """
    if name == "all":
        return [report for suite in SUITE_NAMES for report in run_suite(suite, n, samples, seed, nworkers)]
    suites: Dict[str, dict] = load_json_logic("VerificationSuites")
    config = suites[name]
    samples = config["samples"] if samples is None else samples
    seed = config["seed"] if seed is None else seed
    n_values = config.get("n_values", []) if n is None else [n]
    logger.info(f"Running suite {name} with samples={samples}, seed={seed}")
    if name == "area":
        return suite_area(config, n_values, samples, seed)
    if name == "volume":
        return suite_volume(config, n_values, samples, seed, nworkers)
    if name == "jacobian":
        return suite_jacobian(config, n_values, samples, seed)
    if name == "seams":
        return suite_seams(config, n_values, samples, seed)
    return suite_healpix(config, samples, seed)
