from src.KnMaps_Core import PolyhedronSpec, Region, epsilon_max
from src.KnMaps_SphereMap import MapDirection, forward_array, invert_array
from src.KnMaps_BallMap import (make_volume_spec, admissible_epsilons, admissibility_gap, ball_to_poly_array,
                                poly_to_ball_array, tangent_sphere_check)
from src.KnMaps_Grids import (Grid, MAX_CHORD, epsilon_for, build_surface_grid, grid_to_sphere,
                              build_sphere_grid, build_ball_grid)
from src.KnMaps_Errors import KnMapsError, InvalidSpec, InvalidEpsilon, NotAdmissible, UsageError
from src.KnMaps_HelperFuncs_FileOps import read_xyz_table, write_csv, write_json, write_obj
from src.KnMaps_Startup import configure_logging
from dataclasses import asdict
from enum import Enum
from typing import Callable, List, Optional, Tuple
import argparse
import logging
import numpy as np
import pandas as pd
import sys

########################################################################################################################
# PREFACE
# Command-line surface. Results go to standard output (or --output), diagnostics to stderr and the optional log file.
# Exit codes:
#   0 success
#   1 data error: bad rows in a point table, failed verification checks
#   2 usage or configuration error: bad flags, invalid (n, r, eps), non-admissible eps for a ball operation
########################################################################################################################
logger = logging.getLogger("KnMaps.CLI")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class ProjectDirection(Enum):
    SphereToPoly = MapDirection.SphereToPoly.value
    PolyToSphere = MapDirection.PolyToSphere.value
    BallToPoly = "ball-to-poly"
    PolyToBall = "poly-to-ball"


CONFIG_ERRORS = (InvalidSpec, InvalidEpsilon, NotAdmissible, UsageError)


def _add_shape_args(parser: argparse.ArgumentParser, with_p: bool = True):
    parser.add_argument("--n", type=int, required=True, help="number of prism faces, at least 3")
    parser.add_argument("--r", type=float, default=1.0, help="sphere or ball radius")
    belt = parser.add_mutually_exclusive_group()
    belt.add_argument("--epsilon", type=float, default=None, help="belt fraction eps in [0, eps_max(n))")
    if with_p:
        belt.add_argument("--p", type=int, default=None, help="use eps = p / (p + 1)")


def _add_output_args(parser: argparse.ArgumentParser, formats: Optional[List[str]] = None):
    parser.add_argument("--output", default=None, help="output file; standard output when omitted")
    if formats:
        parser.add_argument("--format", choices=formats, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knmaps", description="Area- and volume-preserving maps between spheres, "
                                                                "balls and the polyhedra K_n(r, eps)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more detail on stderr")
    parser.add_argument("--log-file", default=None, help="also write DEBUG-level logs to this file")
    subparsers = parser.add_subparsers(dest="command", required=True)

    params = subparsers.add_parser("params", help="derived constants of K_n(r, eps)")
    _add_shape_args(params)

    project = subparsers.add_parser("project", help="map a table of points")
    project.add_argument("--direction", required=True, choices=[d.value for d in ProjectDirection])
    _add_shape_args(project)
    project.add_argument("--input", required=True, help=".csv, .txt or .tsv table with columns x, y, z")
    project.add_argument("--unchecked", action="store_true",
                         help="allow a non-admissible eps for ball-to-poly (the map is then not volume preserving)")
    _add_output_args(project)

    grid = subparsers.add_parser("grid", help="equal-area rhombic grid")
    grid.add_argument("--n", type=int, required=True)
    grid.add_argument("--p", type=int, required=True, help="cell rows of the prism; eps = p / (p + 1)")
    grid.add_argument("--k", type=int, default=1, help="subdivision of every base cell into k x k cells")
    grid.add_argument("--r", type=float, default=1.0)
    grid.add_argument("--carrier", choices=["poly", "sphere"], default="poly")
    grid.add_argument("--max-chord", type=float, default=MAX_CHORD, help="largest boundary chord relative to r")
    _add_output_args(grid, ["csv", "obj", "json"])

    ball_grid = subparsers.add_parser("ball-grid", help="equal-volume tetrahedral grid")
    ball_grid.add_argument("--n", type=int, required=True)
    ball_grid.add_argument("--r", type=float, default=1.0)
    ball_grid.add_argument("--epsilon", default="auto", help="'auto' or an admissible eps")
    ball_grid.add_argument("--levels", type=int, default=0, help="centroid refinements of the base tetrahedra")
    ball_grid.add_argument("--carrier", choices=["solid", "ball"], default="solid")
    ball_grid.add_argument("--max-chord", type=float, default=MAX_CHORD)
    _add_output_args(ball_grid, ["csv", "obj", "json"])

    solve = subparsers.add_parser("solve-epsilon", help="admissible eps values for V_n")
    solve.add_argument("--n", type=int, required=True)

    verify = subparsers.add_parser("verify", help="numerical verification suites")
    verify.add_argument("--suite", choices=["area", "volume", "jacobian", "seams", "healpix", "all"], default="all")
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo; defaults to the cores")
    _add_output_args(verify)
    return parser


def _epsilon_from(args: argparse.Namespace) -> float:
    if getattr(args, "p", None) is not None:
        return epsilon_for(args.p)
    return 0.0 if args.epsilon is None else args.epsilon


########################################################################################################################
# Subcommands
########################################################################################################################
def cmd_params(args: argparse.Namespace) -> int:
    spec = PolyhedronSpec(args.n, args.r, _epsilon_from(args))
    vspec = make_volume_spec(spec.n, spec.r, spec.epsilon)
    payload = {"n": spec.n, "r": spec.r, "epsilon": spec.epsilon, "epsilon_max": epsilon_max(spec.n)}
    payload.update({key: float(value) for key, value in asdict(spec.derived).items()})
    payload.update({"c_eps": vspec.c_eps, "gamma": vspec.gamma, "beta": vspec.beta, "xi": vspec.xi,
                    "admissible": vspec.admissible, "admissible_epsilon": vspec.epsilon if vspec.admissible else None,
                    "tangent_sphere": tangent_sphere_check(vspec) if vspec.admissible else False})
    write_json(payload)
    return EXIT_OK


def _map_with_row_errors(mapping: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]],
                         points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray,
                                               List[Tuple[int, str]]]:
    """
    Maps the points, dropping the rows the mapping rejects one at a time

    :return: kept row positions, coords, regions, zones and (position, message) pairs for the rejected rows
    """
    keep = np.arange(len(points))
    rejected = []
    while len(keep) > 0:
        try:
            coords, regions, zones = mapping(points[keep])
            return keep, coords, regions, zones, rejected
        except KnMapsError as map_err:
            if isinstance(map_err, CONFIG_ERRORS) or "index" not in map_err.details:
                raise
            position = int(keep[map_err.details["index"]])
            rejected.append((position, str(map_err)))
            keep = np.delete(keep, map_err.details["index"])
    return keep, np.empty((0, 3)), np.empty(0, dtype=int), np.empty(0, dtype=int), rejected


def cmd_project(args: argparse.Namespace) -> int:
    direction = ProjectDirection(args.direction)
    epsilon = _epsilon_from(args)
    if direction in (ProjectDirection.SphereToPoly, ProjectDirection.PolyToSphere):
        spec = PolyhedronSpec(args.n, args.r, epsilon)
        mapping = (lambda pts: forward_array(pts, spec)) if direction == ProjectDirection.SphereToPoly else \
            (lambda pts: invert_array(pts, spec))
        header = ["X", "Y", "Z"] if direction == ProjectDirection.SphereToPoly else ["x", "y", "z"]
    else:
        vspec = make_volume_spec(args.n, args.r, epsilon)
        if not vspec.admissible and not (args.unchecked and direction == ProjectDirection.BallToPoly):
            raise NotAdmissible(n=vspec.n, epsilon=vspec.epsilon, gap=admissibility_gap(vspec.n, vspec.epsilon),
                                roots=admissible_epsilons(vspec.n))
        mapping = (lambda pts: ball_to_poly_array(pts, vspec, unchecked=args.unchecked)) \
            if direction == ProjectDirection.BallToPoly else (lambda pts: poly_to_ball_array(pts, vspec))
        header = ["X", "Y", "Z"] if direction == ProjectDirection.BallToPoly else ["x", "y", "z"]

    table, bad_rows = read_xyz_table(args.input)
    points = table[["x", "y", "z"]].to_numpy(dtype=float)
    keep, coords, regions, zones, rejected = _map_with_row_errors(mapping, points)
    lines = table["line"].to_numpy()
    for line, reason in bad_rows:
        logger.warning(f"{args.input}:{line}: skipped, {reason}")
    for position, message in rejected:
        logger.warning(f"{args.input}:{lines[position]}: skipped, {message}")

    result = pd.DataFrame(coords, columns=header)
    result["region"] = [Region(int(code)).short for code in regions]
    result["zone"] = zones.astype(int)
    write_csv(result, args.output)
    n_bad = len(bad_rows) + len(rejected)
    logger.info(f"Mapped {len(keep)} points {direction.value}; {n_bad} rows rejected")
    return EXIT_DATA if n_bad > 0 else EXIT_OK


def _grid_header(grid: Grid, **fields) -> str:
    spec = grid.spec
    values = {"carrier": grid.carrier.value, "n": spec.n, "r": spec.r, "epsilon": repr(float(spec.epsilon))}
    values.update(fields)
    values["cells"] = len(grid)
    return " ".join(f"{key}={value}" for key, value in values.items())


def write_grid(grid: Grid, fmt: str, target, header: str):
    """
    Writes a grid as csv (cell_id, part, seq, x, y, z per sample), obj (one polyline per boundary piece) or json
    """
    if fmt == "obj":
        write_obj([(cell.cell_id.label, cell.boundary) for cell in grid.cells], target, header)
        return
    if fmt == "csv":
        frames = []
        for cell in grid.cells:
            for part, line in enumerate(cell.boundary):
                frame = pd.DataFrame(line, columns=["x", "y", "z"])
                frame.insert(0, "seq", np.arange(len(line)))
                frame.insert(0, "part", part)
                frame.insert(0, "cell_id", cell.cell_id.label)
                frames.append(frame)
        write_csv(pd.concat(frames, ignore_index=True), target, preamble=header)
        return
    payload = {"header": header,
               "cells": [{"id": cell.cell_id.label, "region": cell.cell_id.region.short, "face": cell.cell_id.face,
                          "row": cell.cell_id.row, "col": cell.cell_id.col, "level": cell.cell_id.level,
                          "measure": float(cell.measure), "boundary": [line.tolist() for line in cell.boundary]}
                         for cell in grid.cells]}
    write_json(payload, target)


def cmd_grid(args: argparse.Namespace) -> int:
    if args.n < 3:
        raise InvalidSpec(n=args.n, r=args.r)
    if args.k < 1 or args.p < 1:
        raise UsageError(detail=f"--p and --k must be positive integers, got p={args.p}, k={args.k}")
    if args.carrier == "poly":
        grid = build_surface_grid(args.n, args.p, args.k, args.r)
    else:
        epsilon = epsilon_for(args.p)
        if epsilon < epsilon_max(args.n):
            grid = grid_to_sphere(build_surface_grid(args.n, args.p, args.k, args.r), max_chord=args.max_chord)
        else:
            logger.info(f"p={args.p} exceeds the polyhedron bound for n={args.n}; sampling the sphere grid directly")
            grid = build_sphere_grid(args.n, args.p, args.k, args.r, max_chord=args.max_chord)
    header = _grid_header(grid, p=args.p, k=args.k)
    write_grid(grid, args.format, args.output, header)
    return EXIT_OK


def cmd_ball_grid(args: argparse.Namespace) -> int:
    if args.epsilon == "auto":
        positive = [eps for eps in admissible_epsilons(args.n) if eps > 0]
        if not positive:
            logger.warning(f"No positive admissible eps for n={args.n}; using eps=0")
        epsilon = positive[0] if positive else 0.0
    else:
        try:
            epsilon = float(args.epsilon)
        except ValueError:
            raise UsageError(detail=f"--epsilon must be 'auto' or a number, got {args.epsilon!r}")
    vspec = make_volume_spec(args.n, args.r, epsilon)
    solid, ball = build_ball_grid(vspec, args.levels, max_chord=args.max_chord)
    grid = solid if args.carrier == "solid" else ball
    header = _grid_header(grid, levels=args.levels, xi=repr(vspec.xi))
    write_grid(grid, args.format, args.output, header)
    return EXIT_OK


def cmd_solve_epsilon(args: argparse.Namespace) -> int:
    if args.n < 3:
        raise InvalidSpec(n=args.n, r=1.0)
    write_json({"n": args.n, "epsilon_max": epsilon_max(args.n), "admissible_epsilons": admissible_epsilons(args.n)})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from src.KnMaps_VerifySuites import run_suite
    from src.KnMaps_Verify import reports_to_json_ready
    if args.n is not None and args.n < 3:
        raise InvalidSpec(n=args.n, r=1.0)
    reports = run_suite(args.suite, n=args.n, samples=args.samples, seed=args.seed, nworkers=args.workers)
    write_json(reports_to_json_ready(reports), args.output)
    failed = [report.check for report in reports if not report.passed]
    for check in failed:
        logger.warning(f"Verification check failed: {check}")
    return EXIT_DATA if failed else EXIT_OK


COMMANDS = {"params": cmd_params, "project": cmd_project, "grid": cmd_grid, "ball-grid": cmd_ball_grid,
            "solve-epsilon": cmd_solve_epsilon, "verify": cmd_verify}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one subcommand

    :param argv: arguments without the program name; sys.argv[1:] when omitted
    :return: the process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as parse_exit:
        return EXIT_OK if parse_exit.code in (0, None) else EXIT_USAGE
    configure_logging(args.verbose, args.log_file)
    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as config_err:
        logger.error(str(config_err))
        return EXIT_USAGE
    except KnMapsError as data_err:
        logger.error(str(data_err))
        return EXIT_DATA
