from src.KnMaps_VerifySuites import run_suite, solid_halfspaces, inside_solid, SUITE_NAMES, _ball_cell_reports
from src.KnMaps_HelperFuncs_FileOps import load_json_logic
from src.KnMaps_BallMap import make_volume_spec
import numpy as np
import pytest


def assert_all_pass(reports):
    failed = [(r.check, r.measured, r.expected, r.tolerance) for r in reports if not r.passed]
    assert not failed, failed


def test_halfspaces_describe_the_solid():
    vspec = make_volume_spec(4, 1.0, 0.20861)
    normals, offsets = solid_halfspaces(4, 1.0, vspec.epsilon)
    assert normals.shape == (12, 3)
    # every face is tangent to the unit sphere when eps is admissible
    assert np.allclose(offsets, offsets[0], rtol=1e-9)
    apex = np.array([[0.0, 0.0, vspec.epsilon + vspec.c_eps]])
    assert inside_solid(apex, (normals, offsets))[0]
    assert not inside_solid(apex * 1.01, (normals, offsets))[0]
    assert len(solid_halfspaces(3, 1.0, 0.0)[0]) == 6


def test_healpix_suite():
    reports = run_suite("healpix")
    assert [r.check for r in reports] == ["healpix/k=1", "healpix/k=2", "healpix/k=4"]
    assert_all_pass(reports)


def test_area_suite_is_deterministic():
    first = run_suite("area", n=4, samples=300, seed=7)
    second = run_suite("area", n=4, samples=300, seed=7)
    assert [r.to_dict() for r in first] == [r.to_dict() for r in second]
    # eps = 2/3 exceeds the bound for n = 4
    assert {r.check.split("/")[-1] for r in first} == {"eps=0", "eps=0.333333"}
    assert_all_pass(first)


def test_jacobian_suite_at_both_roots():
    reports = run_suite("jacobian", n=5, samples=25)
    names = [r.check for r in reports]
    assert any("eps=0.297911" in name for name in names)
    assert any("eps=0.502089" in name for name in names)
    assert_all_pass(reports)


def test_jacobian_suite_closed_form():
    reports = run_suite("jacobian", n=4, samples=15)
    assert any(r.check.startswith("jacobian/closed_form/n=4/eps=0.4") for r in reports)
    assert_all_pass(reports)


def test_seams_suite():
    reports = run_suite("seams", n=4, samples=200)
    assert any(r.check.startswith("seams/ball/cone") for r in reports)
    assert_all_pass(reports)


@pytest.mark.slow
def test_volume_suite():
    reports = run_suite("volume", n=4, samples=100000, nworkers=2)
    assert reports[0].check == "volume/unit_ball"
    assert sum(r.check.startswith("volume/solid/") for r in reports) == 3
    assert sum(r.check.startswith("volume/ball_cell/") for r in reports) == 3 * 8
    assert_all_pass(reports)


def test_suite_names():
    assert SUITE_NAMES == ["area", "volume", "jacobian", "seams", "healpix"]


def test_ball_cell_volumes():
    config = load_json_logic("VerificationSuites")["volume"]
    vspec = make_volume_spec(3, 1.0, 0.10522)
    reports = _ball_cell_reports(config, vspec, "n=3", 20000, 5)
    assert len(reports) == config["cells_sampled"]
    assert all(r.check.startswith("volume/ball_cell/n=3/") for r in reports)
    assert_all_pass(reports)


def test_ball_cell_volumes_catch_a_stretched_map(monkeypatch):
    import src.KnMaps_VerifySuites as suites
    straight = suites.ball_to_poly_array

    def stretched(points, vspec):
        solid, regions, zones = straight(points, vspec)
        return 1.1 * solid, regions, zones

    monkeypatch.setattr(suites, "ball_to_poly_array", stretched)
    config = load_json_logic("VerificationSuites")["volume"]
    reports = _ball_cell_reports(config, make_volume_spec(3, 1.0, 0.10522), "n=3", 20000, 5)
    assert not all(r.passed for r in reports)
