from src.KnMaps_CLI import main, EXIT_OK, EXIT_DATA, EXIT_USAGE, ProjectDirection
from src.KnMaps_SphereMap import MapDirection
from json import loads
import numpy as np
import pandas as pd
import pytest


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_params(capsys):
    code, out, _ = run(capsys, "params", "--n", "4", "--r", "1", "--epsilon", "0")
    assert code == EXIT_OK
    payload = loads(out)
    assert payload["b_n"] == pytest.approx(1.8393341, abs=1e-6)
    assert payload["admissible"] is True

    code, out, _ = run(capsys, "params", "--n", "4", "--epsilon", "0.20861")
    assert code == EXIT_OK
    payload = loads(out)
    assert payload["admissible"] is True
    assert payload["tangent_sphere"] is True
    assert payload["admissible_epsilon"] == pytest.approx(0.20861, abs=1e-5)

    code, out, _ = run(capsys, "params", "--n", "3", "--p", "1")
    assert loads(out)["epsilon"] == 0.5


def test_params_usage_errors(capsys):
    code, _, err = run(capsys, "params", "--n", "3", "--epsilon", "0.9")
    assert code == EXIT_USAGE
    assert "0.9" in err
    assert run(capsys, "params", "--n", "4", "--epsilon", "0.1", "--p", "1")[0] == EXIT_USAGE
    assert run(capsys, "params", "--n", "2")[0] == EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE


def test_project_skips_bad_rows(capsys, tmp_path):
    source = tmp_path / "sphere.csv"
    source.write_text("x,y,z\n0,0,1\n0.6,0.8,0\n0,0,2\n1,0\n-0.6,0,-0.8\n")
    target = tmp_path / "poly.csv"
    code, _, err = run(capsys, "project", "--direction", "sphere-to-poly", "--n", "4", "--epsilon", "0.25",
                       "--input", str(source), "--output", str(target))
    assert code == EXIT_DATA
    assert f"{source}:4" in err and f"{source}:5" in err
    result = pd.read_csv(target)
    assert list(result.columns) == ["X", "Y", "Z", "region", "zone"]
    assert result["region"].tolist() == ["P+", "E", "P-"]
    assert result["zone"].tolist() == [0, 0, 2]

    back = tmp_path / "back.csv"
    result[["X", "Y", "Z"]].to_csv(back, index=False, float_format="%.17g")
    code, out, _ = run(capsys, "project", "--direction", "poly-to-sphere", "--n", "4", "--epsilon", "0.25",
                       "--input", str(back))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "x,y,z,region,zone"
    first = [float(v) for v in lines[1].split(",")[:3]]
    assert first == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)


def test_project_ball(capsys, tmp_path):
    source = tmp_path / "ball.csv"
    source.write_text("0.1,0.2,0.3\n0,0,0\n0.5,-0.5,0.1\n")
    target = tmp_path / "solid.csv"
    code, _, _ = run(capsys, "project", "--direction", "ball-to-poly", "--n", "5", "--epsilon", "0.2979",
                     "--input", str(source), "--output", str(target))
    assert code == EXIT_OK
    assert len(pd.read_csv(target)) == 3
    solid = tmp_path / "solid_xyz.csv"
    pd.read_csv(target)[["X", "Y", "Z"]].to_csv(solid, index=False, float_format="%.17g")
    back = tmp_path / "back.csv"
    code, _, _ = run(capsys, "project", "--direction", "poly-to-ball", "--n", "5", "--epsilon", "0.2979",
                     "--input", str(solid), "--output", str(back))
    assert code == EXIT_OK
    restored = pd.read_csv(back)[["x", "y", "z"]].to_numpy()
    assert np.allclose(restored, np.loadtxt(source, delimiter=","), rtol=0, atol=1e-8)
    code, _, _ = run(capsys, "project", "--direction", "ball-to-poly", "--n", "6", "--epsilon", "0.3",
                     "--input", str(source))
    assert code == EXIT_USAGE


def test_project_unreadable_input(capsys, tmp_path):
    code, _, _ = run(capsys, "project", "--direction", "sphere-to-poly", "--n", "4", "--input",
                     str(tmp_path / "nothing.csv"))
    assert code == EXIT_USAGE


def test_healpix_sphere_grid(capsys):
    code, out, _ = run(capsys, "grid", "--n", "4", "--p", "2", "--k", "1", "--carrier", "sphere", "--format", "json")
    assert code == EXIT_OK
    payload = loads(out)
    assert len(payload["cells"]) == 12
    assert np.allclose([cell["measure"] for cell in payload["cells"]], np.pi / 3, atol=1e-6)
    assert "carrier=sphere" in payload["header"]


def test_poly_grid_obj(capsys):
    code, out, _ = run(capsys, "grid", "--n", "6", "--p", "1", "--k", "2", "--carrier", "poly", "--format", "obj")
    assert code == EXIT_OK
    assert sum(line.startswith("# cell ") for line in out.splitlines()) == 6 * 2 * 4


def test_grid_csv_and_determinism(capsys):
    argv = ["grid", "--n", "3", "--p", "1", "--carrier", "sphere", "--format", "csv", "--max-chord", "0.01"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == EXIT_OK
    assert first[1] == second[1]
    body = [line for line in first[1].splitlines() if not line.startswith("#")]
    assert body[0] == "cell_id,part,seq,x,y,z"


def test_unrealizable_grids(capsys):
    assert run(capsys, "grid", "--n", "3", "--p", "9")[0] == EXIT_USAGE
    assert run(capsys, "grid", "--n", "6", "--p", "3", "--k", "2", "--carrier", "poly")[0] == EXIT_USAGE
    assert run(capsys, "grid", "--n", "4", "--p", "0")[0] == EXIT_USAGE


def test_ball_grid(capsys):
    code, out, _ = run(capsys, "ball-grid", "--n", "4", "--epsilon", "auto", "--levels", "1", "--format", "obj",
                       "--max-chord", "0.05")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert "epsilon=0.2086" in lines[0]
    assert sum(line.startswith("# cell ") for line in lines) == 64

    code, out, _ = run(capsys, "ball-grid", "--n", "5", "--levels", "0", "--carrier", "ball", "--format", "json",
                       "--max-chord", "0.05")
    assert code == EXIT_OK
    assert len(loads(out)["cells"]) == 20

    assert run(capsys, "ball-grid", "--n", "6", "--epsilon", "0.3")[0] == EXIT_USAGE
    assert run(capsys, "ball-grid", "--n", "4", "--epsilon", "lots")[0] == EXIT_USAGE


def test_solve_epsilon(capsys):
    code, out, _ = run(capsys, "solve-epsilon", "--n", "5")
    assert code == EXIT_OK
    assert loads(out)["admissible_epsilons"] == pytest.approx([0.0, 0.29791, 0.50209], abs=1e-5)
    assert run(capsys, "solve-epsilon", "--n", "1")[0] == EXIT_USAGE


def test_verify_healpix(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "healpix")
    assert code == EXIT_OK
    assert all(report["passed"] for report in loads(out))


def test_verify_is_deterministic(capsys):
    argv = ["verify", "--suite", "area", "--n", "3", "--samples", "100", "--seed", "7"]
    first, second = run(capsys, *argv), run(capsys, *argv)
    assert first[0] == EXIT_OK
    assert first[1] == second[1]


def test_log_file(capsys, tmp_path):
    log = tmp_path / "run.log"
    code, _, _ = run(capsys, "--log-file", str(log), "-v", "grid", "--n", "4", "--p", "1")
    assert code == EXIT_OK
    assert "KnMaps.Grids - INFO" in log.read_text()


def test_project_directions():
    assert {d.value for d in MapDirection} == {"sphere-to-poly", "poly-to-sphere"}
    assert {d.value for d in ProjectDirection} >= {d.value for d in MapDirection}
    assert ProjectDirection("poly-to-ball") == ProjectDirection.PolyToBall
