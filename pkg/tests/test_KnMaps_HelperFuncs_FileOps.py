from src.KnMaps_HelperFuncs_FileOps import (load_json_logic, read_xyz_table, write_csv, write_json, write_obj,
                                            robust_read_csv)
from src.KnMaps_Errors import UsageError, listing_message, DomainError, load_errors_listing
from io import StringIO
import numpy as np
import pandas as pd
import pytest


def test_json_logic_files_load():
    suites = load_json_logic("VerificationSuites")
    assert set(suites) == {"area", "volume", "jacobian", "seams", "healpix"}
    assert load_json_logic("ErrorsListing.json")["NotAdmissible"][0]


def test_error_messages_come_from_the_listing():
    message = listing_message("UsageError", detail="bad flag")
    assert "bad flag" in message
    err = DomainError(index=3, detail="off the sphere")
    assert err.details["index"] == 3
    assert "off the sphere" in str(err)


def test_errors_listing_is_the_json_logic_file():
    assert load_errors_listing() is load_json_logic("ErrorsListing")


def test_read_xyz_table(tmp_path):
    target = tmp_path / "points.csv"
    target.write_text("x,y,z\n1,0,0\n\n0,1,0,5\nfoo,0,0\n0,0,1\n")
    table, bad = read_xyz_table(target)
    assert table["line"].tolist() == [2, 6]
    assert table[["x", "y", "z"]].to_numpy().tolist() == [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    assert [line for line, _ in bad] == [4, 5]
    assert "found 4" in bad[0][1]


def test_read_xyz_table_without_header(tmp_path):
    target = tmp_path / "points.tsv"
    target.write_text("0.5\t0.5\t0.7071067811865476\n-1\t0\t0\n")
    table, bad = read_xyz_table(target)
    assert table["line"].tolist() == [1, 2]
    assert bad == []


def test_unreadable_tables(tmp_path):
    with pytest.raises(UsageError):
        read_xyz_table(tmp_path / "missing.csv")
    wrong = tmp_path / "points.xlsx"
    wrong.write_text("")
    with pytest.raises(UsageError):
        read_xyz_table(wrong)
    assert robust_read_csv(wrong) is None


def test_writers_are_exact():
    stream = StringIO()
    write_csv(pd.DataFrame({"X": [0.1, 1 / 3], "region": ["P+", "E"]}), stream, preamble="n=4\nr=1")
    lines = stream.getvalue().splitlines()
    assert lines[:3] == ["# n=4", "# r=1", "X,region"]
    assert float(lines[4].split(",")[0]) == 1 / 3

    stream = StringIO()
    write_json({"a": 1 / 3}, stream)
    assert stream.getvalue() == '{\n   "a": 0.3333333333333333\n}\n'


def test_write_obj():
    stream = StringIO()
    square = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    write_obj([("P+/0/0/0/1", [square]), ("E/1/0/0/1", [square, square])], stream, header="carrier=poly")
    text = stream.getvalue().splitlines()
    assert text[0] == "# carrier=poly"
    assert text[1] == "# cell P+/0/0/0/1"
    assert sum(line.startswith("v ") for line in text) == 12
    assert [line for line in text if line.startswith("l ")] == ["l 1 2 3 4", "l 5 6 7 8", "l 9 10 11 12"]
