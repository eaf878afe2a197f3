from src.KnMaps_Errors import UsageError
from pathlib import Path
from json import load, dumps
from functools import lru_cache
from typing import List, Optional, TextIO, Tuple, Union
import pandas as pd
import numpy as np
import sys


########################################################################################################################
# PREFACE
# File operations: reading point tables, writing CSV/OBJ/JSON results, and loading the JSON_LOGIC configuration files.
# Writers take either a path or an open text stream (standard output by default) and never reorder their input, so
# repeated runs with the same data produce identical bytes.
########################################################################################################################
MAX_COLUMNS = 16
FLOAT_FORMAT = "%.17g"


@lru_cache(maxsize=None)
def load_json_logic(name: str) -> dict:
    """
    Loads one of the configuration files kept in the JSON_LOGIC directory

    :param name: file name with or without the .json suffix
    :return: the parsed contents
    """
    project_dir = Path(__file__).resolve().parent.parent
    file_name = name if name.endswith(".json") else f"{name}.json"
    with open(project_dir / "JSON_LOGIC" / file_name) as json_reader:
        return load(json_reader)


def robust_read_csv(df_path: Union[Path, str], **kwargs) -> Optional[pd.DataFrame]:
    """
    Reads in a dataframe, accounting for common file extensions

    :param df_path: Path object to the table
    :param kwargs: keyword arguments to feed pandas.read_csv
    :return: the loaded in dataframe, or None for an unsupported extension
    """
    if isinstance(df_path, str):
        df_path = Path(df_path)

    if df_path.suffix in [".csv", ".txt"]:
        df = pd.read_csv(df_path, sep=",", **kwargs)
    elif df_path.suffix == ".tsv":
        df = pd.read_csv(df_path, sep="\t", **kwargs)
    else:
        return None
    for column in df.columns:
        if str(column).startswith("Unnamed:"):
            df.drop(column, axis=1, inplace=True)
    return df


def read_xyz_table(path: Union[Path, str]) -> Tuple[pd.DataFrame, List[Tuple[int, str]]]:
    """
    Reads a table of 3D points with an optional header row

    :param path: .csv, .txt or .tsv file with three numeric columns
    :return: a dataframe with columns line, x, y, z (line is the 1-based line in the file) and a list of
    (line, reason) pairs for the rows that could not be read as three numbers
    """
    try:
        raw = robust_read_csv(path, header=None, dtype=str, skip_blank_lines=False, names=list(range(MAX_COLUMNS)))
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as read_err:
        raise UsageError(detail=f"Could not read {path}: {read_err}")
    if raw is None:
        raise UsageError(detail=f"Unsupported table extension for {path}; use .csv, .txt or .tsv")

    raw = raw.dropna(axis=1, how="all")
    raw["line"] = np.arange(1, len(raw) + 1)
    raw = raw[raw.drop(columns="line").notna().any(axis=1)]
    values = raw.drop(columns="line").apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))

    # Header: the first non-blank row has no numbers at all
    if len(values) > 0 and values.iloc[0].isna().all():
        raw, values = raw.iloc[1:], values.iloc[1:]

    bad = []
    good_rows = []
    for (_, raw_row), (_, value_row) in zip(raw.iterrows(), values.iterrows()):
        filled = raw_row.drop(labels="line").notna()
        if filled.sum() != 3 or not filled.iloc[:3].all():
            bad.append((int(raw_row["line"]), f"expected 3 values, found {int(filled.sum())}"))
        elif value_row.iloc[:3].isna().any() or not np.all(np.isfinite(value_row.iloc[:3].to_numpy(dtype=float))):
            bad.append((int(raw_row["line"]), "non-numeric value"))
        else:
            good_rows.append([int(raw_row["line"])] + value_row.iloc[:3].astype(float).tolist())
    table = pd.DataFrame(good_rows, columns=["line", "x", "y", "z"])
    return table, bad


def _open_target(target: Union[Path, str, TextIO, None]):
    if target is None:
        return sys.stdout, False
    if isinstance(target, (str, Path)):
        return open(target, "w", newline="\n"), True
    return target, False


def write_csv(df: pd.DataFrame, target: Union[Path, str, TextIO, None] = None, preamble: Optional[str] = None):
    """Writes a dataframe with round-trip-safe floats; preamble lines are written first as # comments."""
    stream, owned = _open_target(target)
    try:
        if preamble:
            stream.write("".join(f"# {line}\n" for line in preamble.splitlines()))
        stream.write(df.to_csv(index=False, float_format=FLOAT_FORMAT))
    finally:
        if owned:
            stream.close()


def write_json(data: Union[dict, list], target: Union[Path, str, TextIO, None] = None):
    stream, owned = _open_target(target)
    try:
        stream.write(dumps(data, indent=3))
        stream.write("\n")
    finally:
        if owned:
            stream.close()


def write_obj(polylines: List[Tuple[str, List[np.ndarray]]], target: Union[Path, str, TextIO, None] = None,
              header: Optional[str] = None):
    """
    Writes polylines as an OBJ file: v records for the samples, one l record per closed polyline

    :param polylines: (cell label, list of (m, 3) polylines) pairs, in output order
    :param target: path or text stream
    :param header: comment lines written at the top
    """
    stream, owned = _open_target(target)
    try:
        if header:
            stream.write("".join(f"# {line}\n" for line in header.splitlines()))
        offset = 1
        for label, lines in polylines:
            stream.write(f"# cell {label}\n")
            for line in lines:
                stream.write("".join(f"v {x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in line))
                indices = " ".join(str(offset + m) for m in range(len(line)))
                stream.write(f"l {indices}\n")
                offset += len(line)
    finally:
        if owned:
            stream.close()
