"""JSON / CSV readers and writers for graphs, matrices, moment tables and results."""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .chain import MomentTable
from .exceptions import NotCombinatoriallySymmetricError
from .graph import SimpleGraph, graph_of_matrix, is_combinatorially_symmetric


class FileFormatError(ValueError):
    """A file could not be parsed into the expected structure."""


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_matrix(path):
    """Read ``{"size": S, "rows": [...]}`` JSON or an S x S CSV file."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            with path.open(newline="") as fh:
                rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
        except (OSError, ValueError) as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
        return _check_rows(rows, len(rows), path)
    data = _read_json(path)
    if not isinstance(data, dict) or "rows" not in data:
        raise FileFormatError(f"{path}: expected an object with 'rows'")
    return _check_rows(data["rows"], data.get("size", len(data["rows"])), path)


def _check_rows(rows, size, path):
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if M.ndim != 2 or M.shape != (size, size):
        raise FileFormatError(f"{path}: expected a {size}x{size} matrix, got shape {M.shape}")
    return M


def save_matrix(M, path):
    M = np.asarray(M, dtype=float)
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open("w", newline="") as fh:
            csv.writer(fh).writerows([[repr(float(x)) for x in row] for row in M])
    else:
        write_json({"size": M.shape[0], "rows": M.tolist()}, path)


def graph_from_dict(data, path="<graph>"):
    try:
        return SimpleGraph.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: invalid graph: {exc}") from exc


def load_graph(path, zero_tol=0.0):
    """Read a graph file, or derive the pattern graph from a matrix file.

    Raises
    ------
    NotCombinatoriallySymmetricError
        If a matrix file is given whose pattern is not symmetric.
    """
    path = Path(path)
    if path.suffix.lower() != ".csv":
        data = _read_json(path)
        if isinstance(data, dict) and "edges" in data:
            return graph_from_dict(data, path)
    M = load_matrix(path)
    if not is_combinatorially_symmetric(M, zero_tol):
        raise NotCombinatoriallySymmetricError(
            f"{path}: matrix is not combinatorially symmetric; its pattern has no undirected graph"
        )
    return graph_of_matrix(M, zero_tol)


def save_graph(G, path):
    write_json(G.to_dict(), path)


def _nan_to_none(arr):
    return [[[None if math.isnan(x) else x for x in row] for row in mat] for mat in arr.tolist()]


def _none_to_nan(nested):
    return np.array([[[np.nan if x is None else x for x in row] for row in mat] for mat in nested],
                    dtype=float)


def moments_to_dict(table):
    out = {
        "kind": table.kind,
        "known_states": list(table.known_states),
        "max_power": table.max_power,
        "values": {str(n + 1): _nan_to_none(table.values[n : n + 1])[0] for n in range(table.max_power)},
    }
    if table.stderr is not None:
        out["stderr"] = {str(n + 1): _nan_to_none(table.stderr[n : n + 1])[0]
                         for n in range(table.max_power)}
    if table.covariance is not None:
        out["covariance"] = table.covariance.tolist()
    return out


def moments_from_dict(data, path="<moments>"):
    try:
        N = int(data["max_power"])
        values = _none_to_nan([data["values"][str(n)] for n in range(1, N + 1)])
        stderr = None
        if data.get("stderr") is not None:
            stderr = _none_to_nan([data["stderr"][str(n)] for n in range(1, N + 1)])
        cov = data.get("covariance")
        table = MomentTable(data["kind"], tuple(data["known_states"]), values, stderr,
                            None if cov is None else np.array(cov, dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: invalid moment table: {exc}") from exc
    return table.check_range()


def load_moments(path):
    return moments_from_dict(_read_json(path), path)


def save_moments(table, path):
    write_json(moments_to_dict(table), path)
