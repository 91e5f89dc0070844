"""
File input and output for graphpq.

This module reads and writes every artifact the tool exchanges with disk:
- JSON documents (graphs, problem configurations, reports)
- Graph descriptions, either explicit vertex/edge lists or generators
- Vertex functions as JSON mappings or two-column CSV
- Solution CSVs with the fixed columns vertex_id,u,v,r_u,r_v

Floats are written with repr precision so that stored states reload
bit-identically.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

import numpy as np

from src.core.calculus import VertexFunction
from src.core.exceptions import GraphFormatError, InputFileError
from src.core.functional import Residual, State
from src.core.graph import (
    WeightedGraph,
    grid_graph,
    path_graph,
    random_connected_graph,
    star_graph,
)
from src.services.logging_service import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

SOLUTION_COLUMNS = ("vertex_id", "u", "v", "r_u", "r_v")


# ─── JSON ─────────────────────────────────────────────────────────────────


def read_json(path: PathLike) -> Any:
    """
    Parse a JSON file.

    Raises:
        InputFileError: If the file is missing, unreadable or not valid JSON.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputFileError(path, "no such file") from None
    except json.JSONDecodeError as e:
        raise InputFileError(path, f"invalid JSON ({e.msg} at line {e.lineno})") from e
    except (OSError, UnicodeDecodeError) as e:
        raise InputFileError(path, str(e)) from e


def write_json(path: PathLike, data: Any) -> Path:
    """Write data as indented JSON; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def write_report(path: PathLike, report: Any) -> Path:
    """Write any object with a to_dict() method as JSON."""
    return write_json(path, report.to_dict())


# ─── Graphs ───────────────────────────────────────────────────────────────


def _generated_graph(data: Mapping[str, Any]) -> WeightedGraph:
    kind = data["generator"]
    weight = float(data.get("weight", 1.0))
    mu = float(data.get("mu", 1.0))
    if kind == "path":
        return path_graph(int(data["n"]), weight=weight, mu=mu)
    if kind == "star":
        return star_graph(int(data["leaves"]), weight=weight, mu=mu)
    if kind == "grid":
        return grid_graph(int(data["rows"]), int(data["cols"]), weight=weight, mu=mu)
    if kind == "random":
        rng = np.random.default_rng(int(data.get("seed", 0)))
        return random_connected_graph(int(data["n"]), rng)
    raise GraphFormatError(f"unknown graph generator {kind!r}")


def graph_from_dict(data: Mapping[str, Any]) -> WeightedGraph:
    """
    Build a graph from its JSON description.

    Accepts {"vertices": [{"id", "mu"}], "edges": [{"u", "v", "w"}]} or
    {"generator": "path"|"star"|"grid"|"random", ...}.

    Raises:
        GraphFormatError: If the description is malformed.
    """
    if not isinstance(data, Mapping):
        raise GraphFormatError("graph description must be a JSON object")
    try:
        if "generator" in data:
            return _generated_graph(data)
        vertices = [str(v["id"]) for v in data["vertices"]]
        mu = [float(v.get("mu", 1.0)) for v in data["vertices"]]
        edges = [(str(e["u"]), str(e["v"]), float(e.get("w", 1.0))) for e in data.get("edges", [])]
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"malformed graph description: {e}") from e
    return WeightedGraph(vertices, mu, edges)


def load_graph(path: PathLike) -> WeightedGraph:
    """Read a graph JSON file."""
    graph = graph_from_dict(read_json(path))
    logger.info(f"Loaded graph from {path}: {graph.n} vertices, {len(graph.edges)} edges")
    return graph


def graph_to_dict(graph: WeightedGraph) -> Dict[str, Any]:
    return {
        "vertices": [{"id": x, "mu": float(m)} for x, m in zip(graph.vertices, graph.mu)],
        "edges": [{"u": a, "v": b, "w": float(w)} for a, b, w in graph.edges],
    }


# ─── Vertex functions ─────────────────────────────────────────────────────


def write_vertex_function_json(path: PathLike, function: VertexFunction) -> Path:
    return write_json(path, function.to_dict())


def read_vertex_function_json(path: PathLike, graph: WeightedGraph) -> VertexFunction:
    data = read_json(path)
    if not isinstance(data, Mapping):
        raise InputFileError(path, "expected a mapping from vertex id to value")
    try:
        return VertexFunction.from_mapping(graph, {str(k): float(v) for k, v in data.items()})
    except (TypeError, ValueError) as e:
        raise InputFileError(path, str(e)) from e


def write_vertex_function_csv(path: PathLike, function: VertexFunction) -> Path:
    """Two columns: vertex_id,value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["vertex_id", "value"])
        for x, value in zip(function.graph.vertices, function.values):
            writer.writerow([x, repr(float(value))])
    return path


def _read_rows(path: PathLike, required: Iterable[str]) -> List[Dict[str, str]]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            missing = set(required) - set(reader.fieldnames or [])
            if missing:
                raise InputFileError(path, f"missing columns {sorted(missing)}")
            return list(reader)
    except FileNotFoundError:
        raise InputFileError(path, "no such file") from None
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise InputFileError(path, str(e)) from e


def read_vertex_function_csv(path: PathLike, graph: WeightedGraph) -> VertexFunction:
    rows = _read_rows(path, ("vertex_id", "value"))
    try:
        mapping = {row["vertex_id"]: float(row["value"]) for row in rows}
        return VertexFunction.from_mapping(graph, mapping)
    except ValueError as e:
        raise InputFileError(path, f"bad value: {e}") from e


# ─── Solutions ────────────────────────────────────────────────────────────


def write_solution_csv(path: PathLike, state: State, residual: Residual) -> Path:
    """One row per vertex with columns vertex_id,u,v,r_u,r_v."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = (state.u.values, state.v.values, residual.r_u.values, residual.r_v.values)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SOLUTION_COLUMNS)
        for k, x in enumerate(state.graph.vertices):
            writer.writerow([x] + [repr(float(column[k])) for column in columns])
    logger.debug(f"Wrote solution CSV {path}")
    return path


def state_from_dict(graph: WeightedGraph, data: Mapping[str, Any]) -> State:
    """Rebuild a State from the "state" entry of a report."""
    try:
        u = VertexFunction.from_mapping(graph, {str(k): float(v) for k, v in data["u"].items()})
        v = VertexFunction.from_mapping(graph, {str(k): float(v) for k, v in data["v"].items()})
    except (KeyError, AttributeError, TypeError, ValueError) as e:
        raise GraphFormatError(f"malformed state: {e}") from e
    return State(u, v)


def load_solution(path: PathLike, graph: WeightedGraph) -> State:
    """
    Load a stored state from a solve report (JSON) or a solution CSV.

    Raises:
        InputFileError: If the file cannot be read.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        rows = _read_rows(path, ("vertex_id", "u", "v"))
        try:
            u = {row["vertex_id"]: float(row["u"]) for row in rows}
            v = {row["vertex_id"]: float(row["v"]) for row in rows}
            return State(VertexFunction.from_mapping(graph, u), VertexFunction.from_mapping(graph, v))
        except ValueError as e:
            raise InputFileError(path, f"bad value: {e}") from e
    data = read_json(path)
    if not isinstance(data, Mapping) or "state" not in data:
        raise InputFileError(path, "not a solve report (no 'state' entry)")
    return state_from_dict(graph, data["state"])
