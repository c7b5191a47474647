"""Edge-list files: a header line ``n m`` followed by ``u v len`` per edge."""
from __future__ import annotations

import json
from pathlib import Path

from .graph import GraphError, WeightedGraph


def format_edge_list(g: WeightedGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v} {ln!r}" for u, v, ln in g.edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> WeightedGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise GraphError("empty edge list")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
    except (ValueError, IndexError):
        raise GraphError("first line must be 'n m'") from None
    if len(rows) - 1 != m:
        raise GraphError(f"header announces {m} edges, found {len(rows) - 1}")
    edges = []
    for i, r in enumerate(rows[1:], 2):
        if len(r) != 3:
            raise GraphError(f"line {i}: expected 'u v len'")
        try:
            edges.append((int(r[0]), int(r[1]), float(r[2])))
        except ValueError:
            raise GraphError(f"line {i}: malformed numbers") from None
    return WeightedGraph(n, edges)


def read_graph(path) -> WeightedGraph:
    return parse_edge_list(Path(path).read_text())


def write_graph(g: WeightedGraph, path) -> None:
    Path(path).write_text(format_edge_list(g))


def dump_json(obj) -> str:
    # sorted keys and fixed separators so equal inputs give identical bytes
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dump_json(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise GraphError(f"{path}: not valid JSON ({e})") from None
