"""Small benchmark graph families."""
from __future__ import annotations

import math
import re

import numpy as np
from scipy.spatial import Delaunay

from .graph import GraphError, WeightedGraph


def grid(a: int, b: int, length: float = 1.0) -> WeightedGraph:
    if a < 1 or b < 1:
        raise GraphError("grid sides must be positive")
    edges = []
    for i in range(a):
        for j in range(b):
            v = i * b + j
            if j + 1 < b:
                edges.append((v, v + 1, length))
            if i + 1 < a:
                edges.append((v, v + b, length))
    return WeightedGraph(a * b, edges)


def path(n: int, length: float = 1.0) -> WeightedGraph:
    if n < 1:
        raise GraphError("path needs at least one vertex")
    return WeightedGraph(n, [(i, i + 1, length) for i in range(n - 1)])


def star(n: int, length: float = 1.0) -> WeightedGraph:
    """Center 0 joined to n-1 leaves."""
    if n < 1:
        raise GraphError("star needs at least one vertex")
    return WeightedGraph(n, [(0, i, length) for i in range(1, n)])


def random_planar(n: int, seed: int = 0) -> WeightedGraph:
    """Delaunay triangulation of n uniform points in the unit square, Euclidean lengths."""
    if n < 1:
        raise GraphError("need at least one point")
    if n < 4:
        return path(n)
    pts = np.random.default_rng(seed).random((n, 2))
    tri = Delaunay(pts)
    pairs = set()
    for s in tri.simplices:
        a, b, c = (int(x) for x in s)
        for u, v in ((a, b), (b, c), (a, c)):
            pairs.add((min(u, v), max(u, v)))
    edges = [(u, v, float(math.dist(pts[u], pts[v]))) for u, v in sorted(pairs)]
    return WeightedGraph(n, edges)


_SPEC = re.compile(r"^\s*(\w+)\s*(?:\((.*)\)|:(.*))?\s*$")


def generate_graph(spec: str) -> WeightedGraph:
    """``grid(a,b[,len])``, ``random_planar(n[,seed])``, ``path(n)``, ``star(n)``.
    A colon form such as ``grid:12,12`` is accepted too."""
    m = _SPEC.match(spec)
    if not m:
        raise GraphError(f"malformed graph spec {spec!r}")
    name = m.group(1)
    raw = m.group(2) if m.group(2) is not None else (m.group(3) or "")
    try:
        args = [float(x) for x in raw.replace("x", ",").split(",") if x.strip()]
    except ValueError:
        raise GraphError(f"malformed arguments in {spec!r}") from None

    def ints(lo, hi):
        if not lo <= len(args) <= hi:
            raise GraphError(f"{name} takes {lo}..{hi} arguments")
        return args

    if name == "grid":
        a = ints(2, 3)
        return grid(int(a[0]), int(a[1]), a[2] if len(a) > 2 else 1.0)
    if name == "random_planar":
        a = ints(1, 2)
        return random_planar(int(a[0]), int(a[1]) if len(a) > 1 else 0)
    if name == "path":
        return path(int(ints(1, 1)[0]))
    if name == "star":
        return star(int(ints(1, 1)[0]))
    raise GraphError(f"unknown generator {name!r}")
