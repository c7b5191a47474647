"""Weighted undirected graphs and the metric queries the rest of the package needs."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable

INF = math.inf


class GraphError(ValueError):
    pass


class WeightedGraph:
    """Simple undirected graph on vertices ``0..n-1`` with strictly positive edge lengths.

    Instances are treated as immutable once built; ``adj[u]`` maps each neighbour to
    the length of the edge.
    """

    __slots__ = ("n", "edges", "adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]] = ()):
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        self.n = n
        adj: list[dict[int, float]] = [dict() for _ in range(n)]
        canon = []
        for u, v, ln in edges:
            u, v, ln = int(u), int(v), float(ln)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not ln > 0 or math.isinf(ln):
                raise GraphError(f"edge ({u}, {v}) has non-positive or infinite length {ln}")
            if v in adj[u]:
                raise GraphError(f"duplicate edge ({u}, {v})")
            adj[u][v] = ln
            adj[v][u] = ln
            canon.append((min(u, v), max(u, v), ln))
        canon.sort()
        self.edges: list[tuple[int, int, float]] = canon
        self.adj = adj

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int):
        return self.adj[u].keys()

    def length(self, u: int, v: int) -> float:
        return self.adj[u][v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def check_vertex(self, u: int) -> None:
        if not (isinstance(u, (int,)) and 0 <= u < self.n):
            raise GraphError(f"invalid vertex id {u!r} (n={self.n})")

    def scaled(self, factor: float) -> "WeightedGraph":
        return WeightedGraph(self.n, [(u, v, ln * factor) for u, v, ln in self.edges])

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={self.m})"


@dataclass
class GraphMetrics:
    diameter: float
    min_distance: float
    aspect_ratio: float
    k: int


@dataclass
class VertexPartition:
    """A partition of ``0..n-1`` into clusters; ``cluster_of[v]`` indexes ``clusters``."""

    clusters: list[frozenset[int]]
    cluster_of: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.cluster_of:
            n = sum(len(c) for c in self.clusters)
            cluster_of = [-1] * n
            for i, c in enumerate(self.clusters):
                for v in c:
                    if v < 0 or v >= n or cluster_of[v] != -1:
                        raise GraphError("clusters do not partition 0..n-1")
                    cluster_of[v] = i
            self.cluster_of = cluster_of

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]]) -> "VertexPartition":
        cs = [frozenset(c) for c in clusters]
        if any(not c for c in cs):
            raise GraphError("empty cluster")
        cs.sort(key=min)
        return cls(cs)

    @classmethod
    def singletons(cls, n: int) -> "VertexPartition":
        return cls([frozenset([v]) for v in range(n)])

    def __len__(self):
        return len(self.clusters)


def dijkstra(g: WeightedGraph, sources, allowed=None, *, init=None, with_pred: bool = False):
    """Multi-source Dijkstra restricted to the induced subgraph on ``allowed``.

    ``sources`` is an iterable of vertices (distance 0) unless ``init`` gives explicit
    start offsets. Returns a dict of reached vertices to distance, plus a predecessor
    dict when ``with_pred`` is set. Ties are settled by vertex id so predecessor trees
    are reproducible.
    """
    dist: dict[int, float] = {}
    pred: dict[int, int | None] = {}
    heap: list[tuple[float, int, int]] = []
    starts = init.items() if init is not None else ((s, 0.0) for s in sources)
    for s, d0 in starts:
        if allowed is not None and s not in allowed:
            continue
        heapq.heappush(heap, (d0, s, -1))
    adj = g.adj
    while heap:
        d, u, p = heapq.heappop(heap)
        if u in dist:
            continue
        dist[u] = d
        pred[u] = None if p < 0 else p
        for w, ln in adj[u].items():
            if w in dist or (allowed is not None and w not in allowed):
                continue
            heapq.heappush(heap, (d + ln, w, u))
    if with_pred:
        return dist, pred
    return dist


def distance_matrix(g: WeightedGraph):
    """Dense all-pairs distances through scipy's sparse Dijkstra (inf when unreachable)."""
    import numpy as np
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    if g.n == 0:
        return np.zeros((0, 0))
    rows = [u for u, v, _ in g.edges] + [v for u, v, _ in g.edges]
    cols = [v for u, v, _ in g.edges] + [u for u, v, _ in g.edges]
    vals = [ln for _, _, ln in g.edges] * 2
    m = csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return shortest_path(m, method="D", directed=False)


def shortest_path_distance(g: WeightedGraph, u: int, v: int) -> float:
    g.check_vertex(u)
    g.check_vertex(v)
    if u == v:
        return 0.0
    return dijkstra(g, [u]).get(v, INF)


def all_pairs_distances(g: WeightedGraph, allowed=None):
    """Dense distance table (list of lists, INF when unreachable)."""
    verts = range(g.n) if allowed is None else sorted(allowed)
    table = [[INF] * g.n for _ in range(g.n)]
    for s in verts:
        row = table[s]
        for t, d in dijkstra(g, [s], allowed).items():
            row[t] = d
    return table


def is_connected_subset(g: WeightedGraph, vertices) -> bool:
    vs = set(vertices)
    if not vs:
        return False
    start = min(vs)
    return len(dijkstra(g, [start], vs)) == len(vs)


def strong_diameter(g: WeightedGraph, cluster) -> float:
    """Largest pairwise distance measured inside the subgraph induced by ``cluster``."""
    cs = set(cluster)
    if not cs:
        raise GraphError("empty cluster")
    best = 0.0
    for s in sorted(cs):
        dist = dijkstra(g, [s], cs)
        if len(dist) != len(cs):
            raise GraphError("cluster does not induce a connected subgraph")
        best = max(best, max(dist.values()))
    return best


def eccentricity_within(g: WeightedGraph, sources, vertices) -> float:
    """max over ``vertices`` of the induced distance to the set ``sources``."""
    vs = set(vertices)
    dist = dijkstra(g, sources, vs)
    if len(dist) != len(vs):
        return INF
    return max(dist.values()) if dist else 0.0


def connected_components(g: WeightedGraph, removed=()) -> list[list[int]]:
    """Components of ``g`` minus ``removed``, sorted, ordered by minimum vertex id."""
    gone = set(removed)
    seen = [False] * g.n
    comps = []
    adj = g.adj
    for s in range(g.n):
        if seen[s] or s in gone:
            continue
        seen[s] = True
        stack = [s]
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if not seen[w] and w not in gone:
                    seen[w] = True
                    stack.append(w)
        comp.sort()
        comps.append(comp)
    return comps


def components_within(g: WeightedGraph, vertices) -> list[list[int]]:
    """Components of the subgraph induced by ``vertices`` (ordered by minimum id)."""
    vs = set(vertices)
    seen: set[int] = set()
    comps = []
    adj = g.adj
    for s in sorted(vs):
        if s in seen:
            continue
        seen.add(s)
        stack = [s]
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if w in vs and w not in seen:
                    seen.add(w)
                    stack.append(w)
        comp.sort()
        comps.append(comp)
    return comps


def induced_subgraph(g: WeightedGraph, vertices) -> tuple[WeightedGraph, list[int]]:
    """Relabelled induced subgraph; the second value maps local ids to ids of ``g``."""
    verts = sorted(set(vertices))
    local = {v: i for i, v in enumerate(verts)}
    edges = []
    for v in verts:
        for w, ln in g.adj[v].items():
            if w in local and v < w:
                edges.append((local[v], local[w], ln))
    return WeightedGraph(len(verts), edges), verts


def contract_clusters(
    g: WeightedGraph, p: VertexPartition, lengths: str = "unit"
) -> tuple[WeightedGraph, list[int]]:
    """Quotient graph with one vertex per cluster of ``p``.

    ``lengths="unit"`` gives every quotient edge length 1; ``"min"`` keeps the
    shortest original edge crossing between the two clusters.
    """
    if lengths not in ("unit", "min"):
        raise GraphError(f"unknown quotient length mode {lengths!r}")
    if len(p.cluster_of) != g.n:
        raise GraphError("partition does not cover the graph")
    for c in p.clusters:
        if not is_connected_subset(g, c):
            raise GraphError(f"cluster containing {min(c)} is not connected")
    eta = list(p.cluster_of)
    best: dict[tuple[int, int], float] = {}
    for u, v, ln in g.edges:
        a, b = eta[u], eta[v]
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        if key not in best or ln < best[key]:
            best[key] = ln
    edges = [(a, b, 1.0 if lengths == "unit" else ln) for (a, b), ln in best.items()]
    return WeightedGraph(len(p.clusters), edges), eta


def hop_distances(g: WeightedGraph, source: int, allowed=None) -> dict[int, int]:
    """BFS hop counts from ``source``, optionally restricted to ``allowed``."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for w in g.adj[u]:
                if w not in dist and (allowed is None or w in allowed):
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def hop_diameter(g: WeightedGraph) -> int:
    """Unweighted diameter; raises when ``g`` is disconnected."""
    best = 0
    for s in range(g.n):
        d = hop_distances(g, s)
        if len(d) != g.n:
            raise GraphError("graph is disconnected")
        best = max(best, max(d.values()))
    return best


def graph_metrics(g: WeightedGraph) -> GraphMetrics:
    if g.n == 0:
        raise GraphError("empty graph")
    if g.n == 1:
        return GraphMetrics(0.0, 1.0, 1.0, 0)
    diam = 0.0
    mind = INF
    for s in range(g.n):
        dist = dijkstra(g, [s])
        if len(dist) != g.n:
            raise GraphError("graph is disconnected")
        for t, d in dist.items():
            if t != s:
                diam = max(diam, d)
                mind = min(mind, d)
    k = max(0, math.ceil(math.log2(diam / mind) - 1e-12)) if diam > mind else 0
    return GraphMetrics(diam, mind, diam / mind, k)


def normalize(g: WeightedGraph) -> tuple[WeightedGraph, GraphMetrics]:
    """Rescale lengths so that the minimum pairwise distance is exactly 1."""
    if g.n == 0:
        raise GraphError("empty graph")
    if len(connected_components(g)) > 1:
        raise GraphError("graph is disconnected")
    if g.n == 1:
        return g, GraphMetrics(0.0, 1.0, 1.0, 0)
    # the minimum pairwise distance is always attained by a single edge
    mind = min(ln for _, _, ln in g.edges)
    h = g if mind == 1.0 else WeightedGraph(g.n, [(u, v, ln / mind) for u, v, ln in g.edges])
    met = graph_metrics(h)
    return h, met


def is_normalized(g: WeightedGraph, tol: float = 1e-9) -> bool:
    if g.n <= 1:
        return True
    return abs(min(ln for _, _, ln in g.edges) - 1.0) <= tol


def diameter(g: WeightedGraph) -> float:
    return graph_metrics(g).diameter


def path_vertices(pred: dict[int, int | None], target: int) -> list[int]:
    out = [target]
    while pred[out[-1]] is not None:
        out.append(pred[out[-1]])
    out.reverse()
    return out
