"""Clustering chains: nested partitions C_0 (singletons) .. C_k ({V}) where every
level-i cluster has strong diameter at most 2^i, sampled top-down from
shortcut partitions."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .graph import (
    GraphError,
    VertexPartition,
    WeightedGraph,
    connected_components,
    graph_metrics,
    induced_subgraph,
    is_normalized,
    strong_diameter,
)
from .report import Report
from .rng import RandomSource
from .shortcut import DEFAULT_DIVISOR, shortcut_partition

TOL = 1e-9
CHAIN_EPSILON = 0.5


@dataclass
class ChainNode:
    """A distinct vertex set of the chain; it is the cluster at levels low..high."""

    id: int
    vertices: frozenset[int]
    low: int
    high: int
    parent: int | None
    children: list[int] = field(default_factory=list)

    @property
    def scale(self) -> int:
        return self.high


@dataclass
class ClusteringChain:
    k: int
    levels: list[list[frozenset[int]]]
    parents: list[list[int]]
    hop_diameters: list[int] = field(default_factory=list)
    _nodes: list[ChainNode] | None = field(default=None, repr=False, compare=False)
    _node_at: dict | None = field(default=None, repr=False, compare=False)

    @property
    def vertices(self) -> frozenset[int]:
        return self.levels[self.k][0]

    @property
    def hop_bound(self) -> int:
        return max(self.hop_diameters, default=0)

    def level(self, i: int) -> list[frozenset[int]]:
        return self.levels[i]

    def cluster_of(self, i: int) -> dict[int, int]:
        return {v: j for j, c in enumerate(self.levels[i]) for v in c}

    def partition(self, i: int) -> VertexPartition:
        return VertexPartition(list(self.levels[i]))

    def children(self, i: int, j: int) -> list[int]:
        """Indices at level i-1 of the clusters inside cluster j of level i."""
        return [c for c, p in enumerate(self.parents[i - 1]) if p == j]

    def _build_nodes(self):
        nodes: list[ChainNode] = []
        at: dict[tuple[int, int], int] = {}
        root = ChainNode(0, self.levels[self.k][0], self.k, self.k, None)
        nodes.append(root)
        at[(self.k, 0)] = 0
        for i in range(self.k - 1, -1, -1):
            for j, c in enumerate(self.levels[i]):
                pn = nodes[at[(i + 1, self.parents[i][j])]]
                if pn.vertices == c:
                    pn.low = i
                    at[(i, j)] = pn.id
                else:
                    nd = ChainNode(len(nodes), c, i, i, pn.id)
                    nodes.append(nd)
                    pn.children.append(nd.id)
                    at[(i, j)] = nd.id
        self._nodes = nodes
        self._node_at = at

    def nodes(self) -> list[ChainNode]:
        if self._nodes is None:
            self._build_nodes()
        return self._nodes

    def node_at(self, i: int, j: int) -> ChainNode:
        if self._node_at is None:
            self._build_nodes()
        return self._nodes[self._node_at[(i, j)]]

    def node_containing(self, i: int, v: int) -> ChainNode:
        for j, c in enumerate(self.levels[i]):
            if v in c:
                return self.node_at(i, j)
        raise GraphError(f"vertex {v} is not in the chain")

    def to_dict(self) -> dict:
        return {
            "kind": "chain",
            "k": self.k,
            "levels": [[sorted(c) for c in lvl] for lvl in self.levels],
            "parents": [list(p) for p in self.parents],
            "hop_diameters": list(self.hop_diameters),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusteringChain":
        return cls(int(d["k"]), [[frozenset(c) for c in lvl] for lvl in d["levels"]],
                   [[int(x) for x in p] for p in d["parents"]],
                   [int(x) for x in d.get("hop_diameters", [])])


def _hop_diameter(g: WeightedGraph, clusters: list[frozenset[int]]) -> int:
    cid = {v: j for j, c in enumerate(clusters) for v in c}
    qadj: list[set[int]] = [set() for _ in clusters]
    for v, a in cid.items():
        for w in g.adj[v]:
            b = cid.get(w)
            if b is not None and b != a:
                qadj[a].add(b)
    best = 0
    for s in range(len(clusters)):
        seen = {s: 0}
        dq = deque([s])
        while dq:
            x = dq.popleft()
            for y in qadj[x]:
                if y not in seen:
                    seen[y] = seen[x] + 1
                    dq.append(y)
        if len(seen) != len(clusters):
            raise GraphError("cluster quotient is disconnected")
        best = max(best, max(seen.values()))
    return best


def _split(g: WeightedGraph, c: frozenset[int], i: int, r: int, rng: RandomSource,
           divisor: float) -> list[frozenset[int]]:
    """Partition a level-(i+1) cluster into pieces of strong diameter <= 2^i."""
    if i == 0 or len(c) <= 2:
        return [frozenset([v]) for v in sorted(c)]
    sub, ids = induced_subgraph(g, c)
    bound = 2.0 ** i
    sp = shortcut_partition(sub, CHAIN_EPSILON, r, rng, scale=2.0 ** (i + 1), divisor=divisor)
    out = []
    for j, piece in enumerate(sp.clustering.clusters):
        if divisor < DEFAULT_DIVISOR and len(piece) > 1 and strong_diameter(sub, piece) > bound + TOL:
            # an aggressive divisor may overshoot; the default divisor cannot
            sub2, ids2 = induced_subgraph(sub, piece)
            sp2 = shortcut_partition(sub2, CHAIN_EPSILON, r, rng.child("repair", j),
                                     scale=2.0 ** (i + 1), divisor=DEFAULT_DIVISOR)
            out.extend(frozenset(ids[ids2[x]] for x in q) for q in sp2.clustering.clusters)
        else:
            out.append(frozenset(ids[x] for x in piece))
    return out


def build_chain(g: WeightedGraph, r: int, rng: RandomSource, *,
                divisor: float = DEFAULT_DIVISOR) -> ClusteringChain:
    """Sample a clustering chain level by level from the top.

    Each cluster at level i+1 is split by a shortcut partition of its induced
    subgraph with epsilon 1/2 at scale 2^(i+1). ``divisor`` sets the internal
    radius epsilon*2^(i+1)/divisor; below the default of 12 the diameter bound is
    no longer automatic, so any oversize piece is split again at the default.
    """
    if g.n == 0:
        raise GraphError("empty graph")
    if len(connected_components(g)) != 1:
        raise GraphError("graph is disconnected")
    if not is_normalized(g):
        raise GraphError("graph must be normalized (minimum edge length 1)")
    if divisor <= 0:
        raise GraphError("divisor must be positive")
    # two or more vertices need a level above the singletons even when diam = 1
    k = max(graph_metrics(g).k, 1) if g.n > 1 else 0
    levels: list[list[frozenset[int]]] = [[] for _ in range(k + 1)]
    parents: list[list[int]] = [[] for _ in range(k + 1)]
    levels[k] = [frozenset(range(g.n))]
    hops = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        lvl: list[tuple[frozenset[int], int]] = []
        for j, c in enumerate(levels[i + 1]):
            pieces = _split(g, c, i, r, rng.child(i, min(c)), divisor)
            if len(pieces) > 1:
                hops[i] = max(hops[i], _hop_diameter(g, pieces))
            lvl.extend((p, j) for p in pieces)
        lvl.sort(key=lambda t: min(t[0]))
        levels[i] = [p for p, _ in lvl]
        parents[i] = [j for _, j in lvl]
    return ClusteringChain(k, levels, parents, hops)


def verify_chain(g: WeightedGraph, chain: ClusteringChain, h: int | None = None,
                 vertices=None) -> Report:
    """Root, singleton base, refinement, connectivity, the per-level strong-diameter
    bound and the quotient hop bound."""
    rep = Report("clustering-chain")
    k = chain.k
    want = frozenset(range(g.n)) if vertices is None else frozenset(vertices)
    if len(chain.levels) != k + 1 or len(chain.parents) != k + 1:
        rep.fail("level count does not match k")
        return rep
    if chain.levels[k] != [want]:
        rep.fail("top level is not the whole vertex set")
    if any(len(c) != 1 for c in chain.levels[0]) or set().union(*chain.levels[0]) != want:
        rep.fail("level 0 is not all singletons")
    for i in range(k + 1):
        lvl = chain.levels[i]
        seen: set[int] = set()
        for c in lvl:
            if not c or seen & c:
                rep.fail(f"level {i} is not a partition")
                break
            seen |= c
        else:
            if seen != want:
                rep.fail(f"level {i} does not cover the vertex set")
        if i < k:
            par = chain.parents[i]
            if len(par) != len(lvl):
                rep.fail(f"level {i} parent list has the wrong length")
                continue
            up = chain.levels[i + 1]
            for j, c in enumerate(lvl):
                p = par[j]
                if not 0 <= p < len(up) or not c <= up[p]:
                    rep.fail(f"level {i} cluster containing {min(c)} is not inside its parent")
                    break
    if not rep.valid:
        return rep
    worst_ratio = 0.0
    for i in range(k + 1):
        bound = 2.0 ** i
        for c in chain.levels[i]:
            if len(c) == 1:
                continue
            try:
                d = strong_diameter(g, c)
            except GraphError:
                rep.fail(f"level {i} cluster containing {min(c)} is not connected")
                continue
            worst_ratio = max(worst_ratio, d / bound)
            if d > bound + TOL * bound:
                rep.fail(f"level {i} cluster containing {min(c)} has strong diameter {d:g} > 2^{i}")
    h_hat = 0
    for i in range(k):
        kids: dict[int, list[frozenset[int]]] = {}
        for c, p in zip(chain.levels[i], chain.parents[i]):
            kids.setdefault(p, []).append(c)
        for p, cs in kids.items():
            if len(cs) > 1:
                try:
                    h_hat = max(h_hat, _hop_diameter(g, cs))
                except GraphError:
                    rep.fail(f"children of level {i + 1} cluster {p} do not form a connected quotient")
    rep.stats.update(k=k, h_hat=h_hat, max_diameter_ratio=worst_ratio,
                     level_sizes=[len(lvl) for lvl in chain.levels])
    if h is not None and h_hat > h:
        rep.fail(f"measured hop bound {h_hat} exceeds h = {h}")
    return rep


def subchain(chain: ClusteringChain, level: int, index: int) -> ClusteringChain:
    """The chain of all clusters inside cluster ``index`` of ``level``, topped by it."""
    if not 0 <= level <= chain.k or not 0 <= index < len(chain.levels[level]):
        raise GraphError(f"no cluster {index} at level {level}")
    top = chain.levels[level][index]
    keep = [index]
    levels_rev = [[top]]
    parents_rev: list[list[int]] = [[]]
    for i in range(level - 1, -1, -1):
        pos = {old: new for new, old in enumerate(keep)}
        idx = [j for j, p in enumerate(chain.parents[i]) if p in pos]
        levels_rev.append([chain.levels[i][j] for j in idx])
        parents_rev.append([pos[chain.parents[i][j]] for j in idx])
        keep = idx
    # hop diameters depend on the graph; verify_chain measures them afresh
    return ClusteringChain(level, levels_rev[::-1], parents_rev[::-1])


def split_scale(chain: ClusteringChain, u: int, v: int) -> int:
    """Largest level whose clustering separates u from v."""
    if u == v:
        raise GraphError("split scale needs two distinct vertices")
    for i in range(chain.k, -1, -1):
        for c in chain.levels[i]:
            if u in c:
                if v not in c:
                    return i
                break
        else:
            raise GraphError(f"vertex {u} is not in the chain")
    raise GraphError("u and v are never separated")


@dataclass
class SeparatingEstimate:
    samples: int
    frequency: list[dict[tuple[int, int], float]]
    beta_hat: float
    level_medians: list[float]
    hop_bound: int


def estimate_separating_beta(g: WeightedGraph, r: int, samples: int, rng: RandomSource,
                             seeds=None, **kw) -> SeparatingEstimate:
    """Per-level per-edge cut frequencies over sampled chains and
    ``beta_hat = max f(e, i) * 2^i / len(e)``."""
    if samples < 1:
        raise GraphError("samples must be positive")
    keys = list(seeds) if seeds is not None else list(range(samples))
    if len(keys) != samples:
        raise GraphError("need one seed key per sample")
    k = max(graph_metrics(g).k, 1) if g.n > 1 else 0
    counts = [{(u, v): 0 for u, v, _ in g.edges} for _ in range(k + 1)]
    hop = 0
    for s in keys:
        ch = build_chain(g, r, rng.child(s), **kw)
        hop = max(hop, ch.hop_bound)
        for i in range(k + 1):
            cid = ch.cluster_of(i)
            ci = counts[i]
            for u, v, _ in g.edges:
                if cid[u] != cid[v]:
                    ci[(u, v)] += 1
    freq = [{e: c / samples for e, c in ci.items()} for ci in counts]
    beta = 0.0
    for i in range(k + 1):
        for u, v, ln in g.edges:
            beta = max(beta, freq[i][(u, v)] * 2.0 ** i / ln)
    medians = [_median(list(f.values())) for f in freq]
    return SeparatingEstimate(samples, freq, beta, medians, hop)


def _median(xs: list[float]) -> float:
    if not xs:
        return 0.0
    ys = sorted(xs)
    m = len(ys) // 2
    return ys[m] if len(ys) % 2 else (ys[m - 1] + ys[m]) / 2


def level_ratio(est: SeparatingEstimate) -> list[float]:
    """median f(i+1) / median f(i) for every level pair with nonzero denominators."""
    out = []
    med = est.level_medians
    for i in range(len(med) - 2):
        out.append(med[i + 1] / med[i] if med[i] > 0 else math.nan)
    return out
