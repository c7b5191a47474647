"""Stochastic shortcut partitions built on a buffered cop decomposition.

Every supernode's skeleton is netted greedily, each net point gets a random
head start in [0, delta], and the supernode's vertices join the center that
minimizes distance-inside-the-supernode plus head start.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .cops import CopDecomposition, build_cop_decomposition
from .graph import (
    GraphError,
    VertexPartition,
    WeightedGraph,
    connected_components,
    contract_clusters,
    diameter,
    dijkstra,
    strong_diameter,
)
from .report import Report
from .rng import RandomSource

DEFAULT_DIVISOR = 12
LOW_HOP_MAX_N = 200
TOL = 1e-9


@dataclass
class ShortcutPartition:
    clustering: VertexPartition
    epsilon: float
    delta_internal: float
    centers: list[int]
    scale: float
    decomposition: CopDecomposition | None = None
    # every net point, including any whose cluster came out empty
    net: list[int] | None = None

    @property
    def diameter_bound(self) -> float:
        # every cluster lies within 6*delta of its center inside the supernode
        return 12 * self.delta_internal

    def to_dict(self) -> dict:
        return {
            "kind": "shortcut",
            "epsilon": self.epsilon,
            "delta_internal": self.delta_internal,
            "scale": self.scale,
            "clusters": [sorted(c) for c in self.clustering.clusters],
            "centers": list(self.centers),
            "net": list(self.net) if self.net is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShortcutPartition":
        clusters = [frozenset(c) for c in d["clusters"]]
        return cls(VertexPartition(clusters), float(d["epsilon"]), float(d["delta_internal"]),
                   [int(x) for x in d["centers"]], float(d.get("scale", 0.0)),
                   net=d.get("net"))


def skeleton_net(g: WeightedGraph, root: int, skeleton_edges, spacing: float) -> list[int]:
    """Greedy net of a skeleton tree under tree distance.

    Vertices are scanned by tree distance from the root (ties by id); one is added
    when its tree distance to the current net exceeds ``spacing``.
    """
    tadj: dict[int, list[tuple[int, float]]] = {root: []}
    for a, b in skeleton_edges:
        ln = g.length(a, b)
        tadj.setdefault(a, []).append((b, ln))
        tadj.setdefault(b, []).append((a, ln))
    tree = WeightedGraph(g.n, [(a, b, g.length(a, b)) for a, b in skeleton_edges])
    order = sorted(dijkstra(tree, [root], set(tadj)).items(), key=lambda kv: (kv[1], kv[0]))
    net: list[int] = []
    near: dict[int, float] = {}
    for v, _ in order:
        if near.get(v, math.inf) > spacing + TOL:
            net.append(v)
            for w, d in dijkstra(tree, [v], set(tadj)).items():
                if d < near.get(w, math.inf):
                    near[w] = d
    return net


def _assign(g: WeightedGraph, members: set[int], centers: list[int], offsets: dict[int, float]) -> dict[int, int]:
    best: dict[int, tuple[float, int]] = {}
    for x in centers:
        ax = offsets[x]
        for v, d in dijkstra(g, [x], members).items():
            key = (d + ax, x)
            if v not in best or key < best[v]:
                best[v] = key
    return {v: k[1] for v, k in best.items()}


def shortcut_partition(g: WeightedGraph, epsilon: float, r: int, rng: RandomSource, *,
                       scale: float | None = None, divisor: float = DEFAULT_DIVISOR) -> ShortcutPartition:
    """Sample a shortcut partition whose clusters have strong diameter at most
    ``12 * epsilon * scale / divisor`` (``scale`` defaults to the diameter of ``g``)."""
    if not 0 < epsilon < 1:
        raise GraphError("epsilon must lie in (0, 1)")
    if g.n == 0:
        raise GraphError("empty graph")
    if len(connected_components(g)) != 1:
        raise GraphError("graph is disconnected")
    if g.n == 1:
        return ShortcutPartition(VertexPartition([frozenset([0])]), epsilon, 0.0, [0], 0.0)
    if scale is None:
        scale = diameter(g)
    delta = epsilon * scale / divisor
    cd = build_cop_decomposition(g, delta, r, rng.child("cop"))
    arng = rng.child("net")
    clusters: list[frozenset[int]] = []
    centers: list[int] = []
    all_net: list[int] = []
    for s in cd.supernodes:
        net = skeleton_net(g, s.root, s.skeleton_edges, delta)
        all_net.extend(net)
        offsets = {x: arng.uniform(0.0, delta) for x in sorted(net)}
        owner = _assign(g, s.members, net, offsets)
        groups: dict[int, set[int]] = {}
        for v, x in owner.items():
            groups.setdefault(x, set()).add(v)
        for x in sorted(groups):
            clusters.append(frozenset(groups[x]))
            centers.append(x)
    order = sorted(range(len(clusters)), key=lambda i: min(clusters[i]))
    clusters = [clusters[i] for i in order]
    centers = [centers[i] for i in order]
    return ShortcutPartition(VertexPartition(clusters), epsilon, delta, centers, float(scale), cd, sorted(all_net))


def verify_shortcut_partition(g: WeightedGraph, sp: ShortcutPartition) -> Report:
    """Partition axioms, the strong-diameter bound, and (when the source
    decomposition is attached) the net and assignment-consistency properties."""
    rep = Report("shortcut-partition")
    clusters = sp.clustering.clusters
    seen = set()
    for c in clusters:
        if seen & c:
            rep.fail("clusters overlap")
            return rep
        seen |= c
    if seen != set(range(g.n)):
        rep.fail("clusters do not cover the graph")
        return rep
    bound = sp.diameter_bound
    worst = 0.0
    for c in clusters:
        try:
            d = strong_diameter(g, c)
        except GraphError:
            rep.fail(f"cluster containing {min(c)} is not connected")
            continue
        worst = max(worst, d)
        if d > bound + TOL * max(1.0, bound):
            rep.fail(f"cluster containing {min(c)} has strong diameter {d:g} > {bound:g}")
    rep.stats.update(clusters=len(clusters), max_diameter=worst, diameter_bound=bound)
    if len(sp.centers) != len(clusters):
        rep.fail("one center per cluster required")
        return rep
    for x, c in zip(sp.centers, clusters):
        if x not in c:
            rep.fail(f"center {x} is outside its cluster")
    cd = sp.decomposition
    if cd is None or g.n == 1:
        return rep
    own = cd.owner()
    delta = sp.delta_internal
    for s in cd.supernodes:
        net = [x for x in (sp.net if sp.net is not None else sp.centers) if own[x] == s.id]
        tree = WeightedGraph(g.n, [(a, b, g.length(a, b)) for a, b in s.skeleton_edges])
        sk = set(s.skeleton)
        cover = dijkstra(tree, net, sk)
        if any(cover.get(v, math.inf) > delta + TOL for v in sk):
            rep.fail(f"net of supernode {s.id} does not cover its skeleton within {delta:g}")
        for x in net:
            if x not in sk:
                rep.fail(f"center {x} is not on the skeleton of supernode {s.id}")
                continue
            dx = dijkstra(tree, [x], sk)
            if any(dx[y] < delta - TOL for y in net if y != x):
                rep.fail(f"net points of supernode {s.id} closer than {delta:g}")
                break
    # consistency: the cluster keeps a shortest center path of the supernode
    for x, c in zip(sp.centers, clusters):
        members = cd.supernodes[own[x]].members
        inner = dijkstra(g, [x], c)
        outer = dijkstra(g, [x], members)
        for v in c:
            if abs(inner.get(v, math.inf) - outer[v]) > TOL * max(1.0, outer[v]):
                rep.fail(f"vertex {v} of cluster {x} has no shortest path to its center inside the cluster")
                break
    return rep


def _min_change_paths(g: WeightedGraph, src: int, cid: list[int]):
    """Shortest-path DAG from ``src`` with, per vertex, a predecessor that minimizes
    the number of cluster changes along the path (ties by predecessor id)."""
    dist = dijkstra(g, [src])
    order = sorted(dist, key=lambda v: (dist[v], v))
    changes = {src: 0}
    pred: dict[int, int | None] = {src: None}
    for v in order[1:]:
        best = None
        for p, ln in g.adj[v].items():
            if p in changes and abs(dist[p] + ln - dist[v]) <= TOL * max(1.0, dist[v]):
                key = (changes[p] + (cid[p] != cid[v]), p)
                if best is None or key < best:
                    best = key
        changes[v] = best[0]
        pred[v] = best[1]
    return dist, pred


def verify_low_hop(g: WeightedGraph, sp: ShortcutPartition, h: float | None = None,
                   max_n: int = LOW_HOP_MAX_N) -> Report:
    """All-pairs check of the low-hop property; reports the measured hop constant.

    For each pair a shortest path with the fewest cluster changes is fixed, and the
    hop distance between the endpoint clusters is measured in the quotient restricted
    to clusters meeting that path. ``h_hat`` is the largest ratio of that hop count to
    ``epsilon * ceil(dist / (epsilon * diam))``.
    """
    rep = Report("low-hop")
    if g.n > max_n:
        rep.fail(f"all-pairs low-hop check is limited to n <= {max_n}")
        return rep
    cid = sp.clustering.cluster_of
    q, _ = contract_clusters(g, sp.clustering)
    diam = diameter(g) if g.n > 1 else 0.0
    eps = sp.epsilon
    h_hat = 0.0
    max_hops = 0
    for u in range(g.n):
        dist, pred = _min_change_paths(g, u, cid)
        for v in range(u + 1, g.n):
            if cid[u] == cid[v]:
                continue
            path = {cid[v]}
            x = v
            while pred[x] is not None:
                x = pred[x]
                path.add(cid[x])
            hops = _bfs_hops(q, cid[u], cid[v], path)
            units = eps * max(1, math.ceil(dist[v] / (eps * diam) - TOL))
            max_hops = max(max_hops, hops)
            h_hat = max(h_hat, hops / units)
    q_diam = _quotient_hop_diameter(q)
    rep.stats.update(h_hat=h_hat, max_hops=max_hops, quotient_hop_diameter=q_diam)
    if h is not None and h_hat > h + TOL:
        rep.fail(f"measured hop constant {h_hat:g} exceeds h = {h:g}")
    return rep


def _bfs_hops(q: WeightedGraph, a: int, b: int, allowed: set[int]) -> int:
    seen = {a: 0}
    dq = deque([a])
    while dq:
        x = dq.popleft()
        if x == b:
            return seen[x]
        for y in q.adj[x]:
            if y in allowed and y not in seen:
                seen[y] = seen[x] + 1
                dq.append(y)
    raise GraphError("cluster walk along a shortest path is disconnected")


def _quotient_hop_diameter(q: WeightedGraph) -> int:
    best = 0
    for s in range(q.n):
        seen = {s: 0}
        dq = deque([s])
        while dq:
            x = dq.popleft()
            for y in q.adj[x]:
                if y not in seen:
                    seen[y] = seen[x] + 1
                    dq.append(y)
        best = max(best, max(seen.values()))
    return best


@dataclass
class CutFrequency:
    samples: int
    frequency: dict[tuple[int, int], float]
    beta_hat: float


def estimate_shortcut_cut_probability(g: WeightedGraph, epsilon: float, r: int, samples: int,
                                      rng: RandomSource, **kw) -> CutFrequency:
    """Empirical per-edge cut frequency plus ``beta_hat = max freq * eps * diam / len``."""
    if samples < 1:
        raise GraphError("samples must be positive")
    if g.n <= 1:
        return CutFrequency(samples, {}, 0.0)
    counts = {(u, v): 0 for u, v, _ in g.edges}
    for s in range(samples):
        sp = shortcut_partition(g, epsilon, r, rng.child(s), **kw)
        cid = sp.clustering.cluster_of
        for u, v, _ in g.edges:
            if cid[u] != cid[v]:
                counts[(u, v)] += 1
    diam = diameter(g)
    freq = {e: c / samples for e, c in counts.items()}
    beta = max((freq[(u, v)] * epsilon * diam / ln for u, v, ln in g.edges), default=0.0)
    return CutFrequency(samples, freq, beta)
