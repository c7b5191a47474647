"""Embedding into a bounded-treewidth host graph by recursive balanced cuts.

Each call holds terminals T inside a piece (a chain cluster), boundary
terminals and boundary clusters. Small terminal sets become a clique with exact
distances. Otherwise a stochastic balanced cut F is sampled. The recursion
descends into every cut cluster and into every component left after removing
the cut, and each component call also receives one representative per cut
cluster. The pieces are glued at a root bag holding the representatives and the
boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .chain import ClusteringChain, build_chain
from .cuts import CutNotFound, auto_tau, build_cut_family, parse_tau, sample_cut, verify_cut_family
from .graph import GraphError, WeightedGraph, components_within, dijkstra, distance_matrix, graph_metrics
from .report import Report
from .rng import RandomSource
from .treewidth import TreeDecomposition, verify_tree_decomposition

TOL = 1e-9
MAX_RESTARTS = 40


class _Restart(Exception):
    def __init__(self, cause: CutNotFound, call: dict):
        super().__init__(str(cause))
        self.cause = cause
        self.call = call


@dataclass
class EmbeddingResult:
    host: WeightedGraph
    tree_decomposition: TreeDecomposition
    tau: int
    psi: int
    k: int
    calls: list[dict] = field(default_factory=list)
    calibration_events: list[dict] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return max((c["depth"] for c in self.calls), default=0)

    @property
    def width(self) -> int:
        return self.tree_decomposition.width

    def stats(self) -> dict:
        return {"depth": self.depth, "width": self.width, "n_calls": len(self.calls),
                "tau": self.tau, "psi": self.psi, "k": self.k,
                "calibration_events": list(self.calibration_events)}

    def to_dict(self) -> dict:
        st = self.stats()
        st["calls"] = self.calls
        return {"kind": "embedding", "n": self.host.n,
                "host": [[u, v, ln] for u, v, ln in self.host.edges],
                "tree_decomposition": self.tree_decomposition.to_dict(), "stats": st}

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingResult":
        st = d["stats"]
        host = WeightedGraph(int(d["n"]), [(int(u), int(v), float(ln)) for u, v, ln in d["host"]])
        return cls(host, TreeDecomposition.from_dict(d["tree_decomposition"]), int(st["tau"]),
                   int(st["psi"]), int(st["k"]), list(st.get("calls", [])),
                   list(st.get("calibration_events", [])))


class _Embedder:
    def __init__(self, g: WeightedGraph, chain: ClusteringChain, psi: int, tau: int, rng: RandomSource,
                 check_cuts: bool = False):
        self.g = g
        self.check_cuts = check_cuts
        self.chain = chain
        self.nodes = chain.nodes()
        self.psi = psi
        self.tau = tau
        self.rng = rng
        self.host: dict[tuple[int, int], float] = {}
        self.bags: list[set[int]] = []
        self.tree: list[tuple[int, int]] = []
        self.calls: list[dict] = []
        self._dist: dict[int, dict[int, float]] = {}

    def dist(self, u: int, v: int) -> float:
        d = self._dist.get(u)
        if d is None:
            d = self._dist[u] = dijkstra(self.g, [u])
        return d[v]

    def add_edge(self, u: int, v: int):
        if u != v:
            a, b = min(u, v), max(u, v)
            self.host[(a, b)] = self.dist(a, b)

    def phi(self, t: int, piece: int, nb: int) -> float:
        return 5 * math.log2(t) + self.nodes[piece].scale + nb / self.tau

    def run(self, terminals: set[int], piece: int, boundary: set[int], bclusters: set[int],
            depth: int, parent: int | None, path: tuple) -> tuple[int, list[int]]:
        """Returns the root bag id and all bag ids of this call's decomposition."""
        cid = len(self.calls)
        rec = {"id": cid, "parent": parent, "depth": depth, "t": len(terminals),
               "boundary": sorted(boundary), "piece": piece, "scale": self.nodes[piece].scale,
               "phi": self.phi(len(terminals), piece, len(boundary)),
               "boundary_clusters": sorted(bclusters), "cut": [], "case": "base", "root_bag": -1}
        self.calls.append(rec)
        if len(terminals) <= 4 * self.tau:
            ts = sorted(terminals)
            for i, u in enumerate(ts):
                for v in ts[i + 1:]:
                    self.add_edge(u, v)
            self.bags.append(set(ts))
            rec["root_bag"] = len(self.bags) - 1
            return rec["root_bag"], [rec["root_bag"]]
        if len(boundary) > 4 * self.tau:
            rec["case"], s = "boundary", boundary
        else:
            rec["case"], s = "terminals", terminals
        cut = self.cut_helper(s, piece, bclusters, path, rec)
        rec["cut"] = list(cut)
        g, nodes = self.g, self.nodes
        cut_vertices: set[int] = set()
        reps: dict[int, int] = {}
        for c in cut:
            vs = nodes[c].vertices
            cut_vertices |= vs
            inside = vs & terminals
            if inside:
                reps[c] = min(inside)
        t_f = set(reps.values())
        root = len(self.bags)
        self.bags.append(t_f | boundary)
        rec["root_bag"] = root
        mine = [root]
        for j, (c, vc) in enumerate(sorted(reps.items())):
            vs = nodes[c].vertices
            t_c = terminals & vs
            b_c = boundary & vs
            bc_c = {x for x in bclusters if nodes[x].vertices < vs}
            sub_root, sub_bags = self.run(t_c, c, b_c, bc_c, depth + 1, cid, path + ("c", j))
            for b in sub_bags:
                self.bags[b].add(vc)
            self.tree.append((root, sub_root))
            mine.extend(sub_bags)
            for u in t_c:
                self.add_edge(vc, u)
        piece_vs = nodes[piece].vertices
        comps = [set(h) for h in components_within(g, piece_vs - cut_vertices)]
        comps.sort(key=min)
        j = 0
        for h in comps:
            t_h = terminals & h
            if not t_h:
                continue
            b_h = (boundary & h) | t_f
            bc_h = set(reps) | {x for x in bclusters if _rep_in(nodes[x].vertices & boundary, h)}
            sub_root, sub_bags = self.run(t_h | t_f, piece, b_h, bc_h, depth + 1, cid, path + ("h", j))
            j += 1
            self.tree.append((root, sub_root))
            mine.extend(sub_bags)
        return root, mine

    def cut_helper(self, s: set[int], piece: int, bclusters: set[int], path: tuple, rec: dict):
        weights = {v: 1.0 for v in s}
        try:
            fam = build_cut_family(self.g, self.chain, weights, bclusters, self.psi, self.tau, root=piece)
        except CutNotFound as e:
            raise _Restart(e, rec) from None
        if self.check_cuts:
            rep = verify_cut_family(self.g, self.chain, fam, weights)
            rec["family_violations"] = rep.violations[:3]
        return sample_cut(fam, self.rng.child(*path)).clusters


def _rep_in(reps: set[int], h: set[int]) -> bool:
    return bool(reps) and reps <= h


def resolve_tau(tau_config, chain: ClusteringChain, g: WeightedGraph, psi: int) -> int:
    mode, val = parse_tau(tau_config)
    if mode == "fixed":
        return val
    return auto_tau(max(chain.hop_bound, 1), graph_metrics(g).aspect_ratio, psi, val)


def embed(g: WeightedGraph, r: int, psi: int, tau_config, rng: RandomSource, *,
          chain: ClusteringChain | None = None, divisor: float | None = None,
          check_cuts: bool = False) -> EmbeddingResult:
    """Sample a chain (unless given) and embed ``g``; ``tau_config`` is an int or
    ``"auto[:c]"``. A failed cut doubles tau and restarts the whole recursion.
    With ``check_cuts`` every cut family built along the way is verified and its
    violations are recorded on the call."""
    if psi < 1:
        raise GraphError("psi must be positive")
    if chain is None:
        kw = {} if divisor is None else {"divisor": divisor}
        chain = build_chain(g, r, rng.child("chain"), **kw)
    tau = resolve_tau(tau_config, chain, g, psi)
    events: list[dict] = []
    for attempt in range(MAX_RESTARTS):
        em = _Embedder(g, chain, psi, tau, rng.child("embed", attempt), check_cuts)
        root_node = chain.nodes()[0].id
        try:
            root, _ = em.run(set(range(g.n)), root_node, set(), set(), 0, None, ())
        except _Restart as e:
            events.append({"attempt": attempt, "tau_from": tau, "tau_to": 2 * tau,
                           "call": e.call["id"], "depth": e.call["depth"], "reason": str(e.cause)})
            tau *= 2
            continue
        host = WeightedGraph(g.n, [(a, b, ln) for (a, b), ln in sorted(em.host.items())])
        # put the root bag first so the stored root index is 0 after relabelling
        order = [root] + [i for i in range(len(em.bags)) if i != root]
        pos = {b: i for i, b in enumerate(order)}
        td = TreeDecomposition([frozenset(em.bags[b]) for b in order],
                               sorted((min(pos[a], pos[b]), max(pos[a], pos[b])) for a, b in em.tree), 0)
        for c in em.calls:
            c["root_bag"] = pos[c["root_bag"]]
        return EmbeddingResult(host, td, tau, psi, chain.k, em.calls, events)
    raise GraphError(f"embedding did not succeed after {MAX_RESTARTS} tau doublings")


def verify_embedding(g: WeightedGraph, res: EmbeddingResult, tau: int | None = None,
                     chain: ClusteringChain | None = None) -> Report:
    """Exact checks: valid decomposition of the host, width <= 6 tau + depth,
    non-contraction on every pair, depth within the root potential, per-call
    potential drop of at least one, |boundary| <= 5 tau, boundary in root bag.
    With the chain, every boundary cluster must also lie strictly inside its
    call's piece and hold exactly one boundary terminal."""
    rep = Report("embedding")
    tau = res.tau if tau is None else tau
    host, td = res.host, res.tree_decomposition
    if host.n != g.n:
        rep.fail(f"host has {host.n} vertices, graph has {g.n}")
        return rep
    rep.merge(verify_tree_decomposition(host, td), "decomposition: ")
    depth = res.depth
    if td.width > 6 * tau + depth:
        rep.fail(f"width {td.width} > 6*tau + depth = {6 * tau + depth}")
    worst = math.inf
    dg, dh = distance_matrix(g), distance_matrix(host)
    for u in range(g.n):
        for v in range(u + 1, g.n):
            a, b = float(dg[u, v]), float(dh[u, v])
            if b < a - TOL * max(1.0, a):
                rep.fail(f"host distance {b:g} < graph distance {a:g} for ({u}, {v})")
            if 0 < a < math.inf:
                worst = min(worst, b / a)
    phi_root = 5 * math.log2(g.n) + res.k if g.n > 0 else 0.0
    if depth > phi_root + TOL:
        rep.fail(f"recursion depth {depth} > root potential {phi_root:.3f}")
    by_id = {c["id"]: c for c in res.calls}
    for c in res.calls:
        if len(c["boundary"]) > 5 * tau:
            rep.fail(f"call {c['id']} has |boundary| = {len(c['boundary'])} > 5*tau")
        p = c["parent"]
        if p is not None and c["phi"] > by_id[p]["phi"] - 1 + TOL:
            rep.fail(f"call {c['id']} potential {c['phi']:.3f} does not drop by 1 from {by_id[p]['phi']:.3f}")
        for msg in c.get("family_violations", []):
            rep.fail(f"call {c['id']} cut family: {msg}")
        rb = c["root_bag"]
        if not 0 <= rb < len(td.bags) or not set(c["boundary"]) <= td.bags[rb]:
            rep.fail(f"call {c['id']} boundary is not in its root bag")
        if chain is not None:
            nodes = chain.nodes()
            piece = nodes[c["piece"]].vertices
            bset = set(c["boundary"])
            for x in c["boundary_clusters"]:
                vs = nodes[x].vertices
                if not vs < piece or len(vs & bset) != 1:
                    rep.fail(f"call {c['id']}: boundary cluster {x} is not strictly inside the piece "
                             f"with exactly one boundary terminal")
    rep.stats.update(depth=depth, width=td.width, tau=tau, n_calls=len(res.calls),
                     phi_root=phi_root, min_ratio=worst if worst < math.inf else 1.0)
    return rep


def pair_distances(graph: WeightedGraph, pairs) -> list[float]:
    if not pairs:
        return []
    d = distance_matrix(graph)
    return [float(d[u, v]) for u, v in pairs]


@dataclass
class DistortionStats:
    pairs: list[tuple[int, int]]
    mean_ratio: list[float]
    max_ratio: list[float]
    expected_distortion: float
    mean_excess: float
    min_ratio: float

    def to_dict(self) -> dict:
        return {"expected_distortion": self.expected_distortion, "mean_excess": self.mean_excess,
                "min_ratio": self.min_ratio, "pairs": len(self.pairs)}


def measure_distortion(g: WeightedGraph, results: list[EmbeddingResult], pairs=None) -> DistortionStats:
    """Per pair (default: every edge) mean and max of host/graph distance over the results.

    ``expected_distortion`` is the largest per-pair mean ratio; ``mean_excess`` the
    average over pairs of (mean ratio - 1).
    """
    if not results:
        raise GraphError("need at least one embedding")
    if pairs is None:
        pairs = [(u, v) for u, v, _ in g.edges]
    pairs = list(pairs)
    if not pairs:
        return DistortionStats([], [], [], 1.0, 0.0, 1.0)
    base = pair_distances(g, pairs)
    sums = [0.0] * len(pairs)
    mx = [0.0] * len(pairs)
    lo = math.inf
    for res in results:
        hd = pair_distances(res.host, pairs)
        for i, (b, a) in enumerate(zip(hd, base)):
            ratio = b / a
            sums[i] += ratio
            mx[i] = max(mx[i], ratio)
            lo = min(lo, ratio)
    means = [s / len(results) for s in sums]
    return DistortionStats(pairs, means, mx, max(means), sum(m - 1 for m in means) / len(means), lo)
