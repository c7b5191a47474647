"""Stochastic balanced cuts over a clustering chain, and contraction sequences.

A cut family is built greedily: clusters already used by an earlier cut (unless
protected) become unavailable, the maximally available clusters partition the
piece, and a balanced separator of their contraction becomes the next cut.
Sampling a cut uniformly from the family keeps every eligible cluster's
selection probability at most 1/psi.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .chain import ClusteringChain
from .graph import GraphError, WeightedGraph, components_within, hop_distances
from .report import Report
from .rng import RandomSource
from .treewidth import SeparatorRequest, weighted_balanced_separator

TOL = 1e-12


class CutNotFound(GraphError):
    """No balanced separator within the size cap; carries the contracted instance."""

    def __init__(self, msg, quotient=None, weights=None, tau=None):
        super().__init__(msg)
        self.quotient = quotient
        self.weights = weights
        self.tau = tau


def auto_tau(h_hat: int, aspect_ratio: float, psi: int, c_tau: float = 1.0) -> int:
    """ceil(c_tau * h^2 * ceil(log2 aspect_ratio) * psi), never below 1."""
    logphi = math.ceil(math.log2(aspect_ratio) - 1e-12) if aspect_ratio > 1 else 0
    return max(1, math.ceil(c_tau * h_hat * h_hat * logphi * psi - 1e-9))


def parse_tau(spec, default_c: float = 1.0):
    """``"auto"``, ``"auto:<c>"`` or an integer; returns (mode, value)."""
    if isinstance(spec, int):
        if spec < 1:
            raise GraphError("tau must be positive")
        return "fixed", spec
    s = str(spec).strip()
    if s == "auto":
        return "auto", default_c
    if s.startswith("auto:"):
        c = float(s[5:])
        if not c > 0:
            raise GraphError("c_tau must be positive")
        return "auto", c
    try:
        v = int(s)
    except ValueError:
        raise GraphError(f"tau must be an integer or auto[:c], got {spec!r}") from None
    if v < 1:
        raise GraphError("tau must be positive")
    return "fixed", v


@dataclass
class Cut:
    clusters: tuple[int, ...]

    def __len__(self):
        return len(self.clusters)

    def vertices(self, chain: ClusteringChain) -> set[int]:
        nodes = chain.nodes()
        out: set[int] = set()
        for c in self.clusters:
            out |= nodes[c].vertices
        return out


@dataclass
class CutFamily:
    psi: int
    tau: int
    root: int
    conforming: frozenset[int]
    cuts: list[Cut]
    ledger: dict[int, int] = field(default_factory=dict)
    calibration_events: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "cut-family",
            "psi": self.psi,
            "tau": self.tau,
            "root": self.root,
            "conforming": sorted(self.conforming),
            "cuts": [list(c.clusters) for c in self.cuts],
            "ledger": {str(k): v for k, v in sorted(self.ledger.items())},
            "calibration_events": list(self.calibration_events),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CutFamily":
        return cls(int(d["psi"]), int(d["tau"]), int(d.get("root", 0)),
                   frozenset(int(x) for x in d["conforming"]),
                   [Cut(tuple(int(x) for x in c)) for c in d["cuts"]],
                   {int(k): int(v) for k, v in d.get("ledger", {}).items()},
                   list(d.get("calibration_events", [])))


def _subtree(chain: ClusteringChain, root: int) -> set[int]:
    nodes = chain.nodes()
    out = set()
    stack = [root]
    while stack:
        x = stack.pop()
        out.add(x)
        stack.extend(nodes[x].children)
    return out


def effective_conforming(chain: ClusteringChain, root: int, conforming) -> frozenset[int]:
    """The protected clusters that constrain a cut of the piece: those strictly
    below its root. A protected cluster containing the whole piece would forbid
    every cut and one disjoint from it constrains nothing."""
    below = _subtree(chain, root) - {root}
    return frozenset(x for x in conforming if x in below)


def maximally_available(chain: ClusteringChain, root: int, unavailable: set[int]) -> list[int]:
    """Available clusters whose parent is unavailable, ordered by minimum vertex.
    Singletons are always available, so the result partitions the piece."""
    nodes = chain.nodes()
    out = []
    stack = [root]
    while stack:
        x = stack.pop()
        nd = nodes[x]
        if x != root and (len(nd.vertices) == 1 or x not in unavailable):
            out.append(x)
        else:
            stack.extend(nd.children)
    out.sort(key=lambda x: min(nodes[x].vertices))
    return out


def contract_piece(g: WeightedGraph, chain: ClusteringChain, parts: list[int]) -> tuple[WeightedGraph, dict[int, int]]:
    """Unit-length quotient of the piece by the given clusters (local ids follow
    ``parts``); also returns vertex -> local id."""
    nodes = chain.nodes()
    where = {}
    for i, x in enumerate(parts):
        for v in nodes[x].vertices:
            where[v] = i
    edges = set()
    for v, a in where.items():
        for w in g.adj[v]:
            b = where.get(w)
            if b is not None and a < b:
                edges.add((a, b))
    return WeightedGraph(len(parts), [(a, b, 1.0) for a, b in sorted(edges)]), where


def build_cut_family(g: WeightedGraph, chain: ClusteringChain, weights, conforming, psi: int, tau: int, *,
                     root: int = 0, adaptive: bool = False, tau_cap: int | None = None,
                     method: str = "auto") -> CutFamily:
    """Greedily assemble ``psi`` balanced cuts of the piece ``chain.nodes()[root]``.

    ``weights`` maps vertex id to weight (a list over all of ``g`` or a dict);
    ``conforming`` is a set of chain node ids. With ``adaptive`` the size cap doubles
    on failure up to ``tau_cap``, logging each doubling as a calibration event.
    """
    if psi < 0:
        raise GraphError("psi must be nonnegative")
    if tau < 1:
        raise GraphError("tau must be positive")
    nodes = chain.nodes()
    piece = nodes[root].vertices
    if len(piece) < 2:
        raise GraphError("a single-vertex piece has no proper clusters to cut")
    w = _weight_lookup(weights)
    total = sum(w(v) for v in piece)
    if total <= 0:
        raise GraphError("total weight on the piece must be positive")
    protect = effective_conforming(chain, root, conforming)
    fam = CutFamily(psi, tau, root, frozenset(conforming), [])
    cap = tau_cap if tau_cap is not None else max(tau, len(piece))
    used: set[int] = set()
    while len(fam.cuts) < psi:
        unavailable = {root} | (used - protect)
        parts = maximally_available(chain, root, unavailable)
        q, _ = contract_piece(g, chain, parts)
        qw = [float(sum(w(v) for v in nodes[x].vertices)) for x in parts]
        sep = weighted_balanced_separator(q, SeparatorRequest(qw, fam.tau), method=method)
        if sep is None and method == "heuristic" and q.n <= 18:
            sep = weighted_balanced_separator(q, SeparatorRequest(qw, fam.tau), method="exhaustive")
        if sep is None:
            if adaptive and fam.tau * 2 <= cap:
                fam.calibration_events.append({"cut": len(fam.cuts), "tau_from": fam.tau,
                                               "tau_to": fam.tau * 2, "quotient_n": q.n})
                fam.tau *= 2
                continue
            raise CutNotFound(f"no balanced separator of size <= {fam.tau} among {q.n} clusters",
                              q, qw, fam.tau)
        cut = tuple(sorted(parts[i] for i in sep))
        idx = len(fam.cuts)
        for x in cut:
            if len(nodes[x].vertices) > 1 and x not in protect:
                fam.ledger[x] = idx
            used.add(x)
        fam.cuts.append(Cut(cut))
    return fam


def _weight_lookup(weights):
    if isinstance(weights, dict):
        return lambda v: weights.get(v, 0.0)
    return lambda v: weights[v]


def sample_cut(family: CutFamily, rng: RandomSource) -> Cut:
    if not family.cuts:
        raise GraphError("cannot sample from an empty cut family")
    return family.cuts[rng.randrange(len(family.cuts))]


def verify_cut(g: WeightedGraph, chain: ClusteringChain, cut: Cut, weights, conforming, tau: int,
               root: int = 0) -> Report:
    """Respecting, balanced (every component at most W/2), conforming and size checks."""
    rep = Report("cut")
    nodes = chain.nodes()
    below = _subtree(chain, root) - {root}
    piece = nodes[root].vertices
    w = _weight_lookup(weights)
    seen: set[int] = set()
    for x in cut.clusters:
        if x not in below:
            rep.fail(f"cluster {x} is not a proper cluster of the piece chain")
            continue
        vs = nodes[x].vertices
        if seen & vs:
            rep.fail(f"cluster {x} overlaps another cluster of the cut")
        seen |= vs
    total = sum(w(v) for v in piece)
    worst = 0.0
    for comp in components_within(g, piece - seen):
        cw = sum(w(v) for v in comp)
        worst = max(worst, cw)
    if worst > total / 2 + TOL * max(1.0, total):
        rep.fail(f"a component has weight {worst:g} > W/2 = {total / 2:g}")
    protect = effective_conforming(chain, root, conforming)
    for x in cut.clusters:
        for y in protect:
            if x != y and x in below and nodes[x].vertices < nodes[y].vertices:
                rep.fail(f"cluster {x} lies strictly inside protected cluster {y}")
    if len(cut.clusters) > tau:
        rep.fail(f"cut has {len(cut.clusters)} clusters > tau = {tau}")
    rep.stats.update(size=len(cut.clusters), max_component_weight=worst, total_weight=total)
    return rep


def verify_cut_family(g: WeightedGraph, chain: ClusteringChain, fam: CutFamily, weights) -> Report:
    rep = Report("cut-family")
    if len(fam.cuts) != fam.psi:
        rep.fail(f"family has {len(fam.cuts)} cuts, expected psi = {fam.psi}")
    nodes = chain.nodes()
    protect = effective_conforming(chain, fam.root, fam.conforming)
    count: dict[int, int] = {}
    for i, c in enumerate(fam.cuts):
        rep.merge(verify_cut(g, chain, c, weights, fam.conforming, fam.tau, fam.root), f"cut {i}: ")
        for x in c.clusters:
            if len(nodes[x].vertices) > 1 and x not in protect:
                count[x] = count.get(x, 0) + 1
    reused = sorted(x for x, k in count.items() if k > 1)
    if reused:
        rep.fail(f"non-singleton unprotected cluster {reused[0]} appears in {count[reused[0]]} cuts")
    rep.stats.update(psi=fam.psi, tau=fam.tau, sizes=[len(c) for c in fam.cuts])
    return rep


# -- contraction sequences ---------------------------------------------------


@dataclass
class ContractionSequence:
    """Rounds of vertex-disjoint connected groups, each contracted to one vertex.

    Group ids refer to the graph produced by the previous round. After a round the
    new vertices (contracted groups plus untouched vertices) are numbered by the
    smallest old id they contain.
    """

    rounds: list[list[list[int]]]
    a: int
    b: int
    c: int

    @property
    def total(self) -> int:
        return sum(len(r) for r in self.rounds)

    def to_dict(self) -> dict:
        return {"kind": "contraction-sequence", "a": self.a, "b": self.b, "c": self.c,
                "rounds": [[sorted(h) for h in r] for r in self.rounds]}

    @classmethod
    def from_dict(cls, d: dict) -> "ContractionSequence":
        return cls([[list(h) for h in r] for r in d["rounds"]], int(d["a"]), int(d["b"]), int(d["c"]))


def contract_round(g: WeightedGraph, groups) -> tuple[WeightedGraph, list[int]]:
    """Contract disjoint groups; returns the unit-length result and old -> new ids."""
    label = list(range(g.n))
    blocks: dict[int, list[int]] = {}
    for grp in groups:
        m = min(grp)
        for v in grp:
            label[v] = m
    for v in range(g.n):
        blocks.setdefault(label[v], []).append(v)
    order = sorted(blocks)
    new_id = {m: i for i, m in enumerate(order)}
    mapping = [new_id[label[v]] for v in range(g.n)]
    edges = set()
    for u, v, _ in g.edges:
        a, b = mapping[u], mapping[v]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return WeightedGraph(len(order), [(a, b, 1.0) for a, b in sorted(edges)]), mapping


def _hop_radius(g: WeightedGraph, group: set[int]) -> int:
    best = math.inf
    for x in sorted(group):
        d = hop_distances(g, x, group)
        if len(d) != len(group):
            return -1
        best = min(best, max(d.values()))
    return int(best)


def verify_contraction_sequence(g: WeightedGraph, seq: ContractionSequence) -> Report:
    """Replay the rounds: disjoint connected groups of hop radius <= c, ending in one vertex."""
    rep = Report("contraction-sequence")
    cur = g
    worst = 0
    if len(seq.rounds) > seq.b:
        rep.fail(f"{len(seq.rounds)} rounds > b = {seq.b}")
    for i, rnd in enumerate(seq.rounds, 1):
        seen: set[int] = set()
        for grp in rnd:
            gs = set(grp)
            if not gs or any(not 0 <= v < cur.n for v in gs):
                rep.fail(f"round {i}: group with invalid vertex ids")
                return rep
            if seen & gs:
                rep.fail(f"round {i}: groups overlap")
                return rep
            seen |= gs
            rad = _hop_radius(cur, gs)
            if rad < 0:
                rep.fail(f"round {i}: group containing {min(gs)} is disconnected")
                return rep
            worst = max(worst, rad)
            if rad > seq.c:
                rep.fail(f"round {i}: group containing {min(gs)} has radius {rad} > c = {seq.c}")
        cur, _ = contract_round(cur, rnd)
    if cur.n != 1:
        rep.fail(f"sequence ends with {cur.n} vertices, not one")
    if seq.total > seq.a:
        rep.fail(f"{seq.total} contracted groups > a = {seq.a}")
    rep.stats.update(a=seq.total, b=len(seq.rounds), max_radius=worst)
    return rep


def contraction_sequence_from_chain(g: WeightedGraph, chain: ClusteringChain, unavailable,
                                    root: int = 0) -> tuple[WeightedGraph, ContractionSequence]:
    """Contract the piece quotient by its maximally available clusters level by level.

    Round i contracts every unavailable non-singleton cluster whose lowest level is
    i, seen as its children's quotient. Returns the starting quotient and the
    sequence with (a, b, c) = (#contracted, k, measured hop radius bound).
    """
    nodes = chain.nodes()
    unav = {x for x in unavailable if len(nodes[x].vertices) > 1} | {root}
    below = _subtree(chain, root)
    unav &= below
    parts = maximally_available(chain, root, unav)
    q0, _ = contract_piece(g, chain, parts)
    # current vertex of each chain node that has been collapsed
    rep_of = {x: i for i, x in enumerate(parts)}
    # the piece root collapses at its lowest level; b counts the levels of the chain below it
    k = nodes[root].high if len(nodes[root].vertices) > 1 else 0
    last = nodes[root].low if k else 0
    rounds: list[list[list[int]]] = []
    cur = q0
    worst = 0
    for i in range(1, last + 1):
        grp_nodes = sorted((x for x in unav if nodes[x].low == i), key=lambda x: min(nodes[x].vertices))
        groups = [sorted(rep_of[c] for c in nodes[x].children) for x in grp_nodes]
        if groups:
            for grp in groups:
                worst = max(worst, _hop_radius(cur, set(grp)))
            cur, mapping = contract_round(cur, groups)
            rep_of = {x: mapping[v] for x, v in rep_of.items()}
            for x, grp in zip(grp_nodes, groups):
                rep_of[x] = mapping[grp[0]]
        rounds.append(groups)
    a = sum(len(r) for r in rounds)
    return q0, ContractionSequence(rounds, a, k, max(worst, 1))


def _neighbourhood_round(g: WeightedGraph, centers: list[int], absorbed: set[int] | None = None):
    """Groups: each center plus the not-yet-taken neighbours it claims (lowest center wins)."""
    owner: dict[int, int] = {}
    cs = set(centers)
    for z in sorted(centers):
        for w in sorted(g.adj[z]):
            if w not in cs and w not in owner:
                owner[w] = z
    groups: dict[int, list[int]] = {z: [z] for z in centers}
    for w, z in owner.items():
        groups[z].append(w)
    return [sorted(v) for z, v in sorted(groups.items()) if len(v) > 1]


def grid_contraction_sequence(p: int, q: int) -> tuple[WeightedGraph, ContractionSequence]:
    """Contract a pq x pq unit grid: grow p^2 block centers for up to 2q rounds,
    then repeatedly contract a greedy maximal independent set's neighbourhoods."""
    if p < 2 or q < 1:
        raise GraphError("need p >= 2 and q >= 1")
    side = p * q
    edges = []
    for i in range(side):
        for j in range(side):
            v = i * side + j
            if j + 1 < side:
                edges.append((v, v + 1, 1.0))
            if i + 1 < side:
                edges.append((v, v + side, 1.0))
    g = WeightedGraph(side * side, edges)
    off = q // 2
    z = sorted((bi * q + off) * side + (bj * q + off) for bi in range(p) for bj in range(p))
    rounds: list[list[list[int]]] = []
    cur = g
    centers = z
    for _ in range(2 * q):
        groups = _neighbourhood_round(cur, centers)
        if not groups:
            break
        rounds.append(groups)
        cur, mapping = contract_round(cur, groups)
        centers = sorted({mapping[c] for c in centers})
        if cur.n == len(centers):
            break
    while cur.n > 1:
        mis: list[int] = []
        blocked: set[int] = set()
        for v in range(cur.n):
            if v not in blocked:
                mis.append(v)
                blocked.add(v)
                blocked.update(cur.adj[v])
        groups = _neighbourhood_round(cur, mis)
        rounds.append(groups)
        cur, _ = contract_round(cur, groups)
    a = sum(len(r) for r in rounds)
    return g, ContractionSequence(rounds, a, len(rounds), 1)


def net_points(g: WeightedGraph, spacing: float) -> list[int]:
    """Greedy (ascending id) maximal set with pairwise hop distance > spacing."""
    z: list[int] = []
    near = [math.inf] * g.n
    for v in range(g.n):
        if near[v] > spacing:
            z.append(v)
            dq = deque([v])
            dist = {v: 0}
            while dq:
                x = dq.popleft()
                if dist[x] < near[x]:
                    near[x] = dist[x]
                if dist[x] >= spacing:
                    continue
                for y in g.adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        dq.append(y)
    return z
