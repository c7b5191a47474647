"""Stochastic buffered cop decompositions.

The builder grows supernodes around shortest-path skeletons and pads every
previously created supernode with a randomly sized buffer, following the
BuildTree / GrowBuffer recursion. Each supernode keeps its initial domain and
the supernodes that domain saw, which is what the final-domain bookkeeping
needs.
"""
from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass, field

from .graph import (
    GraphError,
    WeightedGraph,
    components_within,
    connected_components,
    dijkstra,
    is_connected_subset,
)
from .report import Report
from .rng import RandomSource
from .treewidth import TreeDecomposition, verify_tree_decomposition

TOL = 1e-9


@dataclass
class Supernode:
    id: int
    root: int
    skeleton: frozenset[int]
    skeleton_edges: list[tuple[int, int]]
    dom0: frozenset[int]
    seen: tuple[int, ...]
    parent: int | None
    members: set[int] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "root": self.root,
            "members": sorted(self.members),
            "skeleton": sorted(self.skeleton),
            "skeleton_edges": [list(e) for e in self.skeleton_edges],
            "dom0": sorted(self.dom0),
            "seen": list(self.seen),
            "parent": self.parent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Supernode":
        return cls(
            id=int(d["id"]),
            root=int(d["root"]),
            skeleton=frozenset(d["skeleton"]),
            skeleton_edges=[(int(a), int(b)) for a, b in d["skeleton_edges"]],
            dom0=frozenset(d["dom0"]),
            seen=tuple(d.get("seen", ())),
            parent=d["parent"],
            members=set(d["members"]),
        )


@dataclass
class CopDecomposition:
    n: int
    delta: float
    r: int
    supernodes: list[Supernode]

    @property
    def gamma(self) -> float:
        return self.delta / self.r

    @property
    def width_param(self) -> int:
        return self.r - 1

    def owner(self) -> list[int]:
        own = [-1] * self.n
        for s in self.supernodes:
            for v in s.members:
                own[v] = s.id
        return own

    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {s.id: [] for s in self.supernodes}
        for s in self.supernodes:
            if s.parent is not None:
                ch[s.parent].append(s.id)
        return ch

    def roots(self) -> list[int]:
        return [s.id for s in self.supernodes if s.parent is None]

    def ancestors(self, sid: int) -> list[int]:
        out = []
        p = self.supernodes[sid].parent
        while p is not None:
            out.append(p)
            p = self.supernodes[p].parent
        return out

    def domains(self) -> dict[int, set[int]]:
        """Final domain of every supernode: members of its whole subtree."""
        ch = self.children()
        dom: dict[int, set[int]] = {}
        order = []
        stack = list(self.roots())
        while stack:
            x = stack.pop()
            order.append(x)
            stack.extend(ch[x])
        for x in reversed(order):
            d = set(self.supernodes[x].members)
            for c in ch[x]:
                d |= dom[c]
            dom[x] = d
        return dom

    def adjacent_ancestors(self, g: WeightedGraph) -> dict[int, list[int]]:
        """For each supernode, the ancestors with an edge into its final domain."""
        own = self.owner()
        dom = self.domains()
        out = {}
        for s in self.supernodes:
            anc = set(self.ancestors(s.id))
            hit = set()
            for v in dom[s.id]:
                for w in g.adj[v]:
                    o = own[w]
                    if o in anc:
                        hit.add(o)
            out[s.id] = sorted(hit)
        return out

    def expansion(self, g: WeightedGraph) -> TreeDecomposition:
        """The tree decomposition whose bag at a supernode is it plus its adjacent ancestors."""
        adj_anc = self.adjacent_ancestors(g)
        bags = []
        for s in self.supernodes:
            b = set(s.members)
            for a in adj_anc[s.id]:
                b |= self.supernodes[a].members
            bags.append(frozenset(b))
        edges = [(s.id, s.parent) for s in self.supernodes if s.parent is not None]
        roots = self.roots()
        for extra in roots[1:]:
            edges.append((extra, roots[0]))
        return TreeDecomposition(bags, edges, roots[0] if roots else 0)

    def to_dict(self) -> dict:
        return {
            "kind": "cop",
            "n": self.n,
            "delta": self.delta,
            "r": self.r,
            "supernodes": [s.to_dict() for s in self.supernodes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CopDecomposition":
        return cls(int(d["n"]), float(d["delta"]), int(d["r"]),
                   [Supernode.from_dict(x) for x in d["supernodes"]])


@contextmanager
def _deep_recursion(limit: int = 20000):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


class _Builder:
    def __init__(self, g: WeightedGraph, delta: float, r: int, rng: RandomSource, trace: bool):
        self.g = g
        self.delta = delta
        self.r = r
        self.step = delta / r
        self.rng = rng
        self.owner = [-1] * g.n
        self.nodes: list[Supernode] = []
        self.trace = trace
        self.calls = 0
        self.assigned_by: list[tuple[int, str] | None] = [None] * g.n
        self.edge_events: dict[tuple[int, int], tuple[str, int]] = {}
        self.call_log: list[dict] = []

    # -- helpers -------------------------------------------------------
    def seen_by(self, h: set[int]) -> list[int]:
        own = self.owner
        out = set()
        for u in h:
            for w in self.g.adj[u]:
                if own[w] >= 0:
                    out.add(own[w])
        return sorted(out)

    def witnesses(self, h: set[int], seen: list[int]) -> list[int]:
        own = self.owner
        best: dict[int, int] = {}
        for u in sorted(h):
            for w in self.g.adj[u]:
                o = own[w]
                if o >= 0 and o not in best:
                    best[o] = u
        return [best[x] for x in seen]

    def dom_now(self, x: Supernode) -> set[int]:
        blocked = set(x.seen)
        own = self.owner
        return {v for v in x.dom0 if own[v] not in blocked}

    def assign(self, v: int, sid: int, call: int, kind: str) -> None:
        self.owner[v] = sid
        self.nodes[sid].members.add(v)
        self.assigned_by[v] = (call, kind)

    def log_edges(self, h: set[int], before: dict[int, int], kind: str, call: int, split_set=None):
        """Record edges inside ``h`` that this call separated, first event wins."""
        if not self.trace:
            return
        g = self.g
        own = self.owner
        for u in h:
            for w in g.adj[u]:
                if w < u or w not in h:
                    continue
                key = (u, w)
                if key in self.edge_events:
                    continue
                if split_set is not None:
                    if u in split_set and w in split_set and own[u] != own[w]:
                        self.edge_events[key] = ("split", call)
                    continue
                au = own[u] != before[u]
                aw = own[w] != before[w]
                if au != aw:
                    self.edge_events[key] = (kind, call)

    # -- the two procedures ---------------------------------------------
    def build_tree(self, h: set[int], parent: int | None) -> int:
        call = self.calls
        self.calls += 1
        g = self.g
        v = min(h)
        seen = self.seen_by(h)
        wit = self.witnesses(h, seen)
        dist, pred = dijkstra(g, [v], h, with_pred=True)
        # union of shortest paths from v to one witness per seen supernode
        skel_edges: set[tuple[int, int]] = set()
        for t in wit:
            x = t
            while pred[x] is not None:
                e = (min(x, pred[x]), max(x, pred[x]))
                if e in skel_edges:
                    break
                skel_edges.add(e)
                x = pred[x]
        skel = {v} | {a for e in skel_edges for a in e}
        sid = len(self.nodes)
        node = Supernode(sid, v, frozenset(skel), sorted(skel_edges), frozenset(h), tuple(seen), parent)
        self.nodes.append(node)
        before = {u: self.owner[u] for u in h} if self.trace else {}
        for x in sorted(skel):
            self.assign(x, sid, call, "build")
        alpha = self.rng.uniform(0.0, 1.0)
        radius = alpha * self.step
        dskel = dijkstra(g, skel, h)
        for x, d in sorted(dskel.items()):
            if d <= radius and self.owner[x] < 0:
                self.assign(x, sid, call, "build")
        self.log_edges(h, before, "build", call)
        if self.trace:
            self.call_log.append({"call": call, "kind": "build", "supernode": sid,
                                  "skeleton": sorted(skel), "domain": sorted(h)})

        seen_set = set(seen)
        rest = {u for u in h if self.owner[u] < 0}
        for comp in components_within(g, rest):
            hc = set(comp)
            seen_c = set(self.seen_by(hc))
            xs = [x for x in seen if x in seen_set and x not in seen_c]
            self.grow_buffer(xs, hc)

        remaining = {u for u in h if self.owner[u] < 0}
        for comp in components_within(g, remaining):
            self.build_tree(set(comp), sid)
        return sid

    def grow_buffer(self, xs: list[int], h: set[int]) -> None:
        if not xs:
            return
        call = self.calls
        self.calls += 1
        g = self.g
        x = self.nodes[xs[0]]
        seen_h = self.seen_by(h)
        dom = self.dom_now(x)
        boundary = set()
        for u in h:
            for w in g.adj[u]:
                if w not in h and w in dom:
                    boundary.add(w)
        alpha = self.rng.uniform(1.0, 2.0)
        radius = alpha * self.step
        buffer: set[int] = set()
        if boundary:
            db = dijkstra(g, boundary, dom)
            buffer = {u for u in h if db.get(u, float("inf")) <= radius}
        offsets = {y: self.rng.uniform(0.0, self.step) for y in seen_h}
        before = {u: self.owner[u] for u in h} if self.trace else {}
        if buffer:
            own = self.owner
            best: dict[int, tuple[float, int]] = {}
            for y in seen_h:
                src = [b for b in boundary if own[b] == y]
                if not src:
                    continue
                dy = dijkstra(g, src, dom)
                oy = offsets[y]
                for u in buffer:
                    d = dy.get(u)
                    if d is None:
                        continue
                    key = (d + oy, y)
                    if u not in best or key < best[u]:
                        best[u] = key
            for u in sorted(buffer):
                if u not in best:
                    raise GraphError(f"buffer vertex {u} reaches no boundary supernode")
            for u in sorted(buffer):
                self.assign(u, best[u][1], call, "buffer")
        if self.trace:
            self.log_edges(h, before, "buffer", call)
            self.log_edges(h, before, "split", call, split_set=buffer)
            self.call_log.append({"call": call, "kind": "buffer", "processes": x.id,
                                  "buffer": sorted(buffer), "domain": sorted(h)})

        rest_x = xs[1:]
        remaining = {u for u in h if self.owner[u] < 0}
        for comp in components_within(g, remaining):
            hc = set(comp)
            seen_c = set(self.seen_by(hc))
            nxt = list(rest_x)
            for y in seen_h:
                if y not in seen_c and y not in nxt:
                    nxt.append(y)
            self.grow_buffer(nxt, hc)


def _check_input(g: WeightedGraph, delta: float, r: int) -> None:
    if g.n == 0:
        raise GraphError("empty graph")
    if len(connected_components(g)) != 1:
        raise GraphError("graph is disconnected")
    if not delta > 0:
        raise GraphError("delta must be positive")
    if r < 3:
        raise GraphError("r must be at least 3")


def _run(g, delta, r, rng, trace):
    _check_input(g, delta, r)
    b = _Builder(g, float(delta), int(r), rng, trace)
    with _deep_recursion():
        b.build_tree(set(range(g.n)), None)
    for s in b.nodes:
        s.members = set(s.members)
    return b, CopDecomposition(g.n, float(delta), int(r), b.nodes)


def build_cop_decomposition(g: WeightedGraph, delta: float, r: int, rng: RandomSource) -> CopDecomposition:
    """Sample a (4*delta, delta/r, r-1)-buffered cop decomposition of a connected graph."""
    return _run(g, delta, r, rng, trace=False)[1]


@dataclass
class CutEventTrace:
    decomposition: CopDecomposition
    edge_events: dict[tuple[int, int], tuple[str, int]]
    assigned_by: list[tuple[int, str] | None]
    threateners: list[int]
    calls: int
    call_log: list[dict]

    def counts(self) -> dict[str, int]:
        out = {"build": 0, "buffer": 0, "split": 0}
        for kind, _ in self.edge_events.values():
            out[kind] += 1
        return out


def threatener_counts(g: WeightedGraph, cd: CopDecomposition) -> list[int]:
    """Per vertex, how many supernodes X have distance <= 2*delta from it inside dom0(X)."""
    counts = [0] * g.n
    lim = 2 * cd.delta + TOL
    for s in cd.supernodes:
        d = dijkstra(g, s.members, s.dom0)
        for v, dv in d.items():
            if dv <= lim:
                counts[v] += 1
    return counts


def cut_event_trace(g: WeightedGraph, delta: float, r: int, rng: RandomSource) -> CutEventTrace:
    """Build a decomposition while recording, for every cut edge, the call type that cut it."""
    b, cd = _run(g, delta, r, rng, trace=True)
    own = cd.owner()
    events = {e: ev for e, ev in b.edge_events.items() if own[e[0]] != own[e[1]]}
    return CutEventTrace(cd, events, b.assigned_by, threatener_counts(g, cd), b.calls, b.call_log)


def verify_cop_decomposition(g: WeightedGraph, cd: CopDecomposition) -> Report:
    """Check partition, radius, skeleton, buffer and expansion properties."""
    rep = Report("cop-decomposition")
    delta, r = cd.delta, cd.r
    gamma = delta / r
    nodes = cd.supernodes
    rep.stats.update(supernodes=len(nodes), delta=delta, r=r)

    own = [-1] * g.n
    for s in nodes:
        if not s.members:
            rep.fail(f"supernode {s.id} is empty")
        for v in s.members:
            if not 0 <= v < g.n:
                rep.fail(f"supernode {s.id} holds invalid vertex {v}")
                return rep
            if own[v] >= 0:
                rep.fail(f"vertex {v} is in supernodes {own[v]} and {s.id}")
                return rep
            own[v] = s.id
    if -1 in own:
        rep.fail(f"vertex {own.index(-1)} is in no supernode")
        return rep
    ids = [s.id for s in nodes]
    if ids != list(range(len(nodes))):
        rep.fail("supernode ids are not 0..m-1")
        return rep
    roots = cd.roots()
    if len(roots) != 1:
        rep.fail(f"partition tree has {len(roots)} roots")
        return rep
    for s in nodes:
        seen = set()
        p = s.parent
        while p is not None:
            if p in seen or not 0 <= p < len(nodes):
                rep.fail(f"parent chain of supernode {s.id} is not a path to the root")
                return rep
            seen.add(p)
            p = nodes[p].parent

    dom = cd.domains()
    adj_anc = cd.adjacent_ancestors(g)
    max_radius = 0.0
    max_leaves = 0
    radius_bad = skel_bad = buf_bad = anc_bad = False
    for s in nodes:
        if not is_connected_subset(g, s.members):
            rep.fail(f"supernode {s.id} is not connected")
            continue
        # radius from the skeleton inside the supernode
        if not s.skeleton <= s.members:
            rep.fail(f"skeleton of supernode {s.id} leaves the supernode")
            continue
        d = dijkstra(g, s.skeleton, s.members)
        rad = max(d.values()) if len(d) == len(s.members) else float("inf")
        max_radius = max(max_radius, rad)
        if rad > 4 * delta + TOL and not radius_bad:
            rep.fail(f"supernode {s.id} has radius {rad:g} > 4*delta = {4 * delta:g}")
            radius_bad = True
        # skeleton is a shortest-path tree of the final domain rooted at s.root
        if not skel_bad:
            msg = _check_skeleton(g, s, dom[s.id])
            if msg:
                rep.fail(msg)
                skel_bad = True
        deg: dict[int, int] = {}
        for a, b in s.skeleton_edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        leaves = sum(1 for v, k in deg.items() if k == 1 and v != s.root)
        max_leaves = max(max_leaves, leaves)
        if leaves > r - 2:
            rep.flag(f"skeleton of supernode {s.id} has {leaves} leaves > r-2 = {r - 2}")
        anc = adj_anc[s.id]
        if len(anc) > r - 2 and not anc_bad:
            rep.fail(f"supernode {s.id} has {len(anc)} adjacent ancestors > r-2 = {r - 2}")
            anc_bad = True
        for a in anc:
            if not any(own[w] == a for x in s.skeleton for w in g.adj[x]):
                if not anc_bad:
                    rep.fail(f"adjacent ancestor {a} of supernode {s.id} has no edge to its skeleton")
                    anc_bad = True
                break

    # buffer: far from every non-adjacent ancestor, measured inside that ancestor's domain
    min_buffer = float("inf")
    for x in nodes:
        dx = dijkstra(g, x.members, dom[x.id])
        stack = list(cd.children()[x.id])
        ch = cd.children()
        while stack:
            e = stack.pop()
            stack.extend(ch[e])
            sn = nodes[e]
            adjacent = any(own[w] == x.id for v in sn.members for w in g.adj[v])
            if adjacent:
                continue
            m = min(dx.get(v, float("inf")) for v in dom[e])
            min_buffer = min(min_buffer, m)
            if m < gamma - TOL and not buf_bad:
                rep.fail(f"domain of supernode {e} comes within {m:g} < delta/r = {gamma:g} "
                         f"of non-adjacent ancestor {x.id}")
                buf_bad = True

    td = cd.expansion(g)
    tdr = verify_tree_decomposition(g, td)
    rep.merge(tdr, "expansion: ")
    most = max((1 + len(adj_anc[s.id]) for s in nodes), default=0)
    if most > r - 1:
        rep.fail(f"an expansion bag is a union of {most} supernodes > r-1 = {r - 1}")
    rep.stats.update(max_radius=max_radius, max_skeleton_leaves=max_leaves,
                     min_buffer=min_buffer, expansion_width=td.width, max_bag_supernodes=most)
    return rep


def _check_skeleton(g: WeightedGraph, s: Supernode, domain: set[int]) -> str | None:
    verts = set(s.skeleton)
    if s.root not in verts:
        return f"skeleton of supernode {s.id} misses its root"
    if len(s.skeleton_edges) != len(verts) - 1:
        return f"skeleton of supernode {s.id} is not a tree"
    tadj: dict[int, list[int]] = {v: [] for v in verts}
    for a, b in s.skeleton_edges:
        if a not in verts or b not in verts or not g.has_edge(a, b):
            return f"skeleton of supernode {s.id} uses a non-edge ({a}, {b})"
        tadj[a].append(b)
        tadj[b].append(a)
    tdist = {s.root: 0.0}
    stack = [s.root]
    while stack:
        u = stack.pop()
        for w in tadj[u]:
            if w not in tdist:
                tdist[w] = tdist[u] + g.length(u, w)
                stack.append(w)
    if len(tdist) != len(verts):
        return f"skeleton of supernode {s.id} is disconnected"
    dd = dijkstra(g, [s.root], domain)
    for v, tv in tdist.items():
        if abs(dd.get(v, float("inf")) - tv) > TOL * max(1.0, tv):
            return (f"skeleton of supernode {s.id} is not a shortest-path tree in its domain "
                    f"(vertex {v}: tree {tv:g}, domain {dd.get(v, float('inf')):g})")
    return None
