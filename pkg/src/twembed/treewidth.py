"""Tree decompositions: validation, min-fill construction, exact treewidth and
weighted balanced separators."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .graph import GraphError, WeightedGraph, connected_components
from .report import Report

EXACT_TREEWIDTH_MAX_N = 16
EXHAUSTIVE_SEPARATOR_MAX_N = 18
HEURISTIC_PRUNE_BAGS = 4


@dataclass
class TreeDecomposition:
    bags: list[frozenset[int]]
    edges: list[tuple[int, int]] = field(default_factory=list)
    root: int = 0

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def to_dict(self) -> dict:
        return {
            "bags": [sorted(b) for b in self.bags],
            "edges": [[i, j] for i, j in self.edges],
            "root": self.root,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeDecomposition":
        return cls(
            [frozenset(b) for b in d["bags"]],
            [(int(i), int(j)) for i, j in d["edges"]],
            int(d.get("root", 0)),
        )


@dataclass
class SeparatorRequest:
    weights: list[float]
    size_cap: int
    balance: float = 0.5

    def __post_init__(self):
        if not 0 < self.balance <= 1:
            raise GraphError("balance must lie in (0, 1]")
        if sum(self.weights) <= 0:
            raise GraphError("total vertex weight must be positive")


def verify_tree_decomposition(g: WeightedGraph, td: TreeDecomposition, vertices=None) -> Report:
    """Check the three tree-decomposition axioms, plus that the bag graph is a tree.

    ``vertices`` restricts the cover requirement to a vertex subset (used when ``g``
    carries isolated ids that are not part of the decomposed graph).
    """
    rep = Report("tree-decomposition")
    nb = len(td.bags)
    rep.stats["width"] = td.width
    rep.stats["bags"] = nb
    if nb == 0:
        if g.n or vertices:
            rep.fail("no bags")
        return rep
    tree_adj: list[list[int]] = [[] for _ in range(nb)]
    for i, j in td.edges:
        if not (0 <= i < nb and 0 <= j < nb) or i == j:
            rep.fail(f"bad tree edge ({i}, {j})")
            return rep
        tree_adj[i].append(j)
        tree_adj[j].append(i)
    if not 0 <= td.root < nb:
        rep.fail(f"root {td.root} out of range")
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in tree_adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    if len(td.edges) != nb - 1 or len(seen) != nb:
        rep.fail("bag graph is not a tree")
        return rep

    covered = set().union(*td.bags)
    want = set(range(g.n)) if vertices is None else set(vertices)
    missing = sorted(want - covered)
    if missing:
        rep.fail(f"vertex {missing[0]} is in no bag ({len(missing)} uncovered)")
    stray = sorted(covered - want) if vertices is not None else sorted(v for v in covered if not 0 <= v < g.n)
    if stray:
        rep.fail(f"bag holds vertex {stray[0]} outside the graph")

    holders: dict[int, list[int]] = {}
    for i, b in enumerate(td.bags):
        for v in b:
            holders.setdefault(v, []).append(i)
    for u, v, _ in g.edges:
        if vertices is not None and (u not in want or v not in want):
            continue
        hu = holders.get(u, [])
        if not any(v in td.bags[i] for i in hu):
            rep.fail(f"edge ({u}, {v}) is in no bag")
            break
    for v in sorted(holders):
        hs = holders[v]
        hset = set(hs)
        reach = {hs[0]}
        stack = [hs[0]]
        while stack:
            x = stack.pop()
            for y in tree_adj[x]:
                if y in hset and y not in reach:
                    reach.add(y)
                    stack.append(y)
        if len(reach) != len(hset):
            rep.fail(f"bags holding vertex {v} are not connected in the tree")
            break
    return rep


def min_fill_ordering(g: WeightedGraph) -> list[int]:
    """Greedy min-fill elimination order; ties broken by degree, then vertex id."""
    nbrs = [set(g.adj[v]) for v in range(g.n)]
    alive = set(range(g.n))
    order = []
    while alive:
        best = None
        for v in sorted(alive):
            nv = nbrs[v]
            fill = 0
            lst = sorted(nv)
            for a, b in combinations(lst, 2):
                if b not in nbrs[a]:
                    fill += 1
            key = (fill, len(nv), v)
            if best is None or key < best:
                best = key
                if fill == 0 and len(nv) <= 1:
                    break
        v = best[2]
        order.append(v)
        nv = nbrs[v]
        for a in nv:
            nbrs[a].update(nv)
            nbrs[a].discard(a)
            nbrs[a].discard(v)
        alive.discard(v)
        nbrs[v] = set()
    return order


def decomposition_from_ordering(g: WeightedGraph, order: list[int]) -> TreeDecomposition:
    """Standard elimination-ordering decomposition: one bag per vertex."""
    n = g.n
    if n == 0:
        return TreeDecomposition([], [], 0)
    pos = {v: i for i, v in enumerate(order)}
    nbrs = [set(g.adj[v]) for v in range(n)]
    bags: list[frozenset[int]] = [frozenset()] * n
    later: list[set[int]] = [set() for _ in range(n)]
    for v in order:
        hi = {w for w in nbrs[v] if pos[w] > pos[v]}
        later[v] = hi
        bags[pos[v]] = frozenset(hi | {v})
        for a in hi:
            nbrs[a].update(hi)
            nbrs[a].discard(a)
    edges = []
    roots = []
    for v in order:
        if later[v]:
            p = min(later[v], key=lambda w: pos[w])
            edges.append((pos[v], pos[p]))
        else:
            roots.append(pos[v])
    # one root per component; chain extra roots under the last one
    root = roots[-1]
    for r in roots[:-1]:
        edges.append((r, root))
    return TreeDecomposition(bags, edges, root)


def heuristic_tree_decomposition(g: WeightedGraph) -> TreeDecomposition:
    return decomposition_from_ordering(g, min_fill_ordering(g))


def exact_treewidth(g: WeightedGraph) -> int:
    """Exact treewidth by search over eliminated vertex subsets (small graphs only)."""
    n = g.n
    if n > EXACT_TREEWIDTH_MAX_N:
        raise GraphError(f"exact treewidth is limited to n <= {EXACT_TREEWIDTH_MAX_N}")
    if n <= 1:
        return 0
    nbr = [0] * n
    for u, v, _ in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    full = (1 << n) - 1

    def q_size(s: int, v: int) -> int:
        # vertices outside s+v reachable from v through s
        comp = 1 << v
        frontier = comp
        out = 0
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= nbr[low.bit_length() - 1]
                f ^= low
            out |= nxt & ~s & ~comp
            nxt &= s & ~comp
            comp |= nxt
            frontier = nxt
        return bin(out & ~(1 << v)).count("1")

    def feasible(k: int) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            s = stack.pop()
            if bin(full & ~s).count("1") <= k + 1:
                return True
            rest = full & ~s
            while rest:
                low = rest & -rest
                rest ^= low
                v = low.bit_length() - 1
                t = s | low
                if t in seen:
                    continue
                if q_size(s, v) <= k:
                    seen.add(t)
                    stack.append(t)
        return False

    k = 1 if g.edges else 0
    while not feasible(k):
        k += 1
    return k


def _component_weights(g: WeightedGraph, weights, removed) -> list[float]:
    return [sum(weights[v] for v in comp) for comp in connected_components(g, removed)]


def is_balanced_separator(g: WeightedGraph, weights, sep, balance: float = 0.5) -> bool:
    total = sum(weights)
    limit = balance * total
    return all(w <= limit + 1e-12 * max(1.0, total) for w in _component_weights(g, weights, sep))


def _exhaustive_separator(g: WeightedGraph, weights, cap: int, balance: float):
    n = g.n
    nbr = [0] * n
    for u, v, _ in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    total = sum(weights)
    limit = balance * total + 1e-12 * max(1.0, total)
    full = (1 << n) - 1

    def ok(removed: int) -> bool:
        rest = full & ~removed
        while rest:
            low = rest & -rest
            comp = low
            frontier = low
            while frontier:
                nxt = 0
                f = frontier
                while f:
                    b = f & -f
                    nxt |= nbr[b.bit_length() - 1]
                    f ^= b
                nxt &= rest & ~comp
                comp |= nxt
                frontier = nxt
            rest &= ~comp
            w = 0.0
            c = comp
            while c:
                b = c & -c
                w += weights[b.bit_length() - 1]
                c ^= b
            if w > limit:
                return False
        return True

    for size in range(0, min(cap, n) + 1):
        for combo in combinations(range(n), size):
            mask = 0
            for v in combo:
                mask |= 1 << v
            if ok(mask):
                return set(combo)
    return None


def _branch_bound_bags(td: TreeDecomposition, weights, limit: float) -> list[frozenset[int]]:
    """Bags certified balanced by subtree sums: every component left by a bag lies
    in one child branch or outside the bag's subtree, so parts of weight <= limit
    suffice."""
    nb = len(td.bags)
    nbr: list[list[int]] = [[] for _ in range(nb)]
    for i, j in td.edges:
        nbr[i].append(j)
        nbr[j].append(i)
    parent = [-1] * nb
    order = [td.root]
    seen = {td.root}
    for b in order:
        for c in nbr[b]:
            if c not in seen:
                seen.add(c)
                parent[c] = b
                order.append(c)
    top: dict[int, int] = {}
    for b in order:
        for v in td.bags[b]:
            if v not in top:
                top[v] = b
    own = [0.0] * nb
    for v, b in top.items():
        own[b] += weights[v]
    sub = own[:]
    for b in reversed(order[1:]):
        sub[parent[b]] += sub[b]
    total = sub[td.root]
    out = []
    for b in range(nb):
        kids = [sub[c] for c in nbr[b] if parent[c] == b]
        outside = total - sub[b] - sum(weights[v] for v in td.bags[b] if top[v] != b)
        if outside <= limit and all(w <= limit for w in kids):
            out.append(td.bags[b])
    return out


def _heuristic_separator(g: WeightedGraph, weights, cap: int, balance: float):
    td = heuristic_tree_decomposition(g)
    total = sum(weights)
    limit = balance * total + 1e-12 * max(1.0, total)
    candidates = _branch_bound_bags(td, weights, limit)
    if not candidates:
        candidates = [b for b in td.bags if is_balanced_separator(g, weights, b, balance)]
    if not candidates:
        return None
    best = None
    # pruning is quadratic in the bag, so only the smallest few candidates get it
    for bag in sorted(candidates, key=lambda b: (len(b), sorted(b)))[:HEURISTIC_PRUNE_BAGS]:
        sep = set(bag)
        for v in sorted(bag, key=lambda x: (weights[x], x)):
            trial = sep - {v}
            if is_balanced_separator(g, weights, trial, balance):
                sep = trial
        if best is None or len(sep) < len(best):
            best = sep
        if len(best) <= 1:
            break
    if len(best) > cap:
        return None
    return best


def weighted_balanced_separator(
    g: WeightedGraph, req: SeparatorRequest, method: str = "auto"
) -> set[int] | None:
    """A vertex set of size at most ``req.size_cap`` whose removal leaves components of
    weight at most ``balance * W``; ``None`` when the chosen method finds none.

    ``method="auto"`` is exhaustive (minimum size, then lexicographic) for small graphs
    and otherwise scans the min-fill decomposition for a balanced bag and prunes it.
    """
    if len(req.weights) != g.n:
        raise GraphError("weight vector length does not match the graph")
    if method == "auto":
        method = "exhaustive" if g.n <= EXHAUSTIVE_SEPARATOR_MAX_N else "heuristic"
    if method == "exhaustive":
        return _exhaustive_separator(g, req.weights, req.size_cap, req.balance)
    if method == "heuristic":
        return _heuristic_separator(g, req.weights, req.size_cap, req.balance)
    raise GraphError(f"unknown separator method {method!r}")
