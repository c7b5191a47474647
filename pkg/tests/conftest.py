import itertools
import math
import sys

import pytest

from twembed.graph import WeightedGraph


def brute_distance(g: WeightedGraph, u: int, v: int) -> float:
    """Shortest length over all simple paths, by exhaustive DFS (tiny graphs only)."""
    if u == v:
        return 0.0
    best = math.inf

    def walk(x, seen, acc):
        nonlocal best
        if acc >= best:
            return
        if x == v:
            best = acc
            return
        for y, ln in g.adj[x].items():
            if y not in seen:
                seen.add(y)
                walk(y, seen, acc + ln)
                seen.discard(y)

    walk(u, {u}, 0.0)
    return best


def brute_components(g: WeightedGraph, removed):
    """Components via repeated union of edges, independent of the library's traversal."""
    alive = [v for v in range(g.n) if v not in set(removed)]
    label = {v: v for v in alive}

    def find(x):
        while label[x] != x:
            x = label[x]
        return x

    for u, v, _ in g.edges:
        if u in label and v in label:
            a, b = find(u), find(v)
            if a != b:
                label[max(a, b)] = min(a, b)
    groups = {}
    for v in alive:
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def brute_treewidth(g: WeightedGraph) -> int:
    """Minimum over all elimination orderings of the induced width (n <= 7)."""
    best = g.n
    for order in itertools.permutations(range(g.n)):
        nbr = [set(g.adj[v]) for v in range(g.n)]
        width = 0
        gone = set()
        for v in order:
            live = nbr[v] - gone
            width = max(width, len(live))
            for a in live:
                nbr[a] |= live - {a}
            gone.add(v)
        best = min(best, width)
    return best


def random_connected(n, extra, rng):
    """Random spanning tree plus up to ``extra`` chords, unit lengths."""
    edges = {(rng.randrange(v), v) for v in range(1, n)}
    for _ in range(extra):
        u, v = rng.sample(range(n), 2)
        edges.add((min(u, v), max(u, v)))
    return WeightedGraph(n, [(u, v, 1.0) for u, v in edges])


def clique(n, length=1.0):
    return WeightedGraph(n, [(u, v, length) for u in range(n) for v in range(u + 1, n)])


@pytest.fixture
def path4():
    return WeightedGraph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
