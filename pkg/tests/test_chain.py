import itertools

import pytest

from twembed.chain import (
    ClusteringChain,
    build_chain,
    estimate_separating_beta,
    level_ratio,
    split_scale,
    subchain,
    verify_chain,
)
from twembed.generators import grid, path, random_planar
from twembed.graph import GraphError, WeightedGraph, normalize
from twembed.rng import RandomSource


def test_single_vertex():
    ch = build_chain(WeightedGraph(1), 5, RandomSource(0))
    assert ch.k == 0 and ch.levels == [[frozenset({0})]]
    rep = verify_chain(WeightedGraph(1), ch)
    assert rep.valid and rep.stats["h_hat"] == 0


def test_unit_edge():
    g = WeightedGraph(2, [(0, 1, 1.0)])
    ch = build_chain(g, 5, RandomSource(0))
    assert ch.k == 1
    assert ch.levels[1] == [frozenset({0, 1})]
    assert sorted(map(sorted, ch.levels[0])) == [[0], [1]]
    rep = verify_chain(g, ch)
    assert rep.valid and rep.stats["h_hat"] == 1
    assert split_scale(ch, 0, 1) == 0


def test_rejects_unnormalized():
    with pytest.raises(GraphError):
        build_chain(WeightedGraph(2, [(0, 1, 0.5)]), 5, RandomSource(0))


@pytest.mark.parametrize("seed", range(6))
def test_grid_chains_verify(seed):
    g = grid(8, 8)
    ch = build_chain(g, 5, RandomSource(seed))
    rep = verify_chain(g, ch)
    assert rep.valid, rep.violations
    assert rep.stats["h_hat"] == ch.hop_bound


@pytest.mark.parametrize("seed", range(3))
def test_planar_chains_verify_with_small_divisor(seed):
    g = normalize(random_planar(60, seed))[0]
    ch = build_chain(g, 5, RandomSource(seed), divisor=2)
    assert verify_chain(g, ch).valid


def test_oversize_cluster_reported():
    g = path(4)
    ch = ClusteringChain(2, [[frozenset({v}) for v in range(4)],
                             [frozenset({0, 1, 2, 3})],
                             [frozenset(range(4))]],
                         [[0, 0, 0, 0], [0], []])
    rep = verify_chain(g, ch)
    assert not rep.valid
    assert any("strong diameter" in v for v in rep.violations)


def test_hop_bound_violation():
    g = path(3)
    ch = ClusteringChain(2, [[frozenset({v}) for v in range(3)],
                             [frozenset({v}) for v in range(3)],
                             [frozenset(range(3))]],
                         [[0, 1, 2], [0, 0, 0], []])
    assert verify_chain(g, ch).valid
    assert not verify_chain(g, ch, h=1).valid


def test_subchain_root_and_singleton():
    g = grid(6, 6)
    ch = build_chain(g, 5, RandomSource(1))
    top = subchain(ch, ch.k, 0)
    assert top.levels == ch.levels and top.parents == ch.parents
    leaf = subchain(ch, 0, 3)
    assert leaf.k == 0 and leaf.levels == [[ch.levels[0][3]]]
    with pytest.raises(GraphError):
        subchain(ch, 0, 10 ** 6)


def test_subchain_counting_identity():
    g = normalize(random_planar(50, 4))[0]
    ch = build_chain(g, 5, RandomSource(4), divisor=2)
    for i in range(ch.k + 1):
        subs = [subchain(ch, i, j) for j in range(len(ch.levels[i]))]
        for s, c in zip(subs, ch.levels[i]):
            assert verify_chain(g, s, vertices=c).valid
        for lower in range(i + 1):
            assert sum(len(s.levels[lower]) for s in subs) == len(ch.levels[lower])


def test_split_scale_long_edge():
    # the length-5 edge cannot sit inside a level <= 2 cluster (diameter <= 4)
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 5.0)])
    for seed in range(5):
        ch = build_chain(g, 5, RandomSource(seed))
        assert ch.k == 3
        assert split_scale(ch, 1, 2) == 2
        assert 0 <= split_scale(ch, 0, 1) < ch.k


def test_split_scale_rejects_equal():
    ch = build_chain(path(3), 5, RandomSource(0))
    with pytest.raises(GraphError):
        split_scale(ch, 1, 1)


def test_split_scale_constant_on_separating_cluster():
    for seed in range(3):
        g = grid(5, 5)
        ch = build_chain(g, 5, RandomSource(seed))
        for u, v in itertools.combinations(range(g.n), 2):
            s = split_scale(ch, u, v)
            c = next(c for c in ch.levels[s] if u in c)
            assert v not in c
            for w in c:
                assert split_scale(ch, w, v) == s


def test_split_scale_is_highest_separating_level():
    g = grid(4, 4)
    ch = build_chain(g, 5, RandomSource(2))
    for u, v in itertools.combinations(range(g.n), 2):
        s = split_scale(ch, u, v)
        for i in range(s + 1, ch.k + 1):
            assert ch.cluster_of(i)[u] == ch.cluster_of(i)[v]


def test_top_level_never_cuts():
    g = grid(5, 5)
    est = estimate_separating_beta(g, 5, 6, RandomSource(0))
    k = len(est.frequency) - 1
    assert all(f == 0 for f in est.frequency[k].values())
    # level 0 is all singletons: every edge is cut
    assert all(f == 1 for f in est.frequency[0].values())
    assert est.beta_hat >= 1
    assert len(level_ratio(est)) == k - 1


def test_determinism_and_round_trip():
    g = normalize(random_planar(40, 1))[0]
    a = build_chain(g, 5, RandomSource(9), divisor=2)
    b = build_chain(g, 5, RandomSource(9), divisor=2)
    assert a.to_dict() == b.to_dict()
    back = ClusteringChain.from_dict(a.to_dict())
    assert back.to_dict() == a.to_dict()
    assert verify_chain(g, back).valid


def test_nodes_cover_distinct_sets():
    g = grid(6, 6)
    ch = build_chain(g, 5, RandomSource(3), divisor=2)
    nodes = ch.nodes()
    assert len({nd.vertices for nd in nodes}) == len(nodes)
    for nd in nodes:
        if nd.parent is not None:
            par = nodes[nd.parent]
            assert nd.vertices < par.vertices and par.low == nd.high + 1
