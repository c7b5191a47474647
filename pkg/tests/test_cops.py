import pytest

from twembed.cops import (
    CopDecomposition,
    Supernode,
    build_cop_decomposition,
    cut_event_trace,
    threatener_counts,
    verify_cop_decomposition,
)
from twembed.generators import grid, path, random_planar, star
from twembed.graph import GraphError, WeightedGraph
from twembed.rng import RandomSource


def test_single_vertex():
    cd = build_cop_decomposition(WeightedGraph(1), 1.0, 5, RandomSource(0))
    assert len(cd.supernodes) == 1
    assert cd.supernodes[0].skeleton == frozenset({0})
    assert verify_cop_decomposition(WeightedGraph(1), cd).valid


def test_rejects_bad_input():
    with pytest.raises(GraphError):
        build_cop_decomposition(WeightedGraph(2), 1.0, 5, RandomSource(0))
    with pytest.raises(GraphError):
        build_cop_decomposition(path(3), 1.0, 2, RandomSource(0))
    with pytest.raises(GraphError):
        build_cop_decomposition(path(3), 0.0, 5, RandomSource(0))


@pytest.mark.parametrize("seed", range(5))
def test_grid_runs_verify(seed):
    g = grid(8, 8)
    cd = build_cop_decomposition(g, 4.0, 5, RandomSource(seed))
    rep = verify_cop_decomposition(g, cd)
    assert rep.valid, rep.violations
    members = [v for s in cd.supernodes for v in s.members]
    assert sorted(members) == list(range(g.n))
    assert len(cd.supernodes) <= g.n


@pytest.mark.parametrize("seed", range(3))
def test_weighted_planar_runs_verify(seed):
    g = random_planar(60, seed)
    # planar graphs exclude K5, so r = 5 is the smallest valid parameter
    cd = build_cop_decomposition(g, 0.1, 5, RandomSource(seed))
    rep = verify_cop_decomposition(g, cd)
    assert rep.valid, rep.violations


def _single(g, delta, r=5):
    # the whole graph as one supernode whose skeleton is vertex 0
    s = Supernode(0, 0, frozenset({0}), [], frozenset(range(g.n)), (), None, set(range(g.n)))
    return CopDecomposition(g.n, delta, r, [s])


def test_hand_built_single_supernode_passes():
    g = path(5)
    assert verify_cop_decomposition(g, _single(g, 4.0 * 5)).valid


def test_hand_built_radius_violation():
    g = path(10)
    rep = verify_cop_decomposition(g, _single(g, 1.0))
    assert not rep.valid
    assert any("radius" in v for v in rep.violations)


def test_deterministic_and_round_trips():
    g = grid(6, 6)
    a = build_cop_decomposition(g, 2.0, 5, RandomSource(7))
    b = build_cop_decomposition(g, 2.0, 5, RandomSource(7))
    assert a.to_dict() == b.to_dict()
    c = CopDecomposition.from_dict(a.to_dict())
    assert c.to_dict() == a.to_dict()
    assert verify_cop_decomposition(g, c).valid


def test_trace_star_with_huge_delta_cuts_nothing():
    tr = cut_event_trace(star(4), 1000.0, 5, RandomSource(0))
    assert len(tr.decomposition.supernodes) == 1
    assert tr.edge_events == {}


def test_trace_logs_only_cut_edges():
    g = grid(8, 8)
    tr = cut_event_trace(g, 2.0, 5, RandomSource(3))
    own = tr.decomposition.owner()
    cut = {(u, v) for u, v, _ in g.edges if own[u] != own[v]}
    assert set(tr.edge_events) == cut
    assert sum(tr.counts().values()) == len(cut)
    # the traced build is the same build
    assert tr.decomposition.to_dict() == build_cop_decomposition(g, 2.0, 5, RandomSource(3)).to_dict()


def test_threatener_counts_are_finite_and_cover_own_supernode():
    g = grid(8, 8)
    cd = build_cop_decomposition(g, 2.0, 5, RandomSource(1))
    counts = threatener_counts(g, cd)
    assert len(counts) == g.n
    assert all(1 <= c <= len(cd.supernodes) for c in counts)
