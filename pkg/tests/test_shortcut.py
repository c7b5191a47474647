import pytest

from twembed.generators import grid, path, random_planar
from twembed.graph import GraphError, VertexPartition, WeightedGraph, diameter, strong_diameter
from twembed.rng import RandomSource
from twembed.shortcut import (
    ShortcutPartition,
    estimate_shortcut_cut_probability,
    shortcut_partition,
    verify_low_hop,
    verify_shortcut_partition,
)


def test_single_vertex():
    sp = shortcut_partition(WeightedGraph(1), 0.5, 5, RandomSource(0))
    assert sp.clustering.clusters == [frozenset({0})]


def test_rejects_bad_epsilon():
    with pytest.raises(GraphError):
        shortcut_partition(path(3), 1.0, 5, RandomSource(0))


@pytest.mark.parametrize("seed", range(4))
def test_grid_clusters_within_half_diameter(seed):
    g = grid(10, 10)
    sp = shortcut_partition(g, 0.5, 5, RandomSource(seed))
    rep = verify_shortcut_partition(g, sp)
    assert rep.valid, rep.violations
    for c in sp.clustering.clusters:
        assert strong_diameter(g, c) <= 9


@pytest.mark.parametrize("seed", range(4))
def test_weighted_planar_partitions(seed):
    g = random_planar(80, seed)
    sp = shortcut_partition(g, 0.5, 5, RandomSource(seed))
    rep = verify_shortcut_partition(g, sp)
    assert rep.valid, rep.violations
    # real lengths leave room for clusters larger than one vertex
    assert len(sp.clustering.clusters) < g.n
    assert rep.stats["max_diameter"] <= 0.5 * diameter(g) + 1e-9


def test_single_cluster_needs_no_hops():
    g = path(4)
    sp = ShortcutPartition(VertexPartition.from_clusters([set(range(4))]), 0.5, 1.0, [0], 3.0)
    rep = verify_low_hop(g, sp)
    assert rep.stats["h_hat"] == 0 and rep.stats["max_hops"] == 0


def test_singletons_on_path_one_hop_per_unit():
    # epsilon * diam = 1: hop length equals the distance, one hop per unit of
    # ceil(dist / (epsilon * diam)), i.e. epsilon * h_hat = 1
    n = 7
    eps = 1 / (n - 1)
    g = path(n)
    sp = ShortcutPartition(VertexPartition.singletons(n), eps, 0.0, list(range(n)), n - 1)
    rep = verify_low_hop(g, sp)
    assert rep.stats["max_hops"] == n - 1
    assert eps * rep.stats["h_hat"] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(3))
def test_quotient_hop_diameter_at_most_h_plus_one(seed):
    for g in (grid(8, 8), random_planar(70, seed)):
        sp = shortcut_partition(g, 0.5, 5, RandomSource(seed))
        st = verify_low_hop(g, sp).stats
        assert st["quotient_hop_diameter"] <= st["h_hat"] + 1


def test_low_hop_size_cap():
    sp = shortcut_partition(grid(15, 15), 0.5, 5, RandomSource(0))
    assert not verify_low_hop(grid(15, 15), sp, max_n=200).valid


def test_tampered_partition_fails():
    g = grid(6, 6)
    sp = shortcut_partition(g, 0.5, 5, RandomSource(0))
    bad = ShortcutPartition(VertexPartition.from_clusters([set(range(36))]), sp.epsilon,
                            sp.delta_internal, [0], sp.scale)
    assert not verify_shortcut_partition(g, bad).valid


def test_json_round_trip():
    g = random_planar(40, 2)
    sp = shortcut_partition(g, 0.5, 5, RandomSource(2))
    back = ShortcutPartition.from_dict(sp.to_dict())
    assert back.to_dict() == sp.to_dict()
    assert verify_shortcut_partition(g, back).valid


def test_cut_probability_table():
    assert estimate_shortcut_cut_probability(WeightedGraph(1), 0.5, 5, 3, RandomSource(0)).frequency == {}
    # growth radius (up to delta / r) far above the diameter: one cluster every time
    est = estimate_shortcut_cut_probability(path(3), 0.9, 5, 5, RandomSource(0), divisor=1e-6)
    assert all(f == 0 for f in est.frequency.values())
    est = estimate_shortcut_cut_probability(grid(5, 5), 0.5, 5, 4, RandomSource(0))
    assert set(est.frequency) == {(u, v) for u, v, _ in grid(5, 5).edges}
    assert est.beta_hat >= 0
