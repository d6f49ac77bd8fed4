import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from sartsim.art import (OverlayError, build_art, art_route, cluster_join, cluster_leave,
                         rsi_refresh)
from sartsim.keyspace import Universe, make_partition, partition_for
from sartsim.lrt import leftmost_label


def oracle_owner(overlay, key):
    cw = overlay.partition.cluster_width
    live = [c for c in overlay.clusters if (c - 1) * cw <= key]
    return live[-1] if live else overlay.clusters[0]


def test_seven_clusters_shape():
    ov = build_art(partition_for(clusters=7), clusters=7)
    assert ov.shape.sizes == (1, 2, 4)
    assert all(len(ov.rsi[c]) == 3 for c in ov.clusters)


def test_single_cluster():
    ov = build_art(partition_for(clusters=1), clusters=1)
    assert ov.rsi[1] == []
    assert art_route(ov, 1, 0).hops == 0
    rsi_refresh(ov, 5)
    assert ov.rsi[1] == []


def test_zero_clusters_rejected():
    with pytest.raises(OverlayError):
        build_art(partition_for(clusters=4), clusters=[])


def test_routing_entries_256():
    ov = build_art(partition_for(clusters=256), clusters=256)
    assert max(ov.routing_entries(c) for c in ov.clusters) <= 9


def test_seven_clusters_exhaustive():
    ov = build_art(make_partition(Universe(10)), clusters=7, seed=1)
    for start in ov.clusters:
        for key in range(0, 1 << 10, 3):
            t = art_route(ov, start, key)
            assert t.start == start and t.end == oracle_owner(ov, key)
            assert t.hops <= ov.hop_bound()


@pytest.mark.parametrize("b", [2, 4, 16])
def test_256_hop_bound(b):
    ov = build_art(partition_for(clusters=256), b=b, clusters=256, seed=2)
    rng = random.Random(b)
    cw = ov.partition.cluster_width
    worst = 0
    for _ in range(3000):
        t = art_route(ov, rng.randint(1, 256), rng.randrange(256 * cw))
        worst = max(worst, t.hops)
    ll = math.log2(math.log2(256))
    assert worst <= ll ** 2 + 3 * ll + 2


def test_join_grows_levels():
    part = partition_for(clusters=16)
    ov = build_art(part, clusters=1)
    cluster_join(ov, 2)
    assert ov.shape.sizes == (1, 1)
    ov = build_art(part, clusters=7)
    cluster_join(ov, 8)
    assert ov.shape.num_levels == 4
    assert ov.position(8) == leftmost_label(3) == 8
    ov.check()
    with pytest.raises(OverlayError):
        cluster_join(ov, 8)


def test_leave_matches_direct_build():
    part = partition_for(clusters=8)
    ov = build_art(part, clusters=8)
    cluster_leave(ov, 8)
    direct = build_art(part, clusters=7)
    assert ov.shape == direct.shape and ov.ownership() == direct.ownership()
    ov.check()
    with pytest.raises(OverlayError):
        cluster_leave(build_art(part, clusters=1), 1)


def test_leave_rejoin_roundtrip():
    part = partition_for(clusters=40)
    ov = build_art(part, clusters=40, seed=3)
    before = ov.ownership()
    cluster_leave(ov, 17)
    assert ov.ownership() != before
    cluster_join(ov, 17)
    assert ov.ownership() == before


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(1, 65))))
def test_random_join_order_equals_batch(order):
    part = partition_for(clusters=64)
    ov = build_art(part, clusters=[order[0]])
    for ci in order[1:]:
        cluster_join(ov, ci)
    ov.check()
    direct = build_art(part, clusters=64)
    assert ov.shape == direct.shape and ov.ownership() == direct.ownership()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_refresh_keeps_routes_correct(seed):
    ov = build_art(partition_for(clusters=256), clusters=256)
    rsi_refresh(ov, seed)
    ov.check()
    rng = random.Random(seed)
    top = 256 * ov.partition.cluster_width - 1
    for _ in range(35):
        key = rng.randint(0, top)
        assert art_route(ov, rng.randint(1, 256), key).end == oracle_owner(ov, key)


def test_refresh_same_seed_same_tables():
    a = build_art(partition_for(clusters=100), clusters=100)
    b = build_art(partition_for(clusters=100), clusters=100)
    rsi_refresh(a, 11)
    rsi_refresh(b, 11)
    assert a.rsi == b.rsi


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_churn_keeps_routing_correct(seed):
    rng = random.Random(seed)
    part = partition_for(clusters=120)
    ov = build_art(part, clusters=rng.sample(range(1, 121), 30), seed=seed)
    for _ in range(150):
        dead = [c for c in range(1, 121) if c not in ov]
        if rng.random() < 0.5 and dead:
            cluster_join(ov, rng.choice(dead))
        elif len(ov) > 1:
            cluster_leave(ov, rng.choice(ov.clusters))
    ov.check()
    for _ in range(100):
        key = rng.randrange(part.universe.size)
        t = art_route(ov, rng.choice(ov.clusters), key)
        assert t.end == oracle_owner(ov, key)
    assert ov.ownership() == build_art(part, clusters=ov.clusters).ownership()
