import math
import random

import pytest

from sartsim.chord import ChordError, build_ring, chord_lookup, chord_range
from sartsim.keyspace import owner_peer, partition_for


def ring_of(n, placement="dense"):
    part = partition_for(peers=n)
    return build_ring(n, part, seed=1, placement=placement)


def test_eight_ring_fingers():
    ring = ring_of(8)
    assert ring.fingers[0] == [1, 2, 4]


def test_single_peer_ring():
    ring = ring_of(1)
    assert set(ring.fingers[0]) == {0}
    assert chord_lookup(ring, 1, 0).hops == 0


@pytest.mark.parametrize("n", [5, 64, 100])
def test_successor_cycle(n):
    ring = ring_of(n, "hashed")
    cur, seen = ring.ids[0], set()
    while cur not in seen:
        seen.add(cur)
        cur = ring.next_id(cur)
    assert len(seen) == n


def test_eight_ring_route():
    ring = ring_of(8)
    key = ring.partition.peer_range(6)[0]      # ring id 5
    t = chord_lookup(ring, 1, key)
    assert [ring.node_of[p] for p in t.nodes] == [0, 4, 5]
    assert chord_lookup(ring, 6, key).hops == 0


@pytest.mark.parametrize("placement", ["dense", "hashed"])
def test_exhaustive_64(placement):
    ring = ring_of(64, placement)
    top = ring.partition.peer_range(64)[1]
    worst = 0
    for start in range(1, 65):
        for key in range(0, top + 1, 3):
            t = chord_lookup(ring, start, key)
            assert t.end == owner_peer(ring.partition, key)
            worst = max(worst, t.hops)
    if placement == "dense":
        assert worst <= 7


def test_average_is_half_log():
    ring = ring_of(256)
    pw = ring.partition.peer_width
    hops = [chord_lookup(ring, s, (t - 1) * pw).hops for s in range(1, 257) for t in range(1, 257)]
    assert sum(hops) / len(hops) == pytest.approx(0.5 * math.log2(256))


def test_ranges():
    ring = ring_of(50)
    rng = random.Random(2)
    top = ring.partition.peer_range(50)[1]
    for s in range(2000):
        ring.insert(s, rng.randint(0, top))
    flat = {s: e for r in ring.records.values() for s, e in r.items()}
    k = flat[7]
    point = chord_range(ring, 3, k, k)
    assert point.trace.nodes == chord_lookup(ring, 3, k).nodes
    full = chord_range(ring, 1, 0, top)
    assert sorted(set(full.trace.nodes)) == list(range(1, 51)) and full.answer_size == 2000
    for _ in range(1000):
        k1 = rng.randint(0, top)
        k2 = rng.randint(k1, top)
        res = chord_range(ring, rng.randint(1, 50), k1, k2, rng)
        assert res.answer_size == sum(k1 <= e <= k2 for e in flat.values())
    with pytest.raises(ChordError):
        chord_range(ring, 1, 5, 4)
