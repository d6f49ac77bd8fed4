"""Chord ring over the overlay peers, used as the routing comparator.

Peers keep the same key ownership as the SART partition; only their ring
identifiers differ between the dense and hashed placements.
"""
from __future__ import annotations

import bisect
import hashlib
import math
from dataclasses import dataclass, field

from .keyspace import Partition, owner_peer
from .trace import QueryResult, RouteTrace


class ChordError(ValueError):
    pass


@dataclass
class ChordRing:
    partition: Partition
    num_peers: int
    bits: int
    ids: list[int]
    node_of: dict[int, int]     # peer index -> ring id
    peer_at: dict[int, int]     # ring id -> peer index
    fingers: dict[int, list[int]] = field(default_factory=dict)
    records: dict[int, dict[int, int]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return 1 << self.bits

    def successor(self, ident: int) -> int:
        i = bisect.bisect_left(self.ids, ident % self.size)
        return self.ids[i % len(self.ids)]

    def next_id(self, ident: int) -> int:
        return self.successor(ident + 1)

    def predecessor(self, ident: int) -> int:
        i = bisect.bisect_left(self.ids, ident)
        return self.ids[i - 1]

    def dist(self, a: int, b: int) -> int:
        return (b - a) % self.size

    def owner(self, key: int) -> int:
        peer = owner_peer(self.partition, key)
        if peer > self.num_peers:
            raise ChordError(f"key {key} belongs to peer {peer}, beyond the ring")
        return peer

    def insert(self, sensor: int, key: int) -> None:
        self.records[self.owner(key)][sensor] = key


def build_ring(num_peers: int, partition: Partition, seed: int = 0,
               placement: str = "dense") -> ChordRing:
    if num_peers < 1:
        raise ChordError("a ring needs at least one peer")
    if num_peers > partition.num_peers:
        raise ChordError("more peers than the partition defines")
    if placement == "dense":
        bits = max(1, math.ceil(math.log2(num_peers)))
        node_of = {p: p - 1 for p in range(1, num_peers + 1)}
    elif placement == "hashed":
        bits = 32
        node_of = {}
        taken = set()
        for p in range(1, num_peers + 1):
            salt = 0
            while True:
                h = hashlib.sha1(f"{seed}:{p}:{salt}".encode()).digest()
                ident = int.from_bytes(h[:4], "big")
                if ident not in taken:
                    break
                salt += 1
            taken.add(ident)
            node_of[p] = ident
    else:
        raise ChordError(f"unknown placement {placement!r}")
    ids = sorted(node_of.values())
    ring = ChordRing(partition, num_peers, bits, ids, node_of,
                     {v: k for k, v in node_of.items()},
                     records={p: {} for p in node_of})
    for n in ids:
        ring.fingers[n] = [ring.successor(n + (1 << i)) for i in range(bits)]
    return ring


def _route_ids(ring: ChordRing, start: int, target: int) -> list[int]:
    cur = start
    path = [cur]
    while cur != target:
        fingers = ring.fingers[cur]
        d = ring.dist(cur, target)
        if target in fingers:
            cur = target
        else:
            # closest finger strictly preceding the target
            best = None
            for f in fingers:
                fd = ring.dist(cur, f)
                if 0 < fd < d and (best is None or fd > ring.dist(cur, best)):
                    best = f
            cur = best if best is not None else ring.next_id(cur)
        path.append(cur)
    return path


def chord_lookup(ring: ChordRing, start: int, key: int) -> RouteTrace:
    """Route from peer ``start`` to the owner of ``key``; labels are peer indices."""
    ring.partition.universe.check(key)
    if start not in ring.node_of:
        raise ChordError(f"peer {start} not on the ring")
    path = _route_ids(ring, ring.node_of[start], ring.node_of[ring.owner(key)])
    return RouteTrace([ring.peer_at[i] for i in path])


def chord_range(ring: ChordRing, start: int, k1: int, k2: int, rng=None) -> QueryResult:
    if k1 > k2:
        raise ChordError(f"inverted range [{k1}, {k2}]")
    trace = chord_lookup(ring, start, k1)
    last = ring.owner(k2)
    peer = trace.end
    answer = []
    while True:
        answer += [s for s, e in ring.records[peer].items() if k1 <= e <= k2]
        if peer == last:
            break
        # key-order successor; a single finger hop on the dense ring
        step = chord_lookup(ring, peer, ring.partition.peer_range(peer + 1)[0])
        trace.nodes += step.nodes[1:]
        peer = step.end
    answer.sort()
    chosen = None
    if answer:
        chosen = rng.choice(answer) if rng is not None else answer[0]
    return QueryResult(chosen, len(answer), trace,
                       receivers=trace.nodes[1:], terminal=trace.end, answer=answer)
