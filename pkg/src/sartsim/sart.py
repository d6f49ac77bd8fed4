"""Sensor network over the ART overlay: exact, range, update, join and leave.

Overlay peers carry global ids.  Peers created from the partition keep their
nominal index (``owner_peer`` of the keys they own), so a fully populated
network resolves every key to the same peer id as the Chord baseline.
Cluster routing tables are shared by every peer of a cluster, and a hop into
another cluster lands on the root of its interior tree.
"""
from __future__ import annotations

import random

from .art import ArtOverlay, OverlayError
from .interior import InteriorError, InteriorTree, interior_join, interior_leave
from .keyspace import KeyRangeError, Partition, owner_cluster, owner_peer
from .trace import QueryResult, RouteTrace


class NetworkError(ValueError):
    pass


class SensorNet:
    def __init__(self, partition: Partition, clusters=None, b: int = 2, c: int = 1,
                 seed: int = 0, populate: bool = True):
        self.partition = partition
        self.b = b
        self.c = c
        self.rng = random.Random(seed)
        self._overlay_seed = seed
        self.overlay: ArtOverlay | None = None
        self.trees: dict[int, InteriorTree] = {}
        self.peer_cluster: dict[int, int] = {}
        self.energy: dict[int, int] = {}
        self.home: dict[int, int] = {}
        self._next_peer = partition.num_peers + 1
        if clusters is not None:
            if isinstance(clusters, int):
                clusters = range(1, clusters + 1)
            self.overlay = ArtOverlay(partition, clusters, b, c, seed)
            for ci in self.overlay.clusters:
                lo, hi = self.overlay.cluster_range(ci)
                tree = InteriorTree(lo, hi)
                self.trees[ci] = tree
                peers = partition.cluster_peers(ci) if populate else partition.cluster_peers(ci)[:1]
                for pid in peers:
                    tree.insert_peer(pid, partition.peer_range(pid)[0])
                    self.peer_cluster[pid] = ci

    # ------------------------------------------------------------- lookup
    @property
    def clusters(self) -> list[int]:
        return [] if self.overlay is None else self.overlay.clusters

    @property
    def key_span(self) -> tuple[int, int]:
        """Keys covered by the nominal ranges of the live clusters."""
        if self.overlay is None:
            raise NetworkError("network is empty")
        last = self.overlay.clusters[-1]
        return 0, self.partition.cluster_range(last)[1]

    def peers(self) -> list[int]:
        return [pid for ci in self.clusters for pid in self.trees[ci].ids]

    def owner(self, key: int) -> tuple[int, int]:
        """(cluster, peer id) currently responsible for ``key``."""
        if self.overlay is None:
            raise NetworkError("network is empty")
        ci = self.overlay.owner(key)
        tree = self.trees[ci]
        return ci, tree.ids[tree.owner_index(key)]

    def records_of(self, peer_id: int) -> dict[int, int]:
        return self.trees[self.peer_cluster[peer_id]].records[peer_id]

    def routing_entries(self, peer_id: int) -> int:
        ci = self.peer_cluster[peer_id]
        tree = self.trees[ci]
        return self.overlay.routing_entries(ci) + tree.links(tree.index_of(peer_id))

    def interior_height(self) -> int:
        return max((t.height for t in self.trees.values()), default=0)

    def _check_key(self, key: int) -> None:
        self.partition.universe.check(key)

    def _source(self, sensor: int) -> int:
        if sensor not in self.home:
            raise NetworkError(f"unknown sensor {sensor}")
        return self.home[sensor]

    def route(self, from_peer: int, key: int) -> tuple[RouteTrace, dict[int, int]]:
        """Peer-level route to the owner of ``key`` and cluster hops per level."""
        self._check_key(key)
        src = self.peer_cluster[from_peer]
        dst = self.overlay.owner(key)
        trace = RouteTrace([from_peer])
        levels: dict[int, int] = {}
        if src == dst:
            tree = self.trees[dst]
            _, visited = tree.search(key, tree.index_of(from_peer))
        else:
            path = self.overlay.route(src, key)
            for ci in path.nodes[1:]:
                lv = self.overlay.level_of_cluster(ci)
                levels[lv] = levels.get(lv, 0) + 1
                tree = self.trees[ci]
                trace.nodes.append(tree.ids[tree.root])
            tree = self.trees[dst]
            _, visited = tree.search(key)
        trace.extend(tree.ids[i] for i in visited)
        return trace, levels

    # ------------------------------------------------------------ records
    def _store(self, sensor: int, key: int, peer_id: int) -> None:
        self.records_of(peer_id)[sensor] = key
        self.energy[sensor] = key
        self.home[sensor] = peer_id

    def _unstore(self, sensor: int) -> int:
        pid = self.home.pop(sensor)
        del self.records_of(pid)[sensor]
        del self.energy[sensor]
        return pid

    def bulk_load(self, items) -> None:
        """Place (sensor id, energy) pairs directly at their owners."""
        for sensor, key in items:
            if sensor in self.home:
                raise NetworkError(f"duplicate sensor {sensor}")
            self._check_key(key)
            self._store(sensor, key, self.owner(key)[1])

    def remove_sensor(self, sensor: int) -> int:
        self._source(sensor)
        return self._unstore(sensor)

    def record_count(self) -> int:
        return sum(len(r) for t in self.trees.values() for r in t.records.values())

    # ----------------------------------------------------------- queries
    def exact_match_search(self, source: int, k: int) -> QueryResult:
        self._check_key(k)
        home = self._source(source)
        trace, levels = self.route(home, k)
        recs = self.records_of(trace.end)
        cands = sorted(s for s, e in recs.items() if e == k)
        chosen = self.rng.choice(cands) if cands else None
        return QueryResult(chosen, len(cands), trace, slave_hops=1,
                           receivers=[home] + trace.nodes[1:], terminal=trace.end,
                           level_hops=levels)

    def range_search(self, source: int, k1: int, k2: int) -> QueryResult:
        if k1 > k2:
            raise NetworkError(f"inverted range [{k1}, {k2}]")
        self._check_key(k1)
        self._check_key(k2)
        home = self._source(source)
        trace, levels = self.route(home, k1)
        ci = self.peer_cluster[trace.end]
        idx = self.trees[ci].index_of(trace.end)
        answer = []
        while True:
            tree = self.trees[ci]
            pid = tree.ids[idx]
            trace.extend([pid])
            answer += [s for s, e in tree.records[pid].items() if k1 <= e <= k2]
            if tree.peer_range(idx)[1] >= k2:
                break
            if idx + 1 < len(tree.ids):
                idx += 1
            else:
                ci = self.overlay.at(self.overlay.position(ci) + 1)
                idx = 0
        answer.sort()
        chosen = self.rng.choice(answer) if answer else None
        return QueryResult(chosen, len(answer), trace, slave_hops=1,
                           receivers=[home] + trace.nodes[1:], terminal=trace.end,
                           level_hops=levels, answer=answer)

    def update_energy(self, sensor: int, k1: int, k2: int) -> QueryResult:
        if self.energy.get(sensor) != k1:
            raise NetworkError(f"sensor {sensor} is not stored with energy {k1}")
        self._check_key(k2)
        p = self._unstore(sensor)
        trace, levels = self.route(p, k2)
        self._store(sensor, k2, trace.end)
        # slave forward, the route, then delete and insert confirmations
        receivers = [p] + trace.nodes[1:] + [p, trace.end]
        return QueryResult(sensor, 1, trace, slave_hops=1, extra_messages=2,
                           receivers=receivers, terminal=trace.end, level_hops=levels)

    # --------------------------------------------------------- membership
    def _sync_ranges(self, ci: int) -> None:
        pos = self.overlay.position(ci) if ci in self.overlay else None
        around = set()
        if pos is not None:
            around.add(ci)
            lo = max(pos - 1, 1)
            hi = min(pos + 1, len(self.overlay))
        else:
            i = sum(1 for x in self.overlay.clusters if x < ci)
            lo, hi = max(i, 1), min(i + 1, len(self.overlay))
        for p in range(lo, hi + 1):
            around.add(self.overlay.at(p))
        for x in around:
            self.trees[x].lo, self.trees[x].hi = self.overlay.cluster_range(x)

    def _new_cluster(self, ci: int, first_peer: int) -> tuple[list[int], int]:
        if self.overlay is None:
            self.overlay = ArtOverlay(self.partition, [ci], self.b, self.c, self._overlay_seed)
            receivers, repaired = [], 0
            donor = None
        else:
            donor = self.overlay.owner(self.partition.cluster_range(ci)[0])
            receivers, repaired = self.overlay.join(ci)
        lo, hi = self.overlay.cluster_range(ci)
        tree = InteriorTree(lo, hi)
        self.trees[ci] = tree
        tree.insert_peer(first_peer, self.partition.peer_range(first_peer)[0])
        self.peer_cluster[first_peer] = ci
        receivers = [r for r in receivers]
        receivers.append(first_peer)
        if donor is not None:
            self._sync_ranges(ci)
            moved = 0
            dtree = self.trees[donor]
            for pid in dtree.ids:
                recs = dtree.records[pid]
                out = [s for s, e in recs.items() if lo <= e <= hi]
                for s in out:
                    e = recs.pop(s)
                    self._store(s, e, first_peer)
                moved += bool(out)
            receivers += [first_peer] * moved
        return receivers, repaired

    def _cluster_root(self, ci: int) -> int:
        tree = self.trees[ci]
        return tree.ids[tree.root]

    def _nominal_limit(self, ci: int) -> int:
        return self.partition.cluster_range(ci)[1]

    def join_overlay_peer(self, sensor: int, key: int, contact: int | None = None) -> QueryResult:
        if sensor in self.home:
            raise NetworkError(f"duplicate sensor {sensor}")
        self._check_key(key)
        ci = owner_cluster(self.partition, key)
        m = owner_peer(self.partition, key)
        structural: list[int] = []
        repaired = 0
        if self.overlay is None or ci not in self.overlay:
            structural, repaired = self._new_cluster(ci, m)
        elif m not in self.peer_cluster:
            tree = self.trees[ci]
            structural = interior_join(tree, m, self.partition.peer_range(m)[0])
            self.peer_cluster[m] = ci
            for s in tree.records[m]:
                self.home[s] = m
        peers = self.peers()
        if contact is None:
            contact = peers[self.rng.randrange(len(peers))]
        trace, levels = self.route(contact, key)
        self._store(sensor, key, trace.end)
        receivers = [contact] + trace.nodes[1:] + structural
        return QueryResult(sensor, 1, trace, slave_hops=1, extra_messages=len(structural),
                           receivers=receivers, terminal=trace.end,
                           repair_messages=repaired, level_hops=levels)

    def leave_overlay_peer(self, peer_id: int) -> QueryResult:
        if peer_id not in self.peer_cluster:
            raise NetworkError(f"peer {peer_id} is not live")
        ci = self.peer_cluster[peer_id]
        tree = self.trees[ci]
        if tree.records[peer_id]:
            raise NetworkError(f"peer {peer_id} still stores sensors")
        repaired = 0
        if len(tree) == 1:
            try:
                receivers, repaired = self.overlay.leave(ci)
            except OverlayError as exc:
                raise NetworkError(str(exc)) from None
            del self.trees[ci]
            self._sync_ranges(ci)
        else:
            receivers = interior_leave(tree, peer_id)
        del self.peer_cluster[peer_id]
        return QueryResult(None, 0, RouteTrace([peer_id]), extra_messages=len(receivers),
                           receivers=receivers, terminal=None, repair_messages=repaired)

    def split_peer(self, ci: int) -> list[int]:
        """Add a peer to ``ci`` by splitting its most loaded peer."""
        tree = self.trees[ci]
        split = tree.split_point()
        if split is None or split[1] > self._nominal_limit(ci):
            raise InteriorError("no splittable peer inside the cluster's nominal range")
        pid = self._next_peer
        self._next_peer += 1
        receivers = interior_join(tree, pid, split[1])
        self.peer_cluster[pid] = ci
        for s in tree.records[pid]:
            self.home[s] = pid
        return receivers

    # -------------------------------------------------------- invariants
    def check(self) -> None:
        if self.overlay is None:
            return
        self.overlay.check()
        assert set(self.trees) == set(self.overlay.clusters)
        for ci, tree in self.trees.items():
            assert (tree.lo, tree.hi) == self.overlay.cluster_range(ci), ci
            for idx, pid in enumerate(tree.ids):
                assert self.peer_cluster[pid] == ci
                lo, hi = tree.peer_range(idx)
                for s, e in tree.records[pid].items():
                    assert lo <= e <= hi, (s, e, lo, hi)
                    assert self.home[s] == pid and self.energy[s] == e
        assert self.record_count() == len(self.energy) == len(self.home)


def build_net(partition: Partition, clusters=None, b: int = 2, c: int = 1, seed: int = 0,
              populate: bool = True) -> SensorNet:
    return SensorNet(partition, clusters, b, c, seed, populate)


def exact_match_search(net: SensorNet, source: int, k: int) -> QueryResult:
    return net.exact_match_search(source, k)


def range_search(net: SensorNet, source: int, k1: int, k2: int) -> QueryResult:
    return net.range_search(source, k1, k2)


def update_energy(net: SensorNet, sensor: int, k1: int, k2: int) -> QueryResult:
    return net.update_energy(sensor, k1, k2)


def join_overlay_peer(net: SensorNet, sensor: int, key: int, contact: int | None = None) -> QueryResult:
    return net.join_overlay_peer(sensor, key, contact)


def leave_overlay_peer(net: SensorNet, peer_id: int) -> QueryResult:
    return net.leave_overlay_peer(peer_id)


__all__ = [
    "KeyRangeError", "NetworkError", "SensorNet", "build_net", "exact_match_search",
    "range_search", "update_energy", "join_overlay_peer", "leave_overlay_peer",
]
