"""ART overlay: an LRT over live cluster peers with RSI routing tables.

Live clusters are placed on LRT positions in key order.  A lookup jumps
through the start cluster's RSI entry for the target level, moves to the head
of its bucket, walks the bucket-level LRT to the target bucket, walks that
bucket's collection LRT to the target collection and finally descends the
collection's nested LRT.

Cluster ``c`` has base key ``(c - 1) * cluster_width``.  It owns keys from its
base up to the next live cluster's base; the first live cluster also owns
every key below its base, so departed ranges are absorbed by the predecessor.
"""
from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass

from .keyspace import Partition
from .lrt import BRANCHING, LrtShape, collection_size, leftmost_label, walk
from .trace import RouteTrace


class OverlayError(ValueError):
    pass


def bucket_count(z: int, c: int) -> int:
    """Top-level groups of the 2-level LRT over ``z`` collections."""
    if z <= 1:
        return 1
    return min(z, max(1, math.ceil(math.log2(z) ** (2 * c))))


@dataclass(frozen=True)
class TwoLevelLrt:
    level: int
    leftmost: int
    collection: int
    collections: int
    per_bucket: int

    @property
    def buckets(self) -> int:
        return -(-self.collections // self.per_bucket)

    def collection_of(self, pos: int) -> int:
        return (pos - self.leftmost) // self.collection

    def bucket_of(self, pos: int) -> int:
        return self.collection_of(pos) // self.per_bucket

    def collection_head(self, m: int) -> int:
        return self.leftmost + m * self.collection

    def bucket_head(self, beta: int) -> int:
        return self.collection_head(beta * self.per_bucket)


def _group_walk(start: int, target: int, size: int, b: int) -> list[int]:
    if start == target:
        return []
    if size <= b:
        return [target]
    return walk(start, target, size, b)


class ArtOverlay:
    def __init__(self, partition: Partition, clusters, b: int = 2, c: int = 1, seed: int = 0):
        if b not in BRANCHING:
            raise OverlayError(f"b must be one of {BRANCHING}, got {b}")
        if c < 1:
            raise OverlayError("c must be a positive integer")
        self.partition = partition
        self.b = b
        self.c = c
        self.clusters: list[int] = sorted(set(clusters))
        if not self.clusters:
            raise OverlayError("an overlay needs at least one cluster")
        for ci in self.clusters:
            self._check_index(ci)
        self.rng = random.Random(seed)
        self.rsi: dict[int, list[int]] = {}
        self.referrers: dict[int, set[tuple[int, int]]] = {}
        self._reshape()
        self._sample_all()

    # --------------------------------------------------------------- shape
    def _check_index(self, ci: int) -> None:
        if not 1 <= ci <= self.partition.num_clusters:
            raise OverlayError(f"cluster {ci} outside [1, {self.partition.num_clusters}]")

    def _reshape(self) -> None:
        self.shape = LrtShape(len(self.clusters), self.b)
        self._spine = [leftmost_label(i) for i in range(self.shape.num_levels)]

    def __len__(self):
        return len(self.clusters)

    def __contains__(self, ci: int) -> bool:
        i = bisect.bisect_left(self.clusters, ci)
        return i < len(self.clusters) and self.clusters[i] == ci

    def position(self, ci: int) -> int:
        i = bisect.bisect_left(self.clusters, ci)
        if i == len(self.clusters) or self.clusters[i] != ci:
            raise OverlayError(f"cluster {ci} is not live")
        return i + 1

    def at(self, pos: int) -> int:
        return self.clusters[pos - 1]

    def level_at(self, pos: int) -> int:
        return bisect.bisect_right(self._spine, pos) - 1

    def level_of_cluster(self, ci: int) -> int:
        return self.level_at(self.position(ci))

    def two_level(self, level: int) -> TwoLevelLrt:
        cs = collection_size(level)
        z = self.shape.num_collections(level)
        per = -(-z // bucket_count(z, self.c))
        return TwoLevelLrt(level, self._spine[level], cs, z, per)

    # ----------------------------------------------------------- ownership
    def base(self, ci: int) -> int:
        return (ci - 1) * self.partition.cluster_width

    def owner(self, key: int) -> int:
        self.partition.universe.check(key)
        i = bisect.bisect_right(self.clusters, key // self.partition.cluster_width + 1) - 1
        return self.clusters[max(i, 0)]

    def cluster_range(self, ci: int) -> tuple[int, int]:
        i = self.position(ci) - 1
        lo = 0 if i == 0 else self.base(ci)
        if i + 1 < len(self.clusters):
            hi = self.base(self.clusters[i + 1]) - 1
        else:
            hi = self.partition.universe.size - 1
        return lo, hi

    # ---------------------------------------------------------------- RSI
    def _sample(self, level: int) -> int:
        lo, hi = self.shape.level_span(level)
        return self.at(self.rng.randint(lo, hi))

    def _set_entry(self, holder: int, level: int, target: int) -> None:
        table = self.rsi[holder]
        if level < len(table):
            self.referrers[table[level]].discard((holder, level))
            table[level] = target
        else:
            table.append(target)
        self.referrers.setdefault(target, set()).add((holder, level))

    def _fill(self, holder: int) -> None:
        self.rsi[holder] = []
        self.referrers.setdefault(holder, set())
        if len(self.clusters) == 1:
            return
        for level in range(self.shape.num_levels):
            self._set_entry(holder, level, self._sample(level))

    def _sample_all(self) -> None:
        self.rsi = {}
        self.referrers = {ci: set() for ci in self.clusters}
        for ci in self.clusters:
            self._fill(ci)

    def routing_entries(self, ci: int) -> int:
        pos = self.position(ci)
        level = self.level_at(pos)
        extra = 0
        if level >= 1:
            tl = self.two_level(level)
            extra = int(tl.bucket_head(tl.bucket_of(pos)) != pos)
        return len(self.rsi[ci]) + extra

    # ------------------------------------------------------------- routing
    def route(self, start: int, key: int) -> RouteTrace:
        target = self.owner(key)
        trace = RouteTrace([start])
        s = self.position(start)
        j = self.position(target)
        if s == j:
            return trace
        level = self.level_at(j)
        r = self.rsi[start][level]
        trace.extend([r])
        rp = self.position(r)
        if rp == j:
            return trace
        tl = self.two_level(level)
        beta_r, beta_t = tl.bucket_of(rp), tl.bucket_of(j)
        m_t = tl.collection_of(j)
        pos = [tl.bucket_head(beta_r)]
        pos += [tl.bucket_head(p - 1) for p in _group_walk(beta_r + 1, beta_t + 1, tl.buckets, self.b)]
        first = beta_t * tl.per_bucket
        in_bucket = min(tl.per_bucket, tl.collections - first)
        pos += [tl.collection_head(first + p - 1)
                for p in _group_walk(1, m_t - first + 1, in_bucket, self.b)]
        head = tl.collection_head(m_t)
        members = min(tl.collection, self.shape.level_span(level)[1] - head + 1)
        pos += [head + p - 1 for p in _group_walk(1, j - head + 1, members, self.b)]
        trace.extend(self.at(p) for p in pos)
        return trace

    def hop_bound(self) -> int:
        return self.shape.nesting_depth * (self.shape.num_levels + 2) + 2

    # ---------------------------------------------------------- membership
    def _changed(self, first_pos: int, shift: int) -> list[int]:
        """Clusters whose level changes when positions >= first_pos move by shift."""
        n = len(self.clusters)
        marks = self._spine[1:] + [leftmost_label(self.shape.num_levels)]
        if shift > 0:
            qs = [lm - 1 for lm in marks]
        else:
            qs = [lm for lm in marks]
        return [self.at(q) for q in qs if first_pos <= q <= n]

    def _expected_rsi(self) -> int:
        return 0 if len(self.clusters) == 1 else self.shape.num_levels

    def _repair(self, stale: list[int]) -> list[int]:
        holders = []
        for ci in stale:
            for holder, level in sorted(self.referrers.get(ci, ())):
                self._set_entry(holder, level, self._sample(level))
                holders.append(holder)
        return holders

    def join(self, ci: int) -> tuple[list[int], int]:
        """Add cluster ``ci``; returns (message receivers, RSI repair count)."""
        self._check_index(ci)
        if ci in self:
            raise OverlayError(f"cluster {ci} already live")
        heir = self.owner(self.base(ci))
        p = bisect.bisect_left(self.clusters, ci) + 1
        changed = self._changed(p, +1)
        self.clusters.insert(p - 1, ci)
        self._reshape()
        holders = []
        want = self._expected_rsi()
        for holder in self.clusters:
            if holder == ci:
                continue
            for level in range(len(self.rsi[holder]), want):
                self._set_entry(holder, level, self._sample(level))
                holders.append(holder)
        holders += self._repair(changed)
        self._fill(ci)
        # handoff from the absorbing cluster, one fetch per new RSI entry, one per repair
        return [heir] + list(self.rsi[ci]) + holders, len(holders)

    def leave(self, ci: int) -> tuple[list[int], int]:
        if ci not in self:
            raise OverlayError(f"cluster {ci} is not live")
        if len(self.clusters) == 1:
            raise OverlayError("the overlay must keep at least one cluster")
        p = self.position(ci)
        heir = self.clusters[p - 2] if p > 1 else self.clusters[1]
        changed = [x for x in self._changed(p + 1, -1) if x != ci]
        self.clusters.remove(ci)
        self._reshape()
        for level, target in enumerate(self.rsi.pop(ci)):
            self.referrers[target].discard((ci, level))
        want = self._expected_rsi()
        for holder in self.clusters:
            table = self.rsi[holder]
            for level in range(want, len(table)):
                self.referrers[table[level]].discard((holder, level))
            del table[want:]
        holders = self._repair([ci] + changed)
        self.referrers.pop(ci, None)
        return [heir] + holders, len(holders)

    def refresh(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self._sample_all()

    # ---------------------------------------------------------- invariants
    def check(self) -> None:
        for ci in self.clusters:
            table = self.rsi[ci]
            expect = 0 if len(self.clusters) == 1 else self.shape.num_levels
            if len(table) != expect:
                raise AssertionError(f"cluster {ci}: RSI length {len(table)} != {expect}")
            for level, target in enumerate(table):
                if target not in self or self.level_of_cluster(target) != level:
                    raise AssertionError(f"cluster {ci}: stale RSI entry {target} at level {level}")
                if (ci, level) not in self.referrers[target]:
                    raise AssertionError("referrer index out of sync")

    def ownership(self) -> list[int]:
        """Owning cluster of every cluster base, the canonical ownership map."""
        return [self.owner(self.base(ci)) for ci in range(1, self.partition.num_clusters + 1)]


def build_art(partition: Partition, b: int = 2, c: int = 1, seed: int = 0, clusters=None) -> ArtOverlay:
    if clusters is None:
        clusters = range(1, partition.num_clusters + 1)
    elif isinstance(clusters, int):
        clusters = range(1, clusters + 1)
    return ArtOverlay(partition, clusters, b, c, seed)


def art_route(overlay: ArtOverlay, start_cluster: int, key: int) -> RouteTrace:
    return overlay.route(start_cluster, key)


def rsi_refresh(overlay: ArtOverlay, seed: int) -> ArtOverlay:
    overlay.refresh(seed)
    return overlay


def cluster_join(overlay: ArtOverlay, ci: int) -> int:
    receivers, _ = overlay.join(ci)
    return len(receivers)


def cluster_leave(overlay: ArtOverlay, ci: int) -> int:
    receivers, _ = overlay.leave(ci)
    return len(receivers)
