"""Balanced binary tree of overlay peers inside one cluster.

Peers are kept in key order.  Each peer has a base key; it owns keys from its
base up to the next peer's base minus one, and the leftmost peer also owns
everything below its base down to the cluster's low key.  The tree shape is
the perfectly balanced BST over the in-order sequence, so parent, child and
adjacent links are all derived from positions.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .keyspace import KeyRangeError


class InteriorError(ValueError):
    pass


@dataclass
class InteriorTree:
    lo: int
    hi: int
    bases: list[int] = field(default_factory=list)
    ids: list[int] = field(default_factory=list)
    records: dict[int, dict[int, int]] = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    # ---------------------------------------------------------------- shape
    @property
    def height(self) -> int:
        return math.ceil(math.log2(len(self.ids) + 1)) if self.ids else 0

    def path_from_root(self, idx: int) -> list[int]:
        lo, hi = 0, len(self.ids) - 1
        path = []
        while True:
            mid = (lo + hi) // 2
            path.append(mid)
            if mid == idx:
                return path
            if idx < mid:
                hi = mid - 1
            else:
                lo = mid + 1

    @property
    def root(self) -> int:
        return (len(self.ids) - 1) // 2

    def links(self, idx: int) -> int:
        """Parent, child and adjacent pointers held by the peer at ``idx``."""
        n = len(self.ids)
        path = self.path_from_root(idx)
        count = 1 if len(path) > 1 else 0
        lo, hi = 0, n - 1
        for step in path[:-1]:
            if idx < step:
                hi = step - 1
            else:
                lo = step + 1
        count += (idx > lo) + (idx < hi)
        count += (idx > 0) + (idx < n - 1)
        return count

    # ------------------------------------------------------------ ownership
    def owner_index(self, key: int) -> int:
        if not self.lo <= key <= self.hi:
            raise KeyRangeError(f"key {key} outside cluster range [{self.lo}, {self.hi}]")
        if not self.ids:
            raise InteriorError("cluster has no peers")
        return max(bisect.bisect_right(self.bases, key) - 1, 0)

    def peer_range(self, idx: int) -> tuple[int, int]:
        lo = self.lo if idx == 0 else self.bases[idx]
        hi = self.hi if idx == len(self.ids) - 1 else self.bases[idx + 1] - 1
        return lo, hi

    def index_of(self, peer_id: int) -> int:
        try:
            return self.ids.index(peer_id)
        except ValueError:
            raise InteriorError(f"peer {peer_id} not in this cluster") from None

    def load(self, peer_id: int) -> int:
        return len(self.records[peer_id])

    # -------------------------------------------------------------- routing
    def search(self, key: int, start: int | None = None) -> tuple[int, list[int]]:
        """Owner index and the indices visited after ``start`` (root by default)."""
        target = self.owner_index(key)
        down = self.path_from_root(target)
        if start is None or start == down[0]:
            return target, down[1:]
        up = self.path_from_root(start)
        common = 0
        while common < min(len(up), len(down)) and up[common] == down[common]:
            common += 1
        visited = up[common - 1:-1][::-1] + down[common:]
        return target, visited

    def range_indices(self, k1: int, k2: int) -> list[int]:
        if k1 > k2:
            raise InteriorError(f"inverted range [{k1}, {k2}]")
        return list(range(self.owner_index(k1), self.owner_index(k2) + 1))

    # ----------------------------------------------------------- membership
    def insert_peer(self, peer_id: int, base: int) -> int:
        if peer_id in self.records:
            raise InteriorError(f"peer {peer_id} already present")
        pos = bisect.bisect_left(self.bases, base)
        if pos < len(self.bases) and self.bases[pos] == base:
            raise InteriorError(f"base {base} already taken")
        self.bases.insert(pos, base)
        self.ids.insert(pos, peer_id)
        self.records[peer_id] = {}
        if len(self.ids) > 1:
            donor = self.ids[pos - 1] if pos > 0 else self.ids[1]
            moved = {s: e for s, e in self.records[donor].items()
                     if self.owner_index(e) == pos}
            for s in moved:
                del self.records[donor][s]
            self.records[peer_id] = moved
        return pos

    def remove_peer(self, peer_id: int) -> int:
        """Drop a peer, handing its records to the peer that absorbs its range."""
        pos = self.index_of(peer_id)
        if len(self.ids) == 1:
            raise InteriorError("the last peer of a cluster cannot leave; the cluster must")
        recs = self.records.pop(peer_id)
        del self.bases[pos]
        del self.ids[pos]
        heir = self.ids[pos - 1] if pos > 0 else self.ids[0]
        self.records[heir].update(recs)
        return self.ids.index(heir)

    def split_point(self) -> tuple[int, int] | None:
        """(index, new base) splitting the most loaded splittable peer at its median key."""
        best = None
        for idx, pid in enumerate(self.ids):
            lo, hi = self.peer_range(idx)
            if hi <= lo:
                continue
            load = len(self.records[pid])
            if best is None or load > best[0]:
                best = (load, idx)
        if best is None:
            return None
        idx = best[1]
        lo, hi = self.peer_range(idx)
        keys = sorted(self.records[self.ids[idx]].values())
        base = keys[len(keys) // 2] if keys else (lo + hi + 1) // 2
        base = min(max(base, lo + 1), hi)
        return idx, base


def interior_search(tree: InteriorTree, key: int, start: int | None = None):
    idx, visited = tree.search(key, start)
    return tree.ids[idx], [tree.ids[i] for i in visited]


def interior_range(tree: InteriorTree, k1: int, k2: int) -> list[int]:
    return [tree.ids[i] for i in tree.range_indices(k1, k2)]


def interior_join(tree: InteriorTree, peer_id: int, base: int | None = None) -> list[int]:
    """Add a peer; returns the receiving peer of every join message."""
    if not tree.ids:
        tree.insert_peer(peer_id, tree.lo if base is None else base)
        return [peer_id]
    if base is None:
        split = tree.split_point()
        if split is None:
            raise InteriorError("no peer range left to split")
        base = split[1]
    owner = tree.owner_index(base)
    locate = tree.path_from_root(owner)[1:]
    receivers = [tree.ids[i] for i in locate]
    donor = tree.ids[owner]
    pos = tree.insert_peer(peer_id, base)
    receivers += [donor, peer_id]
    neighbour = pos + 1 if pos + 1 < len(tree.ids) else pos - 1
    if tree.ids[neighbour] != donor:
        receivers.append(tree.ids[neighbour])
    return receivers


def interior_leave(tree: InteriorTree, peer_id: int) -> list[int]:
    idx = tree.index_of(peer_id)
    locate = [tree.ids[i] for i in tree.path_from_root(idx)[1:]]
    left = tree.ids[idx - 1] if idx > 0 else None
    right = tree.ids[idx + 1] if idx + 1 < len(tree.ids) else None
    heir_idx = tree.remove_peer(peer_id)
    receivers = locate + [tree.ids[heir_idx]]
    for other in (left, right):
        if other is not None and other != tree.ids[heir_idx]:
            receivers.append(other)
    return receivers
