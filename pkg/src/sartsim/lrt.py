"""Level Range Tree: label arithmetic, LSI/CI tables and the nested lookup walk.

Positions are 1-based.  Level 0 holds the root, level 1 two nodes and level
``i >= 2`` holds ``2^(2^(i-1))`` nodes; the last level may be partial and is
filled left to right.  A collection at level ``i`` is the set of children of
one level ``i-1`` node.  Collections larger than ``b`` are walked as nested
LRTs over the same positions, so no extra structure is materialized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .keyspace import Partition, owner_peer
from .trace import RouteTrace

BRANCHING = (2, 4, 16)


def leftmost_label(level: int) -> int:
    if level < 0:
        raise ValueError("level must be non-negative")
    if level == 0:
        return 1
    label = 2
    for i in range(2, level + 1):
        label += 1 << (1 << (i - 2))
    return label


def level_size(level: int) -> int:
    """t(i): node count of a full level."""
    if level == 0:
        return 1
    return 1 << (1 << (level - 1))


def collection_size(level: int) -> int:
    """Members per collection at ``level``: the degree of the level above."""
    if level < 1:
        raise ValueError("level 0 has no collections")
    return 2 if level == 1 else level_size(level - 1)


def _level_of_pos(pos: int) -> int:
    level = 0
    while leftmost_label(level + 1) <= pos:
        level += 1
    return level


@dataclass(frozen=True)
class LrtShape:
    num_nodes: int
    b: int = 2
    sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("an LRT needs at least one node")
        if self.b not in BRANCHING:
            raise ValueError(f"b must be one of {BRANCHING}, got {self.b}")
        sizes = []
        left = self.num_nodes
        level = 0
        while left > 0:
            take = min(left, level_size(level))
            sizes.append(take)
            left -= take
            level += 1
        object.__setattr__(self, "sizes", tuple(sizes))

    @property
    def num_levels(self) -> int:
        return len(self.sizes)

    @property
    def total_nodes(self) -> int:
        return sum(self.sizes)

    def degree(self, level: int) -> int:
        return 2 if level == 0 else level_size(level)

    def level_span(self, level: int) -> tuple[int, int]:
        lo = leftmost_label(level)
        return lo, lo + self.sizes[level] - 1

    def num_collections(self, level: int) -> int:
        return -(-self.sizes[level] // collection_size(level))

    @property
    def nesting_depth(self) -> int:
        return nesting_depth(self.num_nodes, self.b)


def level_of(target: int, shape: LrtShape) -> int:
    if not 1 <= target <= shape.total_nodes:
        raise ValueError(f"label {target} outside [1, {shape.total_nodes}]")
    return _level_of_pos(target)


def collection_of(target: int, level: int, shape: LrtShape) -> int:
    """Zero-based collection ordinal m; the CI pointer followed is CI[m+1]."""
    if level == 0:
        raise ValueError("level 0 has no collections")
    if level_of(target, shape) != level:
        raise ValueError(f"label {target} is not on level {level}")
    return (target - leftmost_label(level)) // collection_size(level)


def _max_collection(n: int) -> int:
    best = 0
    for level in range(1, LrtShape(n).num_levels):
        size = LrtShape(n).sizes[level]
        best = max(best, min(size, collection_size(level)))
    return best


@lru_cache(maxsize=None)
def nesting_depth(n: int, b: int) -> int:
    largest = _max_collection(n)
    if largest <= b:
        return 1
    return 1 + nesting_depth(largest, b)


def walk(start: int, target: int, size: int, b: int) -> list[int]:
    """Positions visited (after ``start``) routing inside an LRT of ``size`` nodes."""
    out: list[int] = []
    _walk(start, target, size, b, 0, out)
    return out


def _push(out: list[int], cur: int, pos: int) -> int:
    if pos != cur:
        out.append(pos)
    return pos


def _walk(start: int, target: int, size: int, b: int, offset: int, out: list[int]) -> None:
    cur = start
    while True:
        if cur == target:
            return
        level = _level_of_pos(target)
        x = leftmost_label(level)
        # LSI pointer to the leftmost node of the target level
        cur = _push(out, offset + cur, offset + x) - offset
        if level == 0 or cur == target:
            return
        cs = collection_size(level)
        head = x + (target - x) // cs * cs
        # CI pointer from the spine node to the collection head
        cur = _push(out, offset + cur, offset + head) - offset
        if cur == target:
            return
        members = min(cs, size - head + 1)
        if members <= b:
            _push(out, offset + cur, offset + target)
            return
        # the collection is itself an LRT rooted at its head
        offset += head - 1
        size = members
        target = target - head + 1
        cur = 1


@dataclass
class LrtNode:
    label: int
    level: int
    lsi: list[int]
    ci: list[int]
    nesting_depth: int


class Lrt:
    """An LRT over ``num_nodes`` peers with materialized LSI/CI tables."""

    def __init__(self, num_nodes: int, b: int = 2):
        self.shape = LrtShape(num_nodes, b)
        depth = self.shape.nesting_depth
        spine = [leftmost_label(i) for i in range(self.shape.num_levels)]
        self.nodes: dict[int, LrtNode] = {}
        for level in range(self.shape.num_levels):
            lo, hi = self.shape.level_span(level)
            ci: list[int] = []
            if level >= 1:
                cs = collection_size(level)
                ci = list(range(lo, hi + 1, cs))
            for label in range(lo, hi + 1):
                self.nodes[label] = LrtNode(
                    label, level, list(spine) if num_nodes > 1 else [],
                    ci if label == lo else [], depth)

    def __len__(self):
        return self.shape.num_nodes

    def route(self, start: int, target: int) -> RouteTrace:
        if start not in self.nodes or target not in self.nodes:
            raise ValueError("unknown label")
        trace = RouteTrace([start])
        trace.extend(walk(start, target, self.shape.num_nodes, self.shape.b))
        return trace


def build_lrt(num_nodes: int, b: int = 2) -> Lrt:
    return Lrt(num_nodes, b)


def lrt_lookup(lrt: Lrt, start: int, key: int, partition: Partition) -> RouteTrace:
    target = owner_peer(partition, key)
    if target > len(lrt):
        raise ValueError(f"key {key} belongs to peer {target}, not in this LRT")
    return lrt.route(start, target)


def hop_bound(num_nodes: int, b: int) -> float:
    """(1 + log2 log2 N) * nesting_depth + 2."""
    if num_nodes < 2:
        return 0.0
    ll = math.log2(math.log2(num_nodes)) if num_nodes > 2 else 0.0
    return (1 + ll) * nesting_depth(num_nodes, b) + 2
