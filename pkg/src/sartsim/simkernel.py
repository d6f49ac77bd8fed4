"""Sequential operation kernel: runs workloads and aggregates hop/message metrics.

A workload is expanded against a live :class:`SensorNet`; every executed
operation is logged in concrete form so the Chord comparator can replay the
exact same sequence.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field

from .chord import ChordRing, chord_lookup, chord_range
from .keyspace import KeyDistribution
from .sart import NetworkError, SensorNet
from .trace import QueryResult

OP_CLASSES = ("exact", "range", "update", "join", "leave")


@dataclass
class Workload:
    exact: int = 0
    range: int = 0
    update: int = 0
    join: int = 0
    leave: int = 0
    distribution: str = "uniform"
    params: tuple[float, ...] | None = None
    alpha_min: int = 1
    alpha_max: int = 10
    seed: int = 42

    def __post_init__(self):
        for name in OP_CLASSES:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} count must be non-negative")
        if not 1 <= self.alpha_min <= self.alpha_max:
            raise ValueError("need 1 <= alpha_min <= alpha_max")
        if self.params is not None:
            self.params = tuple(float(p) for p in self.params)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def schedule(self) -> list[str]:
        ops = [name for name in OP_CLASSES for _ in range(getattr(self, name))]
        random.Random(self.seed).shuffle(ops)
        return ops


@dataclass
class OpStats:
    count: int = 0
    failed: int = 0
    min_hops: int | None = None
    max_hops: int | None = None
    hop_sum: int = 0
    message_sum: int = 0
    repair_sum: int = 0
    structural_sum: int = 0
    histogram: Counter = field(default_factory=Counter)

    def add(self, hops: int, messages: int, repair: int = 0, structural: int = 0) -> None:
        self.count += 1
        self.hop_sum += hops
        self.message_sum += messages
        self.repair_sum += repair
        self.structural_sum += structural
        self.histogram[hops] += 1
        self.min_hops = hops if self.min_hops is None else min(self.min_hops, hops)
        self.max_hops = hops if self.max_hops is None else max(self.max_hops, hops)

    @property
    def avg_hops(self) -> float:
        return self.hop_sum / self.count if self.count else 0.0

    @property
    def avg_messages(self) -> float:
        return self.message_sum / self.count if self.count else 0.0


@dataclass
class SimMetrics:
    variant: str
    workload: str
    ops: dict[str, OpStats] = field(default_factory=lambda: {n: OpStats() for n in OP_CLASSES})
    peer_messages: Counter = field(default_factory=Counter)
    level_messages: Counter = field(default_factory=Counter)
    peer_records: dict[int, int] = field(default_factory=dict)
    peer_routing: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def total_messages(self) -> int:
        return sum(s.message_sum for s in self.ops.values())

    @property
    def max_routing_entries(self) -> int:
        return max(self.peer_routing.values(), default=0)

    def record(self, op: str, result: QueryResult) -> None:
        self.ops[op].add(result.total_hops, result.messages, result.repair_messages,
                         result.extra_messages)
        self.peer_messages.update(result.receivers)
        self.level_messages.update(result.level_hops)

    def check_conservation(self) -> None:
        if sum(self.peer_messages.values()) != self.total_messages:
            raise AssertionError("per-peer messages do not add up to per-operation messages")

    def rows(self) -> list[dict]:
        out = []
        for name in OP_CLASSES:
            s = self.ops[name]
            out.append({
                "op_class": name, "count": s.count,
                "min_hops": s.min_hops if s.min_hops is not None else 0,
                "max_hops": s.max_hops if s.max_hops is not None else 0,
                "avg_hops": round(s.avg_hops, 6), "avg_messages": round(s.avg_messages, 6),
                "failed": s.failed,
            })
        return out

    def peer_rows(self) -> list[dict]:
        peers = sorted(set(self.peer_records) | set(self.peer_messages))
        return [{"peer_id": p, "messages": self.peer_messages.get(p, 0),
                 "records": self.peer_records.get(p, 0),
                 "routing_entries": self.peer_routing.get(p, 0)} for p in peers]


@dataclass
class Op:
    kind: str
    args: tuple


def _range_length(net: SensorNet, alpha: int) -> int:
    lo, hi = net.key_span
    return max(1, -(-(hi - lo + 1) // len(net.peer_cluster)) * alpha)


class _Pool:
    """Insertion-ordered id set with O(1) uniform picks and removals."""

    def __init__(self, items=()):
        self.items: list[int] = []
        self.where: dict[int, int] = {}
        for x in items:
            self.add(x)

    def __len__(self):
        return len(self.items)

    def __contains__(self, x):
        return x in self.where

    def add(self, x: int) -> None:
        if x not in self.where:
            self.where[x] = len(self.items)
            self.items.append(x)

    def discard(self, x: int) -> None:
        i = self.where.pop(x, None)
        if i is None:
            return
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.where[last] = i

    def pick(self, rng: random.Random) -> int:
        return self.items[rng.randrange(len(self.items))]


def run_workload(net: SensorNet, workload: Workload, log: list[Op] | None = None) -> SimMetrics:
    """Execute ``workload`` against ``net``; concrete ops are appended to ``log``."""
    import time

    began = time.perf_counter()
    metrics = SimMetrics("sart", workload.digest())
    rng = random.Random(workload.seed + 1)
    lo, hi = net.key_span
    dist = KeyDistribution(workload.distribution, lo, hi, workload.params, workload.seed + 2)
    next_sensor = max(net.energy, default=-1) + 1
    sensors = _Pool(sorted(net.energy))
    peers = _Pool(net.peers())
    for kind in workload.schedule():
        try:
            if kind in ("exact", "range", "update") and not sensors:
                raise NetworkError("no live sensors")
            if kind == "exact":
                op = Op(kind, (sensors.pick(rng), dist.sample()))
                res = net.exact_match_search(*op.args)
            elif kind == "range":
                src = sensors.pick(rng)
                k1 = dist.sample()
                length = _range_length(net, rng.randint(workload.alpha_min, workload.alpha_max))
                op = Op(kind, (src, k1, min(k1 + length - 1, hi)))
                res = net.range_search(*op.args)
            elif kind == "update":
                s = sensors.pick(rng)
                op = Op(kind, (s, net.energy[s], dist.sample()))
                res = net.update_energy(*op.args)
            elif kind == "join":
                op = Op(kind, (next_sensor, dist.sample(), peers.pick(rng)))
                res = net.join_overlay_peer(*op.args)
                sensors.add(next_sensor)
                peers.add(res.terminal)
                next_sensor += 1
            else:
                if len(peers) < 2:
                    raise NetworkError("cannot remove the last peer")
                pid = peers.pick(rng)
                drained = sorted(net.records_of(pid))
                for s in drained:
                    net.remove_sensor(s)
                    sensors.discard(s)
                op = Op(kind, (pid, tuple(drained)))
                res = net.leave_overlay_peer(pid)
                peers.discard(pid)
        except (NetworkError, ValueError):
            metrics.ops[kind].failed += 1
            continue
        if log is not None:
            log.append(op)
        metrics.record(kind, res)
    for pid in net.peers():
        metrics.peer_records[pid] = len(net.records_of(pid))
        metrics.peer_routing[pid] = net.routing_entries(pid)
    metrics.check_conservation()
    metrics.wall_time = time.perf_counter() - began
    return metrics


def _chord_result(trace, receivers, extra=0) -> QueryResult:
    return QueryResult(None, 0, trace, slave_hops=1, extra_messages=extra, receivers=receivers)


def replay_on_chord(ring: ChordRing, population, log: list[Op], workload: Workload) -> SimMetrics:
    """Replay a concrete op log on a Chord ring loaded with ``population``."""
    metrics = SimMetrics("chord", workload.digest())
    energy: dict[int, int] = {}
    for s, k in population:
        ring.insert(s, k)
        energy[s] = k
    rng = random.Random(workload.seed + 3)
    for op in log:
        if op.kind == "exact":
            src, k = op.args
            home = ring.owner(energy[src])
            t = chord_lookup(ring, home, k)
            res = _chord_result(t, [home] + t.nodes[1:])
        elif op.kind == "range":
            src, k1, k2 = op.args
            home = ring.owner(energy[src])
            r = chord_range(ring, home, k1, k2, rng)
            res = _chord_result(r.trace, [home] + r.trace.nodes[1:])
        elif op.kind == "update":
            s, k1, k2 = op.args
            home = ring.owner(k1)
            del ring.records[home][s]
            t = chord_lookup(ring, home, k2)
            ring.records[t.end][s] = k2
            energy[s] = k2
            res = _chord_result(t, [home] + t.nodes[1:] + [home, t.end], 2)
        elif op.kind == "join":
            s, k, contact = op.args
            t = chord_lookup(ring, contact, k)
            ring.records[t.end][s] = k
            energy[s] = k
            res = _chord_result(t, [contact] + t.nodes[1:])
        else:
            pid, drained = op.args
            for s in drained:
                ring.records[ring.owner(energy.pop(s))].pop(s, None)
            # successor/predecessor notice plus one finger repair per ring bit
            repair = ring.bits + 2
            res = QueryResult(None, 0, chord_lookup(ring, pid, ring.partition.peer_range(pid)[0]),
                              extra_messages=repair, receivers=[pid] * repair)
        metrics.record(op.kind, res)
    for pid in range(1, ring.num_peers + 1):
        metrics.peer_records[pid] = len(ring.records[pid])
        metrics.peer_routing[pid] = len(set(ring.fingers[ring.node_of[pid]])) + 1
    metrics.check_conservation()
    return metrics


def compare_runs(a: SimMetrics, b: SimMetrics) -> list[dict]:
    """Per op class: ratio b/a of average hops and improvement (1 - a/b) * 100."""
    if a.workload != b.workload:
        raise ValueError("metrics come from different workloads")
    rows = []
    for name in OP_CLASSES:
        sa, sb = a.ops[name], b.ops[name]
        if (sa.count == 0 and sb.count == 0) or (sa.avg_hops == 0 and sb.avg_hops == 0):
            ratio, improvement = 1.0, 0.0
        elif sa.count == 0 or sb.count == 0 or sa.avg_hops == 0 or sb.avg_hops == 0:
            ratio = improvement = float("nan")
        else:
            ratio = sb.avg_hops / sa.avg_hops
            improvement = (1 - sa.avg_hops / sb.avg_hops) * 100
        rows.append({"op_class": name, "a_avg_hops": round(sa.avg_hops, 6),
                     "b_avg_hops": round(sb.avg_hops, 6),
                     "ratio": round(ratio, 6), "improvement_pct": round(improvement, 6)})
    return rows
