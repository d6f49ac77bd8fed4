from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class RouteTrace:
    """Ordered node labels visited by one operation, starting node first."""

    nodes: list[int]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def start(self) -> int:
        return self.nodes[0]

    @property
    def end(self) -> int:
        return self.nodes[-1]

    def extend(self, labels) -> None:
        for label in labels:
            if label != self.nodes[-1]:
                self.nodes.append(label)


@dataclass
class QueryResult:
    chosen: int | None
    answer_size: int
    trace: RouteTrace
    slave_hops: int = 0
    extra_messages: int = 0
    # receiving peer of every message, in send order; drives per-peer counters
    receivers: list[int] = field(default_factory=list)
    terminal: int | None = None
    repair_messages: int = 0
    level_hops: dict[int, int] = field(default_factory=dict)
    answer: list[int] = field(default_factory=list)

    @property
    def hops(self) -> int:
        return self.trace.hops

    @property
    def total_hops(self) -> int:
        return self.trace.hops + self.slave_hops

    @property
    def messages(self) -> int:
        return len(self.receivers)
