"""Key universe, two-level range partition, and workload key samplers."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field


class KeyRangeError(ValueError):
    pass


@dataclass(frozen=True)
class Universe:
    bits: int

    @property
    def size(self) -> int:
        return 1 << self.bits

    def check(self, key: int) -> int:
        if not 0 <= key < self.size:
            raise KeyRangeError(f"key {key} outside [0, {self.size - 1}]")
        return key


@dataclass(frozen=True)
class Partition:
    universe: Universe
    peer_width: int
    peers_per_cluster: int

    @property
    def cluster_width(self) -> int:
        return self.peer_width * self.peers_per_cluster

    @property
    def num_peers(self) -> int:
        return -(-self.universe.size // self.peer_width)

    @property
    def num_clusters(self) -> int:
        return -(-self.num_peers // self.peers_per_cluster)

    def peer_range(self, peer: int) -> tuple[int, int]:
        if not 1 <= peer <= self.num_peers:
            raise KeyRangeError(f"peer {peer} outside [1, {self.num_peers}]")
        lo = (peer - 1) * self.peer_width
        return lo, min(peer * self.peer_width, self.universe.size) - 1

    def cluster_range(self, cluster: int) -> tuple[int, int]:
        if not 1 <= cluster <= self.num_clusters:
            raise KeyRangeError(f"cluster {cluster} outside [1, {self.num_clusters}]")
        lo = (cluster - 1) * self.cluster_width
        return lo, min(cluster * self.cluster_width, self.universe.size) - 1

    def cluster_peers(self, cluster: int) -> range:
        """Nominal (partition) peer indices that make up ``cluster``."""
        first = (cluster - 1) * self.peers_per_cluster + 1
        last = min(cluster * self.peers_per_cluster, self.num_peers)
        return range(first, last + 1)


def ln_width(universe: Universe) -> int:
    return math.ceil(universe.bits * math.log(2))


def make_partition(universe: Universe) -> Partition:
    if universe.bits < 4:
        raise ValueError(f"universe needs at least 4 bits, got {universe.bits}")
    w = ln_width(universe)
    return Partition(universe, peer_width=w, peers_per_cluster=w)


def owner_peer(partition: Partition, key: int) -> int:
    partition.universe.check(key)
    return key // partition.peer_width + 1


def owner_cluster(partition: Partition, key: int) -> int:
    partition.universe.check(key)
    return key // partition.cluster_width + 1


def partition_for(peers: int | None = None, clusters: int | None = None,
                  bits: int | None = None) -> Partition:
    """Smallest universe (or the given one) that can host the requested population."""
    if bits is not None:
        part = make_partition(Universe(bits))
        if peers is not None and part.num_peers < peers:
            raise ValueError(f"universe 2^{bits} holds only {part.num_peers} peers")
        if clusters is not None and part.num_clusters < clusters:
            raise ValueError(f"universe 2^{bits} holds only {part.num_clusters} clusters")
        return part
    for b in range(4, 63):
        part = make_partition(Universe(b))
        if (peers is None or part.num_peers >= peers) and (
                clusters is None or part.num_clusters >= clusters):
            return part
    raise ValueError("population too large")


DISTRIBUTIONS = ("uniform", "normal", "beta", "powlaw")


def default_params(kind: str, size: int) -> tuple[float, ...]:
    if kind == "uniform":
        return ()
    if kind == "normal":
        return (size / 2, size / 8)
    if kind == "beta":
        return (2.0, 2.0)
    if kind == "powlaw":
        return (3.0, float(max(size - 1, 1)))
    raise ValueError(f"unknown distribution {kind!r}")


def validate_params(kind: str, params: tuple[float, ...]) -> list[str]:
    errors = []
    if kind not in DISTRIBUTIONS:
        return [f"unknown distribution {kind!r}"]
    expected = {"uniform": 0, "normal": 2, "beta": 2, "powlaw": 2}[kind]
    if len(params) != expected:
        return [f"{kind} takes {expected} parameters, got {len(params)}"]
    if kind == "normal" and params[1] <= 0:
        errors.append("normal sd must be positive")
    if kind == "beta" and (params[0] <= 0 or params[1] <= 0):
        errors.append("beta shape parameters must be positive")
    if kind == "powlaw" and (params[0] <= -1 or params[1] <= 0):
        errors.append("powlaw needs exponent > -1 and positive cutoff")
    return errors


@dataclass
class KeyDistribution:
    """Seeded key sampler over ``[lo, hi]``.

    ``params`` default to the kind's standard parameters for the span; normal
    and powlaw parameters are expressed in keys relative to ``lo``.
    """

    kind: str
    lo: int
    hi: int
    params: tuple[float, ...] | None = None
    seed: int = 0
    rng: random.Random = field(init=False, repr=False)

    def __post_init__(self):
        if self.params is None:
            self.params = default_params(self.kind, self.hi - self.lo + 1)
        self.params = tuple(float(p) for p in self.params)
        errors = validate_params(self.kind, self.params)
        if errors:
            raise ValueError("; ".join(errors))
        if self.hi < self.lo:
            raise ValueError("empty key span")
        self.rng = random.Random(self.seed)

    def _raw(self) -> float:
        span = self.hi - self.lo + 1
        r = self.rng
        if self.kind == "uniform":
            return r.random() * span
        if self.kind == "normal":
            return r.gauss(self.params[0], self.params[1])
        if self.kind == "beta":
            return r.betavariate(self.params[0], self.params[1]) * span
        exponent, cut = self.params
        return cut * r.random() ** (1.0 / (exponent + 1.0))

    def sample(self) -> int:
        off = math.floor(self._raw())
        return self.lo + min(max(off, 0), self.hi - self.lo)


def sample_key(dist: KeyDistribution) -> int:
    return dist.sample()
