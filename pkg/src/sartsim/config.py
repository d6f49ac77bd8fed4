"""Experiment configuration: INI-style sections parsed into dataclasses."""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import asdict, dataclass, field, fields

from .keyspace import DISTRIBUTIONS, validate_params
from .lrt import BRANCHING


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class NetworkConfig:
    peers: int | None = None
    clusters: int | None = None
    universe_bits: int | None = None
    b: int = 2
    c: int = 1
    fanout: int = 2
    placement: str = "dense"


@dataclass
class WorkloadConfig:
    sensors_per_peer: int = 100
    distribution: str = "uniform"
    params: tuple[float, ...] | None = None
    exact_queries: int = 1000
    range_queries: int = 1000
    updates: int = 1000
    joins: int = 100
    leaves: int = 20
    alpha_min: int = 1
    alpha_max: int = 10


@dataclass
class SimConfig:
    seed: int = 42
    baseline: bool = True


@dataclass
class OutputConfig:
    directory: str = "results"
    format: str = "csv"


@dataclass
class SweepConfig:
    peers: tuple[int, ...] = (256, 1024, 4096)
    b: tuple[int, ...] = BRANCHING
    alpha: tuple[int, ...] = tuple(range(1, 11))
    distribution: tuple[str, ...] = DISTRIBUTIONS


@dataclass
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:12]


SECTIONS = {f.name: f.default_factory for f in fields(ExperimentConfig)}


def _convert(raw: str, ftype: str, name: str):
    raw = raw.strip()
    if ftype == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if ftype.startswith("int | None") or ftype == "int":
        if raw.lower() in ("", "none") and "None" in ftype:
            return None
        return int(raw)
    if ftype == "str":
        return raw
    if "tuple[float" in ftype:
        if raw.lower() in ("", "none"):
            return None
        return tuple(float(x) for x in raw.split(","))
    if "tuple[int" in ftype:
        return tuple(int(x) for x in raw.split(","))
    if "tuple[str" in ftype:
        return tuple(x.strip() for x in raw.split(","))
    raise TypeError(f"unsupported field type {ftype}")


def validate(cfg: ExperimentConfig) -> list[str]:
    errs = []
    n, w, o = cfg.network, cfg.workload, cfg.output
    if (n.peers is None) == (n.clusters is None):
        errs.append("network: set exactly one of peers or clusters")
    for name in ("peers", "clusters"):
        v = getattr(n, name)
        if v is not None and v < 1:
            errs.append(f"network.{name} must be >= 1")
    if n.universe_bits is not None and not 4 <= n.universe_bits <= 62:
        errs.append("network.universe_bits must be in [4, 62]")
    if n.b not in BRANCHING:
        errs.append(f"network.b must be one of {list(BRANCHING)}, got {n.b}")
    if n.c < 1:
        errs.append("network.c must be >= 1")
    if n.fanout != 2:
        errs.append("network.fanout: only the binary interior (2) is implemented")
    if n.placement not in ("dense", "hashed"):
        errs.append("network.placement must be dense or hashed")
    if w.sensors_per_peer < 1:
        errs.append("workload.sensors_per_peer must be >= 1")
    if w.distribution not in DISTRIBUTIONS:
        errs.append(f"workload.distribution must be one of {list(DISTRIBUTIONS)}")
    elif w.params is not None:
        errs += [f"workload.params: {e}" for e in validate_params(w.distribution, w.params)]
    for name in ("exact_queries", "range_queries", "updates", "joins", "leaves"):
        if getattr(w, name) < 0:
            errs.append(f"workload.{name} must be >= 0")
    if not 1 <= w.alpha_min <= w.alpha_max:
        errs.append("workload: need 1 <= alpha_min <= alpha_max")
    if o.format not in ("csv", "json"):
        errs.append("output.format must be csv or json")
    sw = cfg.sweep
    if any(b not in BRANCHING for b in sw.b):
        errs.append("sweep.b values must be in {2, 4, 16}")
    if any(d not in DISTRIBUTIONS for d in sw.distribution):
        errs.append("sweep.distribution has an unknown kind")
    if any(p < 1 for p in sw.peers) or any(a < 1 for a in sw.alpha):
        errs.append("sweep peers/alpha values must be >= 1")
    return errs


def parse_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errs = []
    parts = {}
    for section in parser.sections():
        if section not in SECTIONS:
            errs.append(f"unknown section [{section}]")
            continue
        proto = SECTIONS[section]()
        types = {f.name: str(f.type) for f in fields(proto)}
        values = {}
        for key, raw in parser[section].items():
            if key not in types:
                errs.append(f"unknown key {section}.{key}")
                continue
            try:
                values[key] = _convert(raw, types[key], f"{section}.{key}")
            except ValueError as exc:
                errs.append(f"{section}.{key}: {exc}")
        parts[section] = type(proto)(**{**asdict(proto), **values})
    cfg = ExperimentConfig(**parts)
    errs += validate(cfg)
    if errs:
        raise ConfigError(errs)
    return cfg


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    return parse_text(text)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    """Normalized text form: every section, every key, fixed order."""
    out = io.StringIO()
    for name in SECTIONS:
        out.write(f"[{name}]\n")
        for key, val in asdict(getattr(cfg, name)).items():
            out.write(f"{key} = {_fmt(tuple(val) if isinstance(val, list) else val)}\n")
        out.write("\n")
    return out.getvalue()
