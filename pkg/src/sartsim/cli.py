"""Experiment runner: config in, metric reports out.

    sartsim run <config>
    sartsim sweep <config> --axis peers|b|alpha|distribution
    sartsim compare <report_a> <report_b>
    sartsim validate <config>
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass

from . import __version__
from .chord import build_ring
from .config import ConfigError, ExperimentConfig, parse_config, serialize
from .keyspace import KeyDistribution, partition_for
from .sart import SensorNet, build_net
from .simkernel import OP_CLASSES, Workload, compare_runs, replay_on_chord, run_workload

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
METRIC_FIELDS = ("op_class", "count", "min_hops", "max_hops", "avg_hops", "avg_messages", "failed")
PEER_FIELDS = ("peer_id", "messages", "records", "routing_entries")
TAG_FIELDS = ("config_hash", "seed", "workload")
AXES = ("peers", "b", "alpha", "distribution")


@dataclass
class RunResult:
    sart: object
    chord: object | None
    comparison: list[dict] | None
    files: dict[str, str]
    wall_time: float


def build_network(cfg: ExperimentConfig) -> tuple[SensorNet, list[tuple[int, int]]]:
    """Fully populated network plus the sensor population loaded into it."""
    n, w, seed = cfg.network, cfg.workload, cfg.sim.seed
    part = partition_for(peers=n.peers, clusters=n.clusters, bits=n.universe_bits)
    clusters = n.clusters or math.ceil(n.peers / part.peers_per_cluster)
    net = build_net(part, clusters, n.b, n.c, seed)
    lo, hi = net.key_span
    dist = KeyDistribution(w.distribution, lo, hi, w.params, seed + 4)
    population = [(s, dist.sample()) for s in range(w.sensors_per_peer * len(net.peers()))]
    net.bulk_load(population)
    return net, population


def workload_of(cfg: ExperimentConfig) -> Workload:
    w = cfg.workload
    return Workload(w.exact_queries, w.range_queries, w.updates, w.joins, w.leaves,
                    w.distribution, w.params, w.alpha_min, w.alpha_max, cfg.sim.seed)


def simulate(cfg: ExperimentConfig) -> tuple:
    net, population = build_network(cfg)
    workload = workload_of(cfg)
    log = []
    sart = run_workload(net, workload, log)
    chord = comparison = None
    if cfg.sim.baseline:
        ring = build_ring(max(net.partition.cluster_peers(net.clusters[-1])),
                          net.partition, cfg.sim.seed, cfg.network.placement)
        chord = replay_on_chord(ring, population, log, workload)
        comparison = compare_runs(sart, chord)
    return sart, chord, comparison


# ------------------------------------------------------------------ reports
def _tag(rows, cfg: ExperimentConfig, workload_digest: str) -> list[dict]:
    tag = {"config_hash": cfg.digest(), "seed": cfg.sim.seed, "workload": workload_digest}
    return [{**r, **tag} for r in rows]


def _render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def _comparison_rows(rows: list[dict]) -> list[dict]:
    return [{"op_class": r["op_class"], "sart_avg_hops": r["a_avg_hops"],
             "chord_avg_hops": r["b_avg_hops"], "ratio": r["ratio"],
             "improvement_pct": r["improvement_pct"]} for r in rows]


def report_texts(cfg: ExperimentConfig, sart, chord, comparison) -> dict[str, str]:
    fmt = cfg.output.format
    ext = "json" if fmt == "json" else "csv"
    out = {
        f"metrics.{ext}": _render(_tag(sart.rows(), cfg, sart.workload), fmt),
        f"peers.{ext}": _render(_tag(sart.peer_rows(), cfg, sart.workload), fmt),
    }
    if chord is not None:
        out[f"chord_metrics.{ext}"] = _render(_tag(chord.rows(), cfg, chord.workload), fmt)
        out[f"chord_peers.{ext}"] = _render(_tag(chord.peer_rows(), cfg, chord.workload), fmt)
        out[f"comparison.{ext}"] = _render(
            _tag(_comparison_rows(comparison), cfg, sart.workload), fmt)
    manifest = {
        "version": __version__, "config_hash": cfg.digest(), "seed": cfg.sim.seed,
        "workload": sart.workload, "config": serialize(cfg),
        "slave_hop_per_query": 1, "reports": sorted(out),
    }
    out["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    return out


def _publish(directory: str, texts: dict[str, str]) -> dict[str, str]:
    """Write all files to a staging dir first; nothing lands unless everything does."""
    os.makedirs(directory, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".partial-", dir=directory)
    try:
        for name, text in texts.items():
            with open(os.path.join(stage, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        paths = {}
        for name in texts:
            dest = os.path.join(directory, name)
            os.replace(os.path.join(stage, name), dest)
            paths[name] = dest
        return paths
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def run_experiment(cfg: ExperimentConfig, directory: str | None = None) -> RunResult:
    began = time.perf_counter()
    sart, chord, comparison = simulate(cfg)
    texts = report_texts(cfg, sart, chord, comparison)
    files = _publish(directory or cfg.output.directory, texts)
    return RunResult(sart, chord, comparison, files, time.perf_counter() - began)


# -------------------------------------------------------------------- sweep
def sweep_points(cfg: ExperimentConfig, axis: str, values=None) -> list[tuple[object, ExperimentConfig]]:
    if axis not in AXES:
        raise ConfigError([f"unknown sweep axis {axis!r}; choose from {list(AXES)}"])
    values = list(getattr(cfg.sweep, axis) if values is None else values)
    if not values:
        raise ConfigError([f"sweep axis {axis!r} has no values"])
    points = []
    for i, v in enumerate(values):
        pc = copy.deepcopy(cfg)
        pc.sim.seed = cfg.sim.seed + i
        if axis == "peers":
            pc.network.peers, pc.network.clusters = int(v), None
        elif axis == "b":
            pc.network.b = int(v)
        elif axis == "alpha":
            pc.workload.alpha_min = pc.workload.alpha_max = int(v)
        else:
            pc.workload.distribution, pc.workload.params = str(v), None
        points.append((v, pc))
    return points


def sweep(cfg: ExperimentConfig, axis: str, values=None, directory: str | None = None) -> list[dict]:
    """Run one experiment per axis value; returns the combined summary rows."""
    root = directory or cfg.output.directory
    summary = []
    for v, pc in sweep_points(cfg, axis, values):
        res = run_experiment(pc, os.path.join(root, f"{axis}_{v}"))
        chord_rows = {r["op_class"]: r for r in res.comparison} if res.comparison else {}
        for r in res.sart.rows():
            row = {"axis": axis, "value": v, "op_class": r["op_class"], "count": r["count"],
                   "avg_hops": r["avg_hops"], "max_hops": r["max_hops"],
                   "avg_messages": r["avg_messages"], "failed": r["failed"]}
            if chord_rows:
                c = chord_rows[r["op_class"]]
                row.update(chord_avg_hops=c["b_avg_hops"], ratio=c["ratio"],
                           improvement_pct=c["improvement_pct"])
            row.update(config_hash=pc.digest(), seed=pc.sim.seed)
            summary.append(row)
    ext = "json" if cfg.output.format == "json" else "csv"
    _publish(root, {f"summary_{axis}.{ext}": _render(summary, cfg.output.format)})
    return summary


# ------------------------------------------------------------------ compare
def load_report(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        if path.endswith(".json"):
            return json.load(fh)
        return list(csv.DictReader(fh))


def compare_reports(path_a: str, path_b: str) -> list[dict]:
    a, b = load_report(path_a), load_report(path_b)
    wa = {r.get("workload") for r in a}
    wb = {r.get("workload") for r in b}
    if wa != wb or len(wa) != 1:
        raise ValueError("reports come from different workloads")
    by_b = {r["op_class"]: r for r in b}
    rows = []
    for ra in a:
        name = ra["op_class"]
        ha, hb = float(ra["avg_hops"]), float(by_b[name]["avg_hops"])
        if ha == hb == 0:
            ratio, imp = 1.0, 0.0
        elif ha == 0 or hb == 0:
            ratio = imp = float("nan")
        else:
            ratio, imp = hb / ha, (1 - ha / hb) * 100
        rows.append({"op_class": name, "a_avg_hops": ha, "b_avg_hops": hb,
                     "ratio": round(ratio, 6), "improvement_pct": round(imp, 6)})
    return rows


# --------------------------------------------------------------------- main
def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sartsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("config")
    r.add_argument("--out", help="override output.directory")
    s = sub.add_parser("sweep", help="run one experiment per axis value")
    s.add_argument("config")
    s.add_argument("--axis", required=True, choices=AXES)
    s.add_argument("--values", help="comma-separated override of the [sweep] values")
    s.add_argument("--out", help="override output.directory")
    c = sub.add_parser("compare", help="compare two metrics reports")
    c.add_argument("report_a")
    c.add_argument("report_b")
    v = sub.add_parser("validate", help="check a config and list every violation")
    v.add_argument("config")
    return p


def _print_rows(rows: list[dict]) -> None:
    sys.stdout.write(_render(rows, "csv"))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "compare":
            _print_rows(compare_reports(args.report_a, args.report_b))
            return EXIT_OK
        cfg = parse_config(args.config)
        if args.verb == "validate":
            print(f"ok: config hash {cfg.digest()}")
            return EXIT_OK
        if args.verb == "run":
            res = run_experiment(cfg, args.out)
            _print_rows(res.sart.rows())
            if res.comparison:
                _print_rows(_comparison_rows(res.comparison))
            print(f"wall time {res.wall_time:.2f}s", file=sys.stderr)
            return EXIT_OK
        values = None
        if args.values:
            values = [x.strip() for x in args.values.split(",")]
            if args.axis != "distribution":
                values = [int(x) for x in values]
        _print_rows(sweep(cfg, args.axis, values, args.out))
        return EXIT_OK
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
