"""SART against the Chord baseline for every b at one network size.

    python scripts/chord_comparison.py --peers 4096 --queries 2000
"""
import argparse
import csv
import sys

from sartsim import cli
from sartsim.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--peers", type=int, default=4096)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--sensors-per-peer", type=int, default=20)
    ap.add_argument("--placement", choices=["dense", "hashed"], default="dense")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["b", "op_class", "sart_avg_hops", "chord_avg_hops", "ratio", "improvement_pct"])
    for b in (2, 4, 16):
        cfg = ExperimentConfig()
        cfg.network.peers, cfg.network.b, cfg.network.placement = args.peers, b, args.placement
        w = cfg.workload
        w.sensors_per_peer = args.sensors_per_peer
        w.exact_queries = w.range_queries = w.updates = args.queries
        w.joins, w.leaves = args.queries // 10, args.queries // 50
        cfg.sim.seed = args.seed
        _, _, rows = cli.simulate(cfg)
        for r in rows:
            out.writerow([b, r["op_class"], r["a_avg_hops"], r["b_avg_hops"], r["ratio"],
                          r["improvement_pct"]])


if __name__ == "__main__":
    main()
