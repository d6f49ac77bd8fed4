"""Exact-match overlay hops per cluster count and b, against the analytic bound.

    python scripts/hop_sweep.py --clusters 256 1024 4096 --queries 10000
"""
import argparse
import csv
import math
import random
import sys

from sartsim.keyspace import partition_for
from sartsim.sart import build_net


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clusters", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--b", type=int, nargs="+", default=[2, 4, 16])
    ap.add_argument("--queries", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["clusters", "b", "avg_hops", "max_hops", "bound", "max_routing_entries"])
    for n in args.clusters:
        part = partition_for(clusters=n)
        rng = random.Random(args.seed + n)
        top = part.cluster_range(n)[1]
        qs = [(rng.randint(1, n * part.peers_per_cluster), rng.randint(0, top))
              for _ in range(args.queries)]
        for b in args.b:
            net = build_net(part, n, b=b, seed=args.seed + b)
            hops = [net.route(s, k)[0].hops for s, k in qs]
            bound = ((math.log(math.log2(n) + 1, b) + 1) ** 2 + math.log2(math.log2(n))
                     + net.interior_height() + 2)
            entries = max(net.overlay.routing_entries(c) for c in net.clusters)
            out.writerow([n, b, round(sum(hops) / len(hops), 4), max(hops), round(bound, 2),
                          entries])


if __name__ == "__main__":
    main()
