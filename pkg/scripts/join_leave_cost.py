"""Cluster join/leave message cost as the overlay grows.

    python scripts/join_leave_cost.py --min-exp 8 --max-exp 14
"""
import argparse
import csv
import math
import random
import sys

from sartsim.art import build_art
from sartsim.keyspace import partition_for


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--min-exp", type=int, default=8)
    ap.add_argument("--max-exp", type=int, default=14)
    ap.add_argument("--ops", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["clusters", "loglog", "avg_join_messages", "avg_leave_messages",
                  "avg_repairs"])
    for e in range(args.min_exp, args.max_exp + 1):
        n = 2 ** e
        rng = random.Random(args.seed + e)
        ov = build_art(partition_for(clusters=2 * n),
                       clusters=rng.sample(range(1, 2 * n + 1), n), seed=e)
        joins, leaves, repairs = [], [], 0
        for _ in range(args.ops):
            if rng.random() < 0.5:
                ci = rng.randint(1, 2 * n)
                while ci in ov:
                    ci = rng.randint(1, 2 * n)
                recv, rep = ov.join(ci)
                joins.append(len(recv))
            else:
                recv, rep = ov.leave(rng.choice(ov.clusters))
                leaves.append(len(recv))
            repairs += rep
        out.writerow([n, round(math.log2(math.log2(n)), 4), round(sum(joins) / len(joins), 3),
                      round(sum(leaves) / len(leaves), 3), round(repairs / args.ops, 3)])


if __name__ == "__main__":
    main()
