"""Acceptance checks, one test per criterion; each prints a PASS/FAIL line."""
import bisect
import math
import random
import time

import pytest

from sartsim import cli
from sartsim.art import build_art
from sartsim.chord import build_ring
from sartsim.config import ExperimentConfig
from sartsim.keyspace import KeyDistribution, Universe, make_partition, partition_for
from sartsim.sart import build_net
from sartsim.simkernel import Workload, replay_on_chord, run_workload


@pytest.fixture
def verdict(capsys):
    def _verdict(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return _verdict


def flat_owner_map(net):
    """Sorted (base, peer) pairs of every live peer: the flat-map oracle."""
    pairs = []
    for ci in net.clusters:
        t = net.trees[ci]
        pairs += [(t.peer_range(i)[0], pid) for i, pid in enumerate(t.ids)]
    pairs.sort()
    bases = [b for b, _ in pairs]
    peers = [p for _, p in pairs]
    def owner(key):
        return peers[max(bisect.bisect_right(bases, key) - 1, 0)]
    return owner


def loaded(clusters, b=2, per_peer=0, seed=0, dist="uniform", bits=None):
    part = partition_for(clusters=clusters, bits=bits)
    net = build_net(part, clusters, b=b, seed=seed)
    if per_peer:
        lo, hi = net.key_span
        d = KeyDistribution(dist, lo, hi, seed=seed + 1)
        net.bulk_load((s, d.sample()) for s in range(per_peer * len(net.peers())))
    return net


def test_1_exhaustive_oracle(verdict):
    began = time.perf_counter()
    checked = wrong = 0
    cases = [(10, None, 2), (10, None, 4), (10, None, 16),
             (12, None, 2), (12, None, 16), (12, 30, 2), (12, 30, 4)]
    for bits, subset, b in cases:
        part = make_partition(Universe(bits))
        clusters = range(1, part.num_clusters + 1)
        if subset:
            clusters = sorted(random.Random(bits).sample(list(clusters), subset))
        assert len(clusters) <= 64
        net = build_net(part, clusters, b=b, seed=bits)
        owner = flat_owner_map(net)
        keys = range(part.universe.size)
        answers = [owner(k) for k in keys]
        # every peer as a start on the small universe, every cluster root on the large one
        if bits == 10:
            starts = net.peers()
        else:
            starts = [net.trees[ci].ids[net.trees[ci].root] for ci in net.clusters]
        for s in starts:
            for k in keys:
                checked += 1
                wrong += net.route(s, k)[0].end != answers[k]
    elapsed = time.perf_counter() - began
    verdict("1 exhaustive exact-match oracle", wrong == 0 and elapsed < 30,
            f"{checked} queries, {wrong} wrong, {elapsed:.1f}s")


def test_2_range_oracle(verdict):
    began = time.perf_counter()
    trials = wrong = 0
    for clusters, b, dist in [(86, 2, "uniform"), (86, 16, "uniform"), (86, 4, "powlaw"),
                              (40, 2, "normal")]:
        net = loaded(clusters, b, per_peer=10, seed=clusters + b, dist=dist)
        by_key = sorted((e, s) for s, e in net.energy.items())
        keys = [e for e, _ in by_key]
        lo, hi = net.key_span
        width = -(-(hi - lo + 1) // len(net.peers()))
        rng = random.Random(b)
        sensors = sorted(net.energy)
        for _ in range(1000):
            k1 = rng.randint(lo, hi)
            k2 = min(hi, k1 + width * rng.randint(1, 10) - 1)
            res = net.range_search(rng.choice(sensors), k1, k2)
            expect = sorted(s for _, s in by_key[bisect.bisect_left(keys, k1):
                                                 bisect.bisect_right(keys, k2)])
            trials += 1
            wrong += res.answer != expect or bool(expect and res.chosen not in expect)
    elapsed = time.perf_counter() - began
    verdict("2 range answers equal oracle filter", wrong == 0 and elapsed < 30,
            f"{trials} ranges, {wrong} wrong, {elapsed:.1f}s")


def test_3_hop_bound(verdict):
    began = time.perf_counter()
    lines, ok = [], True
    for n in (2 ** 8, 2 ** 10, 2 ** 12):
        part = partition_for(clusters=n)
        rng = random.Random(n)
        top = part.cluster_range(n)[1]
        queries = [(rng.randint(1, n * part.peers_per_cluster), rng.randint(0, top))
                   for _ in range(10 ** 4)]
        avgs = []
        for b in (2, 4, 16):
            net = build_net(part, n, b=b, seed=n + b)
            hops = [net.route(s, k)[0].hops for s, k in queries]
            bound = ((math.log(math.log2(n) + 1, b) + 1) ** 2 + math.log2(math.log2(n))
                     + net.interior_height() + 2)
            avgs.append(sum(hops) / len(hops))
            ok &= max(hops) <= bound
            lines.append(f"N'={n} b={b} max={max(hops)} bound={bound:.1f} avg={avgs[-1]:.2f}")
        ok &= avgs[0] >= avgs[1] >= avgs[2]
    elapsed = time.perf_counter() - began
    ok &= elapsed < 300
    verdict("3 hop bound and b-monotone averages", ok, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_4_routing_state(verdict):
    lines, ok = [], True
    c = 1
    for n in (2 ** 8, 2 ** 10, 2 ** 12):
        for b in (2, 4, 16):
            ov = build_art(partition_for(clusters=n), b=b, c=c, clusters=n, seed=n)
            worst = max(ov.routing_entries(ci) for ci in ov.clusters)
            bound = math.ceil(n ** 0.25 / math.log2(n) ** c) + math.log2(math.log2(n)) + 3
            ok &= worst <= bound
            lines.append(f"N'={n} b={b} max={worst} bound={bound:.2f}")
    verdict("4 routing entries per cluster", ok, "; ".join(lines))


def _comparison(peers, b, exact=2000, updates=2000, alpha=(1, 10), seed=42):
    cfg = ExperimentConfig()
    cfg.network.peers, cfg.network.b = peers, b
    w = cfg.workload
    w.sensors_per_peer = 20
    w.exact_queries, w.updates = exact, updates
    w.range_queries = 2000
    w.joins = w.leaves = 0
    w.alpha_min, w.alpha_max = alpha
    cfg.sim.seed = seed
    _, _, rows = cli.simulate(cfg)
    return {r["op_class"]: r for r in rows}


def test_5_chord_ratio(verdict):
    rows = {b: _comparison(2 ** 12, b) for b in (2, 4, 16)}
    exact = {b: rows[b]["exact"]["ratio"] for b in rows}
    upd = {b: rows[b]["update"]["improvement_pct"] for b in rows}
    ok = exact[2] >= 1.5 and exact[16] >= 3.0 and upd[16] > upd[4] > upd[2]
    verdict("5 chord/sart exact-hop ratio and update ordering", ok,
            f"ratio b=2 {exact[2]:.3f} (need >= 1.5), b=16 {exact[16]:.3f} (need >= 3.0); "
            f"update improvement {upd[2]:.1f}% / {upd[4]:.1f}% / {upd[16]:.1f}% for b=2/4/16")


def test_6_range_regimes(verdict):
    ppc = partition_for(peers=2 ** 10).peers_per_cluster
    # range length is alpha peer widths, so alpha > ppc exceeds a cluster width
    short = _comparison(2 ** 10, 2, exact=0, updates=0, alpha=(1, ppc))["range"]["ratio"]
    long = _comparison(2 ** 10, 2, exact=0, updates=0,
                       alpha=(ppc + 1, 3 * ppc))["range"]["ratio"]
    verdict("6 long ranges shrink the chord/sart ratio", long <= short,
            f"ratio short {short:.3f}, long {long:.3f} (need long <= short)")


def test_7_join_leave_cost(verdict):
    lines, ok, fits = [], True, []
    for e in range(8, 15):
        n = 2 ** e
        part = partition_for(clusters=2 * n)
        rng = random.Random(e)
        ov = build_art(part, clusters=rng.sample(range(1, 2 * n + 1), n), seed=e)
        x = math.log2(math.log2(n))
        msgs = repairs = ops = 0
        for _ in range(200):
            if rng.random() < 0.5:
                absent = rng.randint(1, 2 * n)
                while absent in ov:
                    absent = rng.randint(1, 2 * n)
                recv, rep = ov.join(absent)
            else:
                recv, rep = ov.leave(rng.choice(ov.clusters))
            msgs += len(recv)
            repairs += rep
            ops += 1
        a = (msgs - repairs) / ops / x
        fits.append((x, (msgs - repairs) / ops))
        ok &= a <= 4
        lines.append(f"N'=2^{e} a={a:.2f}")
    # least-squares slope through the per-size points
    mx = sum(p[0] for p in fits) / len(fits)
    my = sum(p[1] for p in fits) / len(fits)
    slope = sum((p[0] - mx) * (p[1] - my) for p in fits) / sum((p[0] - mx) ** 2 for p in fits)
    ok &= slope <= 4

    part = partition_for(clusters=300)
    rng = random.Random(7)
    ov = build_art(part, clusters=rng.sample(range(1, 301), 150), seed=7)
    for _ in range(1000):
        dead = [c for c in range(1, 301) if c not in ov]
        if dead and (rng.random() < 0.5 or len(ov) == 1):
            ov.join(rng.choice(dead))
        else:
            ov.leave(rng.choice(ov.clusters))
    ov.check()
    batch = build_art(part, clusters=ov.clusters)
    same = ov.shape == batch.shape and ov.ownership() == batch.ownership()
    ok &= same
    verdict("7 join/leave messages and incremental == batch", ok,
            ", ".join(lines) + f"; slope {slope:.2f}; equivalence {'holds' if same else 'broken'}")


def test_8_conservation_and_determinism(verdict, tmp_path):
    part = partition_for(peers=2 ** 10)
    clusters = -(-2 ** 10 // part.peers_per_cluster)
    net = build_net(part, clusters, seed=1)
    lo, hi = net.key_span
    d = KeyDistribution("uniform", lo, hi, seed=2)
    pop = [(s, d.sample()) for s in range(20 * len(net.peers()))]
    net.bulk_load(pop)
    w = Workload(exact=30000, range=20000, update=30000, join=18000, leave=2000, seed=3)
    log = []
    m = run_workload(net, w, log)
    joined = sum(1 for op in log if op.kind == "join")
    drained = sum(len(op.args[1]) for op in log if op.kind == "leave")
    expect = len(pop) + joined - drained
    conserved = (net.record_count() == len(net.energy) == expect
                 and sum(m.peer_messages.values()) == m.total_messages)
    net.check()
    ring = build_ring(max(part.cluster_peers(net.clusters[-1])), part)
    chord = replay_on_chord(ring, pop, log, w)
    conserved &= sum(chord.peer_records.values()) == expect

    cfg = ExperimentConfig()
    cfg.network.peers = 2 ** 10
    a = cli.run_experiment(cfg, str(tmp_path / "a"))
    b = cli.run_experiment(cfg, str(tmp_path / "b"))
    identical = all(open(a.files[k], "rb").read() == open(b.files[k], "rb").read()
                    for k in a.files)
    verdict("8 record conservation and identical reports", conserved and identical,
            f"{len(log)} ops executed, records {net.record_count()} == expected {expect}; "
            f"reports {'identical' if identical else 'differ'}")


def test_9_load_balance(verdict):
    net = loaded(2 ** 10, per_peer=100, seed=9)
    total = net.record_count()
    cap = 8 * math.log2(total) ** 2
    worst = max(len(r) for t in net.trees.values() for r in t.records.values())
    empty = [ci for ci, t in net.trees.items() if not any(t.records.values())]
    verdict("9 per-peer load bound and no empty cluster", worst <= cap and not empty,
            f"{total} records, max peer load {worst} <= {cap:.0f}, empty clusters {len(empty)}")
