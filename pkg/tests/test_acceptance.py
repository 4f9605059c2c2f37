"""Acceptance suite. Each test prints one ``ACCEPTANCE <id> PASS|FAIL`` line.

The lines are also collected into a section of the pytest terminal summary.
Tolerances and budgets are fixed here and must not be loosened to make a
criterion pass.
"""
import random
import time

import numpy as np
import pytest

from _oracles import floyd_warshall, packet_oracle, random_node
from conftest import ACCEPTANCE_LINES
from iovsim.channel import make_snapshot
from iovsim.config import ScenarioConfig, with_overrides
from iovsim.engine import run, sweep
from iovsim.metrics import indicators
from iovsim.routing import build_tables, port_of, shortest_path
from iovsim.switch import TaskQueueEntry, order_tasks, step_node

SEEDS = list(range(1, 11))

# budgets and tolerances
ORACLE_CASES, ORACLE_BUDGET_S = 10_000, 10.0
ROUTING_GRAPHS = 1000
HEADLINE_LOSS = (0.01, 0.05)
HEADLINE_ARRIVAL = (0.70, 0.90)
HEADLINE_BUDGET_S = 60.0
MINOR_CHANGE = 0.02  # "< 2 percentage points"
RANDOM_RECORDS = 1000
RUN_BUDGET_S, SWEEP_BUDGET_S = 1.0, 120.0


def report(cid, ok, detail):
    line = f"ACCEPTANCE {cid:<3} {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_1_forwarding_rule_matches_packet_oracle():
    rng = np.random.default_rng(10_000)
    mismatches = 0
    t0 = time.perf_counter()
    for _ in range(ORACLE_CASES):
        C, F, planned, actual, entries = random_node(rng)
        ordered = order_tasks(entries, random.Random(int(rng.integers(2**31))))
        node, link = step_node(C, F, ordered, planned, actual, ordered=True)
        ref = packet_oracle([(e.demand, e.port) for e in ordered], C, F, planned, actual)
        for e, t, r in zip(ordered, node.tasks, ref):
            got = (t.allocated_C, t.allocated_F, t.allocated_R, t.mu, t.node_loss, t.updated_L,
                   link.delivered[e.task_id], link.link_loss[e.task_id])
            mismatches += got != r
    elapsed = time.perf_counter() - t0
    report("1", mismatches == 0 and elapsed < ORACLE_BUDGET_S,
           f"{ORACLE_CASES} node configs, {mismatches} mismatches, {elapsed:.2f} s (< {ORACLE_BUDGET_S:.0f} s)")


def test_2_two_task_worked_example():
    t1 = TaskQueueEntry(1, "high", 100, 0, 2)
    t2 = TaskQueueEntry(2, "high", 0, 200, 3)
    node, _ = step_node(200, 300, [t1, t2], {2: 1000, 3: 1000}, {2: 1000, 3: 1000}, ordered=True)
    f = tuple(t.allocated_F for t in node.tasks)
    c = tuple(t.allocated_C for t in node.tasks)
    report("2", f == (100, 200) and c == (100, 100), f"F={f} C={c} (expected F=(100, 200) C=(100, 100))")


def test_3_routing_matches_floyd_warshall():
    rng = np.random.default_rng(3)
    bad_weight = bad_walk = pairs = 0
    for _ in range(ROUTING_GRAPHS):
        n = int(rng.integers(2, 11))
        rate = np.where(rng.random((n, n)) < 0.4, 5, 0)
        rate = np.maximum(rate, rate.T)
        pos = np.column_stack([rng.integers(0, 300, n), rng.integers(0, 300, n), np.zeros(n)])
        snap = make_snapshot(0, rate, pos)
        w = rng.integers(1, 30, (n, n)).astype(float)
        w = np.where(snap.exists, np.minimum(w, w.T), np.inf)
        fw = floyd_warshall(w)
        tables = build_tables(snap)
        for s in range(n):
            for t in range(n):
                if s == t:
                    continue
                pairs += 1
                r = shortest_path(snap, s, t, weights=w)
                if (r is None) != np.isinf(fw[s, t]) or (r is not None and r.weight != fw[s, t]):
                    bad_weight += 1
                if t in tables[s].entries:
                    node, hops = s, 0
                    while node != t and hops < n:
                        nxt, port = tables[node].entries[t]
                        if not snap.exists[node, nxt] or port != port_of(snap, node, nxt):
                            break
                        node, hops = nxt, hops + 1
                    bad_walk += node != t
    report("3", bad_weight == 0 and bad_walk == 0,
           f"{ROUTING_GRAPHS} graphs, {pairs} pairs, {bad_weight} weight mismatches, {bad_walk} failed table walks")


def test_4_conservation_every_slot():
    worst = 0.0
    for seed in (1, 2, 3):
        s = run(ScenarioConfig(), seed).series
        offered = np.cumsum(s["offered"])
        accounted = (np.cumsum(s["delivered"]) + np.cumsum(s["node_loss"]) + np.cumsum(s["link_loss"])
                     + s["in_network"])
        worst = max(worst, float(np.abs(offered - accounted).max()))
    report("4", worst == 0.0, f"seeds 1-3, 300 slots each, max |offered - accounted| = {worst:g} packets")


@pytest.fixture(scope="module")
def trend_runs():
    """Final loss/arrival and final-100-slot means for every configuration criteria 5 and 6 need."""
    points = {
        "q20": dict(qos_mbps=20), "q60": dict(qos_mbps=60), "q100": dict(qos_mbps=100),
        "q20_half": dict(qos_mbps=20, cache_scale=0.5), "q100_half": dict(qos_mbps=100, cache_scale=0.5),
        "q60_v32": dict(qos_mbps=60, n_vehicles=32), "q180": dict(qos_mbps=180),
        "q180_v32": dict(qos_mbps=180, n_vehicles=32),
    }
    out = {}
    for key, kw in points.items():
        cfg = with_overrides(ScenarioConfig(), **kw)
        t0 = time.perf_counter()
        series = [run(cfg, s).series for s in SEEDS]
        out[key] = {
            "final_loss": float(np.mean([s.final("loss_rate") for s in series])),
            "final_arrival": float(np.mean([s.final("arrive_rate") for s in series])),
            "tail_loss": float(np.mean([s.tail_mean("loss_rate", 100) for s in series])),
            "tail_arrival": float(np.mean([s.tail_mean("arrive_rate", 100) for s in series])),
            "seconds": time.perf_counter() - t0,
        }
    return out


def test_5_headline_numbers(trend_runs):
    r = trend_runs["q20"]
    ok = (HEADLINE_LOSS[0] <= r["final_loss"] <= HEADLINE_LOSS[1]
          and HEADLINE_ARRIVAL[0] <= r["final_arrival"] <= HEADLINE_ARRIVAL[1]
          and r["seconds"] < HEADLINE_BUDGET_S)
    report("5", ok, f"QoS 20, {len(SEEDS)} seeds: loss {r['final_loss']:.4f} in {HEADLINE_LOSS}, "
                    f"arrival {r['final_arrival']:.4f} in {HEADLINE_ARRIVAL}, {r['seconds']:.1f} s")


def test_6a_loss_rises_with_qos(trend_runs):
    l20, l60, l100 = (trend_runs[k]["tail_loss"] for k in ("q20", "q60", "q100"))
    a20, a60, a100 = (trend_runs[k]["tail_arrival"] for k in ("q20", "q60", "q100"))
    report("6a", l20 < l60 < l100 and a20 > a60 > a100,
           f"loss {l20:.4f} < {l60:.4f} < {l100:.4f}; arrival {a20:.4f} > {a60:.4f} > {a100:.4f}")


def test_6b_cache_halving(trend_runs):
    full, half = trend_runs["q100"], trend_runs["q100_half"]
    high_ok = half["tail_loss"] > full["tail_loss"] and half["tail_arrival"] < full["tail_arrival"]
    delta = abs(trend_runs["q20_half"]["tail_loss"] - trend_runs["q20"]["tail_loss"])
    report("6b", high_ok and delta < MINOR_CHANGE,
           f"QoS 100: loss {full['tail_loss']:.4f} -> {half['tail_loss']:.4f}, arrival "
           f"{full['tail_arrival']:.4f} -> {half['tail_arrival']:.4f}; QoS 20 loss change "
           f"{100 * delta:.2f} pp (< {100 * MINOR_CHANGE:.0f} pp)")


def test_6c_vehicle_density(trend_runs):
    rises = trend_runs["q180_v32"]["tail_loss"] > trend_runs["q180"]["tail_loss"]
    delta = abs(trend_runs["q60_v32"]["tail_loss"] - trend_runs["q60"]["tail_loss"])
    report("6c", rises and delta < MINOR_CHANGE,
           f"QoS 180: loss {trend_runs['q180']['tail_loss']:.4f} -> {trend_runs['q180_v32']['tail_loss']:.4f}; "
           f"QoS 60 loss change {100 * delta:.2f} pp (< {100 * MINOR_CHANGE:.0f} pp)")


def test_7_metric_ranges_and_sumflow_identity():
    from iovsim.metrics import SlotFlowRecord

    rng = np.random.default_rng(7)
    out_of_range = identity_fail = 0
    for _ in range(RANDOM_RECORDS):
        n = int(rng.integers(1, 40))
        C = int(rng.integers(1, 1000))
        L = rng.integers(0, C + 1, n)
        mu = rng.integers(0, C - L + 1)
        rate = rng.integers(0, 60, (n, n)) * (rng.random((n, n)) < 0.5)
        m = int(rng.integers(0, 50))
        size = rng.integers(1, 300, m)
        sent = rng.integers(0, size + 1)
        lost = rng.integers(0, sent + 1)
        rec = SlotFlowRecord(0, mu.astype(float), L.astype(float), np.full(n, float(C)),
                             rng.integers(0, rate + 1).astype(float), rate.astype(float),
                             lost.astype(float), sent.astype(float),
                             rng.integers(0, sent - lost + 1).astype(float), size.astype(float))
        ind = indicators(rec)
        for name in ("loss_rate", "arrive_rate", "node_load", "link_load"):
            v = ind[name]
            out_of_range += not (np.isnan(v) or 0.0 <= v <= 1.0)
        product = ind["node_load"] * n * C
        # sumflow is an integer packet count; the float product must round to it exactly
        identity_fail += round(product) != ind["sumflow"] or abs(product - ind["sumflow"]) > 1e-12 * max(1.0, product)
    report("7", out_of_range == 0 and identity_fail == 0,
           f"{RANDOM_RECORDS} records, {out_of_range} out-of-range rates, {identity_fail} identity failures")


def test_8_determinism():
    cfg = ScenarioConfig()
    a, b = run(cfg, 11).series.to_csv_text(), run(cfg, 11).series.to_csv_text()
    perm = np.random.default_rng(8).permutation(cfg.n_vehicles + cfg.n_rsus)
    c = run(cfg, 11, node_order=perm).series.to_csv_text()
    report("8", a == b == c, f"repeat identical: {a == b}; permuted node order identical: {a == c}")


def test_9_performance():
    cfg = ScenarioConfig()
    run(cfg, 1)  # warm-up: imports and extension loading are not part of a run
    t0 = time.perf_counter()
    run(cfg, 2)
    one = time.perf_counter() - t0
    t0 = time.perf_counter()
    points = sweep(cfg, {"qos_mbps": [20, 60, 100], "cache_scale": [0.5, 1.0, 2.0]}, SEEDS, jobs=1)
    grid = time.perf_counter() - t0
    report("9", one < RUN_BUDGET_S and grid < SWEEP_BUDGET_S and len(points) == 9,
           f"one run {one:.2f} s (< {RUN_BUDGET_S:.0f} s); 3x3 grid x {len(SEEDS)} seeds, single process, "
           f"{grid:.1f} s (< {SWEEP_BUDGET_S:.0f} s)")
