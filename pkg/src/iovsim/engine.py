"""Slot loop: mobility, topology, task generation, forwarding, link transmission, metrics.

Packets a node forwards in slot k reach the next hop as input in slot k + 1,
so every node's update in a slot depends only on state from the previous
slot and the order in which nodes are processed does not matter. Packets
that cross the last hop count as delivered in the slot they are sent.

The switch plans with the link rates it measured in the previous slot; the
link actually carries the current slot's rate. A link that breaks therefore
loses what was pushed onto it for one slot, after which the switch sees a
zero rate and holds that task's packets in its cache.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from . import kernels
from .channel import build_topology
from .config import ScenarioConfig, with_overrides
from .metrics import MetricsSeries, SlotFlowRecord, average, indicators
from .routing import edge_weights, shortest_path_tree
from .scenario import initial_placement, placement_rng, trajectory
from .switch import PRIORITY_RANK, InvariantError, ordering_keys
from .traffic import Task, generate_tasks, initiator_count, traffic_rng

log = logging.getLogger(__name__)

TASK_LEDGER_COLUMNS = (
    "task_id", "source", "destination", "priority", "start_slot", "hops", "qos_rate", "rho",
    "sent", "delivered", "lost_node", "lost_link", "in_network", "routed", "finished_slot",
    "slots_to_completion",
)


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    series: MetricsSeries
    tasks: list[Task]
    records: list[SlotFlowRecord] = field(default_factory=list)

    def ledger_rows(self) -> list[dict]:
        rows = []
        for t in self.tasks:
            rows.append({
                "task_id": t.id, "source": t.source, "destination": t.destination,
                "priority": t.priority, "start_slot": t.start_slot,
                "hops": t.route.hops if t.route else "", "qos_rate": t.qos_rate,
                "rho": t.total_packets, "sent": t.sent, "delivered": t.delivered,
                "lost_node": t.lost_node, "lost_link": t.lost_link, "in_network": t.in_network,
                "routed": int(t.routed), "finished_slot": "" if t.finished_slot is None else t.finished_slot,
                "slots_to_completion": "" if t.finished_slot is None else t.finished_slot - t.start_slot + 1,
            })
        return rows


def _refresh_routes(k, snap, cfg, nexthop, cache, incoming, sent, size, src, dst, count) -> None:
    """Re-point every node holding a task's packets at a fresh shortest path.

    Where the destination is unreachable the old next hop stays and the
    packets wait in the cache.
    """
    weights = edge_weights(snap, cfg.routing.weight_mode, cfg.routing.port_cap)
    trees: dict[int, dict] = {}
    held = (cache[:count] + incoming[:count]) > 0
    for t in range(count):
        holders = set(np.flatnonzero(held[t]).tolist())
        if sent[t] < size[t] and nexthop[t, src[t]] >= 0:
            holders.add(int(src[t]))
        holders.discard(int(dst[t]))
        for h in sorted(holders):
            if h not in trees:
                trees[h] = shortest_path_tree(snap, h, weights)
            route = trees[h].get(int(dst[t]))
            if route is not None:
                nexthop[t, list(route.nodes[:-1])] = route.nodes[1:]


def _total_tasks(cfg: ScenarioConfig, n: int) -> int:
    return sum(initiator_count(cfg, k, n) for k in range(cfg.n_slots))


def run(config: ScenarioConfig, seed: int | None = None, *, node_order: Sequence[int] | None = None,
        flow_log: IO[str] | None = None, keep_records: bool = False, check: bool = True) -> RunResult:
    """Simulate ``config.n_slots`` slots. ``seed`` defaults to ``config.seed``.

    ``node_order`` changes only the order in which nodes are handed to the
    forwarding kernel; results do not depend on it.
    """
    cfg = config if seed is None else with_overrides(config, seed=seed)
    seed = cfg.seed
    nodes = initial_placement(cfg, placement_rng(seed))
    n = len(nodes)
    traj = trajectory(cfg, nodes)
    is_rsu = np.array([nd.is_rsu for nd in nodes], dtype=bool)
    node_C = np.array([nd.cache_capacity_C for nd in nodes], dtype=np.int64)
    node_F = np.array([nd.forward_capacity_F for nd in nodes], dtype=np.int64)
    order = np.arange(n) if node_order is None else np.asarray(node_order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("node_order must be a permutation of the node ids")
    node_rank = np.empty(n, dtype=np.int64)
    node_rank[order] = np.arange(n)
    trng = traffic_rng(seed)

    cap = _total_tasks(cfg, n)
    # per task: constants, cumulative counters; per (task, node): packet state and frozen next hop
    src = np.zeros(cap, dtype=np.int64)
    dst = np.zeros(cap, dtype=np.int64)
    prio = np.zeros(cap, dtype=np.int64)
    qos = np.zeros(cap, dtype=np.int64)
    size = np.zeros(cap, dtype=np.int64)
    sent = np.zeros(cap, dtype=np.int64)
    lost_node = np.zeros(cap, dtype=np.int64)
    lost_link = np.zeros(cap, dtype=np.int64)
    delivered = np.zeros(cap, dtype=np.int64)
    finished = np.full(cap, -1, dtype=np.int64)
    cache = np.zeros((cap, n), dtype=np.int64)
    incoming = np.zeros((cap, n), dtype=np.int64)
    nexthop = np.full((cap, n), -1, dtype=np.int64)

    tasks: list[Task] = []
    count = 0
    failures = 0
    prev_rate = None
    rows = []
    records = []
    tot_offered = tot_delivered = tot_lost = 0
    refresh = cfg.routing.refresh_interval

    for k in range(cfg.n_slots):
        snap = build_topology(traj[k], is_rsu, cfg.channel, cfg, k)
        actual = snap.rate
        planned = actual if prev_rate is None else prev_rate

        new, failed = generate_tasks(k, cfg, is_rsu, snap, trng, next_id=count)
        for t in sorted(new + failed, key=lambda t: t.id):
            i = t.id
            src[i], dst[i], prio[i] = t.source, t.destination, PRIORITY_RANK[t.priority]
            qos[i], size[i] = t.qos_rate, t.total_packets
            if t.route is not None:
                nexthop[i, list(t.route.nodes[:-1])] = t.route.nodes[1:]
            else:
                finished[i] = k  # never routed, never sends
            tasks.append(t)
        count += len(new) + len(failed)
        failures += len(failed)

        if refresh and k > 0 and k % refresh == 0:
            _refresh_routes(k, snap, cfg, nexthop, cache, incoming, sent, size, src, dst, count)

        # source injection
        routed = nexthop[np.arange(count), src[:count]] >= 0
        off = np.where(routed, np.minimum(qos[:count], size[:count] - sent[:count]), 0)
        off = np.maximum(off, 0)
        sent[:count] += off
        incoming[np.arange(count), src[:count]] += off
        offered_now = int(off.sum())

        lam_m = incoming[:count]
        held = lam_m + cache[:count]
        ti, ni = np.nonzero(held)
        m = ti.size
        if m:
            keys = ordering_keys(seed, ni, k, ti)
            perm = np.lexsort((keys, prio[ti], node_rank[ni]))
            ti, ni = ti[perm], ni[perm]
            lam = lam_m[ti, ni]
            L = cache[ti, ni]
            nh = nexthop[ti, ni]
            if check and np.any(np.bincount(ni, weights=L, minlength=n) > node_C):
                raise InvariantError(f"slot {k}: cached packets exceed C before forwarding")
            has_port = nh >= 0
            pkey = np.where(has_port, ni * n + nh, -1)
            uniq, pidx = np.unique(pkey[has_port], return_inverse=True)
            e_port = np.full(m, -1, dtype=np.int64)
            e_port[has_port] = pidx
            p_planned = planned.ravel()[uniq]
            p_actual = actual.ravel()[uniq]
            res = kernels.forward_slot(ni, lam + L, e_port, node_C, node_F, p_planned, p_actual)
            _, _, _, mu, nloss, new_l, dlv, lloss = res
        else:
            lam = L = nh = mu = nloss = new_l = dlv = lloss = np.zeros(0, dtype=np.int64)

        cache[ti, ni] = new_l
        incoming[:count] = 0
        last = nh == dst[ti]
        fwd = (dlv > 0) & ~last
        np.add.at(incoming, (ti[fwd], nh[fwd]), dlv[fwd])
        np.add.at(delivered, ti[last], dlv[last])
        np.add.at(lost_node, ti, nloss)
        np.add.at(lost_link, ti, lloss)
        node_mu = np.bincount(ni, weights=mu, minlength=n).astype(np.int64)
        node_L = np.bincount(ni, weights=new_l, minlength=n).astype(np.int64)
        psi = np.zeros(n * n, dtype=np.int64)
        if m:
            np.add.at(psi, ni[has_port] * n + nh[has_port], dlv[has_port])
        psi = psi.reshape(n, n)
        s_nloss, s_lloss, s_dlv = int(nloss.sum()), int(lloss.sum()), int(dlv[last].sum())

        if flow_log is not None:
            for e in range(m):
                flow_log.write(json.dumps({
                    "slot": k, "node": int(ni[e]), "task": int(ti[e]), "lambda": int(lam[e]),
                    "L": int(L[e]), "mu": int(mu[e]), "node_loss": int(nloss[e]),
                    "link_loss": int(lloss[e]), "delivered": int(dlv[e]), "L_new": int(new_l[e]),
                }) + "\n")

        in_rows = cache[:count].sum(axis=1) + incoming[:count].sum(axis=1)
        in_net = int(in_rows.sum())
        done_now = (finished[:count] < 0) & (sent[:count] >= size[:count]) & (in_rows == 0)
        finished[:count][done_now] = k
        active = int(np.count_nonzero(finished[:count] < 0))

        tot_offered += offered_now
        tot_delivered += s_dlv
        tot_lost += s_nloss + s_lloss
        if check:
            if np.any(node_L > node_C):
                i = int(np.flatnonzero(node_L > node_C)[0])
                raise InvariantError(f"slot {k} node {i}: cached {int(node_L[i])} > C={int(node_C[i])}")
            if np.any(node_mu + node_L > node_C):
                i = int(np.flatnonzero(node_mu + node_L > node_C)[0])
                raise InvariantError(f"slot {k} node {i}: forwarded + cached exceeds C")
            if np.any(psi > actual):
                raise InvariantError(f"slot {k}: a link delivered more than its rate")
            if tot_offered != tot_delivered + tot_lost + in_net:
                raise InvariantError(
                    f"slot {k}: conservation broken: offered {tot_offered} != delivered {tot_delivered}"
                    f" + lost {tot_lost} + in network {in_net}")

        rec = SlotFlowRecord(
            k, node_mu, node_L, node_C, psi, np.asarray(actual),
            (lost_node[:count] + lost_link[:count]).astype(float), sent[:count].astype(float),
            delivered[:count].astype(float), size[:count].astype(float),
            aux={"offered": offered_now, "delivered": s_dlv, "node_loss": s_nloss,
                 "link_loss": s_lloss, "in_network": in_net},
        )
        row = {"slot": k, **indicators(rec)}
        leaving = s_dlv + s_nloss + s_lloss
        row.update(
            inst_loss_rate=(s_nloss + s_lloss) / leaving if leaving else float("nan"),
            offered=offered_now, delivered=s_dlv, node_loss=s_nloss, link_loss=s_lloss,
            in_network=in_net, tasks_generated=count, tasks_active=active, routing_failures=failures,
        )
        rows.append(row)
        if keep_records:
            records.append(rec)
        prev_rate = actual

    for t in tasks:
        i = t.id
        t.sent, t.delivered = int(sent[i]), int(delivered[i])
        t.lost_node, t.lost_link = int(lost_node[i]), int(lost_link[i])
        t.finished_slot = int(finished[i]) if finished[i] >= 0 and t.routed else None
        t.cached = {j: int(v) for j, v in enumerate(cache[i]) if v}
        t.incoming = {j: int(v) for j, v in enumerate(incoming[i]) if v}
        t.next_hop = {j: int(v) for j, v in enumerate(nexthop[i]) if v >= 0}
    return RunResult(cfg, seed, MetricsSeries(rows), tasks, records)


def _run_series(args) -> MetricsSeries:
    cfg, seed = args
    try:
        return run(cfg, seed).series
    except Exception as exc:
        raise RuntimeError(
            f"run failed (seed={seed}, qos_mbps={cfg.traffic.qos_mbps:g}, "
            f"cache_scale={cfg.cache_scale:g}, n_vehicles={cfg.n_vehicles}): {exc}"
        ) from exc


def _map(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def mean_final_loss(config: ScenarioConfig, seeds: Iterable[int], jobs: int = 1) -> float:
    series = _map(_run_series, [(config, s) for s in seeds], jobs)
    return float(np.nanmean([s.final("loss_rate") for s in series]))


@dataclass
class SweepPoint:
    params: dict
    config: ScenarioConfig
    mean: MetricsSeries
    per_seed: dict[int, MetricsSeries]

    @property
    def label(self) -> str:
        return ", ".join(f"{k}={v:g}" for k, v in self.params.items())


SWEEP_KEYS = ("qos_mbps", "cache_scale", "n_vehicles")


def sweep(config: ScenarioConfig, grid: dict[str, Sequence], seeds: Sequence[int], jobs: int = 1) -> list[SweepPoint]:
    """Run every grid point with every seed and average the series over seeds.

    ``grid`` maps any of ``qos_mbps``, ``cache_scale``, ``n_vehicles`` to the
    values to try; the cartesian product is swept.
    """
    for key in grid:
        if key not in SWEEP_KEYS:
            raise ValueError(f"cannot sweep {key!r}; choose from {SWEEP_KEYS}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    keys = [k for k in SWEEP_KEYS if grid.get(k)]
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))] or [{}]
    configs = [with_overrides(config, **p) for p in points]
    jobs_list = [(c, s) for c in configs for s in seeds]
    results = _map(_run_series, jobs_list, jobs)
    out = []
    for i, (p, c) in enumerate(zip(points, configs)):
        chunk = results[i * len(seeds):(i + 1) * len(seeds)]
        out.append(SweepPoint(p, c, average(chunk), dict(zip(seeds, chunk))))
    return out


