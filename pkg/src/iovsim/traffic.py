"""Task generation: grid-stratified initiators, random destinations, priorities, offered rate."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import TopologySnapshot
from .config import PRIORITIES, ScenarioConfig, TrafficConfig
from .routing import Route, edge_weights, route_from_tree

__all__ = ["Task", "TrafficConfig", "generate_tasks", "offered_load", "initiator_count",
           "traffic_rng", "calibrate_qos"]


def traffic_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 1]))


@dataclass(eq=False)
class Task:
    id: int
    source: int
    destination: int
    priority: str
    qos_rate: int  # packets/slot offered at the source
    total_packets: int  # rho
    start_slot: int
    route: Route | None
    sent: int = 0  # phi
    delivered: int = 0  # gamma
    lost_node: int = 0
    lost_link: int = 0
    finished_slot: int | None = None
    # node -> next node along the frozen route (the task's port table)
    next_hop: dict[int, int] = field(default_factory=dict)
    # packets held in each node's cache, and packets arriving at each node next slot
    cached: dict[int, int] = field(default_factory=dict)
    incoming: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("task source equals destination")
        if self.route is not None and not self.next_hop:
            self.next_hop = dict(zip(self.route.nodes, self.route.nodes[1:]))

    @property
    def routed(self) -> bool:
        return self.route is not None

    @property
    def lost(self) -> int:
        return self.lost_node + self.lost_link

    @property
    def in_network(self) -> int:
        return sum(self.cached.values()) + sum(self.incoming.values())

    @property
    def done(self) -> bool:
        return self.sent >= self.total_packets and self.in_network == 0


def offered_load(task: Task, slot: int) -> int:
    if slot < task.start_slot:
        return 0
    return max(0, min(task.qos_rate, task.total_packets - task.sent))


def initiator_count(cfg: ScenarioConfig, slot: int, n_nodes: int) -> int:
    """New tasks started in ``slot``; a fractional rate is spread evenly over slots."""
    tr = cfg.traffic
    last = cfg.n_slots if tr.last_slot is None else tr.last_slot
    if not tr.first_slot <= slot < last:
        return 0
    rate = tr.initiators_per_slot
    if tr.scale_initiators_with_nodes:
        rate = rate * n_nodes / tr.reference_nodes
    k = slot - tr.first_slot
    # tiny guard so that e.g. 3 * (2/3) lands on 2, not 1.999...
    return int(math.floor((k + 1) * rate + 1e-9)) - int(math.floor(k * rate + 1e-9))


def grid_cell(cfg: ScenarioConfig, positions: np.ndarray) -> np.ndarray:
    tr = cfg.traffic
    col = np.clip((positions[:, 0] / cfg.area_width * tr.grid_cols).astype(int), 0, tr.grid_cols - 1)
    row = np.clip((positions[:, 1] / cfg.area_height * tr.grid_rows).astype(int), 0, tr.grid_rows - 1)
    return row * tr.grid_cols + col


def choose_initiators(cfg: ScenarioConfig, count: int, eligible: np.ndarray, cells: np.ndarray,
                      rng: np.random.Generator) -> list[int]:
    """Pick ``count`` distinct nodes, each grid cell contributing in proportion to its population."""
    eligible = np.asarray(eligible)
    count = min(count, len(eligible))
    if count == 0:
        return []
    n_cells = cfg.traffic.grid_rows * cfg.traffic.grid_cols
    members = [eligible[cells[eligible] == c] for c in range(n_cells)]
    sizes = np.array([len(m) for m in members], dtype=float)
    quota = count * sizes / sizes.sum()
    base = np.floor(quota + 1e-9).astype(int)
    left = count - int(base.sum())
    if left > 0:
        frac = np.clip(quota - base, 0.0, None)
        frac[base >= sizes] = 0.0
        extra = rng.choice(n_cells, size=left, replace=False, p=frac / frac.sum())
        base[extra] += 1
    chosen = []
    for c in range(n_cells):
        if base[c]:
            chosen.extend(rng.choice(members[c], size=base[c], replace=False).tolist())
    return chosen


def generate_tasks(slot: int, cfg: ScenarioConfig, is_rsu: np.ndarray, snapshot: TopologySnapshot,
                   rng: np.random.Generator, next_id: int = 0) -> tuple[list[Task], list[Task]]:
    """New tasks for ``slot`` as ``(routed, unroutable)``.

    Every task gets a route frozen from ``snapshot``; tasks whose destination
    cannot be reached are returned separately and never send a packet.
    """
    n = snapshot.n
    count = initiator_count(cfg, slot, n)
    if count == 0 or n < 2:
        return [], []
    if cfg.traffic.initiators == "vehicles":
        eligible = np.flatnonzero(~np.asarray(is_rsu))
    else:
        eligible = np.arange(n)
    cells = grid_cell(cfg, snapshot.positions)
    sources = choose_initiators(cfg, count, eligible, cells, rng)
    weights = edge_weights(snapshot, cfg.routing.weight_mode, cfg.routing.port_cap)
    qos = cfg.qos_packets_per_slot
    rho = cfg.task_size_packets
    routed, failed = [], []
    trees: dict[int, tuple] = {}
    for src in sources:
        dst = int(rng.integers(n - 1))
        if dst >= src:
            dst += 1
        prio = PRIORITIES[int(rng.choice(3, p=cfg.traffic.priority_mix))]
        if src not in trees:
            trees[src] = kernels.dijkstra(weights, src)
        route = route_from_tree(snapshot, *trees[src], src, dst)
        task = Task(next_id, int(src), dst, prio, qos, rho, slot, route)
        next_id += 1
        (routed if route is not None else failed).append(task)
    return routed, failed


def min_qos_mbps(config: ScenarioConfig) -> int:
    """Smallest integer QoS (Mbit/s) that offers at least one packet per slot."""
    return math.ceil(config.packet_size / config.slot_length / 1e6 - 1e-9)


def calibrate_qos(config: ScenarioConfig, target_loss: float, seeds, lo: int | None = None, hi: int = 500,
                  jobs: int = 1) -> int | None:
    """Largest integer QoS (Mbit/s) in ``[lo, hi]`` whose mean end-of-run loss is below target.

    ``lo`` defaults to the smallest QoS worth one packet per slot. Assumes
    loss grows with QoS. Returns None when even ``lo`` misses the target.
    """
    from .engine import mean_final_loss

    if not 0 < target_loss <= 1:
        raise ValueError("target_loss must lie in (0, 1]")
    floor_q = min_qos_mbps(config)
    lo = floor_q if lo is None else lo
    if lo < floor_q or hi < lo:
        raise ValueError(f"QoS search range [{lo}, {hi}] must start at or above {floor_q} Mbit/s")
    seeds = list(seeds)

    def ok(q: int) -> bool:
        cfg = dataclasses.replace(config, traffic=dataclasses.replace(config.traffic, qos_mbps=float(q)))
        return mean_final_loss(cfg, seeds, jobs=jobs) < target_loss

    if not ok(lo):
        return None
    if ok(hi):
        return hi
    good, bad = lo, hi
    while bad - good > 1:
        mid = (good + bad) // 2
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good
