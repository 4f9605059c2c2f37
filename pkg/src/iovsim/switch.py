"""Switch forwarding model for one node: cache C, forwarding capacity F, port rates R.

Within a slot the node sorts its task queue (priority, then a random order
inside each priority level) and walks it front to back, giving every task as
much cache, forwarding capacity and egress-port rate as it asks for until
each resource runs out. The per-task single-task rule then yields the
forwarded packets ``mu``, the node loss and the new cache length; link
transmission clips ``mu`` to the task's share of the port's actual rate.
"""
from __future__ import annotations

import random
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels

PRIORITY_RANK = {"high": 0, "medium": 1, "low": 2}


class InvariantError(RuntimeError):
    """Simulation state violated a conservation or capacity invariant."""


@dataclass
class TaskQueueEntry:
    task_id: int
    priority: str
    cached_packets_L: int
    incoming_packets_lam: int
    port: int | None  # None when the frozen next hop has no usable port

    @property
    def demand(self) -> int:
        return self.incoming_packets_lam + self.cached_packets_L


@dataclass(frozen=True)
class TaskForward:
    task_id: int
    allocated_C: int
    allocated_F: int
    allocated_R: int
    mu: int
    node_loss: int
    updated_L: int


@dataclass(frozen=True)
class NodeForwardResult:
    tasks: tuple[TaskForward, ...]

    @property
    def total_mu(self) -> int:
        return sum(t.mu for t in self.tasks)

    @property
    def total_L(self) -> int:
        return sum(t.updated_L for t in self.tasks)

    @property
    def total_loss(self) -> int:
        return sum(t.node_loss for t in self.tasks)


@dataclass(frozen=True)
class LinkTransmitResult:
    delivered: dict[int, int]  # task id -> packets reaching the next hop
    link_loss: dict[int, int]


def ordering_rng(seed: int, node: int, slot: int) -> random.Random:
    """Independent, reproducible stream per (run seed, node, slot)."""
    return random.Random(f"{seed}/{node}/{slot}")


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def ordering_keys(seed: int, node, slot: int, task) -> np.ndarray:
    """Uniform 64-bit sort keys from a counter-based hash of (seed, node, slot, task).

    Sorting a priority level by these keys draws a uniformly random
    permutation that depends only on the node's own (seed, node, slot)
    stream, never on which other nodes were processed first.
    """
    node = np.asarray(node, dtype=np.uint64)
    task = np.asarray(task, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = _splitmix(np.full(node.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
        x = _splitmix(x ^ node)
        x = _splitmix(x ^ np.uint64(slot))
        return _splitmix(x ^ task)


def order_tasks(entries: Sequence, rng: random.Random, key: Callable = lambda e: e.priority) -> list:
    """High before medium before low; uniformly shuffled within a level."""
    buckets: dict[int, list] = {0: [], 1: [], 2: []}
    for e in entries:
        buckets[PRIORITY_RANK[key(e)]].append(e)
    out = []
    for rank in (0, 1, 2):
        b = buckets[rank]
        if len(b) > 1:
            rng.shuffle(b)
        out.extend(b)
    return out


def allocate(ordered: Sequence, total: int, demand: Callable) -> list[int]:
    remaining = total
    out = []
    for e in ordered:
        a = min(demand(e), remaining)
        out.append(a)
        remaining -= a
    return out


def forward_single(lam: int, L: int, C: int, F: int, R: int) -> tuple[int, int, int]:
    """``(mu, node_loss, L')`` for one task given its allocated C, F and R."""
    if lam + L <= C:
        mu = min(lam + L, F, R)
        return mu, 0, lam + L - mu
    loss = lam + L - C
    mu = min(C, F, R)
    return mu, loss, lam + L - loss - mu


def transmit_link(mu: int, actual_share: int) -> tuple[int, int]:
    """``(delivered, link_loss)``; the switch cannot see rate drops, so excess is lost."""
    if mu <= actual_share:
        return mu, 0
    return actual_share, mu - actual_share


def step_node(C: int, F: int, entries: Sequence[TaskQueueEntry], planned: Mapping[int, int],
              actual: Mapping[int, int], rng: random.Random | None = None, *, ordered: bool = False):
    """Forward one node's queue for one slot.

    ``planned`` and ``actual`` map port id to packets/slot: the rate the
    switch believes it has and the rate the link really carries. With
    ``ordered=True`` the entries are taken in the given order.
    """
    if sum(e.cached_packets_L for e in entries) > C:
        raise InvariantError(f"cached packets {sum(e.cached_packets_L for e in entries)} exceed C={C}")
    if not ordered:
        entries = order_tasks(entries, rng or random.Random(0))
    port_ids = sorted({e.port for e in entries if e.port is not None})
    index = {p: k for k, p in enumerate(port_ids)}
    res = kernels.forward_slot(
        [0] * len(entries),
        [e.demand for e in entries],
        [index[e.port] if e.port is not None else -1 for e in entries],
        [C], [F],
        [planned.get(p, 0) for p in port_ids],
        [actual.get(p, 0) for p in port_ids],
    )
    a_c, a_f, a_r, mu, nl, new_l, dl, ll = (x.tolist() for x in res)
    tasks = tuple(
        TaskForward(e.task_id, a_c[k], a_f[k], a_r[k], mu[k], nl[k], new_l[k])
        for k, e in enumerate(entries)
    )
    link = LinkTransmitResult(
        {e.task_id: dl[k] for k, e in enumerate(entries)},
        {e.task_id: ll[k] for k, e in enumerate(entries)},
    )
    return NodeForwardResult(tasks), link
