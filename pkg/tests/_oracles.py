"""Independent reference implementations used by the tests.

These deliberately work at a different granularity from the package code:
the switch oracle moves packets one at a time, and the path oracle is
Floyd-Warshall over the full matrix.
"""
from __future__ import annotations

import math

import numpy as np


def packet_oracle(ordered_tasks, C, F, planned, actual):
    """Move packets one by one through a node.

    ``ordered_tasks`` is a list of ``(demand, port)`` already in queue order
    (port None = no usable egress). Every offered packet first asks for a
    cache slot and, independently, a forwarding token, in queue order. A
    packet with both may take a token of its port's planned rate; taking one
    means it is forwarded, after which it needs a token of the port's actual
    rate to survive the link. Returns per task
    ``(cache, forward, rate, mu, node_loss, new_L, delivered, link_loss)``.
    """
    c_tokens, f_tokens = C, F
    r_tokens = dict(planned)
    a_tokens = dict(actual)
    out = []
    for demand, port in ordered_tasks:
        cache = fwd = rate = delivered = 0
        for _ in range(demand):
            has_c = c_tokens > 0
            if has_c:
                c_tokens -= 1
                cache += 1
            has_f = f_tokens > 0
            if has_f:
                f_tokens -= 1
                fwd += 1
            if has_c and has_f and port is not None and r_tokens.get(port, 0) > 0:
                r_tokens[port] -= 1
                rate += 1
                if a_tokens.get(port, 0) > 0:
                    a_tokens[port] -= 1
                    delivered += 1
        mu = rate
        node_loss = demand - cache
        out.append((cache, fwd, rate, mu, node_loss, cache - mu, delivered, mu - delivered))
    return out


def floyd_warshall(weights):
    w = np.array(weights, dtype=float)
    n = w.shape[0]
    d = w.copy()
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def shannon(bandwidth, power, gain, noise, interference=0.0):
    return bandwidth * math.log2(1.0 + power * gain / (noise + interference))


def chi_square(counts, expected):
    counts = np.asarray(counts, dtype=float)
    return float(((counts - expected) ** 2 / expected).sum())


# upper 0.1% points of the chi-square distribution, by degrees of freedom
CHI2_999 = {5: 20.515, 22: 48.268, 23: 49.728}


def random_node(rng):
    """Random single-node switch case: at most 4 tasks, 2 ports, demands of at most 20 packets."""
    from iovsim.switch import TaskQueueEntry

    n_tasks = int(rng.integers(1, 5))
    C = int(rng.integers(0, 41))
    F = int(rng.integers(0, 41))
    n_ports = int(rng.integers(1, 3))
    planned = {p: int(rng.integers(0, 41)) for p in range(n_ports)}
    actual = {p: int(rng.integers(0, 41)) for p in range(n_ports)}
    entries = []
    budget = C
    for tid in range(n_tasks):
        L = int(rng.integers(0, min(20, budget) + 1))
        budget -= L
        lam = int(rng.integers(0, 21 - L))
        port = None if rng.random() < 0.1 else int(rng.integers(0, n_ports))
        entries.append(TaskQueueEntry(tid, ("high", "medium", "low")[int(rng.integers(3))], L, lam, port))
    return C, F, planned, actual, entries
