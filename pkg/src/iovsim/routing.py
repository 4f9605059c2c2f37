"""Shortest paths and per-node port routing tables over a topology snapshot."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from . import kernels
from .channel import MIN_DISTANCE, TopologySnapshot

AT_DESTINATION = "at_destination"


@dataclass(frozen=True)
class Route:
    nodes: tuple[int, ...]
    ports: tuple[int, ...]  # ports[h] is the egress port of nodes[h] towards nodes[h + 1]
    weight: float = 0.0

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


@dataclass(frozen=True)
class PortRoutingTable:
    owner: int
    entries: dict[int, tuple[int, int]] = field(default_factory=dict)  # dest -> (next hop, port)
    built_at_slot: int = 0


def port_map(snapshot: TopologySnapshot, port_cap: int | None = None) -> list[dict[int, int]]:
    """``ports[i][j]``: port id of node i towards neighbour j.

    Ports are numbered from 0 in ascending neighbour order; with a cap only
    the first ``port_cap`` neighbours get a port.
    """
    out = []
    for i in range(snapshot.n):
        nbrs = snapshot.neighbors(i)
        if port_cap is not None:
            nbrs = nbrs[:port_cap]
        out.append({j: k for k, j in enumerate(nbrs)})
    return out


def edge_weights(snapshot: TopologySnapshot, weight_mode: str = "euclidean_distance",
                 port_cap: int | None = None) -> np.ndarray:
    """Dense weight matrix with ``inf`` where no usable link exists."""
    exists = snapshot.exists.copy()
    if port_cap is not None:
        for i, ports in enumerate(port_map(snapshot, port_cap)):
            keep = np.zeros(snapshot.n, dtype=bool)
            keep[list(ports)] = True
            exists[i] &= keep
    if weight_mode == "euclidean_distance":
        diff = snapshot.positions[:, None, :] - snapshot.positions[None, :, :]
        w = np.maximum(np.sqrt((diff ** 2).sum(axis=-1)), MIN_DISTANCE)
    elif weight_mode == "hop_count":
        w = np.ones((snapshot.n, snapshot.n))
    elif weight_mode == "inverse_rate":
        with np.errstate(divide="ignore"):
            w = 1.0 / snapshot.rate.astype(float)
    else:
        raise ValueError(f"unknown weight_mode {weight_mode!r}")
    return np.where(exists, w, np.inf)


def port_of(snapshot: TopologySnapshot, owner: int, neighbor: int) -> int:
    """Port id of ``owner`` towards ``neighbor``: its rank among the owner's neighbours."""
    return int(np.count_nonzero(snapshot.exists[owner, :neighbor]))


def route_from_tree(snapshot: TopologySnapshot, dist, pred, source: int, destination: int) -> Route | None:
    """Extract the route to ``destination`` from a Dijkstra predecessor array."""
    if destination == source or pred[destination] < 0:
        return None
    nodes = [destination]
    while nodes[-1] != source:
        nodes.append(int(pred[nodes[-1]]))
    nodes.reverse()
    hop_ports = tuple(port_of(snapshot, a, b) for a, b in zip(nodes, nodes[1:]))
    return Route(tuple(nodes), hop_ports, float(dist[destination]))


def shortest_path(snapshot: TopologySnapshot, source: int, destination: int,
                  weight_mode: str = "euclidean_distance", port_cap: int | None = None,
                  weights: np.ndarray | None = None) -> Route | None:
    """Minimum-weight route, or None when the destination is unreachable.

    Equal-weight alternatives resolve to the lexicographically smallest node
    sequence, so the smaller next-node id wins.
    """
    if source == destination:
        raise ValueError("source and destination must differ")
    if weights is None:
        weights = edge_weights(snapshot, weight_mode, port_cap)
    dist, pred = kernels.dijkstra(weights, source)
    return route_from_tree(snapshot, dist, pred, source, destination)


def shortest_path_tree(snapshot: TopologySnapshot, source: int, weights: np.ndarray) -> dict[int, Route]:
    """Routes from ``source`` to every reachable node."""
    dist, pred = kernels.dijkstra(weights, source)
    routes = {}
    for t in range(snapshot.n):
        r = route_from_tree(snapshot, dist, pred, source, t)
        if r is not None:
            routes[t] = r
    return routes


def build_tables(snapshot: TopologySnapshot, weight_mode: str = "euclidean_distance",
                 port_cap: int | None = None) -> dict[int, PortRoutingTable]:
    weights = edge_weights(snapshot, weight_mode, port_cap)
    tables = {}
    for s in range(snapshot.n):
        routes = shortest_path_tree(snapshot, s, weights)
        entries = {t: (r.nodes[1], r.ports[0]) for t, r in routes.items()}
        tables[s] = PortRoutingTable(s, entries, snapshot.slot)
    return tables


def next_hop(table: PortRoutingTable, destination: int):
    """``(next hop, port)``; ``AT_DESTINATION`` at the owner; None if no route."""
    if destination == table.owner:
        return AT_DESTINATION
    return table.entries.get(destination)


def dump_tables(tables: dict[int, PortRoutingTable], fh: TextIO) -> None:
    fh.write("owner destination next_hop port\n")
    for owner in sorted(tables):
        for dest, (hop, port) in sorted(tables[owner].entries.items()):
            fh.write(f"{owner} {dest} {hop} {port}\n")
