"""Link existence, Shannon link capacity and the per-slot weighted adjacency.

V2V capacity keeps the ``A0 * d**-2`` term in the noise denominator exactly as
the model states it, so capacity *rises* slightly with distance inside the
communication range. V2I links are orthogonal and interference-free, so their
capacity does not depend on distance once the vehicle is inside coverage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .config import ChannelParams, ScenarioConfig

MIN_DISTANCE = 1.0  # m; coincident nodes are evaluated at this distance


def distance(a, b) -> float:
    return math.sqrt(sum((float(p) - float(q)) ** 2 for p, q in zip(a, b)))


def link_exists_v2v(d: float, max_range: float) -> bool:
    return d <= max_range


def _gain(params: ChannelParams, d, h):
    if params.gain_model == "constant":
        return h
    d = np.maximum(d, params.reference_distance)
    return h * (d / params.reference_distance) ** (-params.path_loss_exponent)


def capacity_v2v(d: float, params: ChannelParams, exists: bool = True) -> float:
    """V2V capacity in bits/s; zero when the link does not exist."""
    if not exists:
        return 0.0
    if d < 0:
        raise ValueError("distance must be non-negative")
    d = max(d, MIN_DISTANCE)
    h = float(_gain(params, d, params.h_v2v))
    sinr = params.tx_power_v2v * h / (params.noise_power + params.a0 * d ** -2)
    return params.bandwidth_v2v * math.log2(1.0 + sinr)


def capacity_v2i(params: ChannelParams, exists: bool = True, *, uplink: bool = False, d: float | None = None) -> float:
    """V2I capacity in bits/s. Downlink uses the RSU power, uplink the vehicle's.

    ``d`` only matters for the log-distance gain model.
    """
    if not exists:
        return 0.0
    power = params.tx_power_v2v if uplink else params.tx_power_v2i
    h = params.h_v2i if d is None else float(_gain(params, max(d, MIN_DISTANCE), params.h_v2i))
    return params.bandwidth_v2i * math.log2(1.0 + power * h / params.noise_power)


@dataclass(frozen=True, eq=False)
class TopologySnapshot:
    """Weighted adjacency for one slot. ``rate[i, j]`` is packets/slot from i to j."""

    slot: int
    rate: np.ndarray  # int64 (N, N)
    exists: np.ndarray  # bool (N, N)
    positions: np.ndarray  # float (N, 3)
    is_rsu: np.ndarray  # bool (N,)

    @property
    def n(self) -> int:
        return self.rate.shape[0]

    def neighbors(self, i: int) -> list[int]:
        return np.flatnonzero(self.exists[i]).tolist()

    def dump_edges(self, fh: TextIO) -> None:
        """Debug edge list: ``node_i node_j rate_pkts`` per existing directed link."""
        for i, j in zip(*np.nonzero(self.exists)):
            fh.write(f"{i} {j} {self.rate[i, j]}\n")


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def make_snapshot(slot: int, rate: np.ndarray, positions: np.ndarray | None = None, is_rsu=None) -> TopologySnapshot:
    """Snapshot from an explicit packet-rate matrix (tests, hand-built graphs)."""
    rate = np.array(rate, dtype=np.int64)
    n = rate.shape[0]
    np.fill_diagonal(rate, 0)
    exists = rate > 0
    positions = np.zeros((n, 3)) if positions is None else np.array(positions, dtype=float)
    is_rsu = np.zeros(n, dtype=bool) if is_rsu is None else np.asarray(is_rsu, dtype=bool)
    _freeze(rate, exists, positions, is_rsu)
    return TopologySnapshot(slot, rate, exists, positions, is_rsu)


def capacity_matrix_bps(positions: np.ndarray, is_rsu: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Bits/s for every ordered pair; zero where no link exists."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=-1))
    veh = ~np.asarray(is_rsu, dtype=bool)
    both_veh = veh[:, None] & veh[None, :]
    v2i_up = veh[:, None] & ~veh[None, :]
    v2i_down = ~veh[:, None] & veh[None, :]
    off_diag = ~np.eye(n, dtype=bool)

    g_v2v = both_veh & off_diag & (d <= params.max_range_vehicle)
    g_v2i = (v2i_up | v2i_down) & (d <= params.rsu_coverage)

    dc = np.maximum(d, MIN_DISTANCE)
    h_vv = _gain(params, dc, params.h_v2v)
    sinr_vv = params.tx_power_v2v * h_vv / (params.noise_power + params.a0 * dc ** -2.0)
    r_vv = params.bandwidth_v2v * np.log2(1.0 + sinr_vv)

    h_vi = _gain(params, dc, params.h_v2i)
    power = np.where(v2i_up, params.tx_power_v2v, params.tx_power_v2i)
    r_vi = params.bandwidth_v2i * np.log2(1.0 + power * h_vi / params.noise_power)

    return np.where(g_v2v, r_vv, 0.0) + np.where(g_v2i, r_vi, 0.0)


def build_topology(positions, is_rsu, params: ChannelParams, config: ScenarioConfig, slot: int = 0) -> TopologySnapshot:
    """Adjacency in packets/slot. RSU-RSU pairs are never linked.

    A link whose capacity floors to zero packets per slot is treated as absent.
    """
    bps = capacity_matrix_bps(positions, is_rsu, params)
    rate = np.floor(bps * config.slot_length / config.packet_size).astype(np.int64)
    exists = rate > 0
    positions = np.array(positions, dtype=float)
    is_rsu = np.array(is_rsu, dtype=bool)
    _freeze(rate, exists, positions, is_rsu)
    return TopologySnapshot(slot, rate, exists, positions, is_rsu)
