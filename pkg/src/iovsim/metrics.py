"""The five network indicators, computed per slot from flow records.

Loss and arrival rates are cumulative through the slot. Node load and total
traffic use the cache length *after* the slot's update. Link load averages
delivered/planned over links that exist in the slot's snapshot. A metric with
an empty denominator set (no task has sent yet, no links) is absent and stored
as NaN, written as an empty CSV field.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
COLUMNS = (
    "slot",
    "loss_rate",
    "arrive_rate",
    "node_load",
    "link_load",
    "sumflow",
    "inst_loss_rate",
    "offered",
    "delivered",
    "node_loss",
    "link_loss",
    "in_network",
    "tasks_generated",
    "tasks_active",
    "routing_failures",
)
INDICATORS = ("loss_rate", "arrive_rate", "node_load", "link_load", "sumflow")


@dataclass
class SlotFlowRecord:
    slot: int
    node_mu: np.ndarray  # forwarded packets per node this slot
    node_L: np.ndarray  # cache length per node after the update
    node_C: np.ndarray
    link_delivered: np.ndarray  # (N, N) packets that crossed each link
    link_rate: np.ndarray  # (N, N) snapshot rate; 0 = no link
    task_lost: np.ndarray  # cumulative, one entry per generated task
    task_sent: np.ndarray
    task_delivered: np.ndarray
    task_size: np.ndarray
    aux: dict = field(default_factory=dict)


def packet_loss_rate(rec: SlotFlowRecord) -> float:
    active = rec.task_sent > 0
    if not active.any():
        return math.nan
    return float(np.mean(rec.task_lost[active] / rec.task_sent[active]))


def task_arrival_rate(rec: SlotFlowRecord) -> float:
    if rec.task_size.size == 0:
        return math.nan
    return float(np.mean(rec.task_delivered / rec.task_size))


def node_load_rate(rec: SlotFlowRecord) -> float:
    if rec.node_C.size == 0:
        return math.nan
    return float(np.mean((rec.node_mu + rec.node_L) / rec.node_C))


def link_load_rate(rec: SlotFlowRecord) -> float:
    links = rec.link_rate > 0
    if not links.any():
        return math.nan
    return float(np.mean(rec.link_delivered[links] / rec.link_rate[links]))


def total_network_traffic(rec: SlotFlowRecord) -> int:
    return int(np.sum(rec.node_mu) + np.sum(rec.node_L))


def indicators(rec: SlotFlowRecord) -> dict[str, float]:
    return {
        "loss_rate": packet_loss_rate(rec),
        "arrive_rate": task_arrival_rate(rec),
        "node_load": node_load_rate(rec),
        "link_load": link_load_rate(rec),
        "sumflow": float(total_network_traffic(rec)),
    }


class MetricsSeries:
    """Column store, one row per slot, columns in :data:`COLUMNS` order."""

    def __init__(self, rows: list[dict] | None = None):
        self.columns = {c: np.array([r.get(c, math.nan) for r in rows or []], dtype=float) for c in COLUMNS}

    def __len__(self) -> int:
        return len(self.columns["slot"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @classmethod
    def from_columns(cls, columns: dict[str, np.ndarray]) -> "MetricsSeries":
        s = cls()
        s.columns = {c: np.asarray(columns[c], dtype=float) for c in COLUMNS}
        return s

    def final(self, name: str) -> float:
        col = self.columns[name]
        return float(col[-1]) if len(col) else math.nan

    def tail_mean(self, name: str, n: int = 100) -> float:
        col = self.columns[name][-n:]
        col = col[~np.isnan(col)]
        return float(col.mean()) if col.size else math.nan

    def write_csv(self, target) -> None:
        """Write to a path or text stream. Floats round-trip exactly (``repr``)."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        w = csv.writer(target, lineterminator="\n")
        w.writerow(COLUMNS)
        for k in range(len(self)):
            w.writerow([_fmt(c, self.columns[c][k]) for c in COLUMNS])

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, path) -> "MetricsSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls([{c: float(r[c]) if r[c] != "" else math.nan for c in COLUMNS} for r in rows])


def _fmt(col: str, v: float) -> str:
    if math.isnan(v):
        return ""
    if col == "slot":
        return str(int(v))
    return repr(float(v))


def average(series: list[MetricsSeries]) -> MetricsSeries:
    """Pointwise mean over runs, ignoring runs where a value is absent."""
    if not series:
        raise ValueError("nothing to average")
    cols = {}
    for c in COLUMNS:
        stack = np.vstack([s[c] for s in series])
        with np.errstate(invalid="ignore"):
            present = ~np.isnan(stack)
            total = np.where(present, stack, 0.0).sum(axis=0)
            count = present.sum(axis=0)
            cols[c] = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return MetricsSeries.from_columns(cols)
