"""Typed configuration and the scenario-file loader.

A scenario file is TOML with up to six tables::

    [scenario]   area, lanes, vehicle count, slots, speeds, packet size, seed
    [nodes]      cache sizes, forwarding rates, antenna heights, RSU coordinates
    [channel]    bandwidths, powers, noise, A0, gain model, ranges
    [traffic]    grid, initiators, QoS, task size, priority mix
    [routing]    edge weight, port cap, table refresh
    [[lights]]   phase schedule entries (start_slot, phase)

Every key is optional; omitted keys take the defaults below, which are the
published simulation parameters. Powers need an explicit unit (``dBm``, ``mW``
or ``W``); other quantities accept a suffix (``"20 MHz"``, ``"100 Mb"``) or a
bare number in the unit named in the key table.
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .units import UnitError, db_to_linear, parse_power, parse_quantity

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the field or invariant."""


HORIZONTAL_GREEN = "horizontal_green"
VERTICAL_GREEN = "vertical_green"
ALL_YELLOW = "all_yellow"
PHASES = (HORIZONTAL_GREEN, VERTICAL_GREEN, ALL_YELLOW)
OPEN_AXIS = {HORIZONTAL_GREEN: "horizontal", VERTICAL_GREEN: "vertical", ALL_YELLOW: "none"}

WEIGHT_MODES = ("euclidean_distance", "hop_count", "inverse_rate")
GAIN_MODELS = ("constant", "log_distance")
PRIORITIES = ("high", "medium", "low")


@dataclass(frozen=True)
class LightSpan:
    start_slot: int
    phase: str

    @property
    def open_axis(self) -> str:
        return OPEN_AXIS[self.phase]


DEFAULT_LIGHTS = (
    LightSpan(0, HORIZONTAL_GREEN),
    LightSpan(100, ALL_YELLOW),
    LightSpan(150, VERTICAL_GREEN),
)


@dataclass(frozen=True)
class ChannelParams:
    bandwidth_v2v: float = 20e6  # Hz
    bandwidth_v2i: float = 40e6  # Hz
    tx_power_v2v: float = 0.1  # W, vehicle transmitter
    tx_power_v2i: float = 0.1  # W, RSU transmitter (20 dBm)
    noise_power: float = 1e-13  # W (-100 dBm)
    a0_db: float = -17.8
    gain_model: str = "constant"
    h_v2v: float = 1.0
    h_v2i: float = 1.0
    path_loss_exponent: float = 2.0
    reference_distance: float = 1.0  # m
    max_range_vehicle: float = 200.0  # m
    rsu_coverage: float = 500.0  # m

    @property
    def a0(self) -> float:
        return db_to_linear(self.a0_db)


@dataclass(frozen=True)
class TrafficConfig:
    grid_rows: int = 2
    grid_cols: int = 2
    # New tasks per slot for every 24 nodes; scaled with the node count so
    # denser networks carry more initiators.
    initiators_per_slot: float = 1.7
    scale_initiators_with_nodes: bool = True
    reference_nodes: int = 24
    qos_mbps: float = 20.0
    task_slots: int = 50  # task size = qos packets/slot x task_slots
    task_total_packets: int | None = None
    priority_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    first_slot: int = 0
    last_slot: int | None = None  # exclusive; None = until the run ends
    initiators: str = "all"  # "all" or "vehicles"


@dataclass(frozen=True)
class RoutingConfig:
    weight_mode: str = "euclidean_distance"
    port_cap: int | None = None
    refresh_interval: int = 0  # slots; 0 keeps every task on its initial route


@dataclass(frozen=True)
class ScenarioConfig:
    area_width: float = 866.0
    area_height: float = 500.0
    lane_width: float = 3.5
    lanes_per_direction: int = 2
    n_vehicles: int = 20
    n_rsus: int = 4
    slot_length: float = 0.1
    n_slots: int = 300
    speed_range: tuple[float, float] = (20.0, 40.0)  # km/h
    light_schedule: tuple[LightSpan, ...] = DEFAULT_LIGHTS
    packet_size: float = 1e6  # bits
    seed: int = 1
    horizontal_roads: tuple[float, ...] | None = None  # y of road centre lines
    vertical_roads: tuple[float, ...] | None = None  # x of road centre lines
    rsu_positions: tuple[tuple[float, float], ...] | None = None
    vehicle_height: float = 1.5
    rsu_height: float = 5.0
    vehicle_cache: float = 100e6  # bits
    rsu_cache: float = 500e6  # bits
    vehicle_forward_rate: float = 10e9  # bits/s
    rsu_forward_rate: float = 10e9  # bits/s
    cache_scale: float = 1.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    routing: RoutingConfig = field(default_factory=RoutingConfig)

    def __post_init__(self):
        validate(self)

    @property
    def duration(self) -> float:
        return self.n_slots * self.slot_length

    @property
    def roads_y(self) -> tuple[float, ...]:
        return self.horizontal_roads if self.horizontal_roads is not None else (self.area_height / 2,)

    @property
    def roads_x(self) -> tuple[float, ...]:
        return self.vertical_roads if self.vertical_roads is not None else (self.area_width / 2,)

    def rsu_xy(self) -> list[tuple[float, float]]:
        """RSU ground coordinates; defaults to the cell centres of a 2x2 grid."""
        if self.rsu_positions is not None:
            return [tuple(p) for p in self.rsu_positions[: self.n_rsus]]
        w, h = self.area_width, self.area_height
        centres = [(w / 4, h / 4), (3 * w / 4, h / 4), (w / 4, 3 * h / 4), (3 * w / 4, 3 * h / 4)]
        if self.n_rsus <= 4:
            return centres[: self.n_rsus]
        # more RSUs than cells: spread them on a row through the middle
        return [(w * (i + 0.5) / self.n_rsus, h / 2) for i in range(self.n_rsus)]

    def packets(self, bits: float) -> int:
        return int(math.floor(bits / self.packet_size))

    def packets_per_slot(self, rate_bps: float) -> int:
        return int(math.floor(rate_bps * self.slot_length / self.packet_size))

    @property
    def vehicle_cache_packets(self) -> int:
        return self.packets(self.vehicle_cache * self.cache_scale)

    @property
    def rsu_cache_packets(self) -> int:
        return self.packets(self.rsu_cache * self.cache_scale)

    @property
    def qos_packets_per_slot(self) -> int:
        return self.packets_per_slot(self.traffic.qos_mbps * 1e6)

    @property
    def task_size_packets(self) -> int:
        if self.traffic.task_total_packets is not None:
            return self.traffic.task_total_packets
        return self.qos_packets_per_slot * self.traffic.task_slots


def validate(cfg: ScenarioConfig) -> None:
    def need(cond: bool, what: str) -> None:
        if not cond:
            raise ConfigError(what)

    need(cfg.slot_length > 0, "slot_length > 0")
    need(isinstance(cfg.n_slots, int) and cfg.n_slots >= 0, "n_slots >= 0")
    need(cfg.packet_size > 0, "packet_size > 0")
    need(cfg.area_width > 0 and cfg.area_height > 0, "area_width, area_height > 0")
    need(cfg.lane_width > 0 and cfg.lanes_per_direction >= 1, "lane_width > 0 and lanes_per_direction >= 1")
    need(cfg.n_vehicles >= 0 and cfg.n_rsus >= 0, "n_vehicles, n_rsus >= 0")
    lo, hi = cfg.speed_range
    need(0 < lo <= hi, "speed_range: 0 < min <= max")
    need(cfg.cache_scale > 0, "cache_scale > 0")
    need(cfg.vehicle_cache_packets > 0 and cfg.rsu_cache_packets > 0, "cache_capacity_C > 0 (in packets)")
    need(
        cfg.packets_per_slot(cfg.vehicle_forward_rate) > 0 and cfg.packets_per_slot(cfg.rsu_forward_rate) > 0,
        "forward_capacity_F > 0 (in packets/slot)",
    )
    sched = cfg.light_schedule
    need(len(sched) > 0 and sched[0].start_slot == 0, "light_schedule: first phase starts at slot 0")
    need(all(a.start_slot < b.start_slot for a, b in zip(sched, sched[1:])),
         "light_schedule: start slots strictly increasing (phases may not overlap)")
    need(all(s.phase in PHASES for s in sched), f"light_schedule: phase in {PHASES}")
    if cfg.rsu_positions is not None:
        need(len(cfg.rsu_positions) >= cfg.n_rsus, "rsu_positions: one coordinate pair per RSU")

    ch = cfg.channel
    need(ch.bandwidth_v2v > 0 and ch.bandwidth_v2i > 0, "channel bandwidths > 0")
    need(ch.tx_power_v2v > 0 and ch.tx_power_v2i > 0 and ch.noise_power > 0, "channel powers > 0")
    need(ch.gain_model in GAIN_MODELS, f"channel.gain_model in {GAIN_MODELS}")
    need(ch.h_v2v > 0 and ch.h_v2i > 0, "channel gains > 0")
    need(ch.max_range_vehicle > 0 and ch.rsu_coverage > 0, "channel ranges > 0")

    tr = cfg.traffic
    need(tr.grid_rows >= 1 and tr.grid_cols >= 1, "traffic grid_rows, grid_cols >= 1")
    need(tr.qos_mbps > 0, "traffic.qos_mbps > 0")
    need(tr.initiators_per_slot >= 0, "traffic.initiators_per_slot >= 0")
    need(len(tr.priority_mix) == 3 and all(p >= 0 for p in tr.priority_mix)
         and abs(sum(tr.priority_mix) - 1.0) < 1e-9, "traffic.priority_mix sums to 1")
    need(tr.task_slots >= 1, "traffic.task_slots >= 1")
    need(tr.initiators in ("all", "vehicles"), "traffic.initiators in ('all', 'vehicles')")
    need(cfg.qos_packets_per_slot > 0, "traffic.qos_mbps gives at least one packet per slot")

    ro = cfg.routing
    need(ro.weight_mode in WEIGHT_MODES, f"routing.weight_mode in {WEIGHT_MODES}")
    need(ro.port_cap is None or ro.port_cap >= 1, "routing.port_cap >= 1 or unset")
    need(ro.refresh_interval >= 0, "routing.refresh_interval >= 0")


# key -> (dataclass field, kind, default unit)
_SCENARIO_KEYS = {
    "area_width": ("area_width", "length", "m"),
    "area_height": ("area_height", "length", "m"),
    "lane_width": ("lane_width", "length", "m"),
    "lanes_per_direction": ("lanes_per_direction", int, None),
    "n_vehicles": ("n_vehicles", int, None),
    "n_rsus": ("n_rsus", int, None),
    "slot_length": ("slot_length", "time", "s"),
    "n_slots": ("n_slots", int, None),
    "speed_range": ("speed_range", "speed_pair", None),
    "packet_size": ("packet_size", "bits", "b"),
    "seed": ("seed", int, None),
    "horizontal_roads": ("horizontal_roads", "floats", None),
    "vertical_roads": ("vertical_roads", "floats", None),
    "cache_scale": ("cache_scale", float, None),
}
_NODE_KEYS = {
    "vehicle_cache": ("vehicle_cache", "bits", None),
    "rsu_cache": ("rsu_cache", "bits", None),
    "vehicle_forward_rate": ("vehicle_forward_rate", "rate", None),
    "rsu_forward_rate": ("rsu_forward_rate", "rate", None),
    "vehicle_height": ("vehicle_height", "length", "m"),
    "rsu_height": ("rsu_height", "length", "m"),
    "rsu_positions": ("rsu_positions", "points", None),
}
_CHANNEL_KEYS = {
    "bandwidth_v2v": ("bandwidth_v2v", "frequency", None),
    "bandwidth_v2i": ("bandwidth_v2i", "frequency", None),
    "tx_power_vehicle": ("tx_power_v2v", "power", None),
    "tx_power_rsu": ("tx_power_v2i", "power", None),
    "noise_power": ("noise_power", "power", None),
    "a0_db": ("a0_db", float, None),
    "gain_model": ("gain_model", str, None),
    "h_v2v": ("h_v2v", float, None),
    "h_v2i": ("h_v2i", float, None),
    "path_loss_exponent": ("path_loss_exponent", float, None),
    "reference_distance": ("reference_distance", "length", "m"),
    "max_range_vehicle": ("max_range_vehicle", "length", "m"),
    "rsu_coverage": ("rsu_coverage", "length", "m"),
}
_TRAFFIC_KEYS = {
    "grid_rows": ("grid_rows", int, None),
    "grid_cols": ("grid_cols", int, None),
    "initiators_per_slot": ("initiators_per_slot", float, None),
    "scale_initiators_with_nodes": ("scale_initiators_with_nodes", bool, None),
    "reference_nodes": ("reference_nodes", int, None),
    "qos_mbps": ("qos_mbps", float, None),
    "task_slots": ("task_slots", int, None),
    "task_total_packets": ("task_total_packets", int, None),
    "priority_mix": ("priority_mix", "floats", None),
    "first_slot": ("first_slot", int, None),
    "last_slot": ("last_slot", int, None),
    "initiators": ("initiators", str, None),
}
_ROUTING_KEYS = {
    "weight_mode": ("weight_mode", str, None),
    "port_cap": ("port_cap", int, None),
    "refresh_interval": ("refresh_interval", int, None),
}


def _convert(section: str, key: str, raw: Any, kind, unit):
    where = f"[{section}] {key}"
    try:
        if kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError(f"{where}: expected an integer, got {raw!r}")
            return raw
        if kind is float:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"{where}: expected a number, got {raw!r}")
            return float(raw)
        if kind is bool:
            if not isinstance(raw, bool):
                raise ConfigError(f"{where}: expected true/false, got {raw!r}")
            return raw
        if kind is str:
            if not isinstance(raw, str):
                raise ConfigError(f"{where}: expected a string, got {raw!r}")
            return raw
        if kind == "floats":
            return tuple(float(v) for v in raw)
        if kind == "points":
            return tuple((float(p[0]), float(p[1])) for p in raw)
        if kind == "speed_pair":
            if len(raw) != 2:
                raise ConfigError(f"{where}: expected [min, max] in km/h")
            return tuple(parse_quantity(v, "speed", "km/h") * 3.6 for v in raw)
        if kind == "power":
            return parse_power(raw)
        return parse_quantity(raw, kind, unit)
    except UnitError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def _section(doc: dict, name: str, keys: dict) -> dict:
    table = doc.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    out = {}
    for key, raw in table.items():
        if key not in keys:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        fname, kind, unit = keys[key]
        out[fname] = _convert(name, key, raw, kind, unit)
    return out


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a validated config from a parsed TOML document."""
    known = {"scenario", "nodes", "channel", "traffic", "routing", "lights"}
    for name in doc:
        if name not in known:
            raise ConfigError(f"unknown table [{name}]")
    top = _section(doc, "scenario", _SCENARIO_KEYS)
    top.update(_section(doc, "nodes", _NODE_KEYS))
    if "lights" in doc:
        spans = []
        for i, entry in enumerate(doc["lights"]):
            try:
                spans.append(LightSpan(int(entry["start_slot"]), str(entry["phase"])))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"[[lights]] entry {i}: needs start_slot and phase ({exc})") from None
        top["light_schedule"] = tuple(spans)
    try:
        return ScenarioConfig(
            channel=ChannelParams(**_section(doc, "channel", _CHANNEL_KEYS)),
            traffic=TrafficConfig(**_section(doc, "traffic", _TRAFFIC_KEYS)),
            routing=RoutingConfig(**_section(doc, "routing", _ROUTING_KEYS)),
            **top,
        )
    except ConfigError as exc:
        raise ConfigError(f"validation failed: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file; ``"default"`` gives the built-in scenario."""
    if str(path) == "default":
        return ScenarioConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def with_overrides(cfg: ScenarioConfig, *, qos_mbps=None, cache_scale=None, n_vehicles=None, seed=None):
    """Copy of ``cfg`` with the sweepable parameters replaced."""
    changes: dict[str, Any] = {}
    if qos_mbps is not None:
        changes["traffic"] = dataclasses.replace(cfg.traffic, qos_mbps=float(qos_mbps))
    if cache_scale is not None:
        changes["cache_scale"] = float(cache_scale)
    if n_vehicles is not None:
        changes["n_vehicles"] = int(n_vehicles)
    if seed is not None:
        changes["seed"] = int(seed)
    return dataclasses.replace(cfg, **changes)


def to_dict(cfg: ScenarioConfig) -> dict:
    """Fully resolved config in SI units, suitable for a JSON manifest."""
    d = dataclasses.asdict(cfg)
    d["light_schedule"] = [{"start_slot": s.start_slot, "phase": s.phase} for s in cfg.light_schedule]
    d["derived"] = {
        "vehicle_cache_packets": cfg.vehicle_cache_packets,
        "rsu_cache_packets": cfg.rsu_cache_packets,
        "vehicle_forward_packets_per_slot": cfg.packets_per_slot(cfg.vehicle_forward_rate),
        "rsu_forward_packets_per_slot": cfg.packets_per_slot(cfg.rsu_forward_rate),
        "qos_packets_per_slot": cfg.qos_packets_per_slot,
        "task_size_packets": cfg.task_size_packets,
        "a0_linear": cfg.channel.a0,
    }
    return d


def from_dict(d: dict) -> ScenarioConfig:
    """Inverse of :func:`to_dict` (manifest replay)."""
    d = {k: v for k, v in d.items() if k != "derived"}
    d["light_schedule"] = tuple(LightSpan(s["start_slot"], s["phase"]) for s in d["light_schedule"])
    d["speed_range"] = tuple(d["speed_range"])
    for key in ("horizontal_roads", "vertical_roads"):
        if d.get(key) is not None:
            d[key] = tuple(d[key])
    if d.get("rsu_positions") is not None:
        d["rsu_positions"] = tuple(tuple(p) for p in d["rsu_positions"])
    tr = dict(d["traffic"])
    tr["priority_mix"] = tuple(tr["priority_mix"])
    d["traffic"] = TrafficConfig(**tr)
    d["channel"] = ChannelParams(**d["channel"])
    d["routing"] = RoutingConfig(**d["routing"])
    return ScenarioConfig(**d)
