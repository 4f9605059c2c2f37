"""Urban-grid geometry, RSU placement, traffic lights and vehicle mobility."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    ALL_YELLOW,
    HORIZONTAL_GREEN,
    VERTICAL_GREEN,
    ConfigError,
    LightSpan,
    ScenarioConfig,
    load_scenario,
)
from .units import kmh_to_ms

__all__ = [
    "NodeState",
    "LightPhase",
    "load_scenario",
    "initial_placement",
    "light_phase_at",
    "positions_at",
    "trajectory",
    "placement_rng",
    "ConfigError",
]

VEHICLE = "vehicle"
RSU = "rsu"


@dataclass(frozen=True)
class NodeState:
    id: int
    kind: str
    position: tuple[float, float, float]
    velocity: tuple[float, float]
    axis: str  # "horizontal", "vertical" or "none"
    max_range: float
    tx_power: float
    cache_capacity_C: int
    forward_capacity_F: int

    @property
    def is_rsu(self) -> bool:
        return self.kind == RSU


@dataclass(frozen=True)
class LightPhase:
    phase: str
    slots: range

    @property
    def open_axis(self) -> str:
        return {HORIZONTAL_GREEN: "horizontal", VERTICAL_GREEN: "vertical", ALL_YELLOW: "none"}[self.phase]


def placement_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 0]))


def _check_slot(config: ScenarioConfig, slot: int) -> None:
    if not 0 <= slot < config.n_slots:
        raise IndexError(f"slot {slot} outside [0, {config.n_slots})")


def light_phase_at(config: ScenarioConfig, slot: int) -> LightPhase:
    _check_slot(config, slot)
    spans: tuple[LightSpan, ...] = config.light_schedule
    for i, span in enumerate(spans):
        end = spans[i + 1].start_slot if i + 1 < len(spans) else config.n_slots
        if span.start_slot <= slot < end:
            return LightPhase(span.phase, range(span.start_slot, min(end, config.n_slots)))
    raise AssertionError("light schedule does not cover slot")  # validate() rules this out


def _green_mask(config: ScenarioConfig) -> dict[str, np.ndarray]:
    """Per-axis boolean arrays: does that axis move during slot k."""
    horiz = np.zeros(config.n_slots, dtype=bool)
    vert = np.zeros(config.n_slots, dtype=bool)
    spans = config.light_schedule
    for i, span in enumerate(spans):
        end = spans[i + 1].start_slot if i + 1 < len(spans) else config.n_slots
        if span.phase == HORIZONTAL_GREEN:
            horiz[span.start_slot:end] = True
        elif span.phase == VERTICAL_GREEN:
            vert[span.start_slot:end] = True
    return {"horizontal": horiz, "vertical": vert}


def initial_placement(config: ScenarioConfig, rng: np.random.Generator | None = None) -> list[NodeState]:
    """Vehicles ``0..n_vehicles-1`` on lanes, then RSUs at the configured points.

    Each vehicle draws an axis, a direction, a road, a lane and a speed; its
    start coordinate along the road is uniform over the stretch from which it
    cannot leave the area within the run, even at the top speed of the range.
    """
    if rng is None:
        rng = placement_rng(config.seed)
    ch = config.channel
    v_max = kmh_to_ms(config.speed_range[1])
    v_min = kmh_to_ms(config.speed_range[0])
    travel = v_max * config.duration
    c_vehicle = config.vehicle_cache_packets
    c_rsu = config.rsu_cache_packets
    f_vehicle = config.packets_per_slot(config.vehicle_forward_rate)
    f_rsu = config.packets_per_slot(config.rsu_forward_rate)
    nodes: list[NodeState] = []
    for vid in range(config.n_vehicles):
        horizontal = bool(rng.random() < 0.5)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        roads = config.roads_y if horizontal else config.roads_x
        road = roads[int(rng.integers(len(roads)))]
        lane = int(rng.integers(config.lanes_per_direction))
        speed = float(rng.uniform(v_min, v_max))
        length = config.area_width if horizontal else config.area_height
        lo, hi = (0.0, length - travel) if sign > 0 else (travel, length)
        if lo > hi:  # road shorter than the worst-case travel: keep inside by starting at the far end
            lo = hi = 0.0 if sign > 0 else length
        along = float(rng.uniform(lo, hi))
        # right-hand traffic: +x lanes below the centre line, +y lanes right of it
        offset = (lane + 0.5) * config.lane_width
        if horizontal:
            lateral = road - offset if sign > 0 else road + offset
            pos = (along, lateral, config.vehicle_height)
            vel = (sign * speed, 0.0)
        else:
            lateral = road + offset if sign > 0 else road - offset
            pos = (lateral, along, config.vehicle_height)
            vel = (0.0, sign * speed)
        nodes.append(NodeState(
            id=vid, kind=VEHICLE, position=pos, velocity=vel,
            axis="horizontal" if horizontal else "vertical",
            max_range=ch.max_range_vehicle, tx_power=ch.tx_power_v2v,
            cache_capacity_C=c_vehicle, forward_capacity_F=f_vehicle,
        ))
    for k, (x, y) in enumerate(config.rsu_xy()):
        nodes.append(NodeState(
            id=config.n_vehicles + k, kind=RSU, position=(float(x), float(y), config.rsu_height),
            velocity=(0.0, 0.0), axis="none", max_range=ch.rsu_coverage, tx_power=ch.tx_power_v2i,
            cache_capacity_C=c_rsu, forward_capacity_F=f_rsu,
        ))
    return nodes


def trajectory(config: ScenarioConfig, nodes: list[NodeState]) -> np.ndarray:
    """Positions of every node for every slot, shape ``(n_slots, n_nodes, 3)``.

    A vehicle moves only during slots in which its axis has green; the
    position at slot k reflects the moves made during slots ``0..k-1``.
    """
    n = len(nodes)
    out = np.empty((config.n_slots, n, 3))
    if config.n_slots == 0 or n == 0:
        return out
    start = np.array([nd.position for nd in nodes], dtype=float)
    vel = np.zeros((n, 3))
    vel[:, :2] = [nd.velocity for nd in nodes]
    green = _green_mask(config)
    steps = {}
    for axis, mask in green.items():
        steps[axis] = np.concatenate(([0], np.cumsum(mask[:-1]))).astype(float)
    moved = np.zeros((config.n_slots, n))
    for i, nd in enumerate(nodes):
        if nd.axis in steps:
            moved[:, i] = steps[nd.axis]
    out[:] = start[None, :, :] + moved[:, :, None] * (vel[None, :, :] * config.slot_length)
    # float drift at the clamp boundary must not push a vehicle outside the area
    np.clip(out[:, :, 0], 0.0, config.area_width, out=out[:, :, 0])
    np.clip(out[:, :, 1], 0.0, config.area_height, out=out[:, :, 1])
    return out


def positions_at(config: ScenarioConfig, nodes: list[NodeState], slot: int) -> list[tuple[int, tuple[float, float, float]]]:
    _check_slot(config, slot)
    green = _green_mask(config)
    result = []
    for nd in nodes:
        if nd.axis in green:
            k = int(np.count_nonzero(green[nd.axis][:slot]))
        else:
            k = 0
        x = nd.position[0] + nd.velocity[0] * config.slot_length * k
        y = nd.position[1] + nd.velocity[1] * config.slot_length * k
        x = min(max(x, 0.0), config.area_width)
        y = min(max(y, 0.0), config.area_height)
        result.append((nd.id, (x, y, nd.position[2])))
    return result
