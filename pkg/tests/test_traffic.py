import dataclasses

import numpy as np
import pytest

from _oracles import CHI2_999, chi_square
from iovsim.channel import make_snapshot
from iovsim.config import ScenarioConfig, TrafficConfig
from iovsim.traffic import (
    Task,
    calibrate_qos,
    choose_initiators,
    generate_tasks,
    grid_cell,
    initiator_count,
    min_qos_mbps,
    offered_load,
    traffic_rng,
)


def complete_snapshot(n, positions=None):
    rate = np.full((n, n), 10, dtype=np.int64)
    return make_snapshot(0, rate, positions)


def cfg_with(**traffic):
    return ScenarioConfig(traffic=TrafficConfig(**traffic))


def test_qos_rate_in_packets():
    assert ScenarioConfig().qos_packets_per_slot == 2  # 20e6 * 0.1 / 1e6


def _task(**kw):
    base = dict(id=0, source=0, destination=1, priority="high", qos_rate=2, total_packets=10,
                start_slot=0, route=None)
    base.update(kw)
    return Task(**base)


@pytest.mark.parametrize("sent, expected", [(0, 2), (9, 1), (10, 0)])
def test_offered_load(sent, expected):
    assert offered_load(_task(sent=sent), 5) == expected


def test_offered_load_before_start():
    assert offered_load(_task(start_slot=3), 2) == 0


def test_self_destined_task_rejected():
    with pytest.raises(ValueError):
        _task(destination=0)


def test_zero_initiators_gives_nothing():
    cfg = cfg_with(initiators_per_slot=0.0)
    routed, failed = generate_tasks(0, cfg, np.zeros(24, bool), complete_snapshot(24), traffic_rng(1))
    assert routed == [] and failed == []


def test_fractional_initiator_rate_spreads_evenly():
    cfg = cfg_with(initiators_per_slot=1.7, scale_initiators_with_nodes=False)
    counts = [initiator_count(cfg, k, 24) for k in range(300)]
    assert set(counts) <= {1, 2}
    assert sum(counts) == int(300 * 1.7)
    scaled = cfg_with(initiators_per_slot=1.5)
    assert sum(initiator_count(scaled, k, 36) for k in range(300)) == int(300 * 1.5 * 36 / 24)


def test_initiator_window():
    cfg = cfg_with(initiators_per_slot=2.0, first_slot=10, last_slot=20)
    assert [initiator_count(cfg, k, 24) for k in (9, 10, 19, 20)] == [0, 2, 2, 0]


def test_destinations_uniform_and_never_source():
    cfg = cfg_with(initiators_per_slot=24.0, scale_initiators_with_nodes=False)
    snap = complete_snapshot(24)
    rng = traffic_rng(3)
    counts = np.zeros(23, dtype=int)
    draws = 0
    next_id = 0
    while draws < 10_000:
        routed, failed = generate_tasks(0, cfg, np.zeros(24, bool), snap, rng, next_id)
        assert not failed
        for t in routed:
            assert t.destination != t.source
            counts[t.destination - (t.destination > t.source)] += 1
        draws += len(routed)
        next_id += len(routed)
    assert chi_square(counts, draws / 23) < CHI2_999[22]


def test_routes_are_valid_in_initiation_snapshot():
    rng = np.random.default_rng(0)
    n = 12
    rate = np.where(rng.random((n, n)) < 0.3, 5, 0)
    rate = np.maximum(rate, rate.T)
    pos = np.column_stack([rng.uniform(0, 866, n), rng.uniform(0, 500, n), np.zeros(n)])
    snap = make_snapshot(0, rate, pos)
    cfg = cfg_with(initiators_per_slot=6.0, scale_initiators_with_nodes=False)
    routed, failed = generate_tasks(0, cfg, np.zeros(n, bool), snap, traffic_rng(1))
    for t in routed:
        assert t.route.source == t.source and t.route.destination == t.destination
        assert all(snap.exists[a, b] for a, b in zip(t.route.nodes, t.route.nodes[1:]))
    for t in failed:
        assert t.route is None and not t.routed


def test_vehicle_only_initiators():
    cfg = cfg_with(initiators_per_slot=4.0, scale_initiators_with_nodes=False, initiators="vehicles")
    is_rsu = np.zeros(24, bool)
    is_rsu[20:] = True
    rng = traffic_rng(2)
    for _ in range(50):
        routed, failed = generate_tasks(0, cfg, is_rsu, complete_snapshot(24), rng)
        assert all(not is_rsu[t.source] for t in routed + failed)


def test_initiators_follow_cell_population():
    cfg = ScenarioConfig()
    pos = np.array([[100, 100, 0]] * 6 + [[700, 100, 0]] * 2 + [[100, 400, 0]] * 2 + [[700, 400, 0]] * 2,
                   dtype=float)
    cells = grid_cell(cfg, pos)
    assert cells.tolist() == [0] * 6 + [1] * 2 + [2] * 2 + [3] * 2
    chosen = choose_initiators(cfg, 6, np.arange(12), cells, traffic_rng(1))
    assert len(set(chosen)) == 6
    assert sum(cells[c] == 0 for c in chosen) == 3


def test_generation_is_deterministic():
    cfg = cfg_with(initiators_per_slot=5.0)
    a = generate_tasks(0, cfg, np.zeros(24, bool), complete_snapshot(24), traffic_rng(8))
    b = generate_tasks(0, cfg, np.zeros(24, bool), complete_snapshot(24), traffic_rng(8))
    key = lambda ts: [(t.source, t.destination, t.priority) for t in ts]  # noqa: E731
    assert key(a[0]) == key(b[0])


@pytest.mark.slow
def test_calibrate_qos_bounds_and_monotonicity():
    cfg = dataclasses.replace(ScenarioConfig(), n_slots=120)
    seeds = [1, 2]
    assert calibrate_qos(cfg, 1.0, seeds, hi=200) == 200
    low = calibrate_qos(cfg, 0.03, seeds, hi=200)
    high = calibrate_qos(cfg, 0.10, seeds, hi=200)
    assert low is not None and high is not None and low <= high
    with pytest.raises(ValueError):
        calibrate_qos(cfg, 0.0, seeds)
    with pytest.raises(ValueError):
        calibrate_qos(cfg, 0.05, seeds, lo=1)


def test_min_qos():
    assert min_qos_mbps(ScenarioConfig()) == 10
