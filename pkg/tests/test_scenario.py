import numpy as np
import pytest

from iovsim.config import ALL_YELLOW, HORIZONTAL_GREEN, VERTICAL_GREEN, LightSpan, ScenarioConfig
from iovsim.scenario import (
    NodeState,
    initial_placement,
    light_phase_at,
    placement_rng,
    positions_at,
    trajectory,
)


@pytest.fixture(scope="module")
def cfg():
    return ScenarioConfig()


def test_default_population(cfg):
    nodes = initial_placement(cfg, placement_rng(1))
    assert len(nodes) == 24
    assert sum(nd.velocity == (0.0, 0.0) for nd in nodes) == 4
    assert [nd.id for nd in nodes] == list(range(24))
    assert all(nd.is_rsu for nd in nodes[20:])


def test_no_vehicles_gives_rsus_only():
    nodes = initial_placement(ScenarioConfig(n_vehicles=0), placement_rng(1))
    assert len(nodes) == 4 and all(nd.is_rsu for nd in nodes)


def test_speeds_within_range(cfg):
    for seed in range(20):
        for nd in initial_placement(cfg, placement_rng(seed))[:20]:
            speed = abs(nd.velocity[0]) + abs(nd.velocity[1])
            assert 20 / 3.6 <= speed <= 40 / 3.6


def test_start_clamp_keeps_fast_vehicles_inside(cfg):
    # 11.11 m/s over 30 s is 333.3 m, so a +x vehicle starts at most W - 333.3
    bound = cfg.area_width - (40 / 3.6) * cfg.duration
    assert bound == pytest.approx(cfg.area_width - 333.33, abs=0.01)
    seen = 0
    for seed in range(50):
        for nd in initial_placement(cfg, placement_rng(seed)):
            if nd.velocity[0] > 0:
                assert nd.position[0] <= bound + 1e-9
                seen += 1
    assert seen > 0


def test_rsus_at_cell_centres(cfg):
    rsus = [nd.position[:2] for nd in initial_placement(cfg, placement_rng(1)) if nd.is_rsu]
    assert rsus == [(216.5, 125.0), (649.5, 125.0), (216.5, 375.0), (649.5, 375.0)]


@pytest.mark.parametrize("slot, phase", [(0, HORIZONTAL_GREEN), (50, HORIZONTAL_GREEN), (99, HORIZONTAL_GREEN),
                                          (100, ALL_YELLOW), (149, ALL_YELLOW), (150, VERTICAL_GREEN),
                                          (299, VERTICAL_GREEN)])
def test_light_phases(cfg, slot, phase):
    assert light_phase_at(cfg, slot).phase == phase


def test_light_phase_partition(cfg):
    covered = [light_phase_at(cfg, k) for k in range(cfg.n_slots)]
    assert sum(len(p.slots) for p in {(p.phase, p.slots.start): p for p in covered}.values()) == cfg.n_slots
    with pytest.raises(IndexError):
        light_phase_at(cfg, cfg.n_slots)


def _mover(axis="horizontal", vx=10.0, vy=0.0, x=0.0, y=250.0):
    return NodeState(0, "vehicle", (x, y, 1.5), (vx, vy), axis, 200.0, 0.1, 100, 1000)


def test_positions_at_slot_zero_is_identity(cfg):
    nodes = initial_placement(cfg, placement_rng(4))
    assert [p for _, p in positions_at(cfg, nodes, 0)] == [nd.position for nd in nodes]


def test_uniform_motion_arithmetic(cfg):
    # 10 m/s for ten 0.1 s slots of green: 10 * 0.1 * 10 = 10 m
    (_, (x, y, _)), = positions_at(cfg, [_mover()], 10)
    assert x == pytest.approx(10.0, abs=1e-12)
    assert y == 250.0


def test_vertical_vehicle_waits_during_horizontal_green(cfg):
    nd = _mover("vertical", 0.0, 8.0, x=433.0, y=10.0)
    for k in (0, 50, 99, 100, 150):
        assert positions_at(cfg, [nd], k)[0][1][1] == 10.0
    assert positions_at(cfg, [nd], 151)[0][1][1] == pytest.approx(10.8)


def test_trajectory_matches_positions_at_and_stays_inside(cfg):
    for seed in (1, 2, 3):
        nodes = initial_placement(cfg, placement_rng(seed))
        traj = trajectory(cfg, nodes)
        assert traj.shape == (300, 24, 3)
        for k in (0, 1, 99, 100, 150, 299):
            assert np.array_equal(traj[k], np.array([p for _, p in positions_at(cfg, nodes, k)]))
        assert (traj[:, :, 0] >= 0).all() and (traj[:, :, 0] <= cfg.area_width).all()
        assert (traj[:, :, 1] >= 0).all() and (traj[:, :, 1] <= cfg.area_height).all()
        assert (traj[:, 20:] == traj[0, 20:]).all()  # RSUs never move


def test_determinism(cfg):
    a = trajectory(cfg, initial_placement(cfg, placement_rng(9)))
    b = trajectory(cfg, initial_placement(cfg, placement_rng(9)))
    assert a.tobytes() == b.tobytes()


def test_custom_light_schedule():
    cfg = ScenarioConfig(n_slots=10, light_schedule=(LightSpan(0, VERTICAL_GREEN), LightSpan(4, ALL_YELLOW)))
    nd = _mover("vertical", 0.0, 5.0, x=433.0, y=0.0)
    assert positions_at(cfg, [nd], 9)[0][1][1] == pytest.approx(4 * 0.5)
