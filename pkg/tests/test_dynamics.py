"""Dynamics tests: integration arithmetic, clamping, the closed-form braking
oracle, lane changes and collision detection."""

import random

import pytest

from platoonsim.core import LateralCommand, LateralMode, VehicleState
from platoonsim.dynamics import (
    G,
    DynamicsLimits,
    InvalidLane,
    LaneGeometry,
    detect_collisions,
    lateral_position,
    step_longitudinal,
    step_lateral,
    stopping_distance,
)

LIMITS = DynamicsLimits()
GEOM = LaneGeometry()
LANE_CENTER = LateralCommand(LateralMode.LANE_CENTER)


def vehicle(s=0.0, lane=0, v=20.0, offset=0.0):
    return VehicleState(s=s, lane=lane, v=v, lateral_offset=offset)


class TestLongitudinal:
    def test_full_brake_step_arithmetic(self):
        out = step_longitudinal(vehicle(v=20.0), -G, LIMITS, dt=0.1)
        assert out.v == pytest.approx(20.0 - 0.981, abs=1e-12)

    def test_speed_floors_at_standstill(self):
        out = step_longitudinal(vehicle(v=0.05), -G, LIMITS, dt=0.1)
        assert out.v == 0.0

    def test_position_never_reverses_on_stop(self):
        start = vehicle(s=100.0, v=0.05)
        out = step_longitudinal(start, -G, LIMITS, dt=0.1)
        assert out.s >= start.s

    def test_stopping_distance_matches_closed_form(self):
        # brake from 20 m/s at 1.00 g; oracle: v^2 / (2 d_max) = 20.39 m
        state = vehicle(s=0.0, v=20.0)
        dt = 0.05
        while state.v > 0.0:
            state = step_longitudinal(state, -G, LIMITS, dt)
        oracle = stopping_distance(20.0, LIMITS.d_max)
        assert oracle == pytest.approx(20.387, abs=0.01)
        assert state.s == pytest.approx(oracle, abs=dt * 20.0)

    def test_command_clamped_to_limits(self):
        up = step_longitudinal(vehicle(v=10.0), 50.0, LIMITS, dt=0.1)
        assert up.a == pytest.approx(LIMITS.a_max)
        down = step_longitudinal(vehicle(v=10.0), -50.0, LIMITS, dt=0.1)
        assert down.a == pytest.approx(-LIMITS.d_max)

    def test_standstill_holds_under_braking(self):
        state = vehicle(s=50.0, v=0.0)
        out = step_longitudinal(state, -G, LIMITS, dt=0.05)
        assert out.s == state.s
        assert out.v == 0.0

    def test_speed_non_negative_under_random_commands(self):
        rng = random.Random(7)
        state = vehicle(v=5.0)
        for _ in range(500):
            state = step_longitudinal(state, rng.uniform(-30.0, 10.0), LIMITS, 0.05)
            assert state.v >= 0.0
            assert abs(state.a) <= max(LIMITS.a_max, LIMITS.d_max) + 1e-12

    def test_step_order_independence(self):
        # each step reads only its own snapshot, so ordering cannot matter
        states = {i: vehicle(s=20.0 * i, v=15.0 + i) for i in range(5)}
        cmds = {i: -2.0 + i for i in range(5)}
        forward = {i: step_longitudinal(states[i], cmds[i], LIMITS, 0.05) for i in range(5)}
        backward = {i: step_longitudinal(states[i], cmds[i], LIMITS, 0.05)
                    for i in reversed(range(5))}
        assert forward == backward


class TestLateral:
    def test_lane_change_midpoint_progress(self):
        state = vehicle(lane=1)
        cmd = LateralCommand(LateralMode.LANE_CHANGE, target_lane=2)
        for _ in range(30):  # 1.5 s at dt=0.05 of a 3 s change
            state = step_lateral(state, cmd, GEOM, 0.05)
        assert state.lateral_offset == pytest.approx(0.5 * GEOM.lane_width)
        assert state.lane == 1

    def test_lane_change_completes_and_resets_offset(self):
        state = vehicle(lane=1)
        cmd = LateralCommand(LateralMode.LANE_CHANGE, target_lane=0)
        for _ in range(61):
            state = step_lateral(state, cmd, GEOM, 0.05)
        assert state.lane == 0
        assert state.lateral_offset == 0.0

    def test_lane_center_is_fixed_point_at_zero(self):
        state = vehicle()
        assert step_lateral(state, LANE_CENTER, GEOM, 0.05) == state

    def test_lane_center_decays_offset(self):
        state = vehicle(offset=1.0)
        out = step_lateral(state, LANE_CENTER, GEOM, 0.05)
        assert 0.0 < out.lateral_offset < 1.0

    def test_non_adjacent_lane_rejected(self):
        with pytest.raises(InvalidLane):
            step_lateral(vehicle(lane=0),
                         LateralCommand(LateralMode.LANE_CHANGE, target_lane=2),
                         GEOM, 0.05)

    def test_out_of_range_lane_rejected(self):
        with pytest.raises(InvalidLane):
            step_lateral(vehicle(lane=2),
                         LateralCommand(LateralMode.LANE_CHANGE, target_lane=3),
                         GEOM, 0.05)


class TestCollisions:
    def test_positive_gap_no_collision(self):
        states = {1: vehicle(s=100.0), 2: vehicle(s=100.0 - 5.0 - 0.5)}
        assert detect_collisions(states, GEOM) == []

    def test_interval_overlap_reports_pair(self):
        states = {1: vehicle(s=100.0), 2: vehicle(s=100.0 - 5.0 + 0.1)}
        assert detect_collisions(states, GEOM) == [(1, 2)]

    def test_adjacent_lane_overlap_is_not_a_collision(self):
        states = {1: vehicle(s=100.0, lane=1), 2: vehicle(s=100.0 - 4.9, lane=0)}
        assert detect_collisions(states, GEOM) == []

    def test_mid_lane_change_collision(self):
        # lateral centers 0.5 m apart -> bodies overlap
        states = {1: vehicle(s=100.0, lane=1),
                  2: vehicle(s=100.0 - 4.9, lane=1, offset=0.5)}
        assert detect_collisions(states, GEOM) == [(1, 2)]

    def test_report_is_deterministic_and_sorted(self):
        states = {3: vehicle(s=100.0), 1: vehicle(s=96.0), 2: vehicle(s=92.0)}
        assert detect_collisions(states, GEOM) == [(1, 2), (1, 3)]

    def test_lateral_position_helper(self):
        assert lateral_position(vehicle(lane=2, offset=-0.5), GEOM) == pytest.approx(6.5)
