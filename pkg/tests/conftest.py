"""Shared builders for strategy and manager tests."""

from typing import Optional

import pytest

from platoonsim.comms import PeerView, RadarReading
from platoonsim.core import (
    ManeuverState,
    MessageKind,
    PlatoonInfo,
    Role,
    V2VMessage,
    VehicleState,
)
from platoonsim.management import (
    ActiveInstruction,
    DriverState,
    StrategyContext,
    StrategyProgress,
)
from platoonsim.params import Parameters

PARAMS = Parameters()
DT = 0.05


def make_reading(gap=13.0, rel_speed=0.0, valid=True, target=1, max_range=200.0):
    return RadarReading(valid, gap, rel_speed, max_range, target)


def make_peer(s=400.0, v=20.0, a=0.0, role=Role.FOLLOWER, platoon=None,
              age=1, lane=1, zeroed=False):
    return PeerView(s=s, v=v, a=a, length=5.0, role=role, platoon=platoon,
                    age_ticks=age, lane=lane, zeroed=zeroed)


def make_ctx(ego_id=2, role=Role.FOLLOWER, maneuver=ManeuverState.PLATOONING,
             tick=100, ego_s=400.0, ego_v=20.0, ego_lane=1, lateral_offset=0.0,
             reading: Optional[RadarReading] = None, peers=None, inbox=(),
             series=(1, 2, 3, 4, 5), instruction: Optional[ActiveInstruction] = None,
             own_faults=(), driver: Optional[DriverState] = None,
             degradation=True, params: Parameters = PARAMS):
    platoon = PlatoonInfo(len(series), tuple(series)) if series else None
    return StrategyContext(
        tick=tick, dt=DT, ego_id=ego_id,
        ego=VehicleState(s=ego_s, lane=ego_lane, v=ego_v,
                         lateral_offset=lateral_offset),
        role=role, maneuver=maneuver,
        reading=reading if reading is not None else make_reading(),
        peers=peers or {}, inbox=list(inbox), platoon=platoon,
        instruction=instruction, params=params, degradation_enabled=degradation,
        own_faults=frozenset(own_faults),
        driver=driver if driver is not None else DriverState(v_set=ego_v))


def flag(kind: MessageKind, sender=1, tick=99, **payload) -> V2VMessage:
    return V2VMessage(sender, kind, tick, **payload)


def fresh_progress(tick=100, **data) -> StrategyProgress:
    return StrategyProgress(entered_tick=tick, data=dict(data))


@pytest.fixture
def params():
    return PARAMS
