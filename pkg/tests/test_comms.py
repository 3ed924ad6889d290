"""Communication layer tests: bus delivery against a brute-force oracle over
all fault combinations, radar geometry, peer views and failure detection."""

import itertools

import pytest

from platoonsim.comms import (
    BusConfig,
    FaultBoard,
    MessageBus,
    PeerViewStore,
    bus_deliver,
    detect_peer_failure,
    radar_sense,
    v2v_payload,
)
from platoonsim.core import (
    FaultKind,
    MessageKind,
    PlatoonInfo,
    Role,
    V2VMessage,
    VehicleState,
    heartbeat,
)
from platoonsim.dynamics import LaneGeometry

GEOM = LaneGeometry()


def msg(sender, kind=MessageKind.JOIN_FLAG, tick=100):
    return V2VMessage(sender, kind, tick)


class TestBus:
    def test_delay_one_tick(self):
        bus = MessageBus(BusConfig(delivery_delay_ticks=1))
        faults = FaultBoard()
        bus.send(msg(1, tick=100), faults)
        assert bus.deliver(100, faults, [1, 2, 3]) == {1: [], 2: [], 3: []}
        inboxes = bus.deliver(101, faults, [1, 2, 3])
        assert [m.sender for m in inboxes[2]] == [1]
        assert [m.sender for m in inboxes[3]] == [1]

    def test_no_self_delivery(self):
        faults = FaultBoard()
        inboxes = bus_deliver([msg(1)], faults, 100, [1, 2])
        assert inboxes[1] == []
        assert len(inboxes[2]) == 1

    def test_failed_sender_reaches_nobody(self):
        faults = FaultBoard()
        faults.inject(1, FaultKind.V2V_FAIL, 90)
        inboxes = bus_deliver([msg(1)], faults, 100, [1, 2, 3])
        assert all(box == [] for box in inboxes.values())

    def test_failed_receiver_skipped_others_served(self):
        faults = FaultBoard()
        faults.inject(2, FaultKind.V2V_FAIL, 90)
        inboxes = bus_deliver([msg(1)], faults, 100, [1, 2, 3])
        assert inboxes[2] == []
        assert len(inboxes[3]) == 1

    def test_all_fault_combinations_match_oracle(self):
        # brute-force expected delivery for every V2V fault subset of 3 vehicles
        vehicles = [1, 2, 3]
        for faulty in itertools.chain.from_iterable(
                itertools.combinations(vehicles, k) for k in range(4)):
            faults = FaultBoard()
            for vid in faulty:
                faults.inject(vid, FaultKind.V2V_FAIL, 0)
            outbox = [msg(v) for v in vehicles]
            inboxes = bus_deliver(outbox, faults, 100, vehicles)
            for receiver in vehicles:
                expected = sorted(
                    s for s in vehicles
                    if s != receiver and s not in faulty and receiver not in faulty
                )
                assert [m.sender for m in inboxes[receiver]] == expected

    def test_delivery_sorted_by_sender_then_kind(self):
        faults = FaultBoard()
        outbox = [
            V2VMessage(2, MessageKind.UPDATE_FLAG, 100),
            V2VMessage(2, MessageKind.HEARTBEAT, 100),
            V2VMessage(1, MessageKind.SAFE_FLAG, 100),
        ]
        inboxes = bus_deliver(outbox, faults, 100, [1, 2, 3])
        got = [(m.sender, m.kind) for m in inboxes[3]]
        assert got == [(1, MessageKind.SAFE_FLAG),
                       (2, MessageKind.HEARTBEAT),
                       (2, MessageKind.UPDATE_FLAG)]

    def test_range_limit(self):
        bus = MessageBus(BusConfig(delivery_delay_ticks=0, range_m=50.0))
        faults = FaultBoard()
        bus.send(msg(1, tick=5), faults)
        inboxes = bus.deliver(5, faults, [1, 2, 3],
                              positions={1: 0.0, 2: 30.0, 3: 100.0})
        assert len(inboxes[2]) == 1
        assert inboxes[3] == []


def states_for_radar():
    return {
        1: VehicleState(s=113.0 + 5.0, lane=1, v=20.0),  # rear bumper 13 m ahead
        2: VehicleState(s=100.0, lane=1, v=20.0),
        3: VehicleState(s=90.0, lane=0, v=20.0),
    }


class TestRadar:
    def test_gap_to_nearest_in_lane_leader(self):
        reading = radar_sense(2, states_for_radar(), FaultBoard(), GEOM)
        assert reading.valid
        assert reading.gap == pytest.approx(13.0)
        assert reading.target == 1
        assert reading.rel_speed == pytest.approx(0.0)

    def test_no_target_reports_max_range(self):
        reading = radar_sense(1, states_for_radar(), FaultBoard(), GEOM)
        assert reading.valid
        assert reading.gap == 200.0
        assert reading.target is None

    def test_adjacent_lane_vehicle_ignored(self):
        states = {1: VehicleState(s=100.0, lane=1, v=20.0),
                  2: VehicleState(s=120.0, lane=0, v=20.0)}
        reading = radar_sense(1, states, FaultBoard(), GEOM)
        assert reading.target is None

    def test_target_crossing_into_lane_becomes_visible(self):
        # lateral center within half a lane width of the ego lane center
        states = {1: VehicleState(s=100.0, lane=1, v=20.0),
                  2: VehicleState(s=120.0, lane=0, v=18.0, lateral_offset=2.0)}
        reading = radar_sense(1, states, FaultBoard(), GEOM)
        assert reading.target == 2
        assert reading.rel_speed == pytest.approx(-2.0)

    def test_radar_fail_reads_very_far(self):
        faults = FaultBoard()
        faults.inject(2, FaultKind.RADAR_FAIL, 10)
        reading = radar_sense(2, states_for_radar(), faults, GEOM)
        assert not reading.valid
        assert reading.gap == 200.0
        assert reading.target is None


def store_with(tick_sent, sender=3, v=20.0, a=0.0):
    store = PeerViewStore()
    state = VehicleState(s=50.0, lane=1, v=v, a=a)
    store.update([heartbeat(sender, tick_sent, state, Role.FOLLOWER,
                            PlatoonInfo(1, (sender,)))])
    return store


class TestPeerViews:
    def test_freshest_heartbeat_wins(self):
        store = PeerViewStore()
        old = VehicleState(s=10.0, lane=1, v=10.0)
        new = VehicleState(s=11.0, lane=1, v=12.0)
        store.update([heartbeat(3, 5, old, Role.FOLLOWER, None)])
        store.update([heartbeat(3, 6, new, Role.FOLLOWER, None)])
        views = v2v_payload(store, tick=7, timeout_ticks=10, degradation_enabled=True)
        assert views[3].v == 12.0
        assert views[3].age_ticks == 1

    def test_silent_peer_zeroed_without_degradation(self):
        store = store_with(tick_sent=100)
        views = v2v_payload(store, tick=111, timeout_ticks=10, degradation_enabled=False)
        assert views[3].zeroed
        assert views[3].v == 0.0
        assert views[3].a == 0.0
        assert views[3].s == 0.0

    def test_silent_peer_keeps_last_values_with_degradation(self):
        store = store_with(tick_sent=100, v=19.5)
        views = v2v_payload(store, tick=111, timeout_ticks=10, degradation_enabled=True)
        assert not views[3].zeroed
        assert views[3].v == 19.5


class TestPeerFailureDetection:
    def test_fresh_peer_not_failed(self):
        assert detect_peer_failure({2: 3}, timeout_ticks=10) == []

    def test_aged_peer_failed(self):
        assert detect_peer_failure({2: 11}, timeout_ticks=10) == [2]

    def test_never_heard_peer_fails_once_tick_exceeds_timeout(self):
        store = PeerViewStore()
        assert detect_peer_failure(store.ages([4], tick=10), timeout_ticks=10) == []
        assert detect_peer_failure(store.ages([4], tick=11), timeout_ticks=10) == [4]

    def test_heartbeat_liveness_age_bound(self):
        # a peer heard via a delay-1 bus is never older than delay + 1 ticks
        bus = MessageBus(BusConfig(delivery_delay_ticks=1))
        faults = FaultBoard()
        store = PeerViewStore()
        state = VehicleState(s=0.0, lane=0, v=20.0)
        for tick in range(50):
            bus.send(heartbeat(2, tick, state, Role.FOLLOWER, None), faults)
            inbox = bus.deliver(tick, faults, [1, 2])[1]
            store.update(inbox)
            if tick >= 1:
                assert store.age(2, tick) <= 2
