import pytest

from decmon.constants import INFINITY, TICKS_PER_UNIT
from decmon.core import compile_property
from decmon.intervals import IntervalSet
from decmon.ltl import Verdict, parse_ap_table
from decmon.protocol import (
    Aggregate, Delegate, LiteralHistory, ProcessMonitor, ProtocolViolation, StepStart, TransitionView,
    VerdictMessage, decode_message, enabling_time, encode_message, initial_coordinator
)

U = TICKS_PER_UNIT


@pytest.fixture(scope="module")
def leader_until():
    return compile_property("!a U (a U (b & c))", parse_ap_table("a=0,b=1,c=2"))[0]


class TestWireCodec:
    @pytest.mark.parametrize("msg", [
        Delegate(0, 0, 0, 2, IntervalSet([(16, 18), (19, INFINITY)]), ((0, 16), (1, 19))),
        Delegate(5, 1, 1, 3, IntervalSet.empty(), ()),
        Aggregate(0, 0, 0, (0, 1), 1, 7),
        Aggregate(3, 2, 1, (), None, INFINITY),
        StepStart(9, 1, 1, (3, 4)),
        VerdictMessage(Verdict.BOTTOM, 10 * U),
    ])
    def test_decode_inverts_encode(self, msg):
        assert decode_message(encode_message(msg)) == msg

    def test_frame(self):
        assert encode_message(StepStart(9, 1, 1, (3,))) == "9:S 9 1 1 3"
        assert encode_message(VerdictMessage(Verdict.TOP, 9)) == "7:V TOP 9"

    @pytest.mark.parametrize("data", ["", "3:S 9", "x:abc", "5:Q 1 2", "9:S 9 1 1 3 4"])
    def test_malformed_frames(self, data):
        with pytest.raises(ValueError):
            decode_message(data)


class TestEnablingTime:
    def test_enabled_once_everyone_reported_up_to_the_minimum(self):
        view = TransitionView(0, IntervalSet([(16 * U, 18 * U), (19 * U, INFINITY)]),
                              {0: 16 * U, 1: 19 * U, 2: 20 * U, 3: 22 * U})
        assert enabling_time(view, 22 * U) == 16 * U

    def test_not_enabled_while_someone_lags_behind(self):
        view = TransitionView(0, IntervalSet([(8 * U, 9 * U)]), {0: 5 * U, 1: 8 * U})
        assert enabling_time(view, 9 * U) is None

    def test_not_enabled_in_the_future_or_when_empty(self):
        assert enabling_time(TransitionView(0, IntervalSet.span(5 * U), {0: 6 * U}), 4 * U) is None
        assert enabling_time(TransitionView(0, IntervalSet.empty(), {0: 6 * U}), 6 * U) is None


class TestLiteralHistory:
    def test_mismatches(self):
        history = LiteralHistory(False)
        history.record(5, True)
        history.record(9, False)
        history.record(16, True)
        assert history.mismatches(True, 0, 20) == IntervalSet([(0, 5), (9, 16)])
        assert history.mismatches(False, 6, 20) == IntervalSet([(6, 9), (16, 20)])
        assert history.value_at(9) is False and history.value_at(16) is True

    def test_changes_at_the_same_instant_keep_the_last_value(self):
        history = LiteralHistory(False)
        history.record(3, True)
        history.record(3, False)
        assert history.times == [0, 3]
        assert history.value_at(3) is False

    def test_out_of_order_records_are_rejected(self):
        history = LiteralHistory(False)
        history.record(5, True)
        with pytest.raises(ValueError):
            history.record(4, False)

    def test_prune_keeps_the_current_value(self):
        history = LiteralHistory(False)
        history.record(5, True)
        history.record(9, False)
        history.prune(7)
        assert history.value_at(7) is True
        assert history.mismatches(False, 7, 10) == IntervalSet([(7, 9)])


class TestProcessMonitor:
    def test_initial_coordinator_is_the_smallest_associated_process(self, leader_until):
        assert [initial_coordinator(tr) for tr in leader_until.transitions] == [0, 0, 1, 1, 0, 0]

    def test_views_cover_the_associated_transitions_only(self, leader_until):
        monitors = [ProcessMonitor(leader_until, proc, {}) for proc in range(3)]
        assert sorted(monitors[0].state.views) == [0, 1]
        assert sorted(monitors[1].state.views) == [0, 2]
        assert sorted(monitors[2].state.views) == [1, 2]
        assert monitors[0].state.views[0].t_lu == {0: -1, 1: -1}
        assert monitors[0].state.views[0].is_coordinator
        assert not monitors[1].state.views[0].is_coordinator

    def test_coordinator_delegates_when_its_literals_hold(self, leader_until):
        monitor = ProcessMonitor(leader_until, 0, {"a": False})
        assert monitor.start().messages == []
        outcome = monitor.on_local_state_change(2 * U, {"a": True})
        receivers = sorted(receiver for receiver, _ in outcome.messages)
        assert receivers == [1, 2]
        for receiver, msg in outcome.messages:
            assert isinstance(msg, Delegate)
            assert msg.gpsr == IntervalSet.span(2 * U)
            assert dict(msg.t_lu)[0] == 2 * U

    def test_stale_messages_are_dropped(self, leader_until):
        monitor = ProcessMonitor(leader_until, 1, {})
        monitor.on_receive_message(3 * U, StepStart(2 * U, 1, 1, (3,)))
        assert monitor.state.stamp == (2 * U, 1)
        outcome = monitor.on_receive_message(4 * U, Aggregate(0, 0, 0, (0,), 0, U))
        assert outcome.dropped

    def test_delegate_for_an_unknown_transition_is_a_violation(self, leader_until):
        monitor = ProcessMonitor(leader_until, 0, {})
        with pytest.raises(ProtocolViolation):
            monitor.on_receive_message(U, Delegate(0, 0, 0, 2, IntervalSet.span(0), ((1, 0), (2, 0))))

    def test_verdict_stops_the_monitor(self, leader_until):
        monitor = ProcessMonitor(leader_until, 2, {})
        monitor.on_receive_message(U, VerdictMessage(Verdict.TOP, U))
        assert monitor.finished
        assert monitor.on_local_state_change(2 * U, {"c": True}).messages == []

    def test_lone_coordinator_without_an_enabling_time_is_a_violation(self, monkeypatch):
        pa, _ = compile_property("<>a", parse_ap_table("a=0"))
        monitor = ProcessMonitor(pa, 0, {"a": False})
        monitor.start()
        monkeypatch.setattr("decmon.protocol.enabling_time", lambda view, now: None)
        with pytest.raises(ProtocolViolation, match="alone"):
            monitor.on_local_state_change(U, {"a": True})
