# Copyright 2024 The decmon developers
#
# This file is part of decmon.
#
# decmon is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# decmon is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with decmon. If not, see <https://www.gnu.org/licenses/>.

"""
The per-process decentralized monitor.

Every process runs one **ProcessMonitor**. It only sees the propositions it owns and learns about the others from
messages:

- **Delegate** hands the coordinator role of one transition to another associated process, together with the global
  potential satisfaction range (gpsr) and the last update times (t_lu) known so far.
- **Aggregate** spreads the set of checked transitions (TrC) and the earliest enabled transition found so far.
- **StepStart** tells the initial coordinators of the next location that a new step has begun.
- **Verdict** ends the run.

Every message except Verdict is stamped with the step it belongs to: the time of the last location change (t_llc),
the number of location changes so far and the current location. Stamps are compared as (t_llc, step); messages of
older steps are dropped, messages of newer steps make the receiver catch up first.

Handlers mutate the monitor's own `MonitorState` and return an **Outcome** with the messages to send. A monitor is
only ever driven by one thread of control.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import ClassVar, Dict, List, Mapping, Optional, Set, Tuple, Union

from .automata import ProtocolAutomaton, ProtocolTransition
from .constants import INFINITY
from .intervals import IntervalSet, Time
from .ltl import Verdict

logger = logging.getLogger(__name__)


class ProtocolViolation(RuntimeError):
    """
    A situation the protocol can never reach when implemented correctly. `event_log` is filled in by the simulator.
    """

    def __init__(self, message: str, event_log: Optional[object] = None):
        super().__init__(message)
        self.event_log = event_log


# === MESSAGES =========================================================================================================

@dataclass(frozen=True)
class Delegate:
    kind: ClassVar[str] = "Delegate"
    t_llc: Time
    step: int
    location: int
    tr_id: int
    gpsr: IntervalSet
    t_lu: Tuple[Tuple[int, Time], ...]


@dataclass(frozen=True)
class Aggregate:
    kind: ClassVar[str] = "Aggregate"
    t_llc: Time
    step: int
    location: int
    trc: Tuple[int, ...]
    tr_e: Optional[int]
    t_tr_e: Time


@dataclass(frozen=True)
class StepStart:
    kind: ClassVar[str] = "StepStart"
    t_llc: Time
    step: int
    location: int
    coordinated_trs: Tuple[int, ...]


@dataclass(frozen=True)
class VerdictMessage:
    kind: ClassVar[str] = "Verdict"
    verdict: Verdict
    at: Time


Message = Union[Delegate, Aggregate, StepStart, VerdictMessage]

COUNTED_KINDS = ("Delegate", "Aggregate", "StepStart")
"""Message kinds that are charged to the decentralized algorithm"""


def encode_message(msg: Message) -> str:
    """
    Serialize a message as `<length>:<body>`. The body lists the fields in declaration order separated by single
    spaces; times are integer microticks, "inf" stands for the unbounded time and "-" for an empty value.
    """
    if isinstance(msg, Delegate):
        gpsr = ",".join("{}-{}".format(lo, _enc_time(hi)) for lo, hi in msg.gpsr) or "-"
        t_lu = ",".join("{}={}".format(proc, t) for proc, t in msg.t_lu) or "-"
        body = "D {} {} {} {} {} {}".format(msg.t_llc, msg.step, msg.location, msg.tr_id, gpsr, t_lu)
    elif isinstance(msg, Aggregate):
        trc = ",".join(str(tr) for tr in msg.trc) or "-"
        tr_e = "-" if msg.tr_e is None else str(msg.tr_e)
        body = "A {} {} {} {} {} {}".format(msg.t_llc, msg.step, msg.location, trc, tr_e, _enc_time(msg.t_tr_e))
    elif isinstance(msg, StepStart):
        trs = ",".join(str(tr) for tr in msg.coordinated_trs) or "-"
        body = "S {} {} {} {}".format(msg.t_llc, msg.step, msg.location, trs)
    else:
        body = "V {} {}".format(msg.verdict.name, msg.at)
    return "{}:{}".format(len(body), body)


def decode_message(data: str) -> Message:
    """Inverse of `encode_message`. Raises ValueError on malformed input."""
    length, sep, body = data.partition(":")
    if not sep or not length.isdigit() or int(length) != len(body):
        raise ValueError("bad message frame: " + repr(data))
    fields = body.split(" ")
    tag = fields[0]

    if tag == "D" and len(fields) == 7:
        gpsr = IntervalSet(
            (int(lo), _dec_time(hi)) for lo, hi in (item.split("-") for item in _items(fields[5]))
        )
        t_lu = tuple((int(proc), int(t)) for proc, t in (item.split("=") for item in _items(fields[6])))
        return Delegate(int(fields[1]), int(fields[2]), int(fields[3]), int(fields[4]), gpsr, t_lu)
    if tag == "A" and len(fields) == 7:
        tr_e = None if fields[5] == "-" else int(fields[5])
        trc = tuple(int(tr) for tr in _items(fields[4]))
        return Aggregate(int(fields[1]), int(fields[2]), int(fields[3]), trc, tr_e, _dec_time(fields[6]))
    if tag == "S" and len(fields) == 5:
        trs = tuple(int(tr) for tr in _items(fields[4]))
        return StepStart(int(fields[1]), int(fields[2]), int(fields[3]), trs)
    if tag == "V" and len(fields) == 3:
        return VerdictMessage(Verdict[fields[1]], int(fields[2]))
    raise ValueError("bad message body: " + repr(body))


def _enc_time(t: Time) -> str:
    return "inf" if t >= INFINITY else str(t)


def _dec_time(text: str) -> Time:
    return INFINITY if text == "inf" else int(text)


def _items(text: str) -> List[str]:
    return [] if text == "-" else text.split(",")


# === STATE ============================================================================================================

@dataclass
class TransitionView:
    """One process's knowledge about one outgoing transition of the current location."""
    tr_id: int
    gpsr: IntervalSet
    t_lu: Dict[int, Time]
    is_coordinator: bool = False


class LiteralHistory:
    """
    The timed step function of one owned proposition: `values[k]` holds on [times[k], times[k + 1]).
    """

    def __init__(self, initial: bool):
        self.times: List[Time] = [0]
        self.values: List[bool] = [initial]

    def record(self, t: Time, value: bool) -> None:
        if t < self.times[-1]:
            raise ValueError("local state changes must be recorded in time order")
        if t == self.times[-1]:
            self.values[-1] = value
        elif value != self.values[-1]:
            self.times.append(t)
            self.values.append(value)

    def value_at(self, t: Time) -> bool:
        return self.values[max(bisect_right(self.times, t) - 1, 0)]

    def mismatches(self, polarity: bool, lo: Time, hi: Time) -> IntervalSet:
        """Instants of [lo, hi) at which the proposition differs from `polarity`."""
        result = []
        idx = max(bisect_right(self.times, lo) - 1, 0)
        while idx < len(self.times) and self.times[idx] < hi:
            end = self.times[idx + 1] if idx + 1 < len(self.times) else INFINITY
            if self.values[idx] != polarity:
                result.append((max(self.times[idx], lo), min(end, hi)))
            idx += 1
        return IntervalSet(result)

    def prune(self, before: Time) -> None:
        """Forget everything before `before` except the value holding at that instant."""
        idx = bisect_right(self.times, before) - 1
        if idx > 0:
            del self.times[:idx]
            del self.values[:idx]


@dataclass
class MonitorState:
    process: int
    location: int
    t_llc: Time
    step: int
    trc: Set[int] = field(default_factory=set)
    tr_e: Optional[int] = None
    t_tr_e: Time = INFINITY
    views: Dict[int, TransitionView] = field(default_factory=dict)
    started: bool = False
    """True once the coordinators of this step are known (StepStart processed or step initiated here)"""

    @property
    def stamp(self) -> Tuple[Time, int]:
        return self.t_llc, self.step


@dataclass(frozen=True)
class Announcement:
    """A location change decided by a process. `verdict` is the label of the new location."""
    time: Time
    step: int
    source: int
    target: int
    tr_id: int
    verdict: Verdict


@dataclass
class Outcome:
    """What a handler wants the environment to do: send `messages` as (receiver, message) pairs, record
    `announcements` and call `wake_up` again at `wakeup`."""
    messages: List[Tuple[int, Message]] = field(default_factory=list)
    announcements: List[Announcement] = field(default_factory=list)
    wakeup: Optional[Time] = None
    dropped: bool = False

    def merge(self, other: Outcome) -> None:
        self.messages.extend(other.messages)
        self.announcements.extend(other.announcements)
        if other.wakeup is not None:
            self.wakeup = other.wakeup if self.wakeup is None else min(self.wakeup, other.wakeup)


# === RULES ============================================================================================================

def initial_coordinator(tr: ProtocolTransition) -> int:
    """The associated process with the smallest index coordinates a transition first."""
    if not tr.associated_processes:
        raise ValueError("Tr{} has a constant guard and no coordinator".format(tr.id))
    return min(tr.associated_processes)


def enabling_time(view: TransitionView, now: Time) -> Optional[Time]:
    """
    The enabling time of the viewed transition if it is already certain: the minimum of gpsr, provided it is not in
    the future and every associated process has reported up to at least that instant.
    """
    m = view.gpsr.min_point()
    if m is None or m > now:
        return None
    if all(t >= m for t in view.t_lu.values()):
        return m
    return None


def _earlier(t_a: Time, tr_a: int, t_b: Time, tr_b: Optional[int]) -> bool:
    return (t_a, tr_a) < (t_b, INFINITY if tr_b is None else tr_b)


class ProcessMonitor:
    """
    Decentralized monitor of process `process`.

    :param automaton: The shared protocol automaton
    :param process: Index of this process
    :param initial_valuation: Values of the owned propositions at time 0
    """

    def __init__(self, automaton: ProtocolAutomaton, process: int, initial_valuation: Mapping[str, bool]):
        self.automaton = automaton
        self.process = process
        self.finished = False
        self.history = {
            name: LiteralHistory(bool(initial_valuation.get(name, False)))
            for name in automaton.owned_propositions(process)
        }
        self.state = MonitorState(process, automaton.initial, 0, 0)
        self._reset(0, 0, automaton.initial)
        self._begin_step(initiator=(process == 0))

    # --- handlers -----------------------------------------------------------------------------------------------------

    def start(self) -> Outcome:
        """Evaluate the initial valuation at time 0."""
        return self.update_monitor_state(0, changed=bool(self.state.trc))

    def on_local_state_change(self, now: Time, changes: Mapping[str, bool]) -> Outcome:
        if self.finished:
            return Outcome()
        for name, value in changes.items():
            if name not in self.history:
                raise ValueError("process {} does not own proposition '{}'".format(self.process, name))
            self.history[name].record(now, value)
        return self.update_monitor_state(now)

    def wake_up(self, now: Time) -> Outcome:
        if self.finished:
            return Outcome()
        return self.update_monitor_state(now)

    def on_receive_message(self, now: Time, msg: Message) -> Outcome:
        if self.finished:
            return Outcome()
        state = self.state

        if isinstance(msg, VerdictMessage):
            self.finished = True
            return Outcome()

        stamp = (msg.t_llc, msg.step)
        if stamp < state.stamp:
            logger.debug("p%d drops stale %s of step %s", self.process, msg.kind, stamp)
            return Outcome(dropped=True)
        if stamp > state.stamp:
            logger.debug("p%d catches up to step %s at location %d", self.process, stamp, msg.location)
            self._reset(msg.t_llc, msg.step, msg.location)

        grown = False
        if isinstance(msg, Delegate):
            view = state.views.get(msg.tr_id)
            if view is None:
                raise ProtocolViolation("p{} received Delegate for Tr{}, which it is not associated with at {}".format(
                    self.process, msg.tr_id, self.automaton.location_name(state.location)
                ))
            view.gpsr = msg.gpsr
            view.t_lu = dict(msg.t_lu)
            view.is_coordinator = True
        elif isinstance(msg, Aggregate):
            before = len(state.trc)
            state.trc.update(msg.trc)
            grown = len(state.trc) > before
            if msg.tr_e is not None and _earlier(msg.t_tr_e, msg.tr_e, state.t_tr_e, state.tr_e):
                state.tr_e, state.t_tr_e = msg.tr_e, msg.t_tr_e
                grown = True
        elif isinstance(msg, StepStart):
            if state.started:
                return Outcome()
            for tr_id in msg.coordinated_trs:
                view = state.views.get(tr_id)
                if view is None:
                    raise ProtocolViolation("p{} asked to coordinate Tr{}, which it is not associated with".format(
                        self.process, tr_id
                    ))
                view.is_coordinator = True
            state.started = True

        return self.update_monitor_state(now, changed=grown)

    # --- core -------------------------------------------------------------------------------------------------------

    def update_monitor_state(self, now: Time, changed: bool = False) -> Outcome:
        outcome = Outcome()
        for _ in range(self.automaton.num_locations + 1):
            announced = self._update_once(now, changed, outcome)
            if not announced or self.finished:
                return outcome
            # a constant guard of the new location is already checked
            changed = bool(self.state.trc)
        raise ProtocolViolation("p{} changed location more than {} times at {}".format(
            self.process, self.automaton.num_locations, now
        ))

    def _update_once(self, now: Time, changed: bool, outcome: Outcome) -> bool:
        state = self.state
        me = self.process
        outgoing = self.automaton.outgoing[state.location]

        # remove the instants at which an own literal was false
        for tr_id, view in state.views.items():
            lo = max(state.t_llc, view.t_lu[me] + 1)
            if lo <= now:
                view.gpsr = view.gpsr - self._mismatches(self.automaton.transitions[tr_id], lo, now + 1)
            view.t_lu[me] = max(view.t_lu[me], now)

        # transitions whose enabling time is certain
        for tr_id, view in state.views.items():
            if tr_id in state.trc:
                continue
            m = enabling_time(view, now)
            if m is not None:
                state.trc.add(tr_id)
                if _earlier(m, tr_id, state.t_tr_e, state.tr_e):
                    state.tr_e, state.t_tr_e = tr_id, m
                changed = True

        # transitions that cannot be enabled before the earliest one found so far
        if state.tr_e is not None:
            for tr_id, view in state.views.items():
                if tr_id in state.trc:
                    continue
                if view.gpsr.restrict_before(state.t_tr_e).is_empty or \
                        all(t >= state.t_tr_e for t in view.t_lu.values()):
                    state.trc.add(tr_id)
                    changed = True

        # coordinators pass undecided transitions on
        for tr_id, view in state.views.items():
            if tr_id in state.trc or not view.is_coordinator:
                continue
            m = view.gpsr.min_point()
            if m is None:
                continue
            if m <= now:
                others = [(t, proc) for proc, t in view.t_lu.items() if proc != me]
                if not others:
                    raise ProtocolViolation(
                        "p{} coordinates Tr{} alone but could not fix its enabling time at {}".format(me, tr_id, now)
                    )
                _, receiver = min(others)
                outcome.messages.append((receiver, Delegate(
                    state.t_llc, state.step, state.location, tr_id, view.gpsr, tuple(sorted(view.t_lu.items()))
                )))
                view.is_coordinator = False
            elif self._literals_hold(self.automaton.transitions[tr_id], now):
                outcome.wakeup = m if outcome.wakeup is None else min(outcome.wakeup, m)

        if not changed:
            return False

        if all(tr.id in state.trc for tr in outgoing):
            self._announce(outcome)
            return True

        recipients: Set[int] = set()
        for tr in outgoing:
            if tr.id in state.trc:
                continue
            if me not in tr.associated_processes:
                recipients.update(tr.associated_processes)
            else:
                recipients.update(proc for proc, t in state.views[tr.id].t_lu.items() if t < state.t_tr_e)
        recipients.discard(me)
        if recipients:
            msg = Aggregate(
                state.t_llc, state.step, state.location, tuple(sorted(state.trc)), state.tr_e, state.t_tr_e
            )
            outcome.messages.extend((receiver, msg) for receiver in sorted(recipients))
        return False

    def _announce(self, outcome: Outcome) -> None:
        state = self.state
        if state.tr_e is None:
            raise ProtocolViolation("p{} checked all transitions without an enabled one".format(self.process))

        tr = self.automaton.transitions[state.tr_e]
        target = tr.target
        label = self.automaton.labels[target]
        t_new = state.t_tr_e
        step = state.step + 1
        outcome.announcements.append(Announcement(t_new, step, state.location, target, tr.id, label))
        logger.debug("p%d announces %s -> %s at %d via Tr%d", self.process,
                     self.automaton.location_name(state.location), self.automaton.location_name(target), t_new, tr.id)

        if label.is_terminal:
            msg = VerdictMessage(label, t_new)
            outcome.messages.extend(
                (proc, msg) for proc in range(self.automaton.num_processes) if proc != self.process
            )
            self.finished = True
            return

        coordinated: Dict[int, List[int]] = {}
        for next_tr in self.automaton.outgoing[target]:
            if next_tr.associated_processes:
                coordinated.setdefault(initial_coordinator(next_tr), []).append(next_tr.id)
        for proc in sorted(coordinated):
            if proc != self.process:
                outcome.messages.append((proc, StepStart(t_new, step, target, tuple(coordinated[proc]))))

        self._reset(t_new, step, target)
        self._begin_step(initiator=True)

    # --- helpers ------------------------------------------------------------------------------------------------------

    def _reset(self, t_llc: Time, step: int, location: int) -> None:
        state = self.state
        state.t_llc = t_llc
        state.step = step
        state.location = location
        state.trc = set()
        state.tr_e = None
        state.t_tr_e = INFINITY
        state.started = False
        state.views = {
            tr.id: TransitionView(tr.id, IntervalSet.span(t_llc), {proc: t_llc - 1 for proc in tr.associated_processes})
            for tr in self.automaton.outgoing[location]
            if self.process in tr.associated_processes
        }
        for history in self.history.values():
            history.prune(t_llc)

    def _begin_step(self, initiator: bool) -> None:
        # the initiator of a step knows its coordinators and checks constant guards itself
        state = self.state
        for tr in self.automaton.outgoing[state.location]:
            if tr.associated_processes:
                if initial_coordinator(tr) == self.process:
                    state.views[tr.id].is_coordinator = True
            elif initiator:
                state.trc.add(tr.id)
                if _earlier(state.t_llc, tr.id, state.t_tr_e, state.tr_e):
                    state.tr_e, state.t_tr_e = tr.id, state.t_llc
        state.started = True

    def _mismatches(self, tr: ProtocolTransition, lo: Time, hi: Time) -> IntervalSet:
        result = IntervalSet.empty()
        for name, polarity in tr.conjunct:
            if name in self.history:
                result = result | self.history[name].mismatches(polarity, lo, hi)
        return result

    def _literals_hold(self, tr: ProtocolTransition, t: Time) -> bool:
        return all(
            self.history[name].value_at(t) == polarity for name, polarity in tr.conjunct if name in self.history
        )
