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
Deterministic discrete-event simulation of the monitored system.

Processes share a perfect global clock and are connected pairwise by reliable channels with a random delay per
message. Pending events live in a single queue ordered by (due time, sequence number); the sequence number is assigned
when the event is queued. All trace events are queued before the run starts, so at equal times local state changes
are handled before messages and wake-ups.

`oracle_evaluate` is the offline reference: it runs the protocol automaton directly over the global state of a trace.
"""

from __future__ import annotations

import heapq
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..automata import ProtocolAutomaton
from ..constants import COMPLETION_SLACK_FACTOR, DEFAULT_DELAY_HIGH, DEFAULT_DELAY_LOW
from ..intervals import Time, format_time
from ..ltl import Verdict
from ..protocol import (
    COUNTED_KINDS, Message, Outcome, ProcessMonitor, ProtocolViolation, encode_message
)
from .trace import Seed, Trace

logger = logging.getLogger(__name__)

DelaySampler = Callable[[int, int, Time], Time]
"""Maps (sender, receiver, send time) to the delay of one message in microticks"""


class UniformDelay:
    """
    Delays drawn uniformly from [low, high) microticks with a private generator.
    """

    def __init__(self, low: Time = DEFAULT_DELAY_LOW, high: Time = DEFAULT_DELAY_HIGH, seed: Seed = None):
        if low < 0 or high < low:
            raise ValueError("need 0 <= low <= high, got [{}, {})".format(low, high))
        self.low = low
        self.high = high
        self.rng = np.random.default_rng(seed)

    def __call__(self, sender: int, receiver: int, send_time: Time) -> Time:
        if self.high <= self.low:
            return self.low
        return int(self.rng.integers(self.low, self.high))

    @property
    def max_delay(self) -> Time:
        return max(self.high - 1, self.low)


class ScriptedDelay:
    """Fixed delays for given (sender, receiver, send time) triples, `default` for everything else."""

    def __init__(self, table: Mapping[Tuple[int, int, Time], Time], default: Time = 0):
        self.table = dict(table)
        self.default = default

    def __call__(self, sender: int, receiver: int, send_time: Time) -> Time:
        return self.table.get((sender, receiver, send_time), self.default)

    @property
    def max_delay(self) -> Time:
        return max(list(self.table.values()) + [self.default])


@dataclass(frozen=True)
class LocalChange:
    process: int
    changes: Tuple[Tuple[str, bool], ...]


@dataclass(frozen=True)
class Deliver:
    sender: int
    receiver: int
    message: Message
    sent_at: Time


@dataclass(frozen=True)
class Wake:
    process: int


@dataclass(frozen=True, order=True)
class SimEvent:
    due: Time
    seq: int
    kind: Union[LocalChange, Deliver, Wake] = field(compare=False)


class LocationChange(NamedTuple):
    time: Time
    source: int
    target: int
    tr_id: int


@dataclass
class RunResult:
    """
    Outcome of one monitored run.

    `location_changes` holds the first announcement of every step. `announced_at` is the simulated time at which the
    verdict was emitted, `events` the number of trace events.
    """
    verdict: Verdict
    verdict_time: Optional[Time] = None
    location_changes: List[LocationChange] = field(default_factory=list)
    message_counts: Dict[str, int] = field(default_factory=lambda: {kind: 0 for kind in COUNTED_KINDS})
    total_messages: int = 0
    announced_at: Optional[Time] = None
    events: int = 0

    def changes(self) -> List[Tuple[Time, int, int]]:
        """Location changes without transition ids, which may differ between runs when several are enabled at once."""
        return [(c.time, c.source, c.target) for c in self.location_changes]

    def to_text(self, automaton: Optional[ProtocolAutomaton] = None) -> str:
        def name(loc: int) -> str:
            return automaton.location_name(loc) if automaton is not None else "q" + str(loc)

        lines = ["verdict: " + self.verdict.value]
        if self.verdict_time is not None:
            lines[0] += " at " + format_time(self.verdict_time)
        if self.announced_at is not None:
            lines[0] += " (announced at {})".format(format_time(self.announced_at))
        for change in self.location_changes:
            lines.append("  {} {} -> {} (Tr{})".format(
                format_time(change.time), name(change.source), name(change.target), change.tr_id
            ))
        counts = " ".join("{}={}".format(kind, count) for kind, count in self.message_counts.items())
        lines.append("messages: {} total={}".format(counts, self.total_messages))
        lines.append("trace events: {}".format(self.events))
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.to_text()


class EventLog:
    """
    Structured record of a run, written as JSON lines with sorted keys. Times are printed in units. Record kinds are
    change, wake, receive, drop, send, announce and verdict.
    """

    def __init__(self) -> None:
        self.records: List[Dict[str, object]] = []

    def record(self, kind: str, time: Time, **fields: object) -> None:
        entry: Dict[str, object] = {"event": kind, "time": format_time(time)}
        entry.update(fields)
        self.records.append(entry)

    def __len__(self) -> int:
        return len(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n" for entry in self.records)

    def write(self, path: Union[str, os.PathLike[str]]) -> None:
        with open(path, "w", encoding="utf-8") as file:
            file.write(self.to_jsonl())


def _check_trace(pa: ProtocolAutomaton, trace: Trace) -> None:
    names = set(trace.initial)
    for ap in pa.propositions:
        if ap.name not in names:
            raise ValueError("trace has no proposition '" + ap.name + "'")
        if trace.owner(ap.name) != ap.owner:
            raise ValueError("proposition '{}' is owned by p{} in the automaton but by p{} in the trace".format(
                ap.name, ap.owner, trace.owner(ap.name)
            ))


def sampler_max_delay(sampler: DelaySampler) -> Time:
    """The largest delay `sampler` can draw; samplers that do not say are assumed to follow the default law."""
    return int(getattr(sampler, "max_delay", DEFAULT_DELAY_HIGH))


def completion_deadline(horizon: Time, num_processes: int, max_delay: Time, steps: int = 1) -> Time:
    """
    Simulated time after which a run is given up. A step needs at most a few hops per process to settle, and a run
    that lags behind the trace may still have `steps` steps to work through after the horizon.
    """
    per_step = COMPLETION_SLACK_FACTOR * num_processes * max(max_delay, DEFAULT_DELAY_HIGH)
    return horizon + max(steps, 1) * per_step


def run_simulation(
        pa: ProtocolAutomaton,
        trace: Trace,
        delay_sampler: Optional[DelaySampler] = None,
        seed: Seed = None,
        event_log: Optional[EventLog] = None
) -> RunResult:
    """
    Run the decentralized monitors of all processes over `trace`.

    :param pa: Protocol automaton
    :param trace: Local state changes
    :param delay_sampler: Message delays; defaults to `UniformDelay` seeded with `seed`
    :param seed: Seed of the default delay sampler
    :param event_log: If given, every change, send, receive, drop and announcement is recorded here
    :return: The first verdict, or ? if the run went quiet (or hit the completion deadline) without one
    :raises ProtocolViolation: with `event_log` attached
    """
    _check_trace(pa, trace)
    sampler = delay_sampler if delay_sampler is not None else UniformDelay(seed=seed)
    num_processes = max(pa.num_processes, trace.num_processes)
    result = RunResult(Verdict.UNKNOWN, events=trace.num_events)

    if pa.is_terminal(pa.initial):
        result.verdict = pa.labels[pa.initial]
        result.verdict_time = 0
        result.announced_at = 0
        return result

    queue: List[SimEvent] = []
    seq = 0

    def push(due: Time, kind: Union[LocalChange, Deliver, Wake]) -> None:
        nonlocal seq
        heapq.heappush(queue, SimEvent(due, seq, kind))
        seq += 1

    for t, process, changes in trace.local_changes():
        if process < pa.num_processes:
            push(t, LocalChange(process, tuple(sorted(changes.items()))))

    monitors = [
        ProcessMonitor(pa, proc, {name: trace.initial[name] for name in pa.owned_propositions(proc)})
        for proc in range(pa.num_processes)
    ]
    pending_wakeups = set()
    last_step = 0
    steps = len({event.time for event in trace.events}) + 1
    deadline = completion_deadline(trace.horizon, num_processes, sampler_max_delay(sampler), steps)

    def handle(now: Time, process: int, outcome: Outcome) -> bool:
        nonlocal last_step
        for ann in outcome.announcements:
            if ann.step > last_step:
                last_step = ann.step
                result.location_changes.append(LocationChange(ann.time, ann.source, ann.target, ann.tr_id))
            if event_log is not None:
                event_log.record("announce", now, process=process, step=ann.step, tr=ann.tr_id,
                                 source=pa.location_name(ann.source), target=pa.location_name(ann.target),
                                 at=format_time(ann.time))
            if ann.verdict.is_terminal:
                result.verdict = ann.verdict
                result.verdict_time = ann.time
                result.announced_at = now
                if event_log is not None:
                    event_log.record("verdict", now, process=process, verdict=ann.verdict.value,
                                     at=format_time(ann.time))
                return True

        for receiver, msg in outcome.messages:
            if msg.kind in COUNTED_KINDS:
                result.message_counts[msg.kind] += 1
                result.total_messages += 1
            delay = sampler(process, receiver, now)
            if event_log is not None:
                event_log.record("send", now, sender=process, receiver=receiver, message=encode_message(msg),
                                 delay=format_time(delay))
            push(now + delay, Deliver(process, receiver, msg, now))

        if outcome.wakeup is not None and (process, outcome.wakeup) not in pending_wakeups:
            pending_wakeups.add((process, outcome.wakeup))
            push(outcome.wakeup, Wake(process))
        return False

    try:
        for process, monitor in enumerate(monitors):
            if handle(0, process, monitor.start()):
                return result

        while queue:
            event = heapq.heappop(queue)
            now = event.due
            if now > deadline:
                logger.warning("run stopped at the completion deadline %s with %d events pending",
                               format_time(deadline), len(queue) + 1)
                break

            kind = event.kind
            if isinstance(kind, LocalChange):
                if event_log is not None:
                    event_log.record("change", now, process=kind.process,
                                     changes={name: value for name, value in kind.changes})
                done = handle(now, kind.process, monitors[kind.process].on_local_state_change(now, dict(kind.changes)))
            elif isinstance(kind, Deliver):
                outcome = monitors[kind.receiver].on_receive_message(now, kind.message)
                if event_log is not None:
                    event_log.record("drop" if outcome.dropped else "receive", now, sender=kind.sender,
                                     receiver=kind.receiver, message=encode_message(kind.message))
                done = handle(now, kind.receiver, outcome)
            else:
                pending_wakeups.discard((kind.process, now))
                if event_log is not None:
                    event_log.record("wake", now, process=kind.process)
                done = handle(now, kind.process, monitors[kind.process].wake_up(now))
            if done:
                break
    except ProtocolViolation as err:
        err.event_log = event_log
        raise

    return result


def oracle_evaluate(pa: ProtocolAutomaton, trace: Trace) -> RunResult:
    """
    Ground truth for a trace: walk the protocol automaton over the global state. At each location the next change is
    the earliest instant at which an outgoing conjunct holds, the lowest transition id winning ties.
    """
    _check_trace(pa, trace)
    result = RunResult(Verdict.UNKNOWN, events=trace.num_events)
    if pa.is_terminal(pa.initial):
        result.verdict = pa.labels[pa.initial]
        result.verdict_time = 0
        return result

    times, letters = trace.segments(pa.monitor.propositions)
    segs, trs, final, overflow = pa.walk(letters)
    if overflow:
        raise ProtocolViolation("automaton keeps changing location within one global state")

    location = pa.initial
    for seg, tr in zip(segs, trs):
        target = pa.transitions[int(tr)].target
        result.location_changes.append(LocationChange(int(times[seg]), location, target, int(tr)))
        location = target

    if pa.is_terminal(int(final)):
        result.verdict = pa.labels[int(final)]
        result.verdict_time = result.location_changes[-1].time
    return result
