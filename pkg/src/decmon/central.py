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
The centralized baseline: every process sends each of its local state changes, stamped with the global time, to a
central monitor hosted next to process 0. The central monitor reorders the updates by timestamp and runs the monitor
automaton over the reconstructed global state.
"""

from __future__ import annotations

import heapq
import logging
from typing import List, Mapping, Optional, Tuple

import numpy as np

from .automata import ProtocolAutomaton
from .intervals import Time, format_time
from .ltl import Verdict
from .simulation import (
    DelaySampler, EventLog, LocationChange, RunResult, UniformDelay, _check_trace, sampler_max_delay
)
from .simulation.trace import Seed, Trace

logger = logging.getLogger(__name__)

CENTRAL_PROCESS = 0


class CentralMonitor:
    """
    Online monitor fed with timestamped updates that may arrive out of order. An update stamped t is certain to have
    arrived once the clock is past t + max_delay, so the monitor only advances over that stable prefix until `flush`
    is called.
    """

    def __init__(self, pa: ProtocolAutomaton, initial: Mapping[str, bool], max_delay: Time):
        self.pa = pa
        self.max_delay = max_delay
        self.bit_of = {name: bit for bit, name in enumerate(pa.monitor.propositions)}
        self.letter = 0
        for name, value in initial.items():
            if value and name in self.bit_of:
                self.letter |= 1 << self.bit_of[name]
        self.location = pa.initial
        self.buffer: List[Tuple[Time, int, str, bool]] = []
        self.received = 0
        self.verdict = Verdict.UNKNOWN
        self.verdict_time: Optional[Time] = None
        self.location_changes: List[LocationChange] = []
        self._advance(0)

    @property
    def decided(self) -> bool:
        return self.verdict.is_terminal

    def receive(self, now: Time, timestamp: Time, name: str, value: bool) -> bool:
        """Buffer one update and advance over the stable prefix. :return: True once a verdict is reached"""
        heapq.heappush(self.buffer, (timestamp, self.received, name, value))
        self.received += 1
        return self._settle(now - self.max_delay)

    def flush(self) -> bool:
        """Process everything buffered; called when no more updates can arrive."""
        return self._settle(None)

    def _settle(self, limit: Optional[Time]) -> bool:
        while self.buffer and not self.decided and (limit is None or self.buffer[0][0] < limit):
            t = self.buffer[0][0]
            while self.buffer and self.buffer[0][0] == t:
                _, _, name, value = heapq.heappop(self.buffer)
                if name in self.bit_of:
                    bit = 1 << self.bit_of[name]
                    self.letter = (self.letter | bit) if value else (self.letter & ~bit)
            self._advance(t)
        return self.decided

    def _advance(self, t: Time) -> None:
        if self.decided:
            return
        if self.pa.is_terminal(self.location):
            self.verdict = self.pa.labels[self.location]
            self.verdict_time = t
            return
        _, trs, final, overflow = self.pa.walk(np.array([self.letter], dtype=np.int64), start=self.location)
        if overflow:
            raise RuntimeError("automaton keeps changing location within one global state")
        for tr in trs:
            target = self.pa.transitions[int(tr)].target
            self.location_changes.append(LocationChange(t, self.location, target, int(tr)))
            self.location = target
        if self.pa.is_terminal(int(final)):
            self.verdict = self.pa.labels[int(final)]
            self.verdict_time = t


def run_centralized(
        pa: ProtocolAutomaton,
        trace: Trace,
        delay_sampler: Optional[DelaySampler] = None,
        seed: Seed = None,
        event_log: Optional[EventLog] = None
) -> RunResult:
    """
    Run the centralized baseline. Every trace event up to the verdict instant is one message to the central monitor,
    delivered with the same delay law as the decentralized run; announcing the verdict is free. Once the verdict is
    known the processes stop reporting, so changes after it are not charged. Undecided runs are charged for every
    event of the trace.
    """
    _check_trace(pa, trace)
    sampler = delay_sampler if delay_sampler is not None else UniformDelay(seed=seed)
    max_delay = sampler_max_delay(sampler)

    monitor = CentralMonitor(pa, trace.initial, max_delay)
    result = RunResult(Verdict.UNKNOWN, events=trace.num_events)

    queue: List[Tuple[Time, int, Time, str, bool]] = []
    sends: List[Tuple[Time, int, str, bool, Time]] = []
    for seq, event in enumerate(trace.events):
        sender = trace.owner(event.name)
        delay = sampler(sender, CENTRAL_PROCESS, event.time)
        heapq.heappush(queue, (event.time + delay, seq, event.time, event.name, event.value))
        sends.append((event.time, sender, event.name, event.value, delay))

    now = 0
    decided = monitor.decided
    while queue and not decided:
        now, _, timestamp, name, value = heapq.heappop(queue)
        decided = monitor.receive(now, timestamp, name, value)
    if not decided:
        decided = monitor.flush()

    if decided and monitor.verdict_time is not None:
        charged = [send for send in sends if send[0] <= monitor.verdict_time]
    else:
        charged = sends
    result.message_counts = {"Update": len(charged)}
    result.total_messages = len(charged)
    if event_log is not None:
        for time, sender, name, value, delay in charged:
            event_log.record("send", time, sender=sender, receiver=CENTRAL_PROCESS,
                             message="{} {} {}".format(format_time(time), name, value), delay=format_time(delay))

    result.verdict = monitor.verdict
    result.verdict_time = monitor.verdict_time
    result.location_changes = list(monitor.location_changes)
    if decided:
        result.announced_at = now
        if event_log is not None:
            event_log.record("verdict", now, process=CENTRAL_PROCESS, verdict=monitor.verdict.value,
                             at=format_time(monitor.verdict_time or 0))
    logger.debug("centralized run: %s after %d of %d updates", monitor.verdict.value, len(charged), len(sends))
    return result
