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
Traces of local state changes, the random trace generator and the trace file format.

A trace file looks like this:

    # decmon trace
    horizon 100.000000
    prop a 0 false
    prop b 1 false
    2.100000 a true
    5.200000 b true

`prop` lines give the owner and the initial value of every proposition, all other lines are events
"time proposition value". Empty lines and lines starting with # are ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from ..constants import DEFAULT_HORIZON, EVENT_KINDS, INITIAL_VALUATIONS, MU_SCOPES
from ..intervals import Time, format_time, to_ticks
from ..ltl import AtomicProposition, owner_table

Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]


class TraceFormatError(ValueError):
    """Malformed trace file; `line` is the 1-based line number (0 if the problem is not tied to a line)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__("line {}: {}".format(line, message) if line else message)
        self.line = line


@dataclass(frozen=True)
class TraceEvent:
    time: Time
    name: str
    value: bool


@dataclass
class Trace:
    """
    Timed local state changes of all processes. The global state is a right-continuous step function: after an event
    at time t the new value holds on [t, next change).

    :param propositions: Ownership of all propositions
    :param initial: Value of every proposition at time 0
    :param events: Events sorted by time; events with equal times keep their order
    :param horizon: End of the observed period; all events lie in (0, horizon)
    """
    propositions: Tuple[AtomicProposition, ...]
    initial: Dict[str, bool]
    events: List[TraceEvent] = field(default_factory=list)
    horizon: Time = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        self.propositions = tuple(self.propositions)
        owners = owner_table(self.propositions)
        for name in owners:
            self.initial.setdefault(name, False)
        for event in self.events:
            if event.name not in owners:
                raise TraceFormatError("event for unknown proposition '" + event.name + "'")
            if not 0 < event.time < self.horizon:
                raise TraceFormatError("event time {} outside (0, {})".format(
                    format_time(event.time), format_time(self.horizon)
                ))
        self.events = sorted(self.events, key=lambda e: e.time)

    @property
    def num_events(self) -> int:
        return len(self.events)

    @property
    def num_processes(self) -> int:
        return max((ap.owner for ap in self.propositions), default=-1) + 1

    def owner(self, name: str) -> int:
        return owner_table(self.propositions)[name]

    def local_changes(self) -> Iterator[Tuple[Time, int, Dict[str, bool]]]:
        """Events grouped by (time, process) in time order; groups with equal times are ordered by process."""
        owners = owner_table(self.propositions)
        idx = 0
        while idx < len(self.events):
            t = self.events[idx].time
            groups: Dict[int, Dict[str, bool]] = {}
            while idx < len(self.events) and self.events[idx].time == t:
                event = self.events[idx]
                groups.setdefault(owners[event.name], {})[event.name] = event.value
                idx += 1
            for process in sorted(groups):
                yield t, process, groups[process]

    def segments(self, names: Sequence[str]) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """
        The global state as segments.

        :param names: Letter bit order
        :return: Start times and letters of all segments; the first segment starts at 0
        """
        bit_of = {name: bit for bit, name in enumerate(names)}
        letter = 0
        for name, value in self.initial.items():
            if value and name in bit_of:
                letter |= 1 << bit_of[name]

        times = [0]
        letters = [letter]
        for event in self.events:
            if event.name not in bit_of:
                continue
            bit = 1 << bit_of[event.name]
            letter = (letter | bit) if event.value else (letter & ~bit)
            if event.time == times[-1]:
                letters[-1] = letter
            else:
                times.append(event.time)
                letters.append(letter)
        return np.array(times, dtype=np.int64), np.array(letters, dtype=np.int64)


def generate_trace(
        aps: Sequence[AtomicProposition],
        mu: float,
        horizon: Time = DEFAULT_HORIZON,
        seed: Seed = None,
        mu_scope: str = "process",
        event_kind: str = "flip",
        initial: str = "false"
) -> Trace:
    """
    Random trace: every process changes state at the points of a homogeneous Poisson process over [0, horizon).

    :param aps: Ownership of all propositions
    :param mu: Expected number of change points per process, or of all processes together if `mu_scope` is "system"
    :param horizon: Trace length in microticks
    :param seed: Anything `numpy.random.default_rng` accepts
    :param mu_scope: "process" or "system"
    :param event_kind: "flip" negates one uniformly chosen proposition of the process; "resample" draws all of its
        propositions anew, and a change point that leaves them as they were produces no event
    :param initial: "false" starts every proposition false, "random" tosses a fair coin for each
    """
    if mu <= 0:
        raise ValueError("mu must be positive, got " + str(mu))
    if horizon <= 1:
        raise ValueError("horizon must be positive")
    if mu_scope not in MU_SCOPES:
        raise ValueError("mu_scope must be one of {}, got '{}'".format(", ".join(MU_SCOPES), mu_scope))
    if event_kind not in EVENT_KINDS:
        raise ValueError("event_kind must be one of {}, got '{}'".format(", ".join(EVENT_KINDS), event_kind))
    if initial not in INITIAL_VALUATIONS:
        raise ValueError("initial must be one of {}, got '{}'".format(", ".join(INITIAL_VALUATIONS), initial))

    rng = np.random.default_rng(seed)
    owned: Dict[int, List[str]] = {}
    for ap in aps:
        owned.setdefault(ap.owner, []).append(ap.name)

    start = {ap.name: False for ap in aps}
    if initial == "random":
        for ap in aps:
            start[ap.name] = bool(rng.integers(0, 2))
    rate = mu / len(owned) if mu_scope == "system" and owned else mu

    events = []
    for process in sorted(owned):
        names = owned[process]
        values = {name: start[name] for name in names}
        count = int(rng.poisson(rate))
        times = np.sort(rng.integers(1, horizon, size=count))
        if event_kind == "flip":
            choices = rng.integers(0, len(names), size=count)
            for t, choice in zip(times, choices):
                name = names[int(choice)]
                values[name] = not values[name]
                events.append(TraceEvent(int(t), name, values[name]))
        else:
            draws = rng.integers(0, 2, size=(count, len(names)))
            for t, row in zip(times, draws):
                for name, drawn in zip(names, row):
                    if bool(drawn) != values[name]:
                        values[name] = bool(drawn)
                        events.append(TraceEvent(int(t), name, values[name]))

    return Trace(tuple(aps), start, events, horizon)


def format_trace(trace: Trace) -> str:
    lines = ["# decmon trace", "horizon " + format_time(trace.horizon)]
    for ap in trace.propositions:
        lines.append("prop {} {} {}".format(ap.name, ap.owner, "true" if trace.initial[ap.name] else "false"))
    for event in trace.events:
        lines.append("{} {} {}".format(format_time(event.time), event.name, "true" if event.value else "false"))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    """
    :raises TraceFormatError: if a line cannot be parsed
    """
    horizon: Optional[Time] = None
    aps: List[AtomicProposition] = []
    initial: Dict[str, bool] = {}
    events: List[TraceEvent] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            if fields[0] == "horizon" and len(fields) == 2:
                horizon = to_ticks(fields[1])
            elif fields[0] == "prop" and len(fields) == 4:
                aps.append(AtomicProposition(fields[1], int(fields[2])))
                initial[fields[1]] = _parse_bool(fields[3])
            elif len(fields) == 3:
                events.append(TraceEvent(to_ticks(fields[0]), fields[1], _parse_bool(fields[2])))
            else:
                raise ValueError("expected 'time proposition value'")
        except ValueError as err:
            raise TraceFormatError(str(err), number) from None

    if horizon is None:
        raise TraceFormatError("missing horizon line")
    try:
        return Trace(tuple(aps), initial, events, horizon)
    except TraceFormatError:
        raise
    except ValueError as err:
        raise TraceFormatError(str(err)) from None


def read_trace(path: Union[str, os.PathLike[str]]) -> Trace:
    with open(path, "r", encoding="utf-8") as file:
        return parse_trace(file.read())


def write_trace(trace: Trace, path: Union[str, os.PathLike[str]]) -> None:
    with open(path, "w", encoding="utf-8") as file:
        file.write(format_trace(trace))


def trace_from_valuations(
        aps: Sequence[AtomicProposition],
        changes: Sequence[Tuple[Union[str, float, Time], Mapping[str, bool]]],
        horizon: Time = DEFAULT_HORIZON
) -> Trace:
    """
    Build a trace from a list of global states, e.g. `[("2.1", {"a": True}), ("5.2", {"a": True, "b": True})]`.
    Propositions missing from a state are false. Integer times are microticks, strings and floats are units.
    """
    current = {ap.name: False for ap in aps}
    events = []
    for when, valuation in changes:
        t = when if isinstance(when, int) else to_ticks(str(when))
        for ap in aps:
            value = bool(valuation.get(ap.name, False))
            if value != current[ap.name]:
                events.append(TraceEvent(t, ap.name, value))
                current[ap.name] = value
    return Trace(tuple(aps), {ap.name: False for ap in aps}, events, horizon)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "t"):
        return True
    if lowered in ("false", "0", "f"):
        return False
    raise ValueError("not a boolean: " + text)
