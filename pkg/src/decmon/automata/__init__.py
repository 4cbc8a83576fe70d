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
Three-valued monitor automata and their split form used by the decentralized protocol.

A **MonitorAutomaton** is a minimal, deterministic and total automaton over the letters 2^AP. Letter `l` assigns
`True` to proposition j iff bit j of `l` is set. Locations are numbered canonically: the initial location is 0,
?-locations come first in breadth-first order, followed by the ⊤ and the ⊥ location (each present only if reachable).

A **ProtocolAutomaton** is the same automaton with self-loops removed and every remaining guard split into the
conjuncts of a minimal sum of products. Each conjunct becomes a **ProtocolTransition** with its own id.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..constants import MAX_PROPOSITIONS
from ..ltl import AtomicProposition, Formula, UnknownPropositionError, Verdict, owner_table, parse_formula
from ..ltl import propositions as formula_propositions
from ._implicants import minimal_cover
from ._numba_functions import first_enabled_njit, walk_njit
from ._tableau import build_gba, nonempty_states, to_nnf

logger = logging.getLogger(__name__)

JSON_FORMAT = "decmon-automaton"


@dataclass(eq=False)
class Transition:
    """An edge of a MonitorAutomaton; `guard` is a boolean vector over all letters."""
    source: int
    guard: npt.NDArray[np.bool_]
    target: int


class MonitorAutomaton:
    """
    Deterministic three-valued monitor. `delta[location, letter]` is the successor location. Terminal locations
    (⊤ and ⊥) only loop on themselves.
    """
    propositions: Tuple[str, ...]
    labels: Tuple[Verdict, ...]
    delta: npt.NDArray[np.int64]
    formula: Optional[Formula]
    initial: int = 0

    def __init__(
            self,
            propositions: Sequence[str],
            labels: Sequence[Verdict],
            delta: npt.NDArray[np.int64],
            formula: Optional[Formula] = None
    ):
        self.propositions = tuple(propositions)
        self.labels = tuple(labels)
        self.delta = np.asarray(delta, dtype=np.int64)
        self.formula = formula

        if self.delta.shape != (len(self.labels), 1 << len(self.propositions)):
            raise ValueError("transition table has shape {}, expected ({}, {})".format(
                self.delta.shape, len(self.labels), 1 << len(self.propositions)
            ))

    @property
    def num_locations(self) -> int:
        return len(self.labels)

    @property
    def num_letters(self) -> int:
        return 1 << len(self.propositions)

    @property
    def terminal(self) -> npt.NDArray[np.bool_]:
        return np.array([label.is_terminal for label in self.labels], dtype=np.bool_)

    def step(self, location: int, letter: int) -> int:
        return int(self.delta[location, letter])

    def run(self, letters: Iterable[int]) -> int:
        """:return: The location reached from the initial location after reading `letters`"""
        location = self.initial
        for letter in letters:
            location = int(self.delta[location, letter])
        return location

    def verdict(self, letters: Iterable[int]) -> Verdict:
        return self.labels[self.run(letters)]

    def transitions(self) -> List[Transition]:
        """All edges including self-loops, one per (source, target) pair with a nonempty guard."""
        result = []
        for source in range(self.num_locations):
            for target in range(self.num_locations):
                guard = self.delta[source] == target
                if guard.any():
                    result.append(Transition(source, guard, target))
        return result

    def location_name(self, location: int) -> str:
        label = self.labels[location]
        return "q" + (label.value if label.is_terminal else str(location))

    def letter(self, valuation: Mapping[str, bool]) -> int:
        """Encode a valuation; propositions missing from `valuation` are False."""
        letter = 0
        for bit, name in enumerate(self.propositions):
            if valuation.get(name, False):
                letter |= 1 << bit
        return letter

    def valuation(self, letter: int) -> Dict[str, bool]:
        return {name: bool((letter >> bit) & 1) for bit, name in enumerate(self.propositions)}


@dataclass(frozen=True)
class Monitorability:
    """
    Result of `check_monitorable`.

    :param monitorable: Some terminal location is reachable from the initial location
    :param dead_locations: Reachable ?-locations from which no terminal location is reachable
    :param reachable_verdicts: Terminal verdicts that some finite trace can produce
    """
    monitorable: bool
    dead_locations: Tuple[int, ...]
    reachable_verdicts: FrozenSet[Verdict]

    @property
    def classification(self) -> str:
        return "monitorable" if self.monitorable else "non_monitorable"


def build_monitor(f: Formula, propositions: Optional[Sequence[str]] = None) -> MonitorAutomaton:
    """
    Build the minimal three-valued monitor of `f`: tableau automata for f and !f, pruning to states with an accepting
    continuation, subset construction of both over letter classes, product labelling, minimization and canonical
    numbering.

    :param f: Formula; sugar is accepted
    :param propositions: Letter bit order. Defaults to the order of first appearance in `f`. May list propositions
    that do not occur in `f`.
    :raises UnknownPropositionError: if `f` uses a proposition not in `propositions`
    """
    names = list(propositions) if propositions is not None else formula_propositions(f)
    if len(set(names)) != len(names):
        raise ValueError("duplicate proposition names")
    for name in formula_propositions(f):
        if name not in names:
            raise UnknownPropositionError(name)
    if len(names) > MAX_PROPOSITIONS:
        raise ValueError("at most {} propositions are supported, got {}".format(MAX_PROPOSITIONS, len(names)))

    bit_of = {name: bit for bit, name in enumerate(names)}
    num_letters = 1 << len(names)

    gbas = []
    enabled = []
    for negated in (False, True):
        gba = build_gba(to_nnf(f, negated), bit_of)
        live = nonempty_states(gba)
        gbas.append(gba)
        enabled.append(gba.enabled(len(names)) & live[:, None])
        logger.debug("tableau for %s: %d states, %d live", "!f" if negated else "f", gba.num_states, int(live.sum()))

    class_of, representatives = _letter_classes(np.vstack(enabled), num_letters)

    def initial_subset(idx: int) -> FrozenSet[int]:
        live_initial = any(enabled[idx][state].any() for state in gbas[idx].initial)
        return frozenset({-1}) if live_initial else frozenset()

    def successor_subset(idx: int, subset: FrozenSet[int], letter: int) -> FrozenSet[int]:
        gba = gbas[idx]
        result = set()
        for state in subset:
            for succ in (gba.initial if state == -1 else gba.successors[state]):
                if enabled[idx][succ, letter]:
                    result.add(succ)
        return frozenset(result)

    # product of both subset constructions, explored breadth-first
    start = (initial_subset(0), initial_subset(1))
    index = {start: 0}
    states = [start]
    labels: List[Verdict] = []
    rows: List[List[int]] = []
    queue = deque([start])
    while queue:
        state = queue.popleft()
        pos, neg = state
        label = Verdict.TOP if not neg else (Verdict.BOTTOM if not pos else Verdict.UNKNOWN)
        labels.append(label)
        if label.is_terminal:
            rows.append([index[state]] * len(representatives))
            continue
        row = []
        for letter in representatives:
            succ = (successor_subset(0, pos, int(letter)), successor_subset(1, neg, int(letter)))
            if succ not in index:
                index[succ] = len(states)
                states.append(succ)
                queue.append(succ)
            row.append(index[succ])
        rows.append(row)

    product_delta = np.array(rows, dtype=np.int64).reshape(len(states), len(representatives))
    logger.debug("product automaton: %d states, %d letter classes", len(states), len(representatives))

    location_labels, location_delta = _minimize(labels, product_delta)
    monitor = MonitorAutomaton(names, location_labels, location_delta[:, class_of], formula=f)
    logger.debug("monitor automaton: %d locations", monitor.num_locations)
    return monitor


def _letter_classes(
        matrix: npt.NDArray[np.bool_],
        num_letters: int
) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
    # Two letters are equivalent iff every tableau state treats them alike. Classes are numbered by their smallest
    # letter.
    if matrix.shape[0] == 0:
        return np.zeros(num_letters, dtype=np.int64), np.zeros(1, dtype=np.int64)
    _, first, inverse = np.unique(matrix.T, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inverse].astype(np.int64), first[order].astype(np.int64)


def _minimize(
        labels: Sequence[Verdict],
        delta: npt.NDArray[np.int64]
) -> Tuple[List[Verdict], npt.NDArray[np.int64]]:
    """
    Moore partition refinement starting from the labels, followed by canonical numbering. State 0 is initial.
    """
    label_ids = {Verdict.UNKNOWN: 0, Verdict.TOP: 1, Verdict.BOTTOM: 2}
    blocks = np.array([label_ids[label] for label in labels], dtype=np.int64)
    num_blocks = len(set(blocks.tolist()))
    while True:
        signature = np.column_stack([blocks, blocks[delta]])
        _, refined = np.unique(signature, axis=0, return_inverse=True)
        refined = refined.reshape(-1).astype(np.int64)
        count = int(refined.max()) + 1
        blocks = refined
        if count == num_blocks:
            break
        num_blocks = count

    representative = {}
    for state in range(len(labels)):
        representative.setdefault(int(blocks[state]), state)

    # breadth-first order over the blocks, letter classes in order
    order = [int(blocks[0])]
    seen = {order[0]}
    pos = 0
    while pos < len(order):
        rep = representative[order[pos]]
        pos += 1
        for succ in delta[rep]:
            block = int(blocks[succ])
            if block not in seen:
                seen.add(block)
                order.append(block)

    rank = {Verdict.UNKNOWN: 0, Verdict.TOP: 1, Verdict.BOTTOM: 2}
    order.sort(key=lambda b: rank[labels[representative[b]]])  # stable: BFS order within each label
    new_id = {block: idx for idx, block in enumerate(order)}

    location_labels = [labels[representative[block]] for block in order]
    location_delta = np.array(
        [[new_id[int(blocks[succ])] for succ in delta[representative[block]]] for block in order], dtype=np.int64
    ).reshape(len(order), delta.shape[1])
    return location_labels, location_delta


def check_monitorable(m: MonitorAutomaton) -> Monitorability:
    """
    Classify `m`. A property is monitorable iff some terminal location is reachable. Reachable ?-locations that
    cannot reach a terminal location are reported as dead and logged as a warning.
    """
    successors = [sorted(set(int(t) for t in np.unique(m.delta[loc])) - {loc}) for loc in range(m.num_locations)]

    reachable = {m.initial}
    queue = deque([m.initial])
    while queue:
        loc = queue.popleft()
        for succ in successors[loc]:
            if succ not in reachable:
                reachable.add(succ)
                queue.append(succ)

    terminal = m.terminal
    can_decide = set(int(loc) for loc in np.flatnonzero(terminal))
    changed = True
    while changed:
        changed = False
        for loc in range(m.num_locations):
            if loc not in can_decide and any(succ in can_decide for succ in successors[loc]):
                can_decide.add(loc)
                changed = True

    verdicts = frozenset(m.labels[loc] for loc in reachable if terminal[loc])
    dead = tuple(sorted(loc for loc in reachable if not terminal[loc] and loc not in can_decide))
    if dead:
        logger.warning(
            "locations %s can never reach a verdict; runs may stay undecided forever",
            ", ".join(m.location_name(loc) for loc in dead)
        )
    return Monitorability(bool(verdicts), dead, verdicts)


@dataclass(frozen=True)
class ProtocolTransition:
    """
    One conjunct of a guard of the monitor automaton.

    `conjunct` lists (proposition, polarity) pairs in letter bit order. A letter satisfies the conjunct iff
    `letter & pos_mask == pos_mask` and `letter & neg_mask == 0`.
    """
    id: int
    source: int
    target: int
    conjunct: Tuple[Tuple[str, bool], ...]
    associated_processes: Tuple[int, ...]
    pos_mask: int
    neg_mask: int

    @property
    def is_constant(self) -> bool:
        return not self.conjunct

    def satisfied_by(self, letter: int) -> bool:
        return (letter & self.pos_mask) == self.pos_mask and (letter & self.neg_mask) == 0

    def __str__(self) -> str:
        if not self.conjunct:
            return "true"
        return " ∧ ".join(name if polarity else "¬" + name for name, polarity in self.conjunct)


class ProtocolAutomaton:
    """
    The split monitor automaton shared by all processes of a run.

    :param monitor: The underlying monitor automaton
    :param propositions: One AtomicProposition per letter bit, aligned with `monitor.propositions`
    :param transitions: Transitions ordered by id, ids 0..n-1
    :param num_processes: Number of processes in the system
    """
    monitor: MonitorAutomaton
    propositions: Tuple[AtomicProposition, ...]
    transitions: Tuple[ProtocolTransition, ...]
    outgoing: Tuple[Tuple[ProtocolTransition, ...], ...]
    num_processes: int
    first_enabled: npt.NDArray[np.int64]

    def __init__(
            self,
            monitor: MonitorAutomaton,
            propositions: Sequence[AtomicProposition],
            transitions: Sequence[ProtocolTransition],
            num_processes: int
    ):
        if [ap.name for ap in propositions] != list(monitor.propositions):
            raise ValueError("propositions do not match the letter bits of the monitor automaton")
        if [tr.id for tr in transitions] != list(range(len(transitions))):
            raise ValueError("transition ids must be 0..n-1 in order")

        self.monitor = monitor
        self.propositions = tuple(propositions)
        self.transitions = tuple(transitions)
        self.num_processes = num_processes
        self.outgoing = tuple(
            tuple(tr for tr in self.transitions if tr.source == loc) for loc in range(monitor.num_locations)
        )

        self._targets = np.array([tr.target for tr in self.transitions], dtype=np.int64)
        self.first_enabled = first_enabled_njit(
            monitor.num_locations,
            monitor.num_letters,
            np.array([tr.source for tr in self.transitions], dtype=np.int64),
            np.array([tr.pos_mask for tr in self.transitions], dtype=np.int64),
            np.array([tr.neg_mask for tr in self.transitions], dtype=np.int64),
        )

    @property
    def labels(self) -> Tuple[Verdict, ...]:
        return self.monitor.labels

    @property
    def num_locations(self) -> int:
        return self.monitor.num_locations

    @property
    def initial(self) -> int:
        return self.monitor.initial

    def is_terminal(self, location: int) -> bool:
        return self.monitor.labels[location].is_terminal

    def location_name(self, location: int) -> str:
        return self.monitor.location_name(location)

    def owner(self, name: str) -> int:
        for ap in self.propositions:
            if ap.name == name:
                return ap.owner
        raise UnknownPropositionError(name)

    def owned_mask(self, process: int) -> int:
        """Letter bits of the propositions owned by `process`."""
        mask = 0
        for bit, ap in enumerate(self.propositions):
            if ap.owner == process:
                mask |= 1 << bit
        return mask

    def owned_propositions(self, process: int) -> List[str]:
        return [ap.name for ap in self.propositions if ap.owner == process]

    def walk(
            self,
            letters: npt.NDArray[np.int64],
            start: Optional[int] = None
    ) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], int, bool]:
        """
        Offline run over global-state segments (see `_numba_functions.walk_njit`).
        """
        return walk_njit(  # type: ignore
            self.first_enabled,
            self._targets,
            self.monitor.terminal,
            self.initial if start is None else start,
            np.asarray(letters, dtype=np.int64),
            self.num_locations,
        )

    def to_json(self) -> str:
        data = {
            "format": JSON_FORMAT,
            "version": 1,
            "formula": None if self.monitor.formula is None else str(self.monitor.formula),
            "propositions": [{"name": ap.name, "owner": ap.owner} for ap in self.propositions],
            "num_processes": self.num_processes,
            "initial": self.initial,
            "locations": [
                {"id": loc, "name": self.location_name(loc), "label": self.labels[loc].value}
                for loc in range(self.num_locations)
            ],
            "transitions": [
                {
                    "id": tr.id,
                    "source": tr.source,
                    "target": tr.target,
                    "conjunct": [[name, polarity] for name, polarity in tr.conjunct],
                    "associated_processes": list(tr.associated_processes),
                }
                for tr in self.transitions
            ],
        }
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ProtocolAutomaton:
        """
        Load an automaton written by `to_json`. The dense transition table is rebuilt from the conjuncts; letters
        matched by no conjunct loop on their location.
        """
        data = json.loads(text)
        if data.get("format") != JSON_FORMAT:
            raise ValueError("not a decmon automaton file")

        aps = [AtomicProposition(p["name"], int(p["owner"])) for p in data["propositions"]]
        owner_table(aps)
        bit_of = {ap.name: bit for bit, ap in enumerate(aps)}
        labels = [Verdict(loc["label"]) for loc in sorted(data["locations"], key=lambda loc: loc["id"])]
        num_letters = 1 << len(aps)
        letters = np.arange(num_letters, dtype=np.int64)

        delta = np.repeat(np.arange(len(labels), dtype=np.int64)[:, None], num_letters, axis=1)
        transitions = []
        for item in sorted(data["transitions"], key=lambda tr: tr["id"]):
            conjunct = tuple((str(name), bool(polarity)) for name, polarity in item["conjunct"])
            tr = _make_transition(int(item["id"]), int(item["source"]), int(item["target"]), conjunct, bit_of, aps)
            covered = ((letters & tr.pos_mask) == tr.pos_mask) & ((letters & tr.neg_mask) == 0)
            delta[tr.source, covered] = tr.target
            transitions.append(tr)

        formula = parse_formula(data["formula"]) if data.get("formula") else None
        monitor = MonitorAutomaton([ap.name for ap in aps], labels, delta, formula=formula)
        return cls(monitor, aps, transitions, int(data["num_processes"]))

    def to_dot(self) -> str:
        lines = ["digraph monitor {", "  rankdir=LR;", '  start [shape=point];']
        for loc in range(self.num_locations):
            shape = "doublecircle" if self.is_terminal(loc) else "circle"
            lines.append('  {} [label="{}", shape={}];'.format(loc, self.location_name(loc), shape))
        lines.append("  start -> {};".format(self.initial))
        for tr in self.transitions:
            lines.append('  {} -> {} [label="Tr{}: {}"];'.format(tr.source, tr.target, tr.id, tr))
        lines.append("}")
        return "\n".join(lines) + "\n"


def _make_transition(
        tr_id: int,
        source: int,
        target: int,
        conjunct: Tuple[Tuple[str, bool], ...],
        bit_of: Mapping[str, int],
        aps: Sequence[AtomicProposition]
) -> ProtocolTransition:
    owners = {ap.name: ap.owner for ap in aps}
    pos_mask = 0
    neg_mask = 0
    for name, polarity in conjunct:
        if polarity:
            pos_mask |= 1 << bit_of[name]
        else:
            neg_mask |= 1 << bit_of[name]
    if pos_mask & neg_mask:
        raise ValueError("conjunct of Tr{} is unsatisfiable".format(tr_id))
    if source == target:
        raise ValueError("Tr{} is a self-loop".format(tr_id))
    associated = tuple(sorted({owners[name] for name, _ in conjunct}))
    return ProtocolTransition(tr_id, source, target, conjunct, associated, pos_mask, neg_mask)


def split_transitions(m: MonitorAutomaton, aps: Sequence[AtomicProposition]) -> ProtocolAutomaton:
    """
    Remove self-loops and split every remaining guard into the conjuncts of its exact minimal sum of products.
    Transitions are numbered by source location, then target location, then conjunct in canonical order (positive
    before negative before absent, per proposition in letter bit order).

    :param m: Monitor automaton
    :param aps: Ownership of every proposition of `m`; may contain further propositions
    :raises UnknownPropositionError: if a proposition of `m` has no owner in `aps`
    """
    owners = owner_table(aps)
    for name in m.propositions:
        if name not in owners:
            raise UnknownPropositionError(name)
    propositions = [AtomicProposition(name, owners[name]) for name in m.propositions]
    bit_of = {name: bit for bit, name in enumerate(m.propositions)}
    num_processes = max(owners.values(), default=-1) + 1

    transitions: List[ProtocolTransition] = []
    for source in range(m.num_locations):
        if m.labels[source].is_terminal:
            continue
        for target in range(m.num_locations):
            if target == source:
                continue
            guard = m.delta[source] == target
            if not guard.any():
                continue
            for mask, value in minimal_cover(guard):
                conjunct = tuple(
                    (name, bool((value >> bit) & 1)) for bit, name in enumerate(m.propositions) if (mask >> bit) & 1
                )
                transitions.append(_make_transition(len(transitions), source, target, conjunct, bit_of, propositions))

    logger.debug("split automaton: %d protocol transitions", len(transitions))
    return ProtocolAutomaton(m, propositions, transitions, max(num_processes, 1))
