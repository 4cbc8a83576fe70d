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
Tableau construction of a generalized Büchi automaton from an LTL formula in negation normal form, and the
emptiness check on its states.

Formulas are handled as nested tuples here:

- `("true",)`, `("false",)`
- `("lit", name, polarity)`
- `("and", l, r)`, `("or", l, r)`
- `("X", g)`, `("U", l, r)`, `("R", l, r)`

A state of the automaton constrains the letter read *at* that state (its literals), so a run over w_0 w_1 ... is a
path n_0 n_1 ... starting in an initial state with w_i compatible with n_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Set, Tuple

import numpy as np
import numpy.typing as npt

from ..ltl import Always, And, Const, Eventually, Formula, Implies, Next, Not, Or, Prop, Until

Nnf = Tuple  # type: ignore

_TRUE: Nnf = ("true",)
_FALSE: Nnf = ("false",)
_INIT = -1


def to_nnf(f: Formula, negated: bool = False) -> Nnf:
    """
    Push negations down to the propositions. Sugar is accepted as well.

    :param f: Formula
    :param negated: Build the normal form of `!f` instead
    """
    if isinstance(f, Const):
        return _TRUE if f.value != negated else _FALSE
    if isinstance(f, Prop):
        return "lit", f.name, not negated
    if isinstance(f, Not):
        return to_nnf(f.operand, not negated)
    if isinstance(f, Or):
        return ("and" if negated else "or"), to_nnf(f.left, negated), to_nnf(f.right, negated)
    if isinstance(f, And):
        return ("or" if negated else "and"), to_nnf(f.left, negated), to_nnf(f.right, negated)
    if isinstance(f, Implies):
        return ("and" if negated else "or"), to_nnf(f.left, not negated), to_nnf(f.right, negated)
    if isinstance(f, Next):
        return "X", to_nnf(f.operand, negated)
    if isinstance(f, Until):
        return ("R" if negated else "U"), to_nnf(f.left, negated), to_nnf(f.right, negated)
    if isinstance(f, Eventually):
        return ("R", _FALSE, to_nnf(f.operand, True)) if negated else ("U", _TRUE, to_nnf(f.operand))
    if isinstance(f, Always):
        return ("U", _TRUE, to_nnf(f.operand, True)) if negated else ("R", _FALSE, to_nnf(f.operand))
    raise TypeError("not a formula: " + repr(f))


def _subformulas(f: Nnf) -> Set[Nnf]:
    result: Set[Nnf] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if node in result:
            continue
        result.add(node)
        if node[0] in ("and", "or", "U", "R"):
            stack.extend((node[1], node[2]))
        elif node[0] == "X":
            stack.append(node[1])
    return result


@dataclass
class Gba:
    """
    Generalized Büchi automaton produced by `build_gba`.

    `pos[n]` / `neg[n]` are bitmasks of the propositions that must be true / false while in state n. `accepting[k]`
    is the k-th acceptance set as a boolean vector over states.
    """
    pos: npt.NDArray[np.int64]
    neg: npt.NDArray[np.int64]
    successors: List[List[int]]
    initial: List[int]
    accepting: List[npt.NDArray[np.bool_]]

    @property
    def num_states(self) -> int:
        return len(self.successors)

    def enabled(self, num_props: int) -> npt.NDArray[np.bool_]:
        """
        :return: Boolean matrix (states x letters); entry (n, l) is True iff letter l is compatible with state n
        """
        letters = np.arange(1 << num_props, dtype=np.int64)
        pos_ok = (letters[None, :] & self.pos[:, None]) == self.pos[:, None]
        neg_ok = (letters[None, :] & self.neg[:, None]) == 0
        return pos_ok & neg_ok


def build_gba(f: Nnf, bit_of: Dict[str, int]) -> Gba:
    """
    Expand `f` into tableau states. Each pending entry is (incoming, new, old, next); a state is complete when `new`
    is exhausted, and two complete states with equal (old, next) are merged.

    :param f: Formula in negation normal form
    :param bit_of: Letter bit of every proposition
    """
    keys: Dict[Tuple[FrozenSet[Nnf], FrozenSet[Nnf]], int] = {}
    olds: List[FrozenSet[Nnf]] = []
    incoming: List[Set[int]] = []

    pending: List[Tuple[Set[int], Set[Nnf], Set[Nnf], Set[Nnf]]] = [({_INIT}, {f}, set(), set())]
    while pending:
        inc, new, old, nxt = pending.pop()

        if not new:
            key = (frozenset(old), frozenset(nxt))
            if key in keys:
                incoming[keys[key]] |= inc
                continue
            keys[key] = len(olds)
            olds.append(key[0])
            incoming.append(set(inc))
            pending.append(({keys[key]}, set(nxt), set(), set()))
            continue

        g = new.pop()
        if g in old:
            pending.append((inc, new, old, nxt))
            continue

        kind = g[0]
        if kind == "false":
            continue
        if kind in ("true", "lit"):
            if kind == "lit" and ("lit", g[1], not g[2]) in old:
                continue
            pending.append((inc, new, old | {g}, nxt))
        elif kind == "and":
            pending.append((inc, new | ({g[1], g[2]} - old), old | {g}, nxt))
        elif kind == "or":
            pending.append((inc, new | ({g[2]} - old), old | {g}, nxt))
            pending.append((inc, new | ({g[1]} - old), old | {g}, nxt))
        elif kind == "U":
            pending.append((inc, new | ({g[2]} - old), old | {g}, nxt))
            pending.append((inc, new | ({g[1]} - old), old | {g}, nxt | {g}))
        elif kind == "R":
            pending.append((inc, new | ({g[1], g[2]} - old), old | {g}, nxt))
            pending.append((inc, new | ({g[2]} - old), old | {g}, nxt | {g}))
        elif kind == "X":
            pending.append((inc, new, old | {g}, nxt | {g[1]}))
        else:
            raise ValueError("unexpected node " + repr(g))

    num_states = len(olds)
    pos = np.zeros(num_states, dtype=np.int64)
    neg = np.zeros(num_states, dtype=np.int64)
    successors: List[List[int]] = [[] for _ in range(num_states)]
    initial = []
    for state in range(num_states):
        for g in olds[state]:
            if g[0] == "lit":
                if g[2]:
                    pos[state] |= 1 << bit_of[g[1]]
                else:
                    neg[state] |= 1 << bit_of[g[1]]
        for source in sorted(incoming[state]):
            if source == _INIT:
                initial.append(state)
            else:
                successors[source].append(state)

    accepting = []
    for u in sorted((g for g in _subformulas(f) if g[0] == "U"), key=repr):
        accepting.append(np.array([u not in old or u[2] in old for old in olds], dtype=np.bool_))

    return Gba(pos, neg, [sorted(s) for s in successors], initial, accepting)


def _strongly_connected_components(successors: List[List[int]]) -> List[List[int]]:
    # Tarjan's algorithm with an explicit stack
    num = len(successors)
    index = [-1] * num
    low = [0] * num
    on_stack = [False] * num
    stack: List[int] = []
    components: List[List[int]] = []
    counter = 0

    for root in range(num):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, child = work.pop()
            if child == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            recurse = False
            for pos in range(child, len(successors[node])):
                succ = successors[node][pos]
                if index[succ] == -1:
                    work.append((node, pos + 1))
                    work.append((succ, 0))
                    recurse = True
                    break
                if on_stack[succ]:
                    low[node] = min(low[node], index[succ])
            if recurse:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack[member] = False
                    component.append(member)
                    if member == node:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return components


def nonempty_states(gba: Gba) -> npt.NDArray[np.bool_]:
    """
    :return: Boolean vector over states; True iff some infinite accepting run starts in that state
    """
    live = np.zeros(gba.num_states, dtype=np.bool_)
    for component in _strongly_connected_components(gba.successors):
        nontrivial = len(component) > 1 or component[0] in gba.successors[component[0]]
        if not nontrivial:
            continue
        if all(acc[component].any() for acc in gba.accepting):
            live[component] = True

    predecessors: List[List[int]] = [[] for _ in range(gba.num_states)]
    for source, targets in enumerate(gba.successors):
        for target in targets:
            predecessors[target].append(source)
    stack = list(np.flatnonzero(live))
    while stack:
        state = stack.pop()
        for pred in predecessors[state]:
            if not live[pred]:
                live[pred] = True
                stack.append(pred)
    return live
