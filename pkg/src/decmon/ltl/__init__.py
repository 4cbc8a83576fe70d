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
Linear temporal logic over named atomic propositions.

A formula is an immutable tree of the classes in this module. **And**, **Implies**, **Eventually**, **Always** and
`Const(False)` are sugar; `desugar` rewrites them into the core grammar {Prop, Not, Or, Next, Until, Const(True)}.
The concrete syntax is handled by `decmon.ltl.parser`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Sequence, Tuple, Union


class Verdict(str, Enum):
    """Truth values of three-valued LTL on finite prefixes."""
    TOP = "⊤"
    BOTTOM = "⊥"
    UNKNOWN = "?"

    @property
    def is_terminal(self) -> bool:
        return self is not Verdict.UNKNOWN

    @classmethod
    def parse(cls, text: str) -> Verdict:
        aliases = {"T": cls.TOP, "top": cls.TOP, "F": cls.BOTTOM, "bottom": cls.BOTTOM, "unknown": cls.UNKNOWN}
        return aliases[text] if text in aliases else cls(text)


@dataclass(frozen=True)
class AtomicProposition:
    """A boolean observation `name` that only process `owner` can evaluate."""
    name: str
    owner: int


class LtlSyntaxError(ValueError):
    """Raised by the parser; `position` is the character offset of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(message + " at position " + str(position))
        self.position = position


class UnknownPropositionError(ValueError):
    def __init__(self, name: str, position: int = -1):
        message = "unknown proposition '" + name + "'"
        if position >= 0:
            message += " at position " + str(position)
        super().__init__(message)
        self.name = name
        self.position = position


class Formula:
    """Base class of all formula nodes."""

    def children(self) -> Tuple[Formula, ...]:
        return ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula

    def children(self) -> Tuple[Formula, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self) -> Tuple[Formula, ...]:
        return self.left, self.right


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self) -> Tuple[Formula, ...]:
        return self.left, self.right


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self) -> Tuple[Formula, ...]:
        return self.left, self.right


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self) -> Tuple[Formula, ...]:
        return self.left, self.right


TRUE = Const(True)
FALSE = Const(False)

_CORE = (Const, Prop, Not, Or, Next, Until)


def desugar(f: Formula) -> Formula:
    """
    Rewrite a formula into the core grammar:

    - a & b = !(!a | !b)
    - a -> b = !a | b
    - <>a = true U a
    - []a = !(true U !a)
    - false = !true

    Double negations are removed on the way.
    """
    if isinstance(f, Const):
        return TRUE if f.value else Not(TRUE)
    if isinstance(f, Prop):
        return f
    if isinstance(f, Not):
        return _negate(desugar(f.operand))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, And):
        return _negate(Or(_negate(desugar(f.left)), _negate(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(_negate(desugar(f.left)), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.operand))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.operand))
    if isinstance(f, Always):
        return _negate(Until(TRUE, _negate(desugar(f.operand))))
    raise TypeError("not a formula: " + repr(f))


def _negate(f: Formula) -> Formula:
    return f.operand if isinstance(f, Not) else Not(f)


def is_core(f: Formula) -> bool:
    if not isinstance(f, _CORE) or f == FALSE:
        return False
    return all(is_core(child) for child in f.children())


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal, left to right."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def propositions(f: Formula) -> List[str]:
    """Proposition names in order of first appearance."""
    seen: Dict[str, None] = {}
    for node in subformulas(f):
        if isinstance(node, Prop):
            seen.setdefault(node.name)
    return list(seen)


def default_ap_table(f: Formula) -> List[AtomicProposition]:
    """Give every proposition of `f` its own process, numbered in order of appearance."""
    return [AtomicProposition(name, idx) for idx, name in enumerate(propositions(f))]


def owner_table(aps: Sequence[AtomicProposition]) -> Dict[str, int]:
    """
    :return: A dict from proposition name to owner
    :raises ValueError: if a name appears twice or an owner is negative
    """
    owners: Dict[str, int] = {}
    for ap in aps:
        if ap.name in owners:
            raise ValueError("proposition '" + ap.name + "' is listed twice")
        if ap.owner < 0:
            raise ValueError("proposition '" + ap.name + "' has a negative owner")
        owners[ap.name] = ap.owner
    return owners


def parse_ap_table(text: str) -> List[AtomicProposition]:
    """Parse the command line form "a=0,b=1,c=2"."""
    aps = []
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, owner = item.partition("=")
        if not owner.strip().isdigit():
            raise ValueError("expected name=process, got '" + item.strip() + "'")
        aps.append(AtomicProposition(name.strip(), int(owner)))
    owner_table(aps)
    return aps


# Binding strength of the operators, weakest first. & | -> are right-associative like U.
_LEVEL = {Implies: 1, Or: 2, And: 3, Until: 4}
_UNARY = {Not: "!", Next: "X ", Eventually: "<>", Always: "[]"}
_BINARY = {Implies: " -> ", Or: " | ", And: " & ", Until: " U "}
_ATOM = 6


def to_text(f: Formula) -> str:
    """Render a formula in the concrete syntax accepted by `decmon.ltl.parser.parse_ltl`."""
    return _render(f)[0]


def _render(f: Formula) -> Tuple[str, int]:
    if isinstance(f, Const):
        return ("true" if f.value else "false"), _ATOM
    if isinstance(f, Prop):
        return f.name, _ATOM
    if type(f) in _UNARY:
        text, level = _render(f.children()[0])
        return _UNARY[type(f)] + (text if level >= 5 else "(" + text + ")"), 5

    level = _LEVEL[type(f)]
    left, right = f.children()
    left_text, left_level = _render(left)
    right_text, right_level = _render(right)
    # nested U always gets parentheses, it reads better
    right_min = level + 1 if isinstance(f, Until) else level
    if left_level <= level:
        left_text = "(" + left_text + ")"
    if right_level < right_min:
        right_text = "(" + right_text + ")"
    return left_text + _BINARY[type(f)] + right_text, level


FormulaLike = Union[str, Formula]


from .parser import parse_formula, parse_ltl  # noqa: E402
