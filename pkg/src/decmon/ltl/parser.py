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
Parser for the LTL concrete syntax.

Grammar (weakest binding first, all binary operators right-associative):

    expr ::= expr -> expr | expr | expr | expr & expr | expr U expr
           | ! expr | X expr | <> expr | [] expr
           | ( expr ) | true | false | NAME

NAME is `[a-zA-Z_][a-zA-Z0-9_]*` except the reserved words `X`, `U`, `true` and `false`.
"""

from __future__ import annotations

import logging
from typing import Collection, Optional, Sequence

from ply import lex, yacc

from . import (
    Always, And, AtomicProposition, Const, Eventually, Formula, Implies, LtlSyntaxError, Next, Not, Or, Prop,
    UnknownPropositionError, Until, desugar
)

logger = logging.getLogger(__name__)


class Lexer:
    """Token rules of the LTL lexer."""

    reserved = {
        "X": "NEXT",
        "U": "UNTIL",
        "true": "TRUE",
        "false": "FALSE",
    }
    tokens = [
        "NAME", "NOT", "AND", "OR", "IMPLIES", "EVENTUALLY", "ALWAYS", "LPAREN", "RPAREN"
    ] + sorted(set(reserved.values()))

    t_NOT = r"\!"
    t_AND = r"\&"
    t_OR = r"\|"
    t_IMPLIES = r"->"
    t_EVENTUALLY = r"\<\>"
    t_ALWAYS = r"\[\]"
    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_ignore = " \t\r\n"

    def __init__(self) -> None:
        self.lexer = lex.lex(module=self, errorlog=yacc.NullLogger())

    def t_NAME(self, t):  # type: ignore
        r"[a-zA-Z_][a-zA-Z0-9_]*"
        t.type = self.reserved.get(t.value, "NAME")
        return t

    def t_error(self, t):  # type: ignore
        raise LtlSyntaxError("illegal character '" + t.value[0] + "'", t.lexpos)


class Parser:
    """Production rules of the LTL parser. Returns the formula as written, sugar included."""

    tokens = Lexer.tokens
    # weakest to strongest
    precedence = (
        ("right", "IMPLIES"),
        ("right", "OR"),
        ("right", "AND"),
        ("right", "UNTIL"),
        ("right", "NOT", "NEXT", "EVENTUALLY", "ALWAYS"),
    )

    def __init__(self) -> None:
        self.lexer = Lexer()
        self.parser = yacc.yacc(
            module=self, start="expr", debug=False, write_tables=False, errorlog=yacc.NullLogger()
        )
        self._text = ""
        self._names: Optional[Collection[str]] = None

    def parse(self, text: str, names: Optional[Collection[str]] = None) -> Formula:
        self._text = text
        self._names = names
        if not text.strip():
            raise LtlSyntaxError("empty formula", 0)
        result: Formula = self.parser.parse(text, lexer=self.lexer.lexer)
        return result

    def p_binary(self, p):  # type: ignore
        """expr : expr IMPLIES expr
                | expr OR expr
                | expr AND expr
                | expr UNTIL expr
        """
        node = {"IMPLIES": Implies, "OR": Or, "AND": And, "UNTIL": Until}[p.slice[2].type]
        p[0] = node(p[1], p[3])

    def p_unary(self, p):  # type: ignore
        """expr : NOT expr
                | NEXT expr
                | EVENTUALLY expr
                | ALWAYS expr
        """
        node = {"NOT": Not, "NEXT": Next, "EVENTUALLY": Eventually, "ALWAYS": Always}[p.slice[1].type]
        p[0] = node(p[2])

    def p_paren(self, p):  # type: ignore
        """expr : LPAREN expr RPAREN"""
        p[0] = p[2]

    def p_true(self, p):  # type: ignore
        """expr : TRUE"""
        p[0] = Const(True)

    def p_false(self, p):  # type: ignore
        """expr : FALSE"""
        p[0] = Const(False)

    def p_name(self, p):  # type: ignore
        """expr : NAME"""
        if self._names is not None and p[1] not in self._names:
            raise UnknownPropositionError(p[1], p.lexpos(1))
        p[0] = Prop(p[1])

    def p_error(self, p):  # type: ignore
        if p is None:
            raise LtlSyntaxError("unexpected end of formula", len(self._text))
        raise LtlSyntaxError("unexpected '" + str(p.value) + "'", p.lexpos)


_parser: Optional[Parser] = None


def _get_parser() -> Parser:
    global _parser
    if _parser is None:
        logger.debug("building LTL parser tables")
        _parser = Parser()
    return _parser


def parse_formula(text: str, names: Optional[Collection[str]] = None) -> Formula:
    """
    Parse a formula without removing syntactic sugar.

    :param text: Formula in concrete syntax
    :param names: If given, the allowed proposition names
    :raises LtlSyntaxError: if the text is not well-formed
    :raises UnknownPropositionError: if a name is not in `names`
    """
    return _get_parser().parse(text, names)


def parse_ltl(text: str, ap_table: Sequence[AtomicProposition]) -> Formula:
    """
    Parse a formula over the propositions of `ap_table` and rewrite it into the core grammar.

    >>> str(parse_ltl("<>(a & b)", [AtomicProposition("a", 0), AtomicProposition("b", 1)]))
    'true U !(!a | !b)'
    """
    return desugar(parse_formula(text, [ap.name for ap in ap_table]))
