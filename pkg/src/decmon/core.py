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

import os
from datetime import datetime
from typing import Optional, Sequence, Tuple

from tqdm import tqdm

from .automata import Monitorability, ProtocolAutomaton, build_monitor, check_monitorable, split_transitions
from .central import run_centralized
from .ltl import AtomicProposition, default_ap_table, desugar, parse_formula
from .simulation import EventLog, RunResult, UniformDelay, oracle_evaluate, run_simulation
from .simulation.trace import Seed, Trace


def compile_property(
        text: str,
        ap_table: Optional[Sequence[AtomicProposition]] = None,
        print_progress: bool = False
) -> Tuple[ProtocolAutomaton, Monitorability]:
    """
    Formula text to protocol automaton.

    :param text: Formula in concrete syntax
    :param ap_table: Ownership of the propositions. Their order is the letter bit order. Defaults to one process per
    proposition in order of appearance.
    :param print_progress: Log the pipeline stages
    :return: The protocol automaton and the monitorability of the property
    """
    log("Parsing " + repr(text), print_progress)
    if ap_table is None:
        formula = parse_formula(text)
        aps = default_ap_table(formula)
    else:
        aps = list(ap_table)
        formula = parse_formula(text, [ap.name for ap in aps])

    log("Building the three-valued monitor over {} propositions".format(len(aps)), print_progress)
    monitor = build_monitor(desugar(formula), [ap.name for ap in aps])
    monitorability = check_monitorable(monitor)

    log("Splitting guards into conjuncts (monitorability: {})".format(monitorability.classification), print_progress)
    return split_transitions(monitor, aps), monitorability


def load_automaton(source: str, ap_table: Optional[Sequence[AtomicProposition]] = None) -> ProtocolAutomaton:
    """
    A compiled JSON automaton if `source` names an existing file, otherwise `source` is compiled as a formula.
    """
    if os.path.isfile(source):
        with open(source, "r", encoding="utf-8") as file:
            return ProtocolAutomaton.from_json(file.read())
    return compile_property(source, ap_table)[0]


def run_both(
        pa: ProtocolAutomaton,
        trace: Trace,
        low: int,
        high: int,
        seed: Seed = None,
        event_log: Optional[EventLog] = None
) -> Tuple[RunResult, RunResult, RunResult]:
    """
    Oracle, decentralized and centralized result for one trace. Both algorithms draw their delays from generators
    seeded identically.
    """
    oracle = oracle_evaluate(pa, trace)
    decentralized = run_simulation(pa, trace, UniformDelay(low, high, seed), event_log=event_log)
    centralized = run_centralized(pa, trace, UniformDelay(low, high, seed))
    return oracle, decentralized, centralized


def log(message: str, show: bool = True) -> None:
    """
    Progress line for the compile pipeline and benchmark campaigns, prefixed with the wall clock time. Written
    with `tqdm.write`.
    """
    if show:
        tqdm.write("\033[0;37m[{}]\033[0m {}".format(datetime.now().strftime("%H:%M:%S"), message))
