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

import logging
import sys
from typing import List, Optional, Tuple

from importlib.metadata import PackageNotFoundError, version

from .. import config
from ...core import compile_property, load_automaton, log
from ...automata import ProtocolAutomaton
from ...central import run_centralized
from ...experiments import ConfigError, ExperimentConfig, render_table, run_experiment
from ...intervals import format_time, to_ticks
from ...ltl import LtlSyntaxError, UnknownPropositionError, parse_ap_table
from ...protocol import ProtocolViolation
from ...simulation import EventLog, UniformDelay, oracle_evaluate, run_simulation
from ...simulation.trace import Trace, TraceFormatError, generate_trace, read_trace, write_trace

EXIT_ERROR = 1
EXIT_SKIPPED_BUCKETS = 2


def main(argv: Optional[List[str]] = None) -> None:
    """
    Entry point of the terminal user interface. This is called by `src/cli.py`.
    """
    try:
        print("Welcome to decmon v" + version("decmon") + ".\n")
    except PackageNotFoundError:
        print("Welcome to decmon.\n")

    config.init(argv)
    print("Using configuration file at " + config.CONFIG_FILE + ".\n")

    level = "DEBUG" if config.ARGS.verbose else str(config.CONFIG.get("logging", {}).get("level", "WARNING"))
    logging.basicConfig(level=level.upper(), format="%(levelname)s %(name)s: %(message)s")

    if config.ARGS.subcommand is None:
        print("No subcommand selected. Execute \"decmon -h\" for a list of subcommands.")
        sys.exit(EXIT_ERROR)

    commands = {
        "compile": compile_formula,
        "run": run,
        "oracle": oracle,
        "trace-gen": trace_gen,
        "bench": bench,
    }

    try:
        code = commands[config.ARGS.subcommand]()
    except (LtlSyntaxError, UnknownPropositionError, TraceFormatError, ConfigError, ProtocolViolation) as err:
        print("Error: " + str(err))
        if isinstance(err, ProtocolViolation) and err.event_log is not None:
            err.event_log.write("decmon_violation.jsonl")
            print("The event log up to the violation was written to decmon_violation.jsonl.")
        sys.exit(EXIT_ERROR)
    except (ValueError, OSError) as err:
        print("Error: " + str(err))
        sys.exit(EXIT_ERROR)

    sys.exit(code)


def compile_formula() -> int:
    ap_table = parse_ap_table(config.ARGS.props) if config.ARGS.props else None
    pa, monitorability = compile_property(config.ARGS.formula, ap_table, print_progress=True)

    print()
    print("{} locations, {} transitions, {} processes ({})".format(
        pa.num_locations, len(pa.transitions), pa.num_processes, monitorability.classification
    ))
    for tr in pa.transitions:
        print("  Tr{}: {} -> {} if {}".format(tr.id, pa.location_name(tr.source), pa.location_name(tr.target), tr))
    print()

    log("Saving automaton to " + config.ARGS.outfile + ".json and " + config.ARGS.outfile + ".dot")
    with open(config.ARGS.outfile + ".json", "w", encoding="utf-8") as file:
        file.write(pa.to_json())
    with open(config.ARGS.outfile + ".dot", "w", encoding="utf-8") as file:
        file.write(pa.to_dot())
    return 0


def _load() -> Tuple[ProtocolAutomaton, Trace]:
    trace = read_trace(config.ARGS.trace)
    ap_table = parse_ap_table(config.ARGS.props) if config.ARGS.props else list(trace.propositions)
    return load_automaton(config.ARGS.source, ap_table), trace


def run() -> int:
    pa, trace = _load()
    sim = config.CONFIG.get("simulation", {})
    low, high = to_ticks(str(sim.get("delay_low", 0.0))), to_ticks(str(sim.get("delay_high", 2.0)))
    seed = config.ARGS.seed if config.ARGS.seed is not None else int(sim.get("seed", 0))
    if seed < 0:
        seed = None

    event_log_file = config.ARGS.event_log or str(config.CONFIG.get("logging", {}).get("event_log", ""))
    event_log = EventLog() if event_log_file else None

    log("Running decentralized monitors")
    result = run_simulation(pa, trace, UniformDelay(low, high, seed), event_log=event_log)
    print(result.to_text(pa))

    if event_log is not None:
        log("Writing event log to " + event_log_file)
        event_log.write(event_log_file)

    if config.ARGS.central:
        log("Running centralized monitor")
        central = run_centralized(pa, trace, UniformDelay(low, high, seed))
        print(central.to_text(pa))
        print("alpha: {:.3f}".format(central.total_messages / max(1, result.total_messages)))
    return 0


def oracle() -> int:
    pa, trace = _load()
    print(oracle_evaluate(pa, trace).to_text(pa))
    return 0


def trace_gen() -> int:
    sim = config.CONFIG.get("simulation", {})
    horizon = to_ticks(config.ARGS.horizon if config.ARGS.horizon is not None else str(sim.get("horizon", 100.0)))
    seed = config.ARGS.seed if config.ARGS.seed is not None else int(sim.get("seed", 0))
    options = {
        "mu_scope": config.ARGS.mu_scope or str(sim.get("mu_scope", "process")),
        "event_kind": config.ARGS.event_kind or str(sim.get("event_kind", "flip")),
        "initial": config.ARGS.initial or str(sim.get("initial_values", "false")),
    }

    trace = generate_trace(parse_ap_table(config.ARGS.props), config.ARGS.mu, horizon, None if seed < 0 else seed,
                           **options)
    write_trace(trace, config.ARGS.outfile)
    log("Wrote {} events over [0, {}) to {}".format(trace.num_events, format_time(horizon), config.ARGS.outfile))
    return 0


def bench() -> int:
    settings = config.CONFIG
    if config.ARGS.campaign is not None:
        settings = config.merge_config(settings, config.read_campaign(config.ARGS.campaign))
    cfg = ExperimentConfig.from_toml(settings)
    if config.ARGS.threads is not None:
        cfg.workers = config.ARGS.threads
        cfg.validate()

    result = run_experiment(cfg)

    print()
    print(render_table(result.summary)[0])
    flagged = int(result.runs["no_decentralized_messages"].sum()) if not result.runs.empty else 0
    if flagged:
        print("{} runs needed no decentralized messages; their α uses a count of 1.".format(flagged))

    if result.skipped:
        print("Skipped buckets:")
        for bucket in result.skipped:
            print("  " + str(bucket))
        return EXIT_SKIPPED_BUCKETS
    return 0
