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
import sys

import argparse
from importlib import resources
from typing import Any, List, Mapping, MutableMapping, Optional, Tuple

from appdirs import user_config_dir
from tomlkit import parse, dumps, TOMLDocument

from ..constants import EVENT_KINDS, INITIAL_VALUATIONS, MU_SCOPES


ARGS: argparse.Namespace
"""Parsed command line arguments"""
CONFIG_FILE: str
"""Path of the configuration file in use"""
CONFIG: TOMLDocument
"""The active configuration"""


def init(argv: Optional[List[str]] = None) -> None:
    global ARGS, CONFIG_FILE, CONFIG
    CONFIG_FILE, CONFIG = parse_config()
    ARGS = parse_args(argv)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="decmon",
        description="Decentralized runtime verification of LTL properties over asynchronous processes"
    )

    parser.add_argument("-v", "--verbose", action='store_true',
                        help="Print debug messages of the library")

    subparsers = parser.add_subparsers(title="subcommands", dest="subcommand")

    # Subparser compile

    compile_parser = subparsers.add_parser(
        "compile",
        help="Compile an LTL formula into a protocol automaton",
        description="Compile an LTL formula into a protocol automaton and write it as JSON and DOT"
    )
    compile_parser.add_argument("formula", help="Formula, e.g. '!a U (a U (b & c))'")
    compile_parser.add_argument("-p", "--props", default=None,
                                help="Proposition owners, e.g. 'a=0,b=1,c=2' (default: one process per proposition)")
    compile_parser.add_argument("-o", "--outfile", default="automaton",
                                help="Output prefix; writes <prefix>.json and <prefix>.dot (default: automaton)")

    # Subparser run

    run_parser = subparsers.add_parser(
        "run",
        help="Monitor a trace with the decentralized protocol",
        description="Monitor a trace with the decentralized protocol and print the result"
    )
    _add_source_arguments(run_parser)
    run_parser.add_argument("-s", "--seed", type=int, default=None,
                            help="Seed of the delay generator (default: [simulation] seed)")
    run_parser.add_argument("-e", "--event-log", default=None,
                            help="Write the event log as JSON lines to this file")
    run_parser.add_argument("--central", action='store_true',
                            help="Also run the centralized baseline with the same delay seed")

    # Subparser oracle

    oracle_parser = subparsers.add_parser(
        "oracle",
        help="Evaluate a trace offline",
        description="Evaluate a trace by running the automaton over its global state"
    )
    _add_source_arguments(oracle_parser)

    # Subparser trace-gen

    trace_parser = subparsers.add_parser(
        "trace-gen",
        help="Generate a random trace",
        description="Generate a random trace with Poisson distributed state changes"
    )
    trace_parser.add_argument("-p", "--props", required=True,
                              help="Proposition owners, e.g. 'a=0,b1=1,b2=2'")
    trace_parser.add_argument("-m", "--mu", type=float, required=True,
                              help="Expected number of state changes per process or system-wide")
    trace_parser.add_argument("--horizon", default=None,
                              help="Trace length in time units (default: [simulation] horizon)")
    trace_parser.add_argument("-s", "--seed", type=int, default=None,
                              help="Seed (default: [simulation] seed)")
    trace_parser.add_argument("--mu-scope", choices=MU_SCOPES, default=None,
                              help="Count mu per process or for the whole system (default: [simulation] mu_scope)")
    trace_parser.add_argument("--event-kind", choices=EVENT_KINDS, default=None,
                              help="What one state change does (default: [simulation] event_kind)")
    trace_parser.add_argument("--initial", choices=INITIAL_VALUATIONS, default=None,
                              help="Initial values of the propositions (default: [simulation] initial_values)")
    trace_parser.add_argument("-o", "--outfile", default="trace.txt",
                              help="Output file (default: trace.txt)")

    # Subparser bench

    bench_parser = subparsers.add_parser(
        "bench",
        help="Run the message-efficiency campaign",
        description="Run the message-efficiency campaign and print the α table"
    )
    bench_parser.add_argument("-c", "--campaign", default=None,
                              help="TOML file whose tables override the active configuration")
    bench_parser.add_argument("-t", "--threads", type=int, default=None,
                              help="Number of worker processes (default: [experiment] workers)")

    return parser.parse_args(argv)


def _add_source_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("source", help="Formula or compiled JSON automaton")
    parser.add_argument("trace", help="Trace file")
    parser.add_argument("-p", "--props", default=None,
                        help="Proposition owners when SOURCE is a formula (default: taken from the trace)")


def parse_config() -> Tuple[str, TOMLDocument]:
    # Check several locations for an existing config file
    locations = [
        os.environ.get("DECMON_CONFIG", ""),
        "decmon.toml",
        os.path.join(user_config_dir("decmon"), "decmon.toml")
    ]

    for config_file in locations:
        try:
            with open(config_file) as config:
                return config_file, parse(config.read())
        except IOError:
            pass

    # If we cannot find any, we create a new default configuration file
    print("Unable to find config file.")

    default_config = parse(resources.read_text("decmon.ui", "config.toml"))
    config_file = os.path.join(user_config_dir("decmon"), "decmon.toml")

    try:
        os.makedirs(user_config_dir("decmon"), exist_ok=True)
        with open(config_file, "w") as f:
            f.write(dumps(default_config))
    except IOError:
        print("Unable to write a default configuration file. Using the built-in defaults.\n")
        return "<built-in>", default_config

    print("Created a new default configuration file at " + config_file + ".\n")
    return config_file, default_config


def read_campaign(path: str) -> TOMLDocument:
    try:
        with open(path) as campaign:
            return parse(campaign.read())
    except IOError as err:
        print("Error: Unable to read campaign file " + path + " (" + str(err) + ").")
        sys.exit(1)


def merge_config(base: MutableMapping[str, Any], override: Mapping[str, Any]) -> MutableMapping[str, Any]:
    """
    Overwrite `base` key by key with the values of `override`. Nested tables are merged, everything else is replaced.
    """
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), MutableMapping):
            merge_config(base[key], value)
        else:
            base[key] = value
    return base
