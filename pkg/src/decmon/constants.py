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

# === TIME LATTICE =====================================================================================================

TICKS_PER_UNIT = 1_000_000
"""Number of microticks in one time unit. All times are integers on this lattice."""

INFINITY = 2 ** 63 - 1
"""Sentinel for an unbounded interval end and for an absent t_Tr_e"""

TIME_DIGITS = 6
"""Fractional digits used when printing times in units"""

# === AUTOMATA =========================================================================================================

MAX_PROPOSITIONS = 16
"""Largest alphabet we build explicit letter sets for (2^16 letters)"""

# === SIMULATION =======================================================================================================

DEFAULT_HORIZON = 100 * TICKS_PER_UNIT
"""Length of generated traces"""

DEFAULT_DELAY_LOW = 0
"""Lower bound (inclusive) of uniformly drawn message delays"""
DEFAULT_DELAY_HIGH = 2 * TICKS_PER_UNIT
"""Upper bound (exclusive) of uniformly drawn message delays"""

COMPLETION_SLACK_FACTOR = 10
"""
A run may continue for factor * n * max_delay per step after the horizon, where n is the number of processes and
max_delay the largest delay the sampler can draw, but at least DEFAULT_DELAY_HIGH. Messages still in flight after that
indicate a protocol that does not converge.
"""

# === EXPERIMENTS ======================================================================================================

FAMILIES = ("phi1", "phi2", "phi3", "phi4")
"""Property families of the message-efficiency campaign"""

DEFAULT_K_RANGE = (2, 10)
"""Smallest and largest number of followers for phi1 to phi3"""

DEFAULT_MU = (10.0, 100.0, 1000.0)
"""Expected number of state changes per process over the horizon"""

MU_SCOPES = ("process", "system")
"""
Whether mu counts the expected state changes of each process or of the whole system. System-wide changes are spread
evenly over the processes.
"""

EVENT_KINDS = ("flip", "resample")
"""
What one state change does: "flip" negates one uniformly chosen proposition of the process, "resample" draws fresh
values for all of its propositions.
"""

INITIAL_VALUATIONS = ("false", "random")
"""Initial value of every proposition of a generated trace: all false, or a fair coin each"""

DEFAULT_TRACES_PER_BUCKET = 200
"""Traces per (property, outcome, mu)"""

DEFAULT_MAX_ATTEMPTS_FACTOR = 50
"""A bucket gives up after traces_per_bucket * factor generated traces"""

DEFAULT_MASTER_SEED = 2024
"""Seed all campaign seeds are derived from"""
