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
This module contains numba functions that are called by the protocol automaton and the offline monitor. The automaton
classes hold the data, these functions do the dense table work.
"""

from numba import njit
import numpy as np
import numpy.typing as npt
from typing import Tuple


@njit
def first_enabled_njit(
        num_locations: int,
        num_letters: int,
        sources: npt.NDArray[np.int64],
        pos_masks: npt.NDArray[np.int64],
        neg_masks: npt.NDArray[np.int64]
) -> npt.NDArray[np.int64]:
    """
    For every (location, letter), the lowest transition id whose conjunct the letter satisfies, or -1 if the letter
    stays in the location.
    """
    result = np.full((num_locations, num_letters), -1, dtype=np.int64)
    for tr in range(len(sources) - 1, -1, -1):
        for letter in range(num_letters):
            if (letter & pos_masks[tr]) == pos_masks[tr] and (letter & neg_masks[tr]) == 0:
                result[sources[tr], letter] = tr
    return result


@njit
def walk_njit(
        first_enabled: npt.NDArray[np.int64],
        targets: npt.NDArray[np.int64],
        terminal: npt.NDArray[np.bool_],
        start: int,
        letters: npt.NDArray[np.int64],
        max_chain: int
) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], int, bool]:
    """
    Run the protocol automaton over a sequence of global-state segments. Within one segment the walk keeps taking
    transitions until no outgoing transition is enabled or a terminal location is reached.

    :return: Segment index and transition id of every location change, the final location and an overflow flag that
    is set if more than `max_chain` changes happened within one segment
    """
    capacity = len(letters) * (max_chain + 1) + 1
    seg_out = np.empty(capacity, dtype=np.int64)
    tr_out = np.empty(capacity, dtype=np.int64)
    count = 0
    location = start

    if terminal[location]:
        return seg_out[:0], tr_out[:0], location, False

    for seg in range(len(letters)):
        chain = 0
        while True:
            tr = first_enabled[location, letters[seg]]
            if tr < 0:
                break
            seg_out[count] = seg
            tr_out[count] = tr
            count += 1
            location = targets[tr]
            if terminal[location]:
                return seg_out[:count], tr_out[:count], location, False
            chain += 1
            if chain > max_chain:
                return seg_out[:count], tr_out[:count], location, True

    return seg_out[:count], tr_out[:count], location, False
