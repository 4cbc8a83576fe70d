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
Exact two-level minimization of boolean functions given as truth tables.

A function of n variables is a boolean numpy array of length 2^n indexed by the letter (bit j = variable j). A cube is
a pair `(mask, value)`: the cube contains letter l iff `l & mask == value`.
"""

from __future__ import annotations

from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

Cube = Tuple[int, int]


def cube_key(cube: Cube, num_vars: int) -> Tuple[int, ...]:
    """Per variable: 0 for a positive literal, 1 for a negative literal, 2 if the variable does not occur."""
    mask, value = cube
    return tuple(2 if not (mask >> j) & 1 else (0 if (value >> j) & 1 else 1) for j in range(num_vars))


def literal_count(cube: Cube) -> int:
    return bin(cube[0]).count("1")


def prime_implicants(table: npt.NDArray[np.bool_]) -> List[Cube]:
    """
    All prime implicants of the function, by Shannon expansion on the highest variable:
    PI(f) = PI(f0 & f1) + !x PI(f0) \\ PI(f0 & f1) + x PI(f1) \\ PI(f0 & f1).

    :param table: Truth table of length 2^n
    :return: Prime implicants in canonical order (see `cube_key`)
    """
    num_vars = _num_vars(table)
    primes = _primes(num_vars, np.ascontiguousarray(table, dtype=np.bool_).tobytes())
    return sorted(primes, key=lambda c: cube_key(c, num_vars))


@lru_cache(maxsize=4096)
def _primes(num_vars: int, table_bytes: bytes) -> Tuple[Cube, ...]:
    table = np.frombuffer(table_bytes, dtype=np.bool_)
    if not table.any():
        return ()
    if table.all():
        return ((0, 0),)

    half = len(table) // 2
    bit = 1 << (num_vars - 1)
    low = table[:half]
    high = table[half:]
    both = _primes(num_vars - 1, (low & high).tobytes())
    shared = set(both)

    result = list(both)
    result.extend((mask | bit, value) for mask, value in _primes(num_vars - 1, low.tobytes()) if (mask, value) not in shared)
    result.extend(
        (mask | bit, value | bit) for mask, value in _primes(num_vars - 1, high.tobytes()) if (mask, value) not in shared
    )
    return tuple(result)


def cover_matrix(cubes: Sequence[Cube], letters: npt.NDArray[np.int64]) -> npt.NDArray[np.bool_]:
    """
    :return: Boolean matrix (cubes x letters); entry (i, j) is True iff cube i contains letters[j]
    """
    if not cubes:
        return np.zeros((0, len(letters)), dtype=np.bool_)
    masks = np.array([c[0] for c in cubes], dtype=np.int64)
    values = np.array([c[1] for c in cubes], dtype=np.int64)
    return (letters[None, :] & masks[:, None]) == values[:, None]


def minimal_cover(table: npt.NDArray[np.bool_]) -> List[Cube]:
    """
    A sum of products with the fewest terms, then the fewest literals, that equals the function exactly. Ties are
    resolved by the canonical prime order, so the result is deterministic.

    :param table: Truth table of length 2^n
    :return: Cubes in canonical order; empty for the constant false function
    """
    num_vars = _num_vars(table)
    primes = prime_implicants(table)
    minterms = np.flatnonzero(table).astype(np.int64)
    if not primes:
        return []

    covers = cover_matrix(primes, minterms)
    literals = [literal_count(p) for p in primes]
    best: List[Optional[Tuple[int, int, Tuple[int, ...]]]] = [None]

    def search(uncovered: npt.NDArray[np.bool_], chosen: Tuple[int, ...]) -> None:
        if not uncovered.any():
            cost = (len(chosen), sum(literals[i] for i in chosen), tuple(sorted(chosen)))
            if best[0] is None or cost < best[0]:
                best[0] = cost
            return
        if best[0] is not None and len(chosen) + 1 > best[0][0]:
            return

        # branch on the minterm with the fewest covering primes; a single one is essential
        counts = covers[:, uncovered].sum(axis=0)
        column = np.flatnonzero(uncovered)[int(np.argmin(counts))]
        for prime in np.flatnonzero(covers[:, column]):
            search(uncovered & ~covers[prime], chosen + (int(prime),))

    search(np.ones(len(minterms), dtype=np.bool_), ())
    assert best[0] is not None
    return [primes[i] for i in best[0][2]]


def _num_vars(table: npt.NDArray[np.bool_]) -> int:
    size = len(table)
    if size == 0 or size & (size - 1):
        raise ValueError("truth table length must be a power of two, got " + str(size))
    return size.bit_length() - 1
