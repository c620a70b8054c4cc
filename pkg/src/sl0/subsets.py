"""Colexicographic enumeration of k-subsets with rank-addressable chunks.

A subset ``c_0 < c_1 < ... < c_{k-1}`` has colex rank ``sum_i C(c_i, i + 1)``,
so any rank range ``[start, stop)`` can be materialised independently.  That
is what makes long enumerations resumable and lets workers split the work by
disjoint rank ranges.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from math import comb
from typing import Callable, Iterator, TypeVar

import numpy as np

from .errors import CapExceeded

ENUMERATION_CAP = 2_000_000
CHUNK = 1 << 15

T = TypeVar("T")


def count(m: int, k: int) -> int:
    return comb(m, k)


def check_cap(total: int, cap: int, what: str = "subsets") -> None:
    if total > cap:
        raise CapExceeded(f"{total} {what} exceeds enumeration_cap={cap}")


def _binom_table(m: int, k: int, clip: int) -> np.ndarray:
    # table[i, c] = C(c, i + 1), clipped so int64 never overflows
    tab = np.empty((k, m), dtype=np.int64)
    for i in range(k):
        for c in range(m):
            tab[i, c] = min(comb(c, i + 1), clip)
    return tab


def unrank(ranks: np.ndarray, m: int, k: int, table: np.ndarray | None = None) -> np.ndarray:
    """Subsets (rows, ascending indices) with the given colex ranks."""
    ranks = np.asarray(ranks, dtype=np.int64).copy()
    out = np.empty((ranks.size, k), dtype=np.int64)
    if k == 0:
        return out
    if table is None:
        table = _binom_table(m, k, np.iinfo(np.int64).max // 2)
    for i in range(k - 1, -1, -1):
        # largest c with C(c, i + 1) <= rank
        c = np.searchsorted(table[i], ranks, side="right") - 1
        out[:, i] = c
        ranks -= table[i][c]
    return out


def colex_chunks(
    m: int, k: int, start: int = 0, stop: int | None = None, chunk: int = CHUNK
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_rank, subsets)`` blocks covering ranks ``[start, stop)``."""
    total = comb(m, k)
    stop = total if stop is None else min(stop, total)
    if k == 0:
        if start < stop:
            yield 0, np.empty((1, 0), dtype=np.int64)
        return
    table = _binom_table(m, k, total + 1)
    for a in range(start, stop, chunk):
        b = min(a + chunk, stop)
        yield a, unrank(np.arange(a, b, dtype=np.int64), m, k, table)


def split_ranges(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total)) if total else 1
    edges = np.linspace(0, total, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def map_ranges(
    fn: Callable[[int, int], T], total: int, workers: int = 1
) -> list[T]:
    """Apply ``fn(start, stop)`` over disjoint rank ranges, results in range order."""
    ranges = split_ranges(total, workers)
    if workers <= 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), ranges))
