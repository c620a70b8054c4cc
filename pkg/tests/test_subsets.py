from itertools import combinations
from math import comb

import numpy as np
import pytest

from sl0 import subsets
from sl0.errors import CapExceeded


def _colex(m, k):
    return sorted(combinations(range(m), k), key=lambda c: c[::-1])


def test_unrank_matches_colex_order():
    for m, k in [(6, 0), (6, 1), (6, 3), (7, 7), (9, 4)]:
        got = subsets.unrank(np.arange(comb(m, k)), m, k)
        assert [tuple(r) for r in got] == _colex(m, k)


def test_chunks_cover_range():
    seen = []
    for first, idx in subsets.colex_chunks(10, 3, 5, 100):
        assert first == 5 + len(seen)
        seen.extend(tuple(r) for r in idx)
    assert seen == _colex(10, 3)[5:100]


def test_split_and_map_ranges_in_order():
    assert subsets.split_ranges(10, 3)[0][0] == 0
    assert subsets.split_ranges(10, 3)[-1][1] == 10
    out = subsets.map_ranges(lambda a, b: (a, b), 100, 4)
    assert [o[0] for o in out] == sorted(o[0] for o in out)


def test_cap():
    subsets.check_cap(10, 10)
    with pytest.raises(CapExceeded):
        subsets.check_cap(11, 10)
