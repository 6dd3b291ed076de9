import math

import numpy as np
import pytest

from mma_lab.candidates import (
    CandidateSet,
    all_nested,
    all_subsets,
    group_slices,
    grouped_equal,
    grouped_geometric,
    ms_centered,
    ms_window,
    successive,
)


def test_all_nested_and_successive():
    cset = all_nested(5)
    assert cset.sizes == (1, 2, 3, 4, 5)
    assert cset.M == 5
    assert successive(3, 10).sizes == (1, 2, 3)
    with pytest.raises(ValueError):
        successive(11, 10)


def test_group_slices_partition():
    cset = CandidateSet(kind="nested", p=20, sizes=(3, 7, 20))
    lo, hi = group_slices(cset)
    assert lo.tolist() == [0, 3, 7]
    assert hi.tolist() == [3, 7, 20]


def test_grouped_geometric_frozen_sequence():
    # p=100, n=100, t1=t2=1: zeta = 1/log(100), k1 = ceil(log 100) = 5
    cset = grouped_geometric(100, n=100)
    assert cset.sizes == (5, 11, 18, 27, 37, 50, 66, 85, 100)
    assert not cset.degenerate


def test_grouped_geometric_degenerate():
    cset = grouped_geometric(3, n=100)
    assert cset.sizes == (3,)
    assert cset.degenerate


def test_grouped_geometric_widths_grow():
    cset = grouped_geometric(600, n=1000)
    widths = np.diff((0,) + cset.sizes)
    # geometric growth makes interior widths nondecreasing; the final pinned
    # group may be narrower
    assert (np.diff(widths[:-1]) >= 0).all()
    assert cset.sizes[-1] == 600


def test_grouped_equal_multiples():
    cset = grouped_equal(100, n=100)
    assert cset.sizes == tuple(range(5, 100, 5)) + (100,)
    assert grouped_equal(12, n=100000).sizes == (12,)  # k1 = 12 >= p
    assert grouped_equal(10, n=148).sizes == (5, 10)


def test_ms_centered_window():
    # m_hat=10, both factors log(1000) ~ 6.9: floor(10/6.9)=1, floor(6.9*10)=69
    cset = ms_centered(10, math.log(1000), math.log(1000), 600)
    assert cset.sizes == tuple(range(1, 70))
    with pytest.raises(ValueError):
        ms_centered(0, 2.0, 2.0, 10)
    with pytest.raises(ValueError):
        ms_centered(3, 1.0, 2.0, 10)


def test_ms_window_clipping():
    assert ms_window(3, 5, 30).sizes == tuple(range(1, 9))
    assert ms_window(28, 5, 30).sizes == tuple(range(23, 31))
    assert ms_window(2, 0, 30).sizes == (2,)


def test_all_subsets_bitmask_order():
    cset = all_subsets(3)
    assert cset.M == 8
    assert cset.index_sets[0] == frozenset()
    assert cset.index_sets[1] == frozenset({1})
    assert cset.index_sets[5] == frozenset({1, 3})
    assert cset.model_sizes().tolist() == [0, 1, 1, 2, 1, 2, 2, 3]
    with pytest.raises(ValueError):
        all_subsets(13)


def test_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        CandidateSet(kind="nested", p=5, sizes=(1, 3, 3))
    with pytest.raises(ValueError, match="1..p"):
        CandidateSet(kind="nested", p=5, sizes=(1, 6))
    with pytest.raises(ValueError, match="duplicate"):
        CandidateSet(kind="subsets", p=3, index_sets=({1}, {1}))
    with pytest.raises(ValueError, match="kind"):
        CandidateSet(kind="grouped", p=3)


def test_to_json_dict_roundtrip():
    cset = grouped_equal(20, n=100)
    doc = cset.to_json_dict()
    assert doc == {"kind": "nested", "p": 20, "sizes": list(cset.sizes)}
    sub = all_subsets(2)
    assert sub.to_json_dict()["index_sets"] == [[], [1], [2], [1, 2]]
