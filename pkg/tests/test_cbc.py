from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from halton_cbc import cbc
from halton_cbc.cbc import ShiftVector, cbc_construct, rescan_dimension, select_min
from halton_cbc.verify import exhaustive_search_1d
from halton_cbc.wce import WeightSequence, squared_wce


def test_select_min_tie_break():
    assert select_min(np.array([0.3, 0.1, 0.1])) == 1
    assert select_min(np.array([0.2, 0.2 + 1e-17, 0.5])) == 0
    assert select_min(np.array([0.2 + 1e-16, 0.2])) == 0
    assert select_min(np.array([0.2 + 1e-9, 0.2])) == 1


def test_one_dim_matches_exhaustive_n4():
    res = cbc_construct([2], 4, WeightSequence((1.0,)))
    a, err = exhaustive_search_1d(2, 4, 1.0)
    assert res.shift.ms == (3,)
    assert res.shift.numerators == (a,)
    assert res.squared_errors[0] == pytest.approx(err, rel=1e-12)


def test_two_dim_within_bound():
    res = cbc_construct([2, 3], 4, WeightSequence((1.0, 0.5)))
    assert all(res.within_bound)
    assert len(res.shift) == 2


@pytest.mark.parametrize("p", [2, 3, 5])
def test_single_point_tie(p):
    res = cbc_construct([p], 1, WeightSequence((1.0,)))
    a, _ = exhaustive_search_1d(p, 1, 1.0)
    assert res.shift.numerators == (a,)
    assert res.cbc_bounds == [None] and res.within_bound == [None]


def test_single_point_base2_value():
    res = cbc_construct([2], 1, WeightSequence((1.0,)))
    assert res.shift.numerators == (0,)
    # both candidates {1/4} and {3/4} give gamma * (1/3 - x + x^2) = 7/48
    assert res.squared_errors[0] == pytest.approx(7 / 48, rel=1e-12)
    assert squared_wce([[0.75]], [1.0]) == pytest.approx(7 / 48, rel=1e-12)


def test_rescan():
    w = WeightSequence((1.0, 0.5))
    res = cbc_construct([2, 3], 4, w)
    assert rescan_dimension(res, 1) == res.shift.numerators[0]
    assert rescan_dimension(res, 2) == res.shift.numerators[1]
    with pytest.raises(IndexError):
        rescan_dimension(res, 3)


def test_cached_matches_direct_and_naive():
    w = WeightSequence.power_family(3)
    fast = cbc_construct([2, 3, 5], 12, w)
    slow = cbc_construct([2, 3, 5], 12, w, naive=True)
    assert fast.shift == slow.shift
    for e_fast, e_cached in zip(fast.squared_errors, fast.cached_errors):
        assert e_cached == pytest.approx(e_fast, rel=1e-12)


def test_thread_count_does_not_change_result(monkeypatch):
    monkeypatch.setattr(cbc, "_CHUNK", 16)
    w = WeightSequence.power_family(2)
    one = cbc_construct([2, 3], 40, w, threads=1)
    four = cbc_construct([2, 3], 40, w, threads=4)
    assert one.shift == four.shift
    assert one.squared_errors == four.squared_errors


def test_ms_override_and_errors():
    w = WeightSequence.power_family(2)
    res = cbc_construct([2, 3], 4, w, ms=[4, 3])
    assert res.candidate_counts == [16, 27]
    x = np.column_stack(cbc.shift_columns(res.shift, 4))
    assert squared_wce(x, w) == res.squared_errors[-1]
    with pytest.raises(ValueError):
        cbc_construct([2], 0, w)
    with pytest.raises(ValueError):
        cbc_construct([2, 3, 5], 4, w)


def test_shift_vector():
    sv = ShiftVector((2, 3), (2, 1), (3, 2))
    assert sv.sigmas == (Fraction(3, 4), Fraction(2, 3))
    assert sv.to_dict()["sigmas"] == ["3/4", "2/3"]
    with pytest.raises(ValueError):
        ShiftVector((2,), (2,), (4,))
