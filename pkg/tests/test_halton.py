from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from halton_cbc.halton import (
    BaseVector,
    PointSet,
    first_primes,
    halton_points,
    mid_simplified_column,
    mid_simplified_columns,
    shifted_halton_points,
    simplified_numerators,
)
from halton_cbc.padic import PAdicDigits, mid_simplified_shift, minimal_m, radical_inverse, simplified_shift


def col(ps: PointSet, j: int = 0) -> list[Fraction]:
    return [x.as_fraction() for x in ps.column(j)]


def test_first_primes():
    assert first_primes(5) == (2, 3, 5, 7, 11)
    assert BaseVector.first(3).primes == (2, 3, 5)


def test_base_vector_validation():
    with pytest.raises(ValueError):
        BaseVector((2, 2))
    with pytest.raises(ValueError):
        BaseVector((2, 9))
    with pytest.raises(ValueError):
        BaseVector(())


def test_halton_examples():
    assert col(halton_points([2], 4)) == [0, Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)]
    ps = halton_points([2, 3], 1)
    assert ps.count == 1 and [x.as_fraction() for x in ps.rows[0]] == [0, 0]
    assert set(col(halton_points([3], 9))) == {Fraction(a, 9) for a in range(9)}


def test_zero_shift_full_mode_is_identity():
    plain = halton_points([2, 3, 5], 20)
    shifted = shifted_halton_points([2, 3, 5], 20, [0, 0, 0], mode="full")
    assert shifted == plain


def test_shift_examples():
    simp = shifted_halton_points([2], 2, [1], mode="simplified", ms=[2])
    assert col(simp) == [Fraction(1, 4), Fraction(3, 4)]
    mid = shifted_halton_points([2], 2, [1], mode="mid-simplified", ms=[2])
    assert col(mid) == [Fraction(3, 8), Fraction(7, 8)]


@pytest.mark.parametrize("p,n", [(2, 5), (3, 10), (5, 7), (7, 3)])
def test_vectorised_columns_match_exact_ops(p, n):
    ps = shifted_halton_points([p], n, [0], mode="mid-simplified")
    m = minimal_m(p, n)
    cols = mid_simplified_columns(p, n, m)
    for a in range(p**m):
        sigma = PAdicDigits.from_numerator(p, a, m)
        exact = [float(mid_simplified_shift(radical_inverse(p, k), sigma, m)) for k in range(n)]
        assert np.array_equal(cols[a], np.array(exact))
        assert np.array_equal(mid_simplified_column(p, n, a, m), cols[a])
        simp = [simplified_shift(radical_inverse(p, k), sigma, m).numerator(m) for k in range(n)]
        assert list(simplified_numerators(p, n, a, m)) == simp
    assert list(ps.to_array()[:, 0]) == list(cols[0])


def test_csv_export():
    text = halton_points([2, 3], 3).to_csv()
    assert text == "n,x1,x2\n0,0/1,0/1\n1,1/2,1/3\n2,1/4,2/3\n"
    assert "\r" not in text
    dec = halton_points([2], 2).to_csv(exact=False).splitlines()
    assert dec[0] == "n,x1" and float(dec[2].split(",")[1]) == 0.5


def test_point_set_round_trip():
    ps = halton_points([2, 3], 6)
    back = PointSet.from_fractions([[x.as_fraction() for x in row] for row in ps.rows])
    assert back == ps


def test_rejects_bad_shift():
    with pytest.raises(ValueError):
        shifted_halton_points([2], 4, [8], mode="mid-simplified")
    with pytest.raises(ValueError):
        shifted_halton_points([2], 4, [0], mode="bogus")
