from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halton_cbc.padic import (
    MAX_INT,
    BaseMismatchError,
    ExactPoint,
    InvalidBaseError,
    PAdicDigits,
    PAdicError,
    PAdicOverflowError,
    checked_pow,
    digit_reverse,
    is_prime,
    mid_simplified_shift,
    minimal_m,
    monna_inverse,
    monna_inverse_digits_array,
    padic_shift,
    radical_inverse,
    radical_inverse_digits_array,
    simplified_shift,
)

PRIMES = [2, 3, 5, 7, 11]


def frac(p: int, v) -> PAdicDigits:
    return PAdicDigits.from_fraction(p, Fraction(v))


def digits(p: int, max_len: int = 12):
    return st.lists(st.integers(0, p - 1), max_size=max_len).map(lambda d: PAdicDigits(p, tuple(d)))


def test_radical_inverse_examples():
    assert radical_inverse(2, 0).as_fraction() == 0
    x = radical_inverse(2, 6)
    assert x.as_fraction() == Fraction(3, 8)
    assert x.digits == (0, 1, 1)
    y = radical_inverse(3, 5)
    assert y.as_fraction() == Fraction(7, 9)
    assert y.digits == (2, 1)


def test_radical_inverse_rejects_bad_input():
    with pytest.raises(InvalidBaseError):
        radical_inverse(4, 1)
    with pytest.raises(ValueError):
        radical_inverse(2, -1)
    with pytest.raises(PAdicOverflowError):
        radical_inverse(2, MAX_INT + 1)


def test_monna_inverse_examples():
    assert monna_inverse(PAdicDigits.zero(2)) == 0
    assert monna_inverse(frac(2, "3/8")) == 6
    assert monna_inverse(frac(3, "7/9")) == 5


def test_monna_inverse_overflow():
    x = PAdicDigits(2, (1,) * 64)
    with pytest.raises(PAdicOverflowError):
        monna_inverse(x)


def test_padic_shift_examples():
    assert padic_shift(frac(2, "1/2"), frac(2, "1/2")).as_fraction() == Fraction(1, 4)
    assert padic_shift(frac(3, "2/3"), frac(3, "2/3")).as_fraction() == Fraction(4, 9)
    with pytest.raises(BaseMismatchError):
        padic_shift(frac(2, "1/2"), frac(3, "1/3"))


def test_simplified_shift_examples():
    assert simplified_shift(frac(2, "1/2"), frac(2, "1/2"), 1).as_fraction() == 0
    assert simplified_shift(frac(3, "2/3"), frac(3, "2/3"), 1).as_fraction() == Fraction(1, 3)
    x = frac(5, "17/25")
    assert simplified_shift(x, PAdicDigits.zero(5), 2) == x


def test_mid_simplified_shift_examples():
    assert mid_simplified_shift(frac(2, "1/2"), frac(2, "1/2"), 1).as_fraction() == Fraction(1, 4)
    assert mid_simplified_shift(PAdicDigits.zero(2), PAdicDigits.zero(2), 2).as_fraction() == Fraction(1, 8)
    assert mid_simplified_shift(frac(3, "2/3"), frac(3, "2/3"), 1).as_fraction() == Fraction(1, 2)


def test_minimal_m_examples():
    assert minimal_m(2, 8) == 4
    assert minimal_m(3, 8) == 2
    assert minimal_m(2, 1) == 1
    with pytest.raises(ValueError):
        minimal_m(2, 0)


def test_checked_pow_overflow():
    assert checked_pow(2, 62) == 2**62
    with pytest.raises(PAdicOverflowError):
        checked_pow(2, 63)


def test_is_prime_small():
    assert [p for p in range(30) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_canonical_form_strips_trailing_zeros():
    assert PAdicDigits(3, (1, 2, 0, 0)) == PAdicDigits(3, (1, 2))
    with pytest.raises(PAdicError):
        PAdicDigits(3, (3,))


def test_exact_point_is_reduced():
    e = ExactPoint(2, 8)
    assert (e.numerator, e.denominator) == (1, 4)
    assert str(e) == "1/4"
    assert float(e) == 0.25


def test_digit_reverse():
    assert digit_reverse(2, 1, 3) == 4
    assert digit_reverse(3, 5, 2) == 7


@pytest.mark.parametrize("p", PRIMES)
def test_bulk_round_trip_matches_scalar(p):
    ns = np.arange(500, dtype=np.int64)
    width = 12
    d = radical_inverse_digits_array(p, ns, width)
    assert np.array_equal(monna_inverse_digits_array(p, d), ns)
    for n in (0, 1, 17, 499):
        row = tuple(int(v) for v in d[n])
        assert PAdicDigits(p, row) == radical_inverse(p, n)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(0, 10**12))
def test_round_trip_property(p, n):
    assert monna_inverse(radical_inverse(p, n)) == n


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_group_laws(data):
    p = data.draw(st.sampled_from(PRIMES))
    x, y, z = (data.draw(digits(p)) for _ in range(3))
    zero = PAdicDigits.zero(p)
    assert padic_shift(x, zero) == x
    assert padic_shift(zero, x) == x
    assert padic_shift(x, y) == padic_shift(y, x)
    assert padic_shift(padic_shift(x, y), z) == padic_shift(x, padic_shift(y, z))


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.data())
def test_simplified_shift_permutes_grid(p, m, data):
    sigma = data.draw(digits(p, m + 3))
    q = p**m
    image = {simplified_shift(PAdicDigits.from_numerator(p, a, m), sigma, m).as_fraction() for a in range(q)}
    assert image == {Fraction(a, q) for a in range(q)}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 5), st.data())
def test_mid_simplified_strictly_inside(p, m, data):
    x = data.draw(digits(p, 8))
    sigma = data.draw(digits(p, 8))
    v = mid_simplified_shift(x, sigma, m).as_fraction()
    assert 0 < v < 1


def test_padic_shift_overflow():
    big = PAdicDigits(2, (1,) * 63)
    assert monna_inverse(big) == MAX_INT
    with pytest.raises(PAdicOverflowError):
        padic_shift(big, PAdicDigits(2, (1,)))


def test_padic_shift_carry_chain():
    x = PAdicDigits(3, (2, 2, 2))
    assert padic_shift(x, PAdicDigits(3, (1,))).digits == (0, 0, 0, 1)
