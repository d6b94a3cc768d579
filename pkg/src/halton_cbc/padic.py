"""Exact base-p digit arithmetic on [0, 1).

A p-adic rational ``x = sum_r z_r / p**(r+1)`` is stored as the digit tuple
``(z_0, z_1, ..., z_{L-1})``.  Index ``r`` multiplies ``p**-(r+1)``, so the
first digit is the most significant fractional digit.  Under the Monna map
the same tuple is the base-p expansion ``sum_r z_r p**r`` of a nonnegative
integer, read least-significant digit first.  Adding two such integers
therefore carries from index ``r`` to ``r + 1``, i.e. toward the *less*
significant fractional positions.

Only finite expansions are produced; p-adic rationals always use their
finite representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

__all__ = [
    "MAX_INT",
    "PAdicError",
    "InvalidBaseError",
    "BaseMismatchError",
    "PAdicOverflowError",
    "is_prime",
    "check_prime",
    "checked_pow",
    "minimal_m",
    "digit_reverse",
    "PAdicDigits",
    "ExactPoint",
    "radical_inverse",
    "monna_inverse",
    "padic_shift",
    "simplified_shift",
    "mid_simplified_shift",
    "radical_inverse_digits_array",
    "monna_inverse_digits_array",
]

# Largest integer accepted anywhere in the digit arithmetic (signed 64-bit).
MAX_INT = 2**63 - 1


class PAdicError(ValueError):
    """Base class for digit-arithmetic errors."""


class InvalidBaseError(PAdicError):
    pass


class BaseMismatchError(PAdicError):
    pass


class PAdicOverflowError(PAdicError, OverflowError):
    pass


@lru_cache(maxsize=1024)
def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def check_prime(p: int) -> int:
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
        raise InvalidBaseError(f"base must be an integer, got {p!r}")
    p = int(p)
    if not is_prime(p):
        raise InvalidBaseError(f"base {p} is not prime")
    return p


def _check_int(value: int, what: str = "value") -> int:
    if value > MAX_INT:
        raise PAdicOverflowError(f"{what} {value} exceeds the 64-bit integer range")
    return value


def checked_pow(p: int, m: int) -> int:
    """``p**m`` with an overflow check against :data:`MAX_INT`."""
    return _check_int(p**m, f"{p}**{m}")


def minimal_m(p: int, n: int) -> int:
    """Smallest ``m >= 1`` with ``n < p**m`` (integer loop, no logarithms)."""
    if p < 2:
        raise InvalidBaseError(f"base must be >= 2, got {p}")
    if n < 1:
        raise ValueError(f"N must be positive, got {n}")
    m, q = 1, p
    while q <= n:
        q *= p
        m += 1
        _check_int(q, f"{p}**{m}")
    return m


def digit_reverse(p: int, k: int, m: int) -> int:
    """Reverse the ``m`` base-p digits of ``0 <= k < p**m``.

    ``digit_reverse(p, k, m) / p**m`` is the radical inverse of ``k``, and
    ``digit_reverse(p, a, m)`` is the Monna preimage of ``a / p**m``.
    """
    out = 0
    for _ in range(m):
        k, r = divmod(k, p)
        out = out * p + r
    return out


@dataclass(frozen=True)
class PAdicDigits:
    """Finite base-p expansion of a number in [0, 1).

    ``digits[r]`` multiplies ``base**-(r+1)``.  Trailing zeros are stripped
    on construction so that equal values compare equal.
    """

    base: int
    digits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        p = check_prime(self.base)
        digits = tuple(int(z) for z in self.digits)
        for z in digits:
            if not 0 <= z < p:
                raise PAdicError(f"digit {z} out of range for base {p}")
        while digits and digits[-1] == 0:
            digits = digits[:-1]
        object.__setattr__(self, "base", p)
        object.__setattr__(self, "digits", digits)

    @classmethod
    def _trusted(cls, base: int, digits: tuple[int, ...]) -> PAdicDigits:
        # Caller guarantees a prime base and canonical, in-range digits.
        obj = object.__new__(cls)
        object.__setattr__(obj, "base", base)
        object.__setattr__(obj, "digits", digits)
        return obj

    @classmethod
    def zero(cls, base: int) -> PAdicDigits:
        return cls(base, ())

    @classmethod
    def from_numerator(cls, base: int, a: int, m: int) -> PAdicDigits:
        """The grid point ``a / base**m`` for ``0 <= a < base**m``."""
        q = checked_pow(check_prime(base), m)
        if not 0 <= a < q:
            raise PAdicError(f"numerator {a} outside [0, {base}**{m})")
        return radical_inverse(base, digit_reverse(base, a, m))

    @classmethod
    def from_fraction(cls, base: int, value: Fraction | int) -> PAdicDigits:
        value = Fraction(value)
        if not 0 <= value < 1:
            raise PAdicError(f"{value} is not in [0, 1)")
        den = value.denominator
        m = 0
        while den % base == 0:
            den //= base
            m += 1
        if den != 1:
            raise PAdicError(f"{value} is not a {base}-adic rational")
        return cls.from_numerator(base, value.numerator, m)

    def __len__(self) -> int:
        return len(self.digits)

    def numerator(self, m: int | None = None) -> int:
        """Numerator ``a`` with ``self == a / base**m`` (default ``m = len``)."""
        if m is None:
            m = len(self.digits)
        if m < len(self.digits):
            raise PAdicError(f"{self} needs {len(self.digits)} digits, not {m}")
        a = 0
        for z in self.digits:
            a = a * self.base + z
        return a * self.base ** (m - len(self.digits))

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator(), self.base ** len(self.digits))

    def __float__(self) -> float:
        return float(self.as_fraction())

    def __str__(self) -> str:
        return f"{self.as_fraction()} (base {self.base})"


@dataclass(frozen=True)
class ExactPoint:
    """Exact rational coordinate in [0, 1), kept in lowest terms."""

    numerator: int
    denominator: int = 1

    def __post_init__(self) -> None:
        num, den = int(self.numerator), int(self.denominator)
        if den <= 0:
            raise ValueError(f"denominator must be positive, got {den}")
        if not 0 <= num < den:
            raise ValueError(f"{num}/{den} is not in [0, 1)")
        g = gcd(num, den)
        object.__setattr__(self, "numerator", num // g)
        object.__setattr__(self, "denominator", den // g)

    @classmethod
    def from_fraction(cls, value: Fraction) -> ExactPoint:
        return cls(value.numerator, value.denominator)

    @classmethod
    def from_digits(cls, x: PAdicDigits) -> ExactPoint:
        return cls(x.numerator(), x.base ** len(x.digits))

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        # int/int true division is correctly rounded
        return self.numerator / self.denominator

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


def radical_inverse(p: int, n: int) -> PAdicDigits:
    """phi_p(n): the base-p digits of ``n`` mirrored across the radix point."""
    p = check_prime(p)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    _check_int(n, "index")
    digits = []
    while n:
        n, r = divmod(n, p)
        digits.append(r)
    return PAdicDigits._trusted(p, tuple(digits))


def monna_inverse(x: PAdicDigits) -> int:
    """phi_p^+(x): the integer whose base-p digits, low first, are ``x.digits``."""
    p = x.base
    n = 0
    for z in reversed(x.digits):
        n = n * p + z
    return _check_int(n, "Monna preimage")


def _same_base(x: PAdicDigits, sigma: PAdicDigits) -> int:
    if x.base != sigma.base:
        raise BaseMismatchError(f"bases differ: {x.base} vs {sigma.base}")
    return x.base


def padic_shift(x: PAdicDigits, sigma: PAdicDigits) -> PAdicDigits:
    """x (+)_p sigma: digit-wise addition in Z_p, equal to adding the Monna preimages."""
    p = _same_base(x, sigma)
    a, b = (x.digits, sigma.digits) if len(x) >= len(sigma) else (sigma.digits, x.digits)
    out = list(a)
    carry = 0
    # carries run from index r to r + 1, i.e. toward less significant fractional digits
    for r, z in enumerate(b):
        carry, out[r] = divmod(a[r] + z + carry, p)
    r = len(b)
    while carry and r < len(out):
        carry, out[r] = divmod(out[r] + carry, p)
        r += 1
    if carry:
        out.append(carry)
    result = PAdicDigits._trusted(p, tuple(out))
    if len(out) * p.bit_length() > 62:
        monna_inverse(result)  # raises if the Monna preimage leaves the integer range
    return result


def simplified_shift(x: PAdicDigits, sigma: PAdicDigits, m: int) -> PAdicDigits:
    """The p-adic shift truncated to its ``m`` most significant digits."""
    p = _same_base(x, sigma)
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    q = checked_pow(p, m)
    # truncating the Z_p sum to m digits is addition mod p**m of the truncated operands
    xs = monna_inverse(PAdicDigits._trusted(p, x.digits[:m]))
    ss = monna_inverse(PAdicDigits._trusted(p, sigma.digits[:m]))
    return radical_inverse(p, (xs + ss) % q)


def mid_simplified_shift(x: PAdicDigits, sigma: PAdicDigits, m: int) -> ExactPoint:
    """Simplified shift plus the cell-centre offset ``1 / (2 p**m)``."""
    t = simplified_shift(x, sigma, m)
    q = x.base**m
    return ExactPoint(2 * t.numerator(m) + 1, 2 * q)


def radical_inverse_digits_array(p: int, ns: np.ndarray, width: int) -> np.ndarray:
    """Bulk radical inverse: row ``i`` holds the ``width`` digits of ``phi_p(ns[i])``.

    Digit columns follow the :class:`PAdicDigits` order (column ``r`` is
    ``z_r``).  Values must satisfy ``0 <= ns < p**width``.
    """
    p = check_prime(p)
    checked_pow(p, width)
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and (ns.min() < 0 or ns.max() >= p**width):
        raise PAdicError(f"values must lie in [0, {p}**{width})")
    out = np.empty(ns.shape + (width,), dtype=np.int64)
    rest = ns.copy()
    for r in range(width):
        rest, out[..., r] = np.divmod(rest, p)
    return out


def monna_inverse_digits_array(p: int, digits: np.ndarray) -> np.ndarray:
    """Bulk Monna inverse of digit rows produced by :func:`radical_inverse_digits_array`."""
    p = check_prime(p)
    digits = np.asarray(digits, dtype=np.int64)
    width = digits.shape[-1]
    checked_pow(p, width)
    out = np.zeros(digits.shape[:-1], dtype=np.int64)
    for r in range(width - 1, -1, -1):
        out = out * p + digits[..., r]
    return out
