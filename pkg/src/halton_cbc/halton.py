"""Halton point sets, plain or under the componentwise p-adic shifts.

Shifts are passed as integer numerators ``a_j`` with ``sigma_j = a_j / p_j**m_j``.
The exact generators build :class:`~halton_cbc.padic.ExactPoint` rows through
the digit arithmetic in :mod:`halton_cbc.padic`; the ``*_column`` helpers
produce the same coordinates as float arrays straight from integer numerators
and are what the search loops use.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .padic import (
    ExactPoint,
    PAdicDigits,
    PAdicError,
    check_prime,
    checked_pow,
    minimal_m,
    mid_simplified_shift,
    padic_shift,
    radical_inverse,
    simplified_shift,
)

__all__ = [
    "MODES",
    "BaseVector",
    "PointSet",
    "first_primes",
    "halton_points",
    "shifted_halton_points",
    "resolve_ms",
    "digit_reverse_array",
    "simplified_numerators",
    "mid_simplified_column",
    "mid_simplified_columns",
]

MODES = ("full", "simplified", "mid-simplified")


def first_primes(s: int) -> tuple[int, ...]:
    out: list[int] = []
    k = 2
    while len(out) < s:
        if all(k % q for q in out if q * q <= k):
            out.append(k)
        k += 1
    return tuple(out)


@dataclass(frozen=True)
class BaseVector:
    """Pairwise distinct prime bases ``(p_1, ..., p_s)``."""

    primes: tuple[int, ...]

    def __post_init__(self) -> None:
        primes = tuple(check_prime(p) for p in self.primes)
        if not primes:
            raise ValueError("at least one base is required")
        if len(set(primes)) != len(primes):
            raise ValueError(f"bases must be pairwise distinct, got {primes}")
        object.__setattr__(self, "primes", primes)

    @classmethod
    def first(cls, s: int) -> BaseVector:
        return cls(first_primes(s))

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def __getitem__(self, j):
        return self.primes[j]

    def prefix(self, d: int) -> BaseVector:
        return BaseVector(self.primes[:d])


def _as_bases(bases: BaseVector | Sequence[int]) -> BaseVector:
    return bases if isinstance(bases, BaseVector) else BaseVector(tuple(bases))


@dataclass(frozen=True)
class PointSet:
    """``N`` exact points in ``[0, 1)**s``; ``rows[n][j]`` is coordinate ``j`` of point ``n``."""

    rows: tuple[tuple[ExactPoint, ...], ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("empty point set")
        s = len(self.rows[0])
        if any(len(r) != s for r in self.rows):
            raise ValueError("ragged point set")

    @property
    def count(self) -> int:
        return len(self.rows)

    @property
    def dimension(self) -> int:
        return len(self.rows[0])

    def to_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.rows], dtype=np.float64)

    def column(self, j: int) -> tuple[ExactPoint, ...]:
        return tuple(row[j] for row in self.rows)

    def to_csv(self, exact: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [f"x{j + 1}" for j in range(self.dimension)])
        for n, row in enumerate(self.rows):
            if exact:
                w.writerow([n] + [str(x) for x in row])
            else:
                w.writerow([n] + [format(float(x), ".17g") for x in row])
        return buf.getvalue()

    @classmethod
    def from_fractions(cls, rows: Iterable[Iterable]) -> PointSet:
        from fractions import Fraction

        return cls(tuple(tuple(ExactPoint.from_fraction(Fraction(x)) for x in r) for r in rows))


def halton_points(bases: BaseVector | Sequence[int], n: int) -> PointSet:
    """First ``n`` points ``(phi_{p_1}(k), ..., phi_{p_s}(k))`` of the Halton sequence."""
    bases = _as_bases(bases)
    if n < 1:
        raise ValueError(f"N must be positive, got {n}")
    for p in bases:
        minimal_m(p, n)  # overflow guard
    return PointSet(
        tuple(tuple(ExactPoint.from_digits(radical_inverse(p, k)) for p in bases) for k in range(n))
    )


def resolve_ms(bases: BaseVector, n: int, ms: Sequence[int] | None = None) -> tuple[int, ...]:
    """Per-dimension digit counts, defaulting to the minimal ``m_j`` with ``n < p_j**m_j``."""
    if ms is None:
        return tuple(minimal_m(p, n) for p in bases)
    ms = tuple(int(m) for m in ms)
    if len(ms) != len(bases):
        raise ValueError(f"expected {len(bases)} digit counts, got {len(ms)}")
    for p, m in zip(bases, ms):
        if m < 1:
            raise ValueError(f"m must be positive, got {m}")
        checked_pow(p, m)
    return ms


def _shift_parts(shift, bases: BaseVector, n: int, ms):
    # Accept a ShiftVector-like object (numerators + ms) or a bare numerator sequence.
    if hasattr(shift, "numerators"):
        numerators = tuple(shift.numerators)
        if ms is None:
            ms = getattr(shift, "ms", None)
    else:
        numerators = tuple(int(a) for a in shift)
    if len(numerators) != len(bases):
        raise ValueError(f"shift has {len(numerators)} components, bases have {len(bases)}")
    ms = resolve_ms(bases, n, ms)
    for p, m, a in zip(bases, ms, numerators):
        if not 0 <= a < p**m:
            raise PAdicError(f"shift numerator {a} outside [0, {p}**{m})")
    return numerators, ms


def shifted_halton_points(
    bases: BaseVector | Sequence[int],
    n: int,
    shift,
    mode: str = "mid-simplified",
    ms: Sequence[int] | None = None,
) -> PointSet:
    """Apply ``mode`` (``full``, ``simplified`` or ``mid-simplified``) coordinatewise.

    ``shift`` is a ShiftVector or a sequence of numerators ``a_j``; ``ms``
    defaults to the shift's own digit counts, then to the minimal ones.
    """
    bases = _as_bases(bases)
    if mode not in MODES:
        raise ValueError(f"unknown shift mode {mode!r}; expected one of {MODES}")
    plain = halton_points(bases, n)
    numerators, ms = _shift_parts(shift, bases, n, ms)
    sigmas = [PAdicDigits.from_numerator(p, a, m) for p, a, m in zip(bases, numerators, ms)]

    def apply(x: ExactPoint, sigma: PAdicDigits, m: int) -> ExactPoint:
        xd = PAdicDigits.from_fraction(sigma.base, x.as_fraction())
        if mode == "full":
            return ExactPoint.from_digits(padic_shift(xd, sigma))
        if mode == "simplified":
            return ExactPoint.from_digits(simplified_shift(xd, sigma, m))
        return mid_simplified_shift(xd, sigma, m)

    return PointSet(
        tuple(
            tuple(apply(x, sigma, m) for x, sigma, m in zip(row, sigmas, ms))
            for row in plain.rows
        )
    )


def digit_reverse_array(p: int, ks: np.ndarray, m: int) -> np.ndarray:
    """Vectorised :func:`~halton_cbc.padic.digit_reverse` on int64 arrays."""
    rest = np.asarray(ks, dtype=np.int64).copy()
    out = np.zeros_like(rest)
    for _ in range(m):
        rest, r = np.divmod(rest, p)
        out = out * p + r
    return out


def simplified_numerators(p: int, n: int, numerators, m: int) -> np.ndarray:
    """Numerators over ``p**m`` of ``phi_p(k) (+)simp a/p**m`` for ``k < n``.

    ``numerators`` may be a scalar or a 1-d array of candidates; the result
    has shape ``(n,)`` or ``(len(numerators), n)``.
    """
    q = checked_pow(p, m)
    a = np.asarray(numerators, dtype=np.int64)
    k = np.arange(n, dtype=np.int64)
    # phi_p^+ of phi_p(k) is k itself; phi_p^+ of a/p**m is the m-digit reversal of a.
    # Truncating the sum to m digits is reduction mod p**m.
    total = (k + digit_reverse_array(p, a, m)[..., None]) % q
    return digit_reverse_array(p, total, m)


def mid_simplified_column(p: int, n: int, a: int, m: int) -> np.ndarray:
    """Float coordinates ``(2 t_k + 1) / (2 p**m)`` of the mid-simplified shifted column."""
    t = simplified_numerators(p, n, a, m)
    return (2 * t + 1) / float(2 * p**m)


def mid_simplified_columns(p: int, n: int, m: int, numerators=None) -> np.ndarray:
    """Candidate columns for every numerator (default: all of ``Q(p**m)``), shape ``(K, n)``."""
    if numerators is None:
        numerators = np.arange(p**m, dtype=np.int64)
    t = simplified_numerators(p, n, np.asarray(numerators, dtype=np.int64), m)
    return (2 * t + 1) / float(2 * p**m)
