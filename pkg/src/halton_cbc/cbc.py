"""Component-by-component search for mid-simplified p-adic shifts.

Dimension ``d`` scans every numerator ``a`` in ``0 .. p_d**m_d - 1`` with the
earlier components fixed and keeps the one with the smallest squared error.
Each candidate costs ``O(N**2)`` through :class:`~halton_cbc.wce.ErrorCache`.

Ties: candidates within ``TIE_ULPS`` units of roundoff (relative to the size
of the leading kernel term) of the best error count as tied, and the
smallest numerator wins.  Bit-level noise from summation order therefore
cannot decide between mathematically equal candidates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._parallel import map_ordered
from .bounds import cbc_bound_sq, rms_bound_sq
from .halton import BaseVector, _as_bases, mid_simplified_column, mid_simplified_columns, resolve_ms
from .padic import PAdicError, minimal_m
from .wce import (
    DEFAULT_MAX_N,
    ErrorCache,
    WeightSequence,
    _check_cap,
    cache_extend,
    cache_init,
    squared_wce,
    squared_wce_candidates,
)

__all__ = [
    "TIE_ULPS",
    "ShiftVector",
    "CbcResult",
    "minimal_m",
    "select_min",
    "scan_candidates",
    "cbc_construct",
    "rescan_dimension",
    "shift_columns",
]

TIE_ULPS = 64

# Candidates per work item; fixed so the partition never depends on the thread count.
_CHUNK = 256


@dataclass(frozen=True)
class ShiftVector:
    """Shift components ``sigma_j = numerators[j] / bases[j]**ms[j]``."""

    bases: BaseVector
    ms: tuple[int, ...]
    numerators: tuple[int, ...]

    def __post_init__(self) -> None:
        bases = _as_bases(self.bases)
        ms = tuple(int(m) for m in self.ms)
        nums = tuple(int(a) for a in self.numerators)
        if not len(bases) == len(ms) == len(nums):
            raise ValueError("bases, ms and numerators must have equal length")
        for p, m, a in zip(bases, ms, nums):
            if m < 1:
                raise ValueError(f"m must be positive, got {m}")
            if not 0 <= a < p**m:
                raise PAdicError(f"numerator {a} outside [0, {p}**{m})")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "ms", ms)
        object.__setattr__(self, "numerators", nums)

    def __len__(self) -> int:
        return len(self.numerators)

    @property
    def sigmas(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(a, p**m) for p, m, a in zip(self.bases, self.ms, self.numerators))

    def prefix(self, d: int) -> ShiftVector:
        return ShiftVector(self.bases.prefix(d), self.ms[:d], self.numerators[:d])

    def to_dict(self) -> dict:
        return {
            "bases": list(self.bases),
            "ms": list(self.ms),
            "numerators": list(self.numerators),
            "sigmas": [f"{s.numerator}/{s.denominator}" for s in self.sigmas],
        }


@dataclass
class CbcResult:
    n: int
    weights: WeightSequence
    shift: ShiftVector
    squared_errors: list[float]
    cached_errors: list[float]
    cbc_bounds: list[float | None]
    rms_bounds: list[float | None]
    candidate_counts: list[int]
    seconds: list[float] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.shift)

    @property
    def within_bound(self) -> list[bool | None]:
        return [None if b is None else e <= b for e, b in zip(self.squared_errors, self.cbc_bounds)]


def select_min(errors: np.ndarray, scale: float = 1.0) -> int:
    """Index of the smallest error; near-ties (within roundoff of ``scale``) go to the lowest index."""
    errors = np.asarray(errors, dtype=np.float64)
    best = errors.min()
    tol = TIE_ULPS * np.finfo(np.float64).eps * max(abs(scale), 1.0)
    return int(np.flatnonzero(errors <= best + tol)[0])


def shift_columns(shift: ShiftVector, n: int) -> list[np.ndarray]:
    """Float coordinate columns of the first ``n`` Halton points under the mid-simplified shift."""
    return [mid_simplified_column(p, n, a, m) for p, m, a in zip(shift.bases, shift.ms, shift.numerators)]


def scan_candidates(
    cache: ErrorCache,
    p: int,
    n: int,
    m: int,
    gamma: float,
    *,
    threads: int | None = None,
) -> np.ndarray:
    """Squared errors for every numerator in ``Q(p**m)`` appended to the cached set."""
    q = p**m
    chunks = [np.arange(lo, min(lo + _CHUNK, q), dtype=np.int64) for lo in range(0, q, _CHUNK)]

    def work(nums: np.ndarray) -> np.ndarray:
        return squared_wce_candidates(cache, mid_simplified_columns(p, n, m, nums), gamma)

    return np.concatenate(map_ordered(work, chunks, threads))


def _scan_naive(prev: list[np.ndarray], p: int, n: int, m: int, gammas) -> np.ndarray:
    # Test-only cross-check: full direct evaluation for each candidate.
    out = np.empty(p**m)
    for a in range(p**m):
        x = np.column_stack(prev + [mid_simplified_column(p, n, a, m)])
        out[a] = squared_wce(x, gammas)
    return out


def _validate(bases, n: int, weights: WeightSequence, ms, max_n: int):
    bases = _as_bases(bases)
    if n < 1:
        raise ValueError(f"N must be positive, got {n}")
    _check_cap(n, max_n)
    if len(weights) < len(bases):
        raise ValueError(f"{len(weights)} weights given for dimension {len(bases)}")
    return bases, resolve_ms(bases, n, ms)


def cbc_construct(
    bases: BaseVector | Sequence[int],
    n: int,
    weights: WeightSequence,
    *,
    ms: Sequence[int] | None = None,
    threads: int | None = None,
    max_n: int = DEFAULT_MAX_N,
    naive: bool = False,
) -> CbcResult:
    """Greedy construction of a mid-simplified shift for the first ``n`` Halton points.

    ``ms`` overrides the minimal digit counts (experimentation only).  The
    reported ``squared_errors`` are re-evaluated with the direct formula;
    ``cached_errors`` are the values the search compared.
    """
    bases, ms = _validate(bases, n, weights, ms, max_n)
    gammas = weights.gammas
    cache = cache_init(n, max_n=max_n)
    numerators: list[int] = []
    columns: list[np.ndarray] = []
    direct: list[float] = []
    cached: list[float] = []
    seconds: list[float] = []
    for d, (p, m) in enumerate(zip(bases, ms)):
        t0 = time.perf_counter()
        g = gammas[d]
        if naive:
            errs = _scan_naive(columns, p, n, m, gammas[: d + 1])
        else:
            errs = scan_candidates(cache, p, n, m, g, threads=threads)
        a = select_min(errs, cache.scalar * (1 + g / 3))
        col = mid_simplified_column(p, n, a, m)
        cache = cache_extend(cache, col, g)
        numerators.append(a)
        columns.append(col)
        cached.append(float(errs[a]))
        direct.append(squared_wce(np.column_stack(columns), gammas[: d + 1], max_n=max_n))
        seconds.append(time.perf_counter() - t0)

    dims = range(1, len(bases) + 1)
    return CbcResult(
        n=n,
        weights=weights,
        shift=ShiftVector(bases, ms, tuple(numerators)),
        squared_errors=direct,
        cached_errors=cached,
        cbc_bounds=[cbc_bound_sq(bases, weights, n, d) if n >= 2 else None for d in dims],
        rms_bounds=[rms_bound_sq(bases, weights, n, d) if n >= 2 else None for d in dims],
        candidate_counts=[p**m for p, m in zip(bases, ms)],
        seconds=seconds,
    )


def rescan_dimension(
    result: CbcResult,
    d: int,
    weights: WeightSequence | None = None,
    n: int | None = None,
    *,
    threads: int | None = None,
) -> int:
    """Recompute the winning numerator of step ``d`` (1-based) from the stored earlier components."""
    s = result.dimension
    if not 1 <= d <= s:
        raise IndexError(f"dimension {d} outside 1..{s}")
    weights = result.weights if weights is None else weights
    n = result.n if n is None else n
    shift = result.shift
    cache = cache_init(n)
    for col, g in zip(shift_columns(shift.prefix(d - 1), n) if d > 1 else [], weights.gammas):
        cache = cache_extend(cache, col, g)
    p, m, g = shift.bases[d - 1], shift.ms[d - 1], weights.gammas[d - 1]
    errs = scan_candidates(cache, p, n, m, g, threads=threads)
    return select_min(errs, cache.scalar * (1 + g / 3))
