"""Closed-form upper bounds on the squared worst-case error.

Both bounds use natural logarithms for ``log N`` and ``log p_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .halton import BaseVector, _as_bases
from .wce import WeightSequence, _as_gammas

__all__ = ["BoundReport", "rms_bound_sq", "cbc_bound_sq", "summability", "bound_report"]


def _args(bases, weights, n: int, d: int | None):
    bases = _as_bases(bases)
    if n < 2:
        raise ValueError(f"the bounds need N >= 2, got {n}")
    if d is None:
        d = len(bases)
    if not 1 <= d <= len(bases):
        raise ValueError(f"dimension {d} outside 1..{len(bases)}")
    return bases.primes[:d], [float(g) for g in _as_gammas(weights, d)]


def rms_bound_sq(bases, weights, n: int, d: int | None = None) -> float:
    """Bound on the mean of the squared error over all full p-adic shifts.

    ``(1/N**2) [prod(1 + g_j log(N) p_j**2 / log p_j)
                + prod(1 + g_j/2) prod(1 + g_j p_j / 6)]`` over ``j <= d``.
    """
    ps, gs = _args(bases, weights, n, d)
    log_n = math.log(n)
    first = math.prod(1 + g * log_n * p * p / math.log(p) for p, g in zip(ps, gs))
    second = math.prod(1 + g / 2 for g in gs) * math.prod(1 + g * p / 6 for p, g in zip(ps, gs))
    return (first + second) / n**2


def cbc_bound_sq(bases, weights, n: int, d: int | None = None) -> float:
    """Bound on the squared error of the first ``d`` CBC-constructed coordinates.

    Same shape as :func:`rms_bound_sq` with ``2 g_j`` in the log term and
    ``(1 + g_j)`` in place of ``(1 + g_j/2)``.
    """
    ps, gs = _args(bases, weights, n, d)
    log_n = math.log(n)
    first = math.prod(1 + 2 * g * log_n * p * p / math.log(p) for p, g in zip(ps, gs))
    second = math.prod(1 + g for g in gs) * math.prod(1 + g * p / 6 for p, g in zip(ps, gs))
    return (first + second) / n**2


def summability(bases, weights, d: int | None = None) -> float:
    """Partial sum of ``gamma_j p_j**2 / log p_j``; bounded partial sums give a dimension-free rate."""
    bases = _as_bases(bases)
    d = len(bases) if d is None else d
    gs = _as_gammas(weights, d)
    return float(sum(g * p * p / math.log(p) for p, g in zip(bases.primes[:d], gs)))


@dataclass(frozen=True)
class BoundReport:
    n: int
    d: int
    bases: tuple[int, ...]
    weights: tuple[float, ...]
    rms_bound_sq: float
    cbc_bound_sq: float
    summability: float

    def to_dict(self) -> dict:
        return {
            "N": self.n,
            "d": self.d,
            "bases": list(self.bases),
            "weights": list(self.weights),
            "rms_bound_sq": self.rms_bound_sq,
            "cbc_bound_sq": self.cbc_bound_sq,
            "summability": self.summability,
        }


def bound_report(bases: BaseVector, weights: WeightSequence, n: int, d: int | None = None) -> BoundReport:
    bases = _as_bases(bases)
    d = len(bases) if d is None else d
    return BoundReport(
        n=n,
        d=d,
        bases=bases.primes[:d],
        weights=tuple(float(g) for g in _as_gammas(weights, d)),
        rms_bound_sq=rms_bound_sq(bases, weights, n, d),
        cbc_bound_sq=cbc_bound_sq(bases, weights, n, d),
        summability=summability(bases, weights, d),
    )
