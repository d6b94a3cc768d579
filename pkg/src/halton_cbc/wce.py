"""Squared worst-case error in the weighted anchored Sobolev space.

The reproducing kernel is ``K(x, y) = prod_j (1 + gamma_j min(1 - x_j, 1 - y_j))``
(anchor at the all-ones point) and the squared worst-case error of an
``N``-point rule is::

    prod_j (1 + gamma_j/3)
      - (2/N) sum_n prod_j (1 + gamma_j/2 (1 - x_nj**2))
      + (1/N**2) sum_{n,k} prod_j (1 + gamma_j min(1 - x_nj, 1 - x_kj))

:class:`ErrorCache` stores the three products for the first ``d`` coordinates
so that one more coordinate costs ``O(N**2)`` instead of ``O(d N**2)``.
The direct evaluator multiplies the factors in the same coordinate order as
the cache, so both paths produce the same products.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .halton import PointSet

__all__ = [
    "DEFAULT_MAX_N",
    "CapExceededError",
    "WeightSequence",
    "ErrorCache",
    "kernel",
    "squared_wce",
    "squared_wce_exact",
    "squared_wce_batch",
    "cache_init",
    "cache_extend",
    "build_cache",
    "squared_wce_from_cache",
    "squared_wce_candidates",
]

DEFAULT_MAX_N = 4096

# Elements per temporary (k, N, N) block in the candidate evaluator.
_BLOCK_ELEMS = 1 << 21


class CapExceededError(ValueError):
    pass


@dataclass(frozen=True)
class WeightSequence:
    """Coordinate weights ``1 >= gamma_1 >= gamma_2 >= ... > 0``."""

    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        gammas = tuple(float(g) for g in self.gammas)
        if not gammas:
            raise ValueError("at least one weight is required")
        if not all(g > 0 for g in gammas):
            raise ValueError(f"weights must be positive, got {gammas}")
        if gammas[0] > 1:
            raise ValueError(f"gamma_1 must be <= 1, got {gammas[0]}")
        if any(b > a for a, b in zip(gammas, gammas[1:])):
            raise ValueError(f"weights must be non-increasing, got {gammas}")
        object.__setattr__(self, "gammas", gammas)

    @classmethod
    def unchecked(cls, gammas: Sequence[float]) -> WeightSequence:
        """Test hook: skips validation, so zero weights are allowed."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "gammas", tuple(float(g) for g in gammas))
        return obj

    @classmethod
    def power_family(cls, s: int, c: float = 1.0, a: float = 2.0) -> WeightSequence:
        """``gamma_j = c * j**-a`` for ``j = 1..s``."""
        return cls(tuple(c * j ** (-a) for j in range(1, s + 1)))

    @classmethod
    def geometric(cls, s: int, q: float, c: float = 1.0) -> WeightSequence:
        """``gamma_j = c * q**j`` for ``j = 1..s``."""
        return cls(tuple(c * q**j for j in range(1, s + 1)))

    @classmethod
    def parse(cls, text: str, s: int) -> WeightSequence:
        """Parse a weight spec materialised to length ``s``.

        Accepted forms: ``"1/j^2"``, ``"0.5/j^3"``, ``"c*j^-a"``, ``"0.9^j"``,
        ``"c*q^j"`` and explicit lists such as ``"1,0.5,0.25"`` (an explicit
        list must have at least ``s`` entries and is truncated to ``s``).
        """
        t = text.replace(" ", "").replace("**", "^")
        num = r"([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)"
        if m := re.fullmatch(num + r"/j\^" + num, t):
            return cls.power_family(s, float(m[1]), float(m[2]))
        if m := re.fullmatch(r"(?:" + num + r"\*)?j\^-" + num, t):
            return cls.power_family(s, float(m[1] or 1.0), float(m[2]))
        if m := re.fullmatch(r"(?:" + num + r"\*)?" + num + r"\^j", t):
            return cls.geometric(s, float(m[2]), float(m[1] or 1.0))
        try:
            values = [float(Fraction(v)) for v in t.split(",") if v]
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse weights {text!r}") from None
        if len(values) < s:
            raise ValueError(f"weights {text!r} give {len(values)} values, need {s}")
        return cls(tuple(values[:s]))

    def __len__(self) -> int:
        return len(self.gammas)

    def __getitem__(self, j):
        return self.gammas[j]

    def prefix(self, d: int) -> WeightSequence:
        if d > len(self.gammas):
            raise ValueError(f"only {len(self.gammas)} weights materialised, need {d}")
        return WeightSequence.unchecked(self.gammas[:d])


def _as_gammas(weights, s: int) -> np.ndarray:
    gammas = weights.gammas if isinstance(weights, WeightSequence) else tuple(weights)
    if len(gammas) < s:
        raise ValueError(f"{len(gammas)} weights given for dimension {s}")
    return np.asarray(gammas[:s], dtype=np.float64)


def _as_points(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.to_array()
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"points must be an (N, s) array, got shape {x.shape}")
    if x.shape[0] == 0:
        raise ValueError("empty point set")
    return x


def _check_cap(n: int, max_n: int) -> None:
    if n > max_n:
        raise CapExceededError(f"N={n} exceeds the configured cap {max_n}")


def kernel(x, y, weights) -> float:
    """Reproducing kernel of the anchored space at a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    g = _as_gammas(weights, x.size)
    return float(np.prod(1.0 + g * np.minimum(1.0 - x, 1.0 - y)))


def squared_wce(points, weights, *, max_n: int = DEFAULT_MAX_N) -> float:
    """Squared worst-case error of the equal-weight rule on ``points``; cost ``O(s N**2)``."""
    x = _as_points(points)
    n, s = x.shape
    _check_cap(n, max_n)
    g = _as_gammas(weights, s)
    c = 1.0
    b = np.ones(n)
    a = np.ones((n, n))
    for j in range(s):
        u = 1.0 - x[:, j]
        c *= 1.0 + g[j] / 3.0
        b *= 1.0 + g[j] / 2.0 * (1.0 - x[:, j] ** 2)
        a *= 1.0 + g[j] * np.minimum(u[:, None], u[None, :])
    return float(c - 2.0 * b.sum() / n + a.sum() / n**2)


def squared_wce_exact(rows, gammas) -> Fraction:
    """Exact rational evaluation; ``rows`` and ``gammas`` hold Fractions (or ints)."""
    rows = [[Fraction(v) for v in r] for r in rows]
    if not rows:
        raise ValueError("empty point set")
    n, s = len(rows), len(rows[0])
    g = [Fraction(v) for v in gammas][:s]
    if len(g) < s:
        raise ValueError(f"{len(g)} weights given for dimension {s}")
    c = Fraction(1)
    for gj in g:
        c *= 1 + gj / 3
    lin = Fraction(0)
    for r in rows:
        t = Fraction(1)
        for gj, v in zip(g, r):
            t *= 1 + gj / 2 * (1 - v * v)
        lin += t
    pair = Fraction(0)
    for r in rows:
        for q in rows:
            t = Fraction(1)
            for gj, v, w in zip(g, r, q):
                t *= 1 + gj * min(1 - v, 1 - w)
            pair += t
    return c - 2 * lin / n + pair / (n * n)


def squared_wce_batch(x: np.ndarray, weights) -> np.ndarray:
    """Direct evaluation for a stack of point sets ``x`` of shape ``(T, N, s)``."""
    x = np.asarray(x, dtype=np.float64)
    t_count, n, s = x.shape
    g = _as_gammas(weights, s)
    c = float(np.prod(1.0 + g / 3.0))
    out = np.empty(t_count)
    block = max(1, _BLOCK_ELEMS // (n * n))
    for lo in range(0, t_count, block):
        xs = x[lo : lo + block]
        b = np.ones(xs.shape[:2])
        a = np.ones((xs.shape[0], n, n))
        for j in range(s):
            u = 1.0 - xs[:, :, j]
            b *= 1.0 + g[j] / 2.0 * (1.0 - xs[:, :, j] ** 2)
            a *= 1.0 + g[j] * np.minimum(u[:, :, None], u[:, None, :])
        out[lo : lo + block] = c - 2.0 * b.sum(axis=1) / n + a.reshape(len(xs), -1).sum(axis=1) / n**2
    return out


@dataclass(frozen=True)
class ErrorCache:
    """Products of the first ``d`` coordinates' kernel factors.

    ``pair[n, k]`` is the pair product, ``linear[n]`` the per-point product
    and ``scalar`` the constant product.  Arrays are read-only.
    """

    d: int
    pair: np.ndarray = field(repr=False)
    linear: np.ndarray = field(repr=False)
    scalar: float = 1.0

    @property
    def n(self) -> int:
        return self.linear.shape[0]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def cache_init(n: int, *, max_n: int = DEFAULT_MAX_N) -> ErrorCache:
    if n < 1:
        raise ValueError(f"N must be positive, got {n}")
    _check_cap(n, max_n)
    return ErrorCache(0, _frozen(np.ones((n, n))), _frozen(np.ones(n)), 1.0)


def _column(cache: ErrorCache, column) -> np.ndarray:
    y = np.asarray(column, dtype=np.float64)
    if y.shape != (cache.n,):
        raise ValueError(f"column must have length {cache.n}, got shape {y.shape}")
    return y


def cache_extend(cache: ErrorCache, column, gamma: float) -> ErrorCache:
    """New cache with one more coordinate (the input cache is left untouched)."""
    y = _column(cache, column)
    u = 1.0 - y
    pair = cache.pair * (1.0 + gamma * np.minimum(u[:, None], u[None, :]))
    linear = cache.linear * (1.0 + gamma / 2.0 * (1.0 - y**2))
    scalar = cache.scalar * (1.0 + gamma / 3.0)
    return ErrorCache(cache.d + 1, _frozen(pair), _frozen(linear), scalar)


def build_cache(columns, gammas, *, max_n: int = DEFAULT_MAX_N) -> ErrorCache:
    """Cache for the point set whose coordinate ``j`` is ``columns[j]``."""
    columns = [np.asarray(c, dtype=np.float64) for c in columns]
    if not columns:
        raise ValueError("build_cache needs at least one column; use cache_init for d = 0")
    gammas = _as_gammas(gammas, len(columns))
    cache = cache_init(len(columns[0]), max_n=max_n)
    for col, g in zip(columns, gammas):
        cache = cache_extend(cache, col, float(g))
    return cache


def squared_wce_candidates(cache: ErrorCache, columns: np.ndarray, gamma: float) -> np.ndarray:
    """Errors of the cached set with each row of ``columns`` appended as coordinate ``d + 1``.

    The value for a given row does not depend on which other rows are passed
    alongside it, so callers may split the candidates into arbitrary chunks.
    """
    ys = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    n = cache.n
    if ys.shape[1] != n:
        raise ValueError(f"candidate columns must have length {n}, got {ys.shape[1]}")
    head = cache.scalar * (1.0 + gamma / 3.0)
    out = np.empty(ys.shape[0])
    block = max(1, _BLOCK_ELEMS // (n * n))
    for lo in range(0, ys.shape[0], block):
        y = ys[lo : lo + block]
        u = 1.0 - y
        lin = (cache.linear * (1.0 + gamma / 2.0 * (1.0 - y**2))).sum(axis=1)
        pair = cache.pair * (1.0 + gamma * np.minimum(u[:, :, None], u[:, None, :]))
        out[lo : lo + block] = head - 2.0 * lin / n + pair.reshape(len(y), -1).sum(axis=1) / n**2
    return out


def squared_wce_from_cache(cache: ErrorCache, candidate_column, gamma: float) -> float:
    """Error of the cached set with ``candidate_column`` appended; the cache is not modified."""
    y = _column(cache, candidate_column)
    return float(squared_wce_candidates(cache, y[None, :], gamma)[0])
