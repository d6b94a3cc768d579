"""Independent oracles and inequality sweeps for the shifted-Halton construction.

Cell averages
    ``p**m * integral_0^{p**-m} e^2(H (+)_p (sigma_m + delta)) d delta`` has a
    closed form in terms of ``t_n = h_n (+)simp sigma_m``.  With prior
    coordinates summarised by an :class:`~halton_cbc.wce.ErrorCache` (products
    ``A``, ``B``, ``C``) and ``w = p**-m``::

        C (1 + g/3)
          - (2/N) sum_n B_n [1 + g/2 (1 - t_n**2) - g/2 w t_n - g w**2 / 6]
          + (1/N**2) sum_{n,k} A_nk [1 - g w / 2 + g min(1 - t_n, 1 - t_k)]

    The diagonal ``n = k`` uses ``min(1 - t_n, 1 - t_n) = 1 - t_n``.  The
    mid-simplified shift evaluates the same expression at ``t_n + w/2``, which
    differs only in the linear bracket, so the cell average exceeds it by
    ``(2/N) sum_n B_n g w**2 / 24``.

Quadrature oracles
    Midpoint rules on p-adically aligned grids: the cell ``[sigma_m, sigma_m + w)``
    is split into ``p**L`` subcells, on each of which the shift acts by a
    fixed translation of the grid cells, and the error is evaluated directly at
    the subcell centres.  The rule error is ``O(p**(-2(m+L)))``.

Monte Carlo
    Full p-adic shifts are drawn with ``m_j + 16`` random digits per
    coordinate from Philox (numpy's counter-based generator) keyed by the seed,
    with the trial index in the second counter word, so every trial is
    reproducible on its own and the result does not depend on how trials are
    split across workers.  Digits beyond ``m_j + 16`` perturb coordinates by
    less than ``p**-(m_j+16)``, which is below double rounding here.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ._parallel import map_ordered
from .bounds import rms_bound_sq
from .cbc import cbc_construct, rescan_dimension, scan_candidates, select_min, shift_columns
from .halton import _as_bases, mid_simplified_columns, resolve_ms, simplified_numerators
from .padic import PAdicDigits, checked_pow, minimal_m
from .wce import (
    ErrorCache,
    WeightSequence,
    _as_gammas,
    build_cache,
    cache_init,
    squared_wce,
    squared_wce_batch,
    squared_wce_candidates,
    squared_wce_exact,
)

log = logging.getLogger(__name__)

__all__ = [
    "SearchSpaceError",
    "cell_average_sq_error_1d",
    "cell_average_sq_error_appended",
    "cell_average_quadrature",
    "full_shift_average_quadrature",
    "kernel_quadrature_sq_wce",
    "exhaustive_search_1d",
    "exhaustive_search_full",
    "shift_invariance_check",
    "mc_rms_estimate",
    "Check",
    "GRIDS",
    "run_verification",
]

MAX_SEARCH_SPACE = 10**6
_MAX_INVARIANCE_GRID = 1 << 22


class SearchSpaceError(ValueError):
    pass


def _numerator(p: int, m: int, a: int) -> int:
    q = checked_pow(p, m)
    if not 0 <= a < q:
        raise ValueError(f"numerator {a} outside [0, {p}**{m})")
    return a


# -- cell averages -----------------------------------------------------------


def cell_average_sq_error_appended(
    cache: ErrorCache, p: int, n: int, gamma: float, a: int, m: int | None = None
) -> float:
    """Closed-form cell average of the error with a shifted base-``p`` column appended."""
    if cache.n != n:
        raise ValueError(f"cache holds {cache.n} points, not {n}")
    m = minimal_m(p, n) if m is None else m
    _numerator(p, m, a)
    q = p**m
    t = simplified_numerators(p, n, a, m) / float(q)
    w = 1.0 / q
    u = 1.0 - t
    lin = cache.linear * (1.0 + gamma / 2.0 * (1.0 - t**2) - gamma / 2.0 * w * t - gamma * w * w / 6.0)
    pair = cache.pair * (1.0 - gamma * w / 2.0 + gamma * np.minimum(u[:, None], u[None, :]))
    return float(cache.scalar * (1.0 + gamma / 3.0) - 2.0 * lin.sum() / n + pair.sum() / n**2)


def cell_average_sq_error_1d(p: int, n: int, gamma, a: int, *, exact: bool = False):
    """Closed-form cell average in one dimension.

    With ``exact=True`` the value is a :class:`~fractions.Fraction`
    (``gamma`` is converted exactly); otherwise a float.
    """
    if not exact:
        return cell_average_sq_error_appended(cache_init(n), p, n, float(gamma), a)
    m = minimal_m(p, n)
    _numerator(p, m, a)
    q = p**m
    g = Fraction(gamma)
    w = Fraction(1, q)
    ts = [Fraction(int(v), q) for v in simplified_numerators(p, n, a, m)]
    total = 1 + g / 3
    lin = sum(1 + g / 2 * (1 - t * t) - g / 2 * w * t - g * w * w / 6 for t in ts)
    pair = sum(1 - g * w / 2 + g * min(1 - t, 1 - r) for t in ts for r in ts)
    return total - 2 * lin / n + pair / (n * n)


def cell_average_quadrature(
    cache: ErrorCache, p: int, n: int, gamma: float, a: int, L: int = 6, m: int | None = None
) -> float:
    """Midpoint rule over ``delta`` for the cell average, using ``p**L`` subcells."""
    m = minimal_m(p, n) if m is None else m
    _numerator(p, m, a)
    fine = a * p**L + np.arange(p**L, dtype=np.int64)
    cols = mid_simplified_columns(p, n, m + L, fine)
    return float(np.mean(squared_wce_candidates(cache, cols, gamma)))


def full_shift_average_quadrature(
    cache: ErrorCache, p: int, n: int, gamma: float, L: int = 6, m: int | None = None
) -> float:
    """Midpoint rule for the average over all shifts ``sigma`` in ``[0, 1)``."""
    m = minimal_m(p, n) if m is None else m
    q = checked_pow(p, m + L)
    vals = [
        squared_wce_candidates(cache, mid_simplified_columns(p, n, m + L, np.arange(lo, min(lo + 4096, q))), gamma)
        for lo in range(0, q, 4096)
    ]
    return float(np.mean(np.concatenate(vals)))


def kernel_quadrature_sq_wce(points, weights, grid: int = 2000) -> float:
    """Squared error from kernel integrals, each done by a ``grid``-point midpoint rule per axis.

    Uses the product form of the kernel: the double integral and the
    single integrals factor over coordinates.
    """
    x = np.asarray(points.to_array() if hasattr(points, "to_array") else points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, s = x.shape
    g = _as_gammas(weights, s)
    z = (np.arange(grid) + 0.5) / grid
    uz = 1.0 - z
    double = 1.0
    single = np.ones(n)
    for j in range(s):
        double *= np.mean(1.0 + g[j] * np.minimum(uz[:, None], uz[None, :]))
        u = 1.0 - x[:, j]
        single *= np.mean(1.0 + g[j] * np.minimum(u[:, None], uz[None, :]), axis=1)
    pair = np.ones((n, n))
    for j in range(s):
        u = 1.0 - x[:, j]
        pair *= 1.0 + g[j] * np.minimum(u[:, None], u[None, :])
    return float(double - 2.0 * single.sum() / n + pair.sum() / n**2)


# -- exhaustive searches -----------------------------------------------------


def exhaustive_search_1d(
    p: int, n: int, gamma: float, *, exact: bool = True, max_space: int = MAX_SEARCH_SPACE
) -> tuple[int, float]:
    """Brute-force minimiser over ``Q(p**m)`` of the one-dimensional error.

    ``exact=True`` evaluates every candidate in rational arithmetic and breaks
    exact ties by the smallest numerator.
    """
    m = minimal_m(p, n)
    q = p**m
    if q > max_space:
        raise SearchSpaceError(f"{q} candidates exceed the search cap {max_space}")
    if not exact:
        cols = mid_simplified_columns(p, n, m)
        errs = np.array([squared_wce(c[:, None], [gamma]) for c in cols])
        a = select_min(errs, 1 + gamma / 3)
        return a, float(errs[a])
    g = Fraction(gamma)
    best_a, best = -1, None
    for a in range(q):
        rows = [[Fraction(2 * int(t) + 1, 2 * q)] for t in simplified_numerators(p, n, a, m)]
        e = squared_wce_exact(rows, [g])
        if best is None or e < best:
            best_a, best = a, e
    return best_a, float(best)


def exhaustive_search_full(
    bases,
    n: int,
    weights: WeightSequence,
    *,
    max_space: int = MAX_SEARCH_SPACE,
    threads: int | None = None,
):
    """Global minimiser over ``Q(p_1**m_1) x ... x Q(p_s**m_s)``.

    Returns ``(ShiftVector, error)``; near-ties go to the lexicographically
    smallest numerator tuple.
    """
    from .cbc import ShiftVector

    bases = _as_bases(bases)
    ms = resolve_ms(bases, n)
    sizes = [p**m for p, m in zip(bases, ms)]
    if math.prod(sizes) > max_space:
        raise SearchSpaceError(f"{math.prod(sizes)} shifts exceed the search cap {max_space}")
    gammas = weights.gammas
    p_last, m_last, g_last = bases[-1], ms[-1], gammas[len(bases) - 1]
    prefix_cols = [mid_simplified_columns(p, n, m) for p, m in zip(bases[:-1], ms[:-1])]
    errors, labels = [], []
    for prefix in itertools.product(*(range(k) for k in sizes[:-1])):
        cache = cache_init(n)
        if prefix:
            cache = build_cache([prefix_cols[j][a] for j, a in enumerate(prefix)], gammas)
        errors.append(scan_candidates(cache, p_last, n, m_last, g_last, threads=threads))
        labels.append(prefix)
    flat = np.concatenate(errors)
    scale = float(np.prod([1 + g / 3 for g in gammas[: len(bases)]]))
    idx = select_min(flat, scale)
    prefix = labels[idx // sizes[-1]]
    nums = tuple(prefix) + (idx % sizes[-1],)
    return ShiftVector(bases, ms, nums), float(flat[idx])


# -- shift invariance ---------------------------------------------------------

_TEST_FUNCTIONS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "x2": lambda x, c: x * x,
    "x": lambda x, c: x,
    "min": lambda x, c: np.minimum(1.0 - x, c),
}


def shift_invariance_check(p: int, f: str, sigma: PAdicDigits, K: int, c: float = 0.4) -> float:
    """``|mean f(grid (+)simp_K sigma) - mean f(grid)|`` over the grid ``Q(p**K)``.

    ``f`` is ``"x2"``, ``"x"`` or ``"min"`` (``min(1 - x, c)``).  Both means
    use exactly rounded summation, so the result is zero whenever the shifted
    grid is a permutation of the unshifted one.
    """
    if f not in _TEST_FUNCTIONS:
        raise ValueError(f"unknown test function {f!r}; expected one of {sorted(_TEST_FUNCTIONS)}")
    if sigma.base != p:
        raise ValueError(f"sigma has base {sigma.base}, expected {p}")
    if not 1 <= K <= 20:
        raise ValueError(f"K must be in 1..20, got {K}")
    q = checked_pow(p, K)
    if q > _MAX_INVARIANCE_GRID:
        raise SearchSpaceError(f"grid {p}**{K} exceeds {_MAX_INVARIANCE_GRID} points")
    a = PAdicDigits(p, sigma.digits[:K]).numerator(K)
    # every grid point is phi_p(k) for exactly one k < p**K
    shifted = simplified_numerators(p, q, a, K) / float(q)
    plain = np.arange(q) / float(q)
    fn = _TEST_FUNCTIONS[f]
    return abs(math.fsum(fn(shifted, c)) - math.fsum(fn(plain, c))) / q


# -- Monte Carlo ---------------------------------------------------------------


def _shift_digits(seed: int, trial: int, bases: Sequence[int], widths: Sequence[int]) -> list[np.ndarray]:
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, trial, 0, 0]))
    return [rng.integers(0, p, size=w, dtype=np.int64) for p, w in zip(bases, widths)]


def _full_shift_column(p: int, n: int, m: int, sigma_digits: np.ndarray) -> np.ndarray:
    """Coordinates ``phi_p(k) (+)_p sigma`` for ``k < n`` and a batch of digit rows ``(T, L)``."""
    t_count, width = sigma_digits.shape
    k_digits = np.zeros((n, width), dtype=np.int64)
    rest = np.arange(n, dtype=np.int64)
    for r in range(min(m, width)):
        rest, k_digits[:, r] = np.divmod(rest, p)
    out = np.zeros((t_count, n, width + 1), dtype=np.int64)
    carry = np.zeros((t_count, n), dtype=np.int64)
    for r in range(width):
        carry, out[:, :, r] = np.divmod(sigma_digits[:, None, r] + k_digits[None, :, r] + carry, p)
    out[:, :, width] = carry
    val = np.zeros((t_count, n))
    for r in range(width, -1, -1):
        val = (val + out[:, :, r]) / p
    return val


def mc_rms_estimate(
    bases,
    n: int,
    weights: WeightSequence,
    trials: int,
    seed: int,
    *,
    threads: int | None = None,
    extra_digits: int = 16,
) -> tuple[float, float]:
    """Sample mean and standard error of the squared error under random full p-adic shifts."""
    bases = _as_bases(bases)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    ms = resolve_ms(bases, n)
    widths = [m + extra_digits for m in ms]
    chunks = [range(lo, min(lo + 1024, trials)) for lo in range(0, trials, 1024)]

    def work(chunk: range) -> np.ndarray:
        digits = [_shift_digits(seed, t, bases, widths) for t in chunk]
        cols = [
            _full_shift_column(p, n, m, np.stack([d[j] for d in digits]))
            for j, (p, m) in enumerate(zip(bases, ms))
        ]
        return squared_wce_batch(np.stack(cols, axis=-1), weights)

    values = np.concatenate(map_ordered(work, chunks, threads))
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr


# -- sweeps and report ---------------------------------------------------------


@dataclass
class Check:
    """One verified relation: ``lhs <= rhs + slack`` (``le``) or ``|lhs - rhs| <= slack`` (``approx``)."""

    name: str
    case: dict
    lhs: float
    rhs: float
    slack: float
    relation: str = "le"
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.evaluate()

    def evaluate(self) -> bool:
        if self.relation == "le":
            self.passed = bool(self.lhs <= self.rhs + self.slack)
        else:
            self.passed = bool(abs(self.lhs - self.rhs) <= self.slack)
        return self.passed

    def to_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = (self.rhs + self.slack - self.lhs) if self.relation == "le" else self.slack - abs(self.lhs - self.rhs)
        return d


CELL_SLACK = 1e-10
QUAD_TOL = 2e-4
INVARIANCE_TOL = 1e-12

GRIDS: dict[str, dict] = {
    "default": {
        "primes": [2, 3, 5],
        "ns": list(range(2, 9)),
        "gammas": [1.0, 0.5, 0.1],
        "quad_L": 6,
        "quad_ns": [2, 3, 5, 8],
        "average_L": 4,
        "prior_gamma": 1.0,
        "invariance": [(2, 10), (3, 6), (5, 4), (7, 3)],
        "cbc_1d_ns": list(range(2, 17)),
        "rescan": {"bases": [2, 3, 5], "ns": [2, 4, 8, 16]},
        "cbc_bound": {"bases": [2, 3, 5, 7, 11], "ns": [2, 4, 8, 16, 32, 64], "weights": ["1/j^2", "1/j^3", "0.9^j"]},
        "global": {"bases": [2, 3], "ns": [2, 3, 4]},
    },
    "small": {
        "primes": [2, 3],
        "ns": [2, 3, 5],
        "gammas": [1.0, 0.1],
        "quad_L": 4,
        "quad_ns": [3],
        "average_L": 3,
        "prior_gamma": 1.0,
        "invariance": [(2, 8), (3, 4)],
        "cbc_1d_ns": [2, 5, 9],
        "rescan": {"bases": [2, 3], "ns": [4]},
        "cbc_bound": {"bases": [2, 3, 5], "ns": [4, 16], "weights": ["1/j^2"]},
        "global": {"bases": [2, 3], "ns": [3]},
    },
    "mc": {
        "mc": {"bases": [2, 3], "ns": [4, 16], "dims": [1, 2], "weights": "1/j^2", "trials": 10_000},
    },
    "empty": {},
}


def _invariance_sigmas(p: int, K: int) -> list[PAdicDigits]:
    return [
        PAdicDigits.zero(p),
        PAdicDigits(p, (1,)),
        PAdicDigits(p, (p - 1,)),
        PAdicDigits(p, tuple((3 * r + 1) % p for r in range(K))),
        PAdicDigits(p, tuple((r * r + 2) % p for r in range(K + 3))),
    ]


def _cell_checks(grid: dict) -> list[Check]:
    out = []
    prior_g = grid.get("prior_gamma", 1.0)
    for p, n, g in itertools.product(grid.get("primes", []), grid.get("ns", []), grid.get("gammas", [])):
        m = minimal_m(p, n)
        q = p**m
        caches = {"cell_1d": cache_init(n)}
        # prior coordinate: base 2 under its CBC-chosen shift
        prior = cbc_construct([2], n, WeightSequence((prior_g,)))
        prior_cols = shift_columns(prior.shift, n)
        caches["cell_appended"] = build_cache(prior_cols, [prior_g])
        gammas2 = (prior_g, g)
        do_quad = n in grid.get("quad_ns", [])
        for name, cache in caches.items():
            cell_means = []
            for a in range(q):
                col = mid_simplified_columns(p, n, m, [a])[0]
                if name == "cell_1d":
                    lhs = squared_wce(col[:, None], [g])
                    rhs = cell_average_sq_error_1d(p, n, g, a)
                else:
                    lhs = squared_wce(np.column_stack(prior_cols + [col]), gammas2)
                    rhs = cell_average_sq_error_appended(cache, p, n, g, a)
                cell_means.append(rhs)
                case = {"p": p, "N": n, "gamma": g, "sigma": f"{a}/{q}"}
                if name == "cell_appended":
                    case["prior"] = {"base": 2, "gamma": prior_g, "numerator": prior.shift.numerators[0]}
                out.append(Check(f"{name}_inequality", case, lhs, rhs, CELL_SLACK))
                if do_quad:
                    quad = cell_average_quadrature(cache, p, n, g, a, grid["quad_L"])
                    out.append(Check(f"{name}_closed_form_vs_quadrature", dict(case, L=grid["quad_L"]), rhs, quad, QUAD_TOL, "approx"))
            mean_cells = math.fsum(cell_means) / q
            case = {"p": p, "N": n, "gamma": g}
            min_err = min(squared_wce_candidates(cache, mid_simplified_columns(p, n, m), g))
            out.append(Check(f"{name}_existence_min_le_mean", case, float(min_err), mean_cells, CELL_SLACK))
            if do_quad:
                L = grid["average_L"]
                avg = full_shift_average_quadrature(cache, p, n, g, L)
                out.append(Check(f"{name}_average_identity", dict(case, L=L), mean_cells, avg, QUAD_TOL, "approx"))
    return out


def _invariance_checks(grid: dict) -> list[Check]:
    out = []
    for p, K in grid.get("invariance", []):
        for sigma in _invariance_sigmas(p, K):
            for f in ("x2", "x", "min"):
                d = shift_invariance_check(p, f, sigma, K)
                case = {"p": p, "K": K, "f": f, "sigma_digits": list(sigma.digits)}
                out.append(Check("shift_invariance", case, d, 0.0, INVARIANCE_TOL))
    return out


def _cbc_checks(grid: dict, threads: int | None) -> list[Check]:
    out = []
    for p, n in itertools.product(grid.get("primes", []), grid.get("cbc_1d_ns", [])):
        for g in grid.get("gammas", [])[:1]:
            res = cbc_construct([p], n, WeightSequence((g,)), threads=threads)
            a, e = exhaustive_search_1d(p, n, g)
            case = {"p": p, "N": n, "gamma": g, "exhaustive_error": e}
            out.append(Check("cbc_matches_exhaustive_1d", case, res.shift.numerators[0], a, 0.0, "approx"))
    rs = grid.get("rescan")
    if rs:
        for s in range(1, len(rs["bases"]) + 1):
            for n in rs["ns"]:
                w = WeightSequence.power_family(s)
                res = cbc_construct(rs["bases"][:s], n, w, threads=threads)
                for d in range(1, s + 1):
                    a = rescan_dimension(res, d, threads=threads)
                    case = {"bases": rs["bases"][:s], "N": n, "d": d}
                    out.append(Check("cbc_step_optimality", case, res.shift.numerators[d - 1], a, 0.0, "approx"))
    th = grid.get("cbc_bound")
    if th:
        for wspec in th["weights"]:
            for n in th["ns"]:
                bases = th["bases"]
                w = WeightSequence.parse(wspec, len(bases))
                res = cbc_construct(bases, n, w, threads=threads)
                for d, (e, b) in enumerate(zip(res.squared_errors, res.cbc_bounds), start=1):
                    case = {"bases": bases[:d], "N": n, "weights": wspec, "d": d}
                    out.append(Check("cbc_error_le_bound", case, e, b, 1e-12 * b))
    gl = grid.get("global")
    if gl:
        for n in gl["ns"]:
            w = WeightSequence.power_family(len(gl["bases"]))
            res = cbc_construct(gl["bases"], n, w, threads=threads)
            _, e = exhaustive_search_full(gl["bases"], n, w, threads=threads)
            case = {"bases": gl["bases"], "N": n}
            out.append(Check("global_le_cbc", case, e, res.squared_errors[-1], CELL_SLACK))
            if n >= 2:
                out.append(Check("global_le_cbc_bound", case, e, res.cbc_bounds[-1], 0.0))
    return out


def _mc_checks(grid: dict, seed: int, threads: int | None) -> list[Check]:
    out = []
    mc = grid.get("mc")
    if not mc:
        return out
    for s in mc["dims"]:
        for n in mc["ns"]:
            bases = mc["bases"][:s]
            w = WeightSequence.parse(mc["weights"], s)
            mean, se = mc_rms_estimate(bases, n, w, mc["trials"], seed, threads=threads)
            bound = rms_bound_sq(bases, w, n)
            case = {"bases": bases, "N": n, "weights": mc["weights"], "trials": mc["trials"], "seed": seed, "stderr": se}
            out.append(Check("rms_monte_carlo", case, mean, bound, 3 * se))
    return out


def run_verification(
    grid: str | dict = "default",
    *,
    seed: int = 0,
    threads: int | None = None,
    inject_perturbation: bool = False,
) -> dict:
    """Run every sweep in ``grid`` and return the report as a plain dict.

    ``inject_perturbation`` (harness self-test) adds ``1e-3`` to the left side
    of the first check so that it fails.
    """
    name = grid if isinstance(grid, str) else "custom"
    sweeps = GRIDS[grid] if isinstance(grid, str) else grid
    checks = _invariance_checks(sweeps) + _cell_checks(sweeps) + _cbc_checks(sweeps, threads) + _mc_checks(sweeps, seed, threads)
    if inject_perturbation and checks:
        checks[0].lhs += 1e-3
        checks[0].case["perturbed"] = True
        checks[0].evaluate()
    failures = [c for c in checks if not c.passed]
    warnings = []
    if not checks:
        warnings.append("grid contains no checks; vacuous pass")
        log.warning("verification grid %r contains no checks", name)
    return {
        "grid": name,
        "checks": [c.to_dict() for c in checks],
        "summary": {
            "total": len(checks),
            "failed": len(failures),
            "passed": not failures,
            "failures": [{"name": c.name, "case": c.case} for c in failures],
            "warnings": warnings,
        },
    }
