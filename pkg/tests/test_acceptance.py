"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Runtime limits are part of each criterion and are asserted alongside the
numerical checks.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from halton_cbc.bounds import cbc_bound_sq, rms_bound_sq
from halton_cbc.cbc import cbc_construct, rescan_dimension, shift_columns
from halton_cbc.cli import main as cli_main
from halton_cbc.halton import halton_points, mid_simplified_columns, shifted_halton_points, simplified_numerators
from halton_cbc.padic import (
    PAdicDigits,
    minimal_m,
    monna_inverse,
    monna_inverse_digits_array,
    padic_shift,
    radical_inverse,
    radical_inverse_digits_array,
)
from halton_cbc.verify import (
    cell_average_quadrature,
    cell_average_sq_error_1d,
    cell_average_sq_error_appended,
    exhaustive_search_1d,
    kernel_quadrature_sq_wce,
    mc_rms_estimate,
    shift_invariance_check,
)
from halton_cbc.wce import (
    WeightSequence,
    build_cache,
    cache_init,
    squared_wce,
    squared_wce_exact,
    squared_wce_from_cache,
)

PRIMES = (2, 3, 5, 7, 11)
CELL_GRID = list(itertools.product((2, 3, 5), range(2, 9), (1.0, 0.5, 0.1)))


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, seconds: float, limit: float, detail: str) -> None:
        ok = ok and seconds < limit
        tag = "PASS" if ok else "FAIL"
        with capsys.disabled():
            bound = f"limit {limit:g}s" if math.isfinite(limit) else "no limit"
            print(f"\n{tag} criterion {number:2d}: {detail} [{seconds:.2f}s, {bound}]")
        assert ok, detail

    return emit


def _random_digits(rng: np.random.Generator, p: int, count: int, max_len: int = 16) -> list[PAdicDigits]:
    rows = rng.integers(0, p, size=(count, max_len)).tolist()
    lengths = rng.integers(0, max_len + 1, size=count).tolist()
    return [PAdicDigits(p, tuple(row[:k])) for row, k in zip(rows, lengths)]


def test_criterion_01_digit_arithmetic(report):
    t0 = time.perf_counter()
    bad = 0
    ns = np.arange(1 << 20, dtype=np.int64)
    rng = np.random.default_rng(20240101)
    for p in PRIMES:
        width = minimal_m(p, 1 << 20)
        d = radical_inverse_digits_array(p, ns, width)
        bad += int(np.count_nonzero(monna_inverse_digits_array(p, d) != ns))
        # scalar path on a random sample plus both ends of the range
        for n in itertools.chain(rng.integers(0, 1 << 20, size=200).tolist(), (0, (1 << 20) - 1)):
            x = radical_inverse(p, n)
            bad += monna_inverse(x) != n
            bad += x.digits != tuple(int(v) for v in d[n][: len(x.digits)])
        zero = PAdicDigits.zero(p)
        xs = _random_digits(rng, p, 30_000)
        for x, y, z in zip(xs[0::3], xs[1::3], xs[2::3]):
            xy = padic_shift(x, y)
            bad += padic_shift(x, zero) != x
            bad += padic_shift(zero, x) != x
            bad += xy != padic_shift(y, x)
            bad += padic_shift(xy, z) != padic_shift(x, padic_shift(y, z))
            # value check: the shift adds Monna preimages as integers
            bad += monna_inverse(xy) != monna_inverse(x) + monna_inverse(y)
    report(1, bad == 0, time.perf_counter() - t0, 5, f"round trip n < 2^20 and group laws on 1e4 triples/base, {bad} mismatches")


def test_criterion_02_wce_oracles(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_cache = 0.0
    for _ in range(200):
        s, n = int(rng.integers(1, 5)), int(rng.integers(1, 33))
        x = rng.random((n, s))
        w = WeightSequence(tuple(sorted(rng.uniform(0.05, 1.0, size=s), reverse=True)))
        direct = squared_wce(x, w)
        cache = build_cache([x[:, j] for j in range(s - 1)], w.gammas) if s > 1 else cache_init(n)
        cached = squared_wce_from_cache(cache, x[:, s - 1], w.gammas[s - 1])
        worst_cache = max(worst_cache, abs(cached - direct) / abs(direct))
    worst_quad = 0.0
    for s, n in itertools.product((1, 2), (1, 2, 3, 4)):
        w = WeightSequence.power_family(s)
        for pts in (halton_points(PRIMES[:s], n), rng.random((n, s))):
            worst_quad = max(worst_quad, abs(kernel_quadrature_sq_wce(pts, w, grid=2000) - squared_wce(pts, w)))
    hand = max(abs(squared_wce([[0.5]], [1.0]) - 1 / 12), abs(squared_wce([[0.0], [0.5]], [1.0]) - 1 / 12)) * 12
    ok = worst_cache <= 1e-12 and worst_quad <= 1e-5 and hand <= 1e-12
    report(2, ok, time.perf_counter() - t0, 60, f"cache rel {worst_cache:.1e}, quadrature abs {worst_quad:.1e}, hand rel {hand:.1e}")


def test_criterion_03_cell_inequality_1d(report):
    t0 = time.perf_counter()
    failures, count, worst = 0, 0, math.inf
    for p, n, g in CELL_GRID:
        m = minimal_m(p, n)
        cols = mid_simplified_columns(p, n, m)
        for a in range(p**m):
            lhs = squared_wce(cols[a][:, None], [g])
            rhs = cell_average_sq_error_1d(p, n, g, a)
            count += 1
            worst = min(worst, rhs - lhs)
            failures += not lhs <= rhs + 1e-10
            # exact rational version of both sides must satisfy the same inequality
            if n <= 4:
                q = p**m
                pts = [[Fraction(2 * int(t) + 1, 2 * q)] for t in simplified_numerators(p, n, a, m)]
                exact_lhs = squared_wce_exact(pts, [Fraction(g)])
                failures += not exact_lhs <= cell_average_sq_error_1d(p, n, g, a, exact=True)
    report(3, failures == 0, time.perf_counter() - t0, 30, f"{count} cells, {failures} failures, min margin {worst:.2e}")


def test_criterion_04_cell_inequality_appended(report):
    t0 = time.perf_counter()
    failures, count, worst, quad_diff = 0, 0, math.inf, 0.0
    for p, n, g in CELL_GRID:
        prior = cbc_construct([2], n, WeightSequence((1.0,)))
        prior_cols = shift_columns(prior.shift, n)
        cache = build_cache(prior_cols, [1.0])
        m = minimal_m(p, n)
        cols = mid_simplified_columns(p, n, m)
        for a in range(p**m):
            lhs = squared_wce(np.column_stack(prior_cols + [cols[a]]), [1.0, g])
            rhs = cell_average_sq_error_appended(cache, p, n, g, a)
            count += 1
            worst = min(worst, rhs - lhs)
            failures += not lhs <= rhs + 1e-10
            quad_diff = max(quad_diff, abs(rhs - cell_average_quadrature(cache, p, n, g, a, L=6)))
    ok = failures == 0 and quad_diff <= 2e-4
    report(4, ok, time.perf_counter() - t0, 60, f"{count} cells, {failures} failures, min margin {worst:.2e}, quadrature diff {quad_diff:.1e}")


def test_criterion_05_cbc_vs_exhaustive(report):
    t0 = time.perf_counter()
    mismatches, count = 0, 0
    for p, n, g in itertools.product((2, 3, 5), range(2, 17), (1.0, 0.5, 0.1)):
        res = cbc_construct([p], n, WeightSequence((g,)))
        a, _ = exhaustive_search_1d(p, n, g)
        mismatches += res.shift.numerators[0] != a
        count += 1
    for s, n in itertools.product((1, 2, 3), range(2, 17)):
        res = cbc_construct((2, 3, 5)[:s], n, WeightSequence.power_family(s))
        for d in range(1, s + 1):
            mismatches += rescan_dimension(res, d) != res.shift.numerators[d - 1]
            count += 1
    report(5, mismatches == 0, time.perf_counter() - t0, 60, f"{count} argmin/rescan comparisons, {mismatches} mismatches")


def test_criterion_06_cbc_bound(report):
    t0 = time.perf_counter()
    failures, count, worst_ratio = 0, 0, 0.0
    for wspec, n in itertools.product(("1/j^2", "1/j^3", "0.9^j"), (2, 4, 8, 16, 32, 64)):
        w = WeightSequence.parse(wspec, 5)
        res = cbc_construct(PRIMES, n, w)
        pts = shifted_halton_points(PRIMES, n, res.shift, mode="mid-simplified")
        rows = [[x.as_fraction() for x in row] for row in pts.rows]
        gammas = [Fraction(g) for g in w.gammas]
        for d in range(1, 6):
            e = res.squared_errors[d - 1]
            b = cbc_bound_sq(PRIMES, w, n, d)
            # exact rational re-evaluation of the error on the exact point set
            exact = float(squared_wce_exact([r[:d] for r in rows], gammas[:d]))
            failures += not (e <= b * (1 + 1e-12) and exact <= b * (1 + 1e-12) and math.isclose(e, exact, rel_tol=1e-10))
            worst_ratio = max(worst_ratio, e / b)
            count += 1
    report(6, failures == 0, time.perf_counter() - t0, 300, f"{count} (N, d, weights) cases, {failures} failures, max e^2/bound {worst_ratio:.3f}")


def test_criterion_07_monte_carlo(report):
    t0 = time.perf_counter()
    failures, lines = 0, []
    for s, n in itertools.product((1, 2), (4, 16)):
        bases = (2, 3)[:s]
        w = WeightSequence.power_family(s)
        mean, se = mc_rms_estimate(bases, n, w, 10_000, seed=12345)
        bound = rms_bound_sq(bases, w, n)
        failures += not mean <= bound + 3 * se
        lines.append(f"s={s},N={n}: {mean:.3e}<={bound:.3e}")
    report(7, failures == 0, time.perf_counter() - t0, 120, "; ".join(lines))


def test_criterion_08_convergence_slope(report, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "study.csv"
    code = cli_main(["study", "--bases", "2,3", "--n-range", "16:512:x2", "--weights", "1/j^2", "--out", str(out)])
    rows = [line.split(",") for line in out.read_text().splitlines()[1:] if not line.startswith("#")]
    ns = np.array([float(r[0]) for r in rows])
    es = np.array([float(r[1]) for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(es), 1)[0])
    within = all(float(r[1]) <= math.sqrt(float(r[3])) for r in rows)
    ok = code == 0 and len(rows) == 6 and slope <= -0.75 and within
    report(8, ok, time.perf_counter() - t0, 600, f"slope {slope:.4f} over N=16..512, e <= sqrt(bound) on all rows: {within}")


def test_criterion_09_shift_invariance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst, count = 0.0, 0
    for p, K in ((2, 10), (3, 6), (5, 4), (7, 3), (11, 2)):
        sigmas = [PAdicDigits.zero(p), PAdicDigits(p, (p - 1,))] + [
            PAdicDigits(p, tuple(int(v) for v in rng.integers(0, p, size=K + 2))) for _ in range(8)
        ]
        for sigma, f in itertools.product(sigmas, ("x2", "x", "min")):
            worst = max(worst, shift_invariance_check(p, f, sigma, K))
            count += 1
    report(9, worst <= 1e-12, time.perf_counter() - t0, 5, f"{count} (p, K, sigma, f) cases, max deviation {worst:.1e}")


def _run_files(tmp_path, threads: int) -> dict[str, bytes]:
    outs = {}
    runs = {
        "cbc.json": ["cbc", "--bases", "2,3,5", "--n", "16", "--weights", "1/j^2"],
        "verify_default.json": ["verify", "--grid", "default"],
        "verify_mc.json": ["verify", "--grid", "mc", "--seed", "12345"],
        "study.csv": ["study", "--bases", "2,3", "--n-range", "16:512:x2", "--weights", "1/j^2"],
    }
    for name, args in runs.items():
        path = tmp_path / f"t{threads}_{name}"
        code = cli_main(args + ["--threads", str(threads), "--out", str(path)])
        assert code == 0, name
        outs[name] = path.read_bytes()
    return outs


def test_criterion_10_determinism(report, tmp_path, monkeypatch):
    t0 = time.perf_counter()
    monkeypatch.delenv("HALTON_CBC_THREADS", raising=False)
    many = max(4, os.cpu_count() or 1)
    one = _run_files(tmp_path, 1)
    multi = _run_files(tmp_path, many)
    differing = [name for name in one if one[name] != multi[name]]
    summary = json.loads(one["verify_default.json"])["summary"]
    ok = not differing and summary["passed"]
    report(10, ok, time.perf_counter() - t0, math.inf, f"threads 1 vs {many}: {len(one)} output files, differing: {differing or 'none'}")
