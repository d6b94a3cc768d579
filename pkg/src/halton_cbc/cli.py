"""Command-line entry point ``halton-cbc``.

Modes::

    halton-cbc cbc    --bases 2,3,5 --n 64 --weights "1/j^2" --out run.json
    halton-cbc study  --bases 2,3 --n-range 16:512:x2 --weights "1/j^2" --out study.csv
    halton-cbc verify --grid default --out verify.json
    halton-cbc wce    --bases 2,3 --n 16 --shift 3,5 --weights "1/j^2"
    halton-cbc bound  --bases 2,3 --n 16 --weights "1/j^2"
    halton-cbc halton --bases 2,3 --n 8 [--shift 3,5 --shift-mode mid-simplified] [--decimal]

A JSON config file (``--config``) may supply any option under its long name
with underscores (``n_range``, ``max_n`` ...) plus ``mode``; flags win over
the file.  Invalid configurations exit with status 2 and one JSON line on
stderr.  Every output ends with a metadata block (config echo, versions,
seed; wall time only with ``--timing`` so that default outputs are
byte-reproducible).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import _io
from ._parallel import resolve_threads
from .bounds import bound_report
from .cbc import cbc_construct
from .halton import MODES, BaseVector, PointSet, first_primes, halton_points, resolve_ms, shifted_halton_points
from .padic import PAdicError
from .verify import GRIDS, MAX_SEARCH_SPACE, run_verification
from .wce import DEFAULT_MAX_N, WeightSequence, squared_wce

COMMANDS = ("cbc", "wce", "bound", "halton", "study", "verify")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass
class RunConfig:
    mode: str
    bases: tuple[int, ...] = ()
    n: int | None = None
    n_range: tuple[int, ...] = ()
    weights: str = "1/j^2"
    ms: tuple[int, ...] | None = None
    shift: tuple[int, ...] | None = None
    shift_mode: str = "mid-simplified"
    decimal: bool = False
    points: str | None = None
    grid: str = "default"
    trials: int | None = None
    out: str | None = None
    format: str | None = None
    seed: int = 0
    threads: int | None = None
    max_n: int = DEFAULT_MAX_N
    max_search: int = MAX_SEARCH_SPACE
    timing: bool = False
    inject_perturbation: bool = False
    gammas: WeightSequence | None = field(default=None, repr=False)

    def echo(self) -> dict:
        # thread count, output path and timing do not affect results, so they stay out of the echo
        d = asdict(self)
        for key in ("gammas", "threads", "out", "timing", "inject_perturbation"):
            d.pop(key)
        if self.gammas is not None:
            d["weights_materialised"] = list(self.gammas.gammas)
        return d


def _parse_ints(text, what: str) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError:
        raise ConfigError(what, f"cannot parse {what} {text!r} as a comma-separated integer list") from None


def _parse_bases(value) -> tuple[int, ...]:
    if isinstance(value, str) and (m := re.fullmatch(r"first:(\d+)", value.strip())):
        return first_primes(int(m[1]))
    return _parse_ints(value, "bases")


def parse_n_range(text: str) -> tuple[int, ...]:
    """``"16:512:x2"`` (geometric), ``"2:10:+2"`` (arithmetic) or a single ``"64"``."""
    t = str(text).strip()
    if re.fullmatch(r"\d+", t):
        return (int(t),)
    m = re.fullmatch(r"(\d+):(\d+):([x+])(\d+)", t)
    if not m:
        raise ConfigError("n_range", f"cannot parse N range {text!r}; expected start:stop:xK or start:stop:+K")
    lo, hi, op, k = int(m[1]), int(m[2]), m[3], int(m[4])
    if lo < 1 or hi < lo or (op == "x" and k < 2) or (op == "+" and k < 1):
        raise ConfigError("n_range", f"empty or non-advancing N range {text!r}")
    out, v = [], lo
    while v <= hi:
        out.append(v)
        v = v * k if op == "x" else v + k
    return tuple(out)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halton-cbc", description=__doc__.split("\n\n")[0], argument_default=None)
    ap.add_argument("mode", nargs="?", choices=COMMANDS, help="what to run (may come from the config file)")
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--bases", help='comma-separated distinct primes, or "first:s"')
    ap.add_argument("--dim", type=int, help="use the first DIM primes as bases")
    ap.add_argument("--n", type=int, help="number of points N")
    ap.add_argument("--n-range", help="N values for study, e.g. 16:512:x2")
    ap.add_argument("--weights", help='"1/j^2", "c*j^-a", "0.9^j" or an explicit list "1,0.5"')
    ap.add_argument("--ms", help="override digit counts m_j (experimentation only)")
    ap.add_argument("--shift", help="shift numerators a_j for wce/halton")
    ap.add_argument("--shift-mode", choices=MODES, help="shift operator for wce/halton")
    ap.add_argument("--decimal", action="store_const", const=True, help="halton: write doubles instead of fractions")
    ap.add_argument("--points", help="wce: read points from a CSV written by the halton mode")
    ap.add_argument("--grid", choices=sorted(GRIDS), help="verification grid")
    ap.add_argument("--trials", type=int, help="verify: override the Monte-Carlo trial count")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, help="worker threads (HALTON_CBC_THREADS overrides)")
    ap.add_argument("--max-n", type=int, help=f"cap on N (default {DEFAULT_MAX_N})")
    ap.add_argument("--max-search", type=int, help=f"cap on exhaustive search spaces (default {MAX_SEARCH_SPACE})")
    ap.add_argument("--timing", action="store_const", const=True, help="record wall time in the metadata")
    ap.add_argument("--inject-perturbation", action="store_const", const=True, help=argparse.SUPPRESS)
    return ap


def load_config(argv: list[str] | None = None) -> RunConfig:
    args = _build_parser().parse_args(argv)
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read config file: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "config file must hold a JSON object")
        raw = {k.replace("-", "_"): v for k, v in raw.items()}
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            raw[key] = value
    return validate(raw)


def validate(raw: dict) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__) | {"dim"}
    unknown = sorted(set(raw) - known - {"gammas"})
    if unknown:
        raise ConfigError(unknown[0], f"unknown config key {unknown[0]!r}")
    mode = raw.get("mode")
    if mode not in COMMANDS:
        raise ConfigError("mode", f"mode must be one of {COMMANDS}, got {mode!r}")
    cfg = RunConfig(mode=mode)
    if "dim" in raw and "bases" not in raw:
        raw["bases"] = f"first:{int(raw['dim'])}"
    try:
        if "bases" in raw:
            cfg.bases = BaseVector(_parse_bases(raw["bases"])).primes
    except (ValueError, PAdicError) as exc:
        raise ConfigError("bases", str(exc)) from None
    for key in ("n", "trials", "seed", "threads", "max_n", "max_search"):
        if key in raw:
            try:
                setattr(cfg, key, int(raw[key]))
            except (TypeError, ValueError):
                raise ConfigError(key, f"{key} must be an integer, got {raw[key]!r}") from None
    for key in ("weights", "shift_mode", "points", "grid", "out", "format"):
        if key in raw:
            setattr(cfg, key, str(raw[key]))
    for key in ("decimal", "timing", "inject_perturbation"):
        if key in raw:
            setattr(cfg, key, bool(raw[key]))
    if isinstance(raw.get("weights"), list):
        cfg.weights = ",".join(str(v) for v in raw["weights"])
    if "ms" in raw:
        cfg.ms = _parse_ints(raw["ms"], "ms")
    if "shift" in raw:
        cfg.shift = _parse_ints(raw["shift"], "shift")
    if "n_range" in raw:
        cfg.n_range = parse_n_range(raw["n_range"])

    if cfg.format is None:
        cfg.format = "csv" if mode in ("study", "halton") else "json"
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format", f"format must be csv or json, got {cfg.format!r}")
    if cfg.shift_mode not in MODES:
        raise ConfigError("shift_mode", f"shift mode must be one of {MODES}")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("threads", "thread count must be positive")
    if cfg.max_n < 1 or cfg.max_search < 1:
        raise ConfigError("max_n", "caps must be positive")
    if cfg.grid not in GRIDS:
        raise ConfigError("grid", f"unknown grid {cfg.grid!r}; expected one of {sorted(GRIDS)}")
    if cfg.trials is not None and cfg.trials < 1:
        raise ConfigError("trials", "trials must be positive")

    if mode == "verify":
        return cfg
    if mode == "wce" and cfg.points:
        return cfg
    if not cfg.bases:
        raise ConfigError("bases", "bases are required (--bases or --dim)")
    s = len(cfg.bases)
    if mode == "study":
        if not cfg.n_range:
            if cfg.n is None:
                raise ConfigError("n_range", "study needs --n-range (or --n)")
            cfg.n_range = (cfg.n,)
        ns = cfg.n_range
    else:
        if cfg.n is None:
            raise ConfigError("n", "N is required (--n)")
        ns = (cfg.n,)
    for n in ns:
        if n < 1:
            raise ConfigError("n", f"N must be positive, got {n}")
        if n > cfg.max_n:
            raise ConfigError("n", f"N={n} exceeds the cap max_n={cfg.max_n}")
    try:
        cfg.gammas = WeightSequence.parse(cfg.weights, s)
    except ValueError as exc:
        raise ConfigError("weights", str(exc)) from None
    try:
        for n in ns:
            ms = resolve_ms(BaseVector(cfg.bases), n, cfg.ms)
    except (ValueError, PAdicError) as exc:
        raise ConfigError("ms", str(exc)) from None
    if mode in ("cbc", "study"):
        # the greedy search scans p_j**m_j candidates per dimension
        for n in ns:
            ms = resolve_ms(BaseVector(cfg.bases), n, cfg.ms)
            largest = max(p**m for p, m in zip(cfg.bases, ms))
            if largest > cfg.max_search:
                raise ConfigError("max_search", f"{largest} candidates exceed max_search={cfg.max_search}")
    if cfg.shift is not None:
        if len(cfg.shift) != s:
            raise ConfigError("shift", f"shift has {len(cfg.shift)} components for {s} bases")
        ms = resolve_ms(BaseVector(cfg.bases), cfg.n, cfg.ms)
        for p, m, a in zip(cfg.bases, ms, cfg.shift):
            if not 0 <= a < p**m:
                raise ConfigError("shift", f"numerator {a} outside [0, {p}**{m})")
    return cfg


def _metadata(cfg: RunConfig, seconds: float) -> dict:
    meta = {"config": cfg.echo(), "versions": _io.versions(), "seed": cfg.seed}
    if cfg.timing:
        meta["wall_time_s"] = seconds
    return meta


def _cbc_payload(cfg: RunConfig) -> tuple[dict, bool]:
    res = cbc_construct(cfg.bases, cfg.n, cfg.gammas, ms=cfg.ms, threads=cfg.threads, max_n=cfg.max_n)
    dims = []
    for d in range(res.dimension):
        bound = res.cbc_bounds[d]
        dims.append(
            {
                "d": d + 1,
                "base": res.shift.bases[d],
                "m": res.shift.ms[d],
                "numerator": res.shift.numerators[d],
                "sigma": f"{res.shift.sigmas[d].numerator}/{res.shift.sigmas[d].denominator}",
                "squared_error": res.squared_errors[d],
                "cached_squared_error": res.cached_errors[d],
                "cbc_bound_sq": bound if bound is not None else "n/a (N < 2)",
                "rms_bound_sq": res.rms_bounds[d] if bound is not None else "n/a (N < 2)",
                "within_bound": res.within_bound[d] if bound is not None else "n/a (N < 2)",
                "candidates": res.candidate_counts[d],
            }
        )
    ok = all(w is not False for w in res.within_bound)
    payload = {
        "mode": "cbc",
        "N": cfg.n,
        "bases": list(cfg.bases),
        "weights": list(cfg.gammas.gammas),
        "shift": res.shift.to_dict(),
        "dimensions": dims,
        "all_within_bound": ok,
    }
    if cfg.timing:
        payload["seconds_per_dimension"] = res.seconds
    return payload, ok


def _study_rows(cfg: RunConfig) -> tuple[list[str], list[list], bool]:
    header = ["N", "e", "e_sq", "cbc_bound_sq", "rms_bound_sq", "within_bound", "numerators"]
    rows, ok = [], True
    for n in cfg.n_range:
        res = cbc_construct(cfg.bases, n, cfg.gammas, ms=cfg.ms, threads=cfg.threads, max_n=cfg.max_n)
        e_sq = res.squared_errors[-1]
        e = math.sqrt(max(e_sq, 0.0))
        if n >= 2:
            cb, rb = res.cbc_bounds[-1], res.rms_bounds[-1]
            within = e <= math.sqrt(cb)
            ok &= within
            rows.append([n, e, e_sq, cb, rb, str(within).lower(), " ".join(map(str, res.shift.numerators))])
        else:
            rows.append([n, e, e_sq, "n/a", "n/a", "n/a", " ".join(map(str, res.shift.numerators))])
    return header, rows, ok


def _point_set(cfg: RunConfig) -> PointSet:
    if cfg.shift is None:
        return halton_points(cfg.bases, cfg.n)
    return shifted_halton_points(cfg.bases, cfg.n, cfg.shift, cfg.shift_mode, cfg.ms)


def _read_points(path: str) -> PointSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or rows[0][0] != "n":
        raise ConfigError("points", f"{path} is not a point CSV with header n,x1,...")
    return PointSet.from_fractions([[Fraction(v) for v in r[1:]] for r in rows[1:]])


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute ``cfg``; returns the output text and the exit status."""
    t0 = time.perf_counter()
    status = 0
    if cfg.mode == "cbc":
        payload, ok = _cbc_payload(cfg)
        status = 0 if ok else 1
        if cfg.format == "csv":
            header = ["d", "base", "m", "numerator", "sigma", "squared_error", "cbc_bound_sq", "within_bound"]
            rows = [[r["d"], r["base"], r["m"], r["numerator"], r["sigma"], r["squared_error"], r["cbc_bound_sq"], r["within_bound"]] for r in payload["dimensions"]]
            return _io.csv_text(header, rows, _metadata(cfg, time.perf_counter() - t0)), status
    elif cfg.mode == "study":
        header, rows, ok = _study_rows(cfg)
        status = 0 if ok else 1
        if cfg.format == "csv":
            return _io.csv_text(header, rows, _metadata(cfg, time.perf_counter() - t0)), status
        payload = {"mode": "study", "rows": [dict(zip(header, r)) for r in rows], "all_within_bound": ok}
    elif cfg.mode == "verify":
        grid: str | dict = cfg.grid
        if cfg.trials is not None and "mc" in GRIDS[cfg.grid]:
            grid = dict(GRIDS[cfg.grid], mc=dict(GRIDS[cfg.grid]["mc"], trials=cfg.trials))
        payload = run_verification(grid, seed=cfg.seed, threads=cfg.threads, inject_perturbation=cfg.inject_perturbation)
        payload["grid"] = cfg.grid
        status = 0 if payload["summary"]["passed"] else 1
        if not payload["summary"]["passed"]:
            for f in payload["summary"]["failures"]:
                print(f"FAIL {f['name']} {json.dumps(f['case'], sort_keys=True)}", file=sys.stderr)
    elif cfg.mode == "halton":
        pts = _point_set(cfg)
        if cfg.format == "csv":
            text = pts.to_csv(exact=not cfg.decimal)
            meta = _metadata(cfg, time.perf_counter() - t0)
            return text + "".join(f"# {k}: {json.dumps(v, sort_keys=True, separators=(',', ':'))}\n" for k, v in meta.items()), 0
        payload = {
            "mode": "halton",
            "points": [[float(x) if cfg.decimal else str(x) for x in row] for row in pts.rows],
        }
    elif cfg.mode == "wce":
        pts = _read_points(cfg.points) if cfg.points else _point_set(cfg)
        gammas = cfg.gammas or WeightSequence.parse(cfg.weights, pts.dimension)
        payload = {
            "mode": "wce",
            "N": pts.count,
            "dimension": pts.dimension,
            "weights": list(gammas.gammas[: pts.dimension]),
            "squared_error": squared_wce(pts, gammas, max_n=cfg.max_n),
        }
    else:  # bound
        if cfg.n < 2:
            raise ConfigError("n", "bounds need N >= 2")
        payload = {
            "mode": "bound",
            "reports": [bound_report(cfg.bases, cfg.gammas, cfg.n, d).to_dict() for d in range(1, len(cfg.bases) + 1)],
        }
    if cfg.format == "csv":
        raise ConfigError("format", f"mode {cfg.mode} only writes json")
    payload["metadata"] = _metadata(cfg, time.perf_counter() - t0)
    return _io.dumps(payload), status


def _fail(kind: str, fld: str | None, message: str) -> int:
    print(json.dumps({"error": kind, "field": fld, "message": message}), file=sys.stderr)
    return 2


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(argv)
        resolve_threads(cfg.threads)
        text, status = run(cfg)
    except ConfigError as exc:
        return _fail("invalid-config", exc.field, str(exc))
    except (ValueError, OverflowError) as exc:
        return _fail(type(exc).__name__, None, str(exc))
    if cfg.out:
        Path(cfg.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
