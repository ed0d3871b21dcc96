"""Experiment driver: sweep runner with CSV output.

One CSV row per (algorithm, f, N) point, replications merged.  Replication
seeds are derived from the base seed and the point coordinates, so
reordering sweep values never changes a row and identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from . import engine, stats
from .model import Algorithm, ConfigError, SimConfig, validate_config

WORKERS_ENV = "OFDMA_RTA_MAX_WORKERS"

CSV_COLUMNS = [
    "algorithm",
    "f",
    "fmax",
    "n_stations",
    "lambda_hz",
    "slot_us",
    "deadline_us",
    "slots",
    "reps",
    "n_delivered",
    "mean_delay_us",
    "p_late",
    "p_late_ci95",
    "non_rta_share",
    "cycle_slot_fraction",
    "seed_base",
]


@dataclass
class SweepSpec:
    base: SimConfig
    stations: List[int]
    f_values: List[int]
    algorithms: List[Algorithm]
    replications: int
    out_path: str


def parse_station_list(text: str) -> List[int]:
    """Parse '2:60:2' (inclusive range) or '5,10,20' or a single integer."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"malformed range: {text!r}")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0 or stop < start:
            raise ValueError(f"malformed range: {text!r}")
        return list(range(start, stop + 1, step))
    return [int(v) for v in text.split(",") if v != ""]


def parse_int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ofdma-rta",
        description="Sweep a slotted uplink-OFDMA simulation and write CSV results.",
    )
    ap.add_argument(
        "--algorithm",
        action="append",
        choices=["uora", "cra"],
        help="algorithm to simulate; repeatable (default: both)",
    )
    ap.add_argument("--stations", default="5,10,15,20",
                    help="station counts: list '5,10,20' or inclusive range '2:60:2'")
    ap.add_argument("--f", default="6", help="random-access RU counts, comma list")
    ap.add_argument("--lambda", dest="lambda_hz", type=float, default=200.0,
                    help="frame regeneration rate, 1/s")
    ap.add_argument("--slot-us", type=float, default=250.0, help="slot duration, microseconds")
    ap.add_argument("--fmax", type=int, default=18, help="total RUs per slot")
    ap.add_argument("--deadline-us", type=float, default=1000.0, help="delay budget, microseconds")
    ap.add_argument("--slots", type=int, default=4_000_000, help="simulated slots per replication")
    ap.add_argument("--warmup", type=int, default=10_000, help="slots discarded as warm-up")
    ap.add_argument("--eocw-min", type=int, default=3,
                    help="minimal contention-window exponent (OCW = 2^e - 1)")
    ap.add_argument("--eocw-max", type=int, default=5,
                    help="maximal contention-window exponent (OCW = 2^e - 1)")
    ap.add_argument("--seed", type=int, default=1, help="base seed for replication seeds")
    ap.add_argument("--reps", type=int, default=5, help="independent replications per point")
    ap.add_argument("--out", default="sweep.csv", help="output CSV path")
    return ap


def parse_args(argv: Sequence[str]) -> SweepSpec:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        stations = parse_station_list(args.stations)
        f_values = parse_int_list(args.f)
    except ValueError as exc:
        ap.error(str(exc))
    if not stations or not f_values:
        ap.error("station and f lists must be non-empty")
    if args.reps < 1:
        ap.error("--reps must be >= 1")
    algorithms = [Algorithm(a) for a in (args.algorithm or ["uora", "cra"])]

    base = SimConfig(
        n_stations=stations[0],
        f_ra=f_values[0],
        f_max=args.fmax,
        arrival_rate=args.lambda_hz,
        slot_duration=args.slot_us * 1e-6,
        algorithm=algorithms[0],
        ocw_min=2 ** args.eocw_min - 1,
        ocw_max=2 ** args.eocw_max - 1,
        deadline=args.deadline_us * 1e-6,
        horizon_slots=args.slots,
        warmup_slots=args.warmup,
        seed=args.seed,
    )
    spec = SweepSpec(
        base=base,
        stations=stations,
        f_values=f_values,
        algorithms=algorithms,
        replications=args.reps,
        out_path=args.out,
    )
    # every (algorithm, f, N) combination must be a valid configuration
    try:
        for cfg, _seed in iter_point_configs(spec):
            validate_config(cfg)
    except ConfigError as exc:
        ap.error(str(exc))
    return spec


def derive_seed(seed_base: int, algorithm: Algorithm, f_ra: int, n: int, rep: int) -> int:
    """Stable 32-bit replication seed from the base seed and point coordinates."""
    key = f"{seed_base}:{algorithm.value}:{f_ra}:{n}:{rep}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=4).digest(), "big")


def iter_points(spec: SweepSpec):
    for algorithm in spec.algorithms:
        for f_ra in spec.f_values:
            for n in spec.stations:
                yield algorithm, f_ra, n


def iter_point_configs(spec: SweepSpec):
    for algorithm, f_ra, n in iter_points(spec):
        for rep in range(spec.replications):
            seed = derive_seed(spec.base.seed, algorithm, f_ra, n, rep)
            yield (
                dataclasses.replace(
                    spec.base, n_stations=n, f_ra=f_ra, algorithm=algorithm, seed=seed
                ),
                seed,
            )


def _run_one(cfg: SimConfig) -> stats.RunMetrics:
    return engine.run(cfg)


def max_workers() -> int:
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        return max(1, int(cap))
    return os.cpu_count() or 1


def run_point(
    spec: SweepSpec, algorithm: Algorithm, f_ra: int, n: int
) -> stats.RunMetrics:
    """Run all replications of one point and merge their metrics."""
    configs = [
        dataclasses.replace(
            spec.base,
            n_stations=n,
            f_ra=f_ra,
            algorithm=algorithm,
            seed=derive_seed(spec.base.seed, algorithm, f_ra, n, rep),
        )
        for rep in range(spec.replications)
    ]
    workers = min(max_workers(), len(configs))
    if workers <= 1:
        parts = [_run_one(cfg) for cfg in configs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_one, configs))
    return stats.merge_all(parts)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "nan"
    return repr(float(value))


def format_row(
    spec: SweepSpec, algorithm: Algorithm, f_ra: int, n: int, m: stats.RunMetrics
) -> str:
    mean_us = None if m.mean_delay is None else m.mean_delay * 1e6
    fields = [
        algorithm.value,
        str(f_ra),
        str(spec.base.f_max),
        str(n),
        _fmt(spec.base.arrival_rate),
        _fmt(spec.base.slot_duration * 1e6),
        _fmt(spec.base.deadline * 1e6),
        str(spec.base.horizon_slots),
        str(spec.replications),
        str(m.n_delivered),
        _fmt(mean_us),
        _fmt(m.p_late),
        _fmt(m.p_late_ci95),
        _fmt(m.non_rta_share),
        _fmt(m.slots_in_cycle_fraction),
        str(spec.base.seed),
    ]
    return ",".join(fields)


def run_sweep(spec: SweepSpec) -> str:
    """Run every sweep point and atomically write the CSV; returns the path."""
    points = sorted(
        iter_points(spec), key=lambda p: (p[0].value, p[1], p[2])
    )
    rows = []
    failures = 0
    for algorithm, f_ra, n in points:
        try:
            metrics = run_point(spec, algorithm, f_ra, n)
        except Exception as exc:  # a failed point must not sink the sweep
            failures += 1
            print(
                f"point algorithm={algorithm.value} f={f_ra} N={n} failed: {exc}",
                file=sys.stderr,
            )
            continue
        rows.append(format_row(spec, algorithm, f_ra, n, metrics))
        print(f"done algorithm={algorithm.value} f={f_ra} N={n}", file=sys.stderr)

    out_dir = os.path.dirname(os.path.abspath(spec.out_path)) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".sweep-", suffix=".csv", dir=out_dir)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in rows:
                fh.write(row + "\n")
        os.replace(tmp_path, spec.out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    if failures:
        raise RuntimeError(f"{failures} sweep point(s) failed")
    return spec.out_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        spec = parse_args(list(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run_sweep(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
