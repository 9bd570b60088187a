"""Command-line entry point ``sim``.

Usage::

    sim <experiment> --scenario FILE [--out DIR] [--seed N] [--threads N]

Exit status: 0 success, 2 usage error, 3 scenario error, 4 simulation error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .errors import ScenarioError, SimError
from .experiments import Result, run_scenario
from .rng import GENERATOR_NAME, GENERATOR_VERSION
from .scenario import EXPERIMENTS, U64_MAX, parse_scenario

log = logging.getLogger("specshare")

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_RUNTIME = 0, 2, 3, 4


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int) or (hasattr(x, "dtype") and x.dtype.kind in "iu"):
        return str(int(x))
    if isinstance(x, float) or (hasattr(x, "dtype") and x.dtype.kind == "f"):
        return f"{float(x):.9g}"
    return str(x)


def render_csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_atomic(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(result: Result, out_dir: Path) -> dict:
    """Write every table as ``<name>.csv``; returns sha256 checksums by file name."""
    out_dir.mkdir(parents=True, exist_ok=True)
    sums = {}
    for name, table in result.tables.items():
        data = render_csv(table.header, table.rows)
        write_atomic(out_dir / f"{name}.csv", data)
        sums[f"{name}.csv"] = hashlib.sha256(data).hexdigest()
    return sums


def _u64(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Spectrum-sharing simulation experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: $SIM_OUT_DIR, else the scenario's output_dir)")
        p.add_argument("--seed", type=_u64, default=None, help="override the scenario seed")
        p.add_argument("--threads", type=_positive, default=1, help="worker threads (default 1)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        raw = args.scenario.read_bytes()
    except OSError as exc:
        print(f"sim: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        scenario = parse_scenario(raw, seed_override=args.seed)
        if scenario.experiment != args.experiment:
            raise ScenarioError(f"$.experiment: scenario is for {scenario.experiment!r}, "
                                f"not {args.experiment!r}")
    except ScenarioError as exc:
        print(f"sim: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    out_dir = args.out or Path(os.environ.get("SIM_OUT_DIR") or scenario.output_dir)
    start = time.perf_counter()
    try:
        result = run_scenario(scenario, threads=args.threads)
    except SimError as exc:
        print(f"sim: simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    wall = time.perf_counter() - start
    try:
        sums = emit(result, out_dir)
        report = {
            "experiment": scenario.experiment,
            "scenario_digest": hashlib.sha256(raw).hexdigest(),
            "seed": scenario.seed,
            "generator": {"name": GENERATOR_NAME, "version": GENERATOR_VERSION},
            "files": sums,
            "metrics": result.metrics,
            "threads": args.threads,
            "wall_time_s": wall,
        }
        write_atomic(out_dir / "run.json", (json.dumps(report, indent=2, sort_keys=True) + "\n").encode())
    except OSError as exc:
        print(f"sim: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %s to %s in %.2fs", ", ".join(sums), out_dir, wall)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
