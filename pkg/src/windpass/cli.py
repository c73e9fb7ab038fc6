"""Simulate repeated UAV passes that learn wind-dependent edge costs on a grid.

Subcommands: synth, run, sweep, report.
Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Sequence

import yaml

from windpass.harness import (
    ConfigError,
    TrialConfig,
    build_scenario,
    emit_reports,
    emit_summary,
    fmt,
    run_sweep,
    run_trial,
    table_grid,
)
from windpass.windfield import WindField

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("windpass")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML or JSON file with TrialConfig fields")
    parser.add_argument("--grid", type=int, help="traversable interior size N (sets n1=N, n2=N+2)")
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(TrialConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "freq_range":
            group.add_argument(flag, type=float, nargs=2, metavar=("LO", "HI"), default=argparse.SUPPRESS)
        elif isinstance(f.default, bool):
            group.add_argument(flag, action=argparse.BooleanOptionalAction, default=argparse.SUPPRESS)
        elif f.name == "output_dir":
            group.add_argument(flag, "-o", default=argparse.SUPPRESS)
        else:
            kind = type(f.default) if f.default is not None else str
            group.add_argument(flag, type=kind, default=argparse.SUPPRESS)


def load_config(args: argparse.Namespace) -> TrialConfig:
    """File values first, then ``--grid``, then explicit flags."""
    data: dict[str, Any] = {}
    if args.config is not None:
        try:
            loaded = yaml.safe_load(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {args.config}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {args.config} must be a mapping")
        data.update(loaded)
    if getattr(args, "grid", None) is not None:
        data["n1"], data["n2"] = table_grid(args.grid)
    for f in dataclasses.fields(TrialConfig):
        if f.name in vars(args):
            data[f.name] = getattr(args, f.name)
    return TrialConfig.from_dict(data).validate()


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _write_failure(output_dir: str | Path | None, config: TrialConfig | None, exc: BaseException) -> None:
    if output_dir is None:
        return
    record = {
        "status": "failed",
        "error": type(exc).__name__,
        "message": str(exc),
        "traceback": traceback.format_exception(type(exc), exc, exc.__traceback__),
        "config": config.to_dict() if config is not None else None,
    }
    try:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "failure.json").write_text(json.dumps(record, indent=1) + "\n")
    except OSError:
        log.error("could not write failure record to %s", output_dir)


# -- subcommands --------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    config = load_config(args)
    field_ = build_scenario(config)
    blob = json.dumps({"config": config.to_dict(), "field": field_.to_dict()}, indent=1, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(blob)
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(blob)
        print(f"scenario written to {args.out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    field_ = None
    if args.scenario is not None:
        try:
            field_ = WindField.from_dict(json.loads(Path(args.scenario).read_text())["field"])
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot load scenario {args.scenario}: {exc}") from exc
    result = run_trial(config, field_)
    conv = result.convergence_pass
    print(f"grid {config.grid_label} case {config.case} estimator {config.estimator} seed {config.seed}")
    print(f"convergence_pass {conv if conv is not None else 'none'}")
    print(f"oracle_path {'-'.join(map(str, result.oracle_path))} oracle_cost {fmt(result.oracle_cost)}")
    if config.output_dir:
        for path in emit_reports(result, config.output_dir):
            print(f"wrote {path}")
        # A successful rerun supersedes any earlier failure record.
        (Path(config.output_dir) / "failure.json").unlink(missing_ok=True)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args)
    grids = [table_grid(n) for n in args.grids] if args.grids else None
    rows, _ = run_sweep(config, args.seeds, grids=grids, cases=args.cases, estimators=args.estimators, workers=args.workers)
    print("grid case estimator n_seeds median min max fraction_converged")
    for r in rows:
        med = r["median_passes"]
        print(
            r["grid"],
            r["case"],
            r["estimator"],
            r["n_seeds"],
            fmt(med) if med is not None else "none",
            fmt(r["min_passes"]) if r["min_passes"] is not None else "none",
            fmt(r["max_passes"]) if r["max_passes"] is not None else "none",
            fmt(r["fraction_converged"]),
        )
    if config.output_dir:
        print(f"wrote {emit_summary(rows, config.output_dir)}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.result).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read result {args.result}: {exc}") from exc
    for key in ("config", "passes", "oracle_path", "scenario"):
        if key not in data:
            raise ConfigError(f"{args.result} is not a trial result (missing {key!r})")
    for path in emit_reports(data, args.output_dir):
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windpass", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a replayable scenario file")
    _add_config_flags(p)
    p.add_argument("--out", help="destination file (default: stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run one trial and write its reports")
    _add_config_flags(p)
    p.add_argument("--scenario", help="scenario file from 'synth' to use instead of the seed's field")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run seeds 1..N over grid/case/estimator cells")
    _add_config_flags(p)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--grids", type=_int_list, help="interior sizes, e.g. 5,7,9")
    p.add_argument("--cases", type=_int_list, help="e.g. 1,2,3,4")
    p.add_argument("--estimators", type=lambda s: [x for x in s.split(",") if x], help="stitch,kf")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="regenerate CSVs from a stored result.json")
    p.add_argument("result")
    p.add_argument("--output-dir", "-o", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    config: TrialConfig | None = None
    try:
        if args.command != "report":
            config = load_config(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 2
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        _write_failure(config.output_dir if config else getattr(args, "output_dir", None), config, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
