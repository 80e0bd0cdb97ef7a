"""Command line entry point: ``curveflow run|sweep|analyze|plot``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments, io
from .curve import CurveError
from .flow import StepFailure
from .rescaling import RescalingError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for numerical failure here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curveflow", description="Curve flow experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="evolve one scenario from a JSON config")
    r.add_argument("config", help="JSON scenario file")
    r.add_argument("-o", "--output", help=f"run directory (default: ${experiments.OUTPUT_ENV}/<name>)")

    s = sub.add_parser("sweep", help="run a parameter grid")
    s.add_argument("config", help='JSON file {"base": {...}, "grid": {"dotted.key": [values]}}')
    s.add_argument("-o", "--output", help=f"sweep root (default: ${experiments.OUTPUT_ENV}/sweep)")
    s.add_argument("-j", "--workers", type=int, default=1)

    a = sub.add_parser("analyze", help="recompute analyses of a finished run")
    a.add_argument("run_dir")

    pl = sub.add_parser("plot", help="write SVG frames for a finished run")
    pl.add_argument("run_dir")
    pl.add_argument("-n", "--frames", type=int, default=12)
    return p


def _cmd_run(args) -> int:
    data = io.read_json(args.config)
    if args.output:
        data["output_dir"] = args.output
    config = experiments.ScenarioConfig.from_dict(data)
    run_dir = experiments.run(config)
    summary = io.read_json(run_dir / "summary.json")
    print(f"{run_dir}: verdict={summary['verdict']} termination={summary['termination']} T_est={summary['T_est']}")
    return EXIT_NUMERICAL if summary["termination"] == "step_failure" else EXIT_OK


def _cmd_sweep(args) -> int:
    data = io.read_json(args.config)
    if not isinstance(data, dict) or "grid" not in data:
        raise experiments.ConfigError("sweep config needs a 'grid' mapping")
    grid = data["grid"]
    if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
        raise experiments.ConfigError("grid values must be non-empty lists")
    root = Path(args.output) if args.output else experiments.output_root() / "sweep"
    index = experiments.sweep(data.get("base", {}), grid, root, workers=args.workers)
    runs = io.read_json(index)["runs"]
    for entry in runs:
        print(f"{entry['run']}: {json.dumps(entry['params'], sort_keys=True)} verdict={entry['verdict']} error={entry['error']}")
    return EXIT_NUMERICAL if any(e["error"] for e in runs) else EXIT_OK


def _cmd_analyze(args) -> int:
    result = experiments.analyze(_existing(args.run_dir))
    print(f"{args.run_dir}: verdict={result['verdict']} ({result['verdict_reason']})")
    return EXIT_OK


def _cmd_plot(args) -> int:
    names = experiments.plot(_existing(args.run_dir), args.frames)
    print(f"wrote {len(names)} frames to {Path(args.run_dir) / 'frames'}")
    return EXIT_OK


def _existing(run_dir) -> Path:
    path = Path(run_dir)
    if not (path / "summary.json").is_file():
        raise experiments.ConfigError(f"{run_dir} is not a run directory")
    return path


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "analyze": _cmd_analyze, "plot": _cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _COMMANDS[args.command](args)
    except experiments.ConfigError as exc:
        print(f"curveflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StepFailure, RescalingError, CurveError, ArithmeticError) as exc:
        print(f"curveflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        # unreadable or malformed input files
        print(f"curveflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
