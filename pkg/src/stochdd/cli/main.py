"""``stochdd`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
import warnings

from .. import __version__
from ..errors import ConfigError, NumericalError
from ..stochastic import GAUSSIAN_ALGORITHM
from .config import ExperimentConfig, load_config
from .runners import Table, run_bounds, run_limits, run_sweep_pulses, run_trajectories, sweep_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return "%.17g" % (float(v) + 0.0)


def render_csv(table: Table, command: str, cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    meta = {
        "tool": f"stochdd {__version__}",
        "command": command,
        "config_sha256": cfg.sha256,
        "master_seed": cfg.master_seed,
        "trials": cfg.trials,
        "gaussian": GAUSSIAN_ALGORITHM,
    }
    meta.update(table.header)
    for key, value in meta.items():
        text = value if isinstance(value, str) else format_value(value)
        out.write(f"# {key}: {text}\n")
    out.write(",".join(table.columns) + "\n")
    for row in table.rows:
        out.write(",".join(format_value(v) for v in row) + "\n")
    return out.getvalue()


def render_json(report: dict, cfg: ExperimentConfig) -> str:
    doc = {
        "meta": {
            "tool": f"stochdd {__version__}",
            "command": "limits",
            "config_sha256": cfg.sha256,
            "master_seed": cfg.master_seed,
        },
        "limits": report,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides [run] master_seed)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (overrides [run] trials)")
    common.add_argument("--out", help="output file; '-' or absent writes to stdout")
    common.add_argument("--threads", type=int, help="worker threads (overrides [run] threads)")
    parser = argparse.ArgumentParser(
        prog="stochdd", description="Dynamical decoupling under stochastic pulse noise."
    )
    parser.add_argument("--version", action="version", version=f"stochdd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("limits", parents=[common], help="continuous-control limit operators (JSON)")
    sub.add_parser("sweep-pulses", parents=[common], help="fidelity against the number of pulses (CSV)")
    sub.add_parser("trajectories", parents=[common], help="limit trajectories against the master equation (CSV)")
    sub.add_parser("bounds", parents=[common], help="convergence bound against Monte Carlo distance (CSV)")
    return parser


def _execute(args) -> tuple[str, ExperimentConfig]:
    cfg = load_config(args.config).with_overrides(args.seed, args.trials, args.out, args.threads)
    if args.command == "limits":
        return render_json(run_limits(cfg), cfg), cfg
    if args.command == "sweep-pulses":
        curves = run_sweep_pulses(cfg)
        t = float(cfg.scenario.float("t", default=0.0))
        return render_csv(sweep_table(curves, t), args.command, cfg), cfg
    if args.command == "trajectories":
        return render_csv(run_trajectories(cfg), args.command, cfg), cfg
    return render_csv(run_bounds(cfg), args.command, cfg), cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    warnings.simplefilter("default")
    try:
        text, cfg = _execute(args)
    except ConfigError as exc:
        print(f"stochdd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"stochdd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    # single writer after all reductions are complete
    if cfg.out and cfg.out != "-":
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"stochdd: configuration error: cannot write {cfg.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_OK
