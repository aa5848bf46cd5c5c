"""Command-line experiment runner.

Each run writes ``<experiment>.csv`` and ``<experiment>.manifest.json`` into
the output directory, plus ``<experiment>.gp`` (a gnuplot script) when asked.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

import hybridnet
from hybridnet import experiments
from hybridnet.config import ConfigError, ExperimentConfig, load_config
from hybridnet.errors import HybridNetError, InvalidParameterError
from hybridnet.experiments import SCHEMAS, Table, format_cell
from hybridnet.montecarlo import THREADS_ENV, worker_count

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INVALID = 4
EXIT_OUTPUT = 5
EXIT_SCHEMA = 6

FIGURES = ("fig3", "fig4", "fig5", "fig6")
COMMANDS = ("outage", "mu-curve", "mpt-power", "power-outage", "feasibility")


class OutputError(HybridNetError):
    """The output directory or a file in it cannot be written."""


class SchemaError(HybridNetError):
    """A CSV is missing or its header does not match the experiment."""


def code_version() -> str:
    return hybridnet.__version__


# ---------------------------------------------------------------- output

def prepare_output(out_dir: Path) -> Path:
    """Create ``out_dir`` and check it is writable before any work starts."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"cannot write to {out_dir}: {exc.strerror or exc}") from None
    return out_dir


def write_csv(path: Path, table: Table) -> bytes:
    lines = [",".join(table.header)]
    lines += [",".join(format_cell(v) for v in row) for row in table.rows]
    data = ("\n".join(lines) + "\n").encode()
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return data


def write_manifest(path: Path, cfg: ExperimentConfig, table: Table, csv_bytes: bytes,
                   wall_time: float, argv: Sequence[str], workers: int):
    manifest = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "code_version": code_version(),
        "command": ["hybridnet", *argv],
        "config": cfg.to_json(),
        "csv": f"{cfg.experiment}.csv",
        "csv_sha256": hashlib.sha256(csv_bytes).hexdigest(),
        "wall_time_s": round(wall_time, 3),
        "workers": workers,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "notes": table.notes,
    }
    try:
        path.write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(type(v).__name__)


# ---------------------------------------------------------------- plotting

_PLOTS = {
    "fig3": dict(x="mu", y=["epsilon"], xlabel="mu", ylabel="outage probability", log=""),
    "mu-curve": dict(x="mu", y=["epsilon"], xlabel="mu", ylabel="outage probability", log=""),
    "fig4": dict(x="lambda_b", y=["min_p_noise", "min_p_intlim"], xlabel="BS density",
                 ylabel="minimum mobile power", log="xy"),
    "fig5": dict(x="lambda_p", y=["p_iso_large", "p_dir_large", "p_iso_small", "p_dir_small"],
                 xlabel="beacon density", ylabel="mobile transmit power", log="xy"),
    "fig6": dict(x="lambda_b", y=["min_lambda_p_sim", "min_lambda_p_bound"], xlabel="BS density",
                 ylabel="minimum beacon density", log="xy"),
    "outage": dict(x="lambda_b", y=["p_out"], xlabel="BS density", ylabel="outage probability",
                   log="x"),
    "mpt-power": dict(x="lambda_p", y=["mean_power", "analytic"], xlabel="beacon density",
                      ylabel="mean raw power", log="xy"),
    "power-outage": dict(x="lambda_p", y=["p_out", "bound"], xlabel="beacon density",
                         ylabel="power outage probability", log="x"),
    "feasibility": dict(x="lambda_b", y=["min_co_param"], xlabel="BS density",
                        ylabel="minimum co-parameter", log="xy"),
}


def read_header(csv_path: Path) -> tuple:
    try:
        with open(csv_path, newline="") as fh:
            return tuple(next(csv.reader(fh), ()))
    except OSError as exc:
        raise SchemaError(f"cannot read CSV {csv_path}: {exc.strerror or exc}") from None


def emit_plot_script(csv_path, experiment: str, script_path=None) -> Path:
    """Write a gnuplot script that plots ``csv_path``; nothing is plotted here."""
    if experiment not in SCHEMAS:
        raise InvalidParameterError(f"unknown experiment {experiment!r}")
    csv_path = Path(csv_path)
    header = read_header(csv_path)
    if header != SCHEMAS[experiment]:
        raise SchemaError(f"{csv_path} header {','.join(header)!r} does not match "
                          f"{experiment} schema {','.join(SCHEMAS[experiment])!r}")
    spec = _PLOTS[experiment]
    col = {name: i + 1 for i, name in enumerate(header)}
    lines = [
        f"# gnuplot script for {csv_path.name}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{spec['xlabel']}'",
        f"set ylabel '{spec['ylabel']}'",
        "set grid",
    ]
    if spec["log"]:
        lines.append(f"set logscale {spec['log']}")
    else:
        lines.append("unset logscale")
    data = f"'{csv_path.name}'"
    groups = _series_filters(experiment)
    plots = []
    for y in spec["y"]:
        for label, cond in groups:
            using = f"{col[spec['x']]}:({cond}${col[y]}{' : 1/0' if cond else ''})"
            plots.append(f"{data} using {using} with linespoints title '{y}{label}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    script_path = Path(script_path) if script_path else csv_path.with_suffix(".gp")
    try:
        script_path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {script_path}: {exc.strerror or exc}") from None
    return script_path


def _series_filters(experiment: str) -> list:
    """Per-series row filters for long-format CSVs, as gnuplot ternary prefixes."""
    if experiment == "fig6":
        return [(f" {m}/{s}", f'strcol(4) eq "{m}" && strcol(5) eq "{s}" ? ')
                for m in ("isotropic", "directed") for s in ("large", "small")]
    if experiment in ("mpt-power", "power-outage"):
        return [(f" {m}", f'strcol(2) eq "{m}" ? ') for m in ("isotropic", "directed")]
    return [("", "")]


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="base seed (overrides the config)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (overrides the config)")
    common.add_argument("--out", help="output directory (default: config 'output' or '.')")
    common.add_argument("--emit-plot", action="store_true", help="also write a gnuplot script")

    parser = argparse.ArgumentParser(
        prog="hybridnet",
        description=f"Outage and feasibility experiments. {THREADS_ENV} caps the worker count.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    rep = sub.add_parser("reproduce", parents=[common], help="reproduce one evaluation figure")
    rep.add_argument("figure", choices=FIGURES)
    plot = sub.add_parser("plot", help="write a gnuplot script for an existing CSV")
    plot.add_argument("csv")
    plot.add_argument("--experiment", required=True, choices=sorted(SCHEMAS))
    return parser


def run(cfg: ExperimentConfig, out_dir: Path, emit_plot: bool = False,
        argv: Sequence[str] = ()) -> Path:
    """Run one validated experiment and write its files; returns the CSV path."""
    cfg.validate()
    workers = worker_count()
    prepare_output(out_dir)
    start = time.perf_counter()
    table = experiments.run_experiment(cfg, workers)
    wall = time.perf_counter() - start
    csv_path = out_dir / f"{cfg.experiment}.csv"
    data = write_csv(csv_path, table)
    write_manifest(out_dir / f"{cfg.experiment}.manifest.json", cfg, table, data, wall, argv, workers)
    if emit_plot:
        emit_plot_script(csv_path, cfg.experiment)
    return csv_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            path = emit_plot_script(args.csv, args.experiment)
            print(path)
            return EXIT_OK
        experiment = args.figure if args.command == "reproduce" else args.command
        cfg = load_config(args.config)
        if cfg.experiment is not None and cfg.experiment != experiment:
            raise InvalidParameterError(
                f"config is for {cfg.experiment!r} but the command runs {experiment!r}")
        cfg = replace(cfg, experiment=experiment).with_overrides(
            seed=args.seed, trials=args.trials, output=args.out)
        out_dir = Path(cfg.output or ".")
        csv_path = run(cfg, out_dir, args.emit_plot, argv)
        print(csv_path)
        return EXIT_OK
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except OutputError as exc:
        return _fail(exc, EXIT_OUTPUT)
    except SchemaError as exc:
        return _fail(exc, EXIT_SCHEMA)
    except InvalidParameterError as exc:
        return _fail(exc, EXIT_INVALID)
    except HybridNetError as exc:
        return _fail(exc, EXIT_RUNTIME)


def _fail(exc: Exception, code: int) -> int:
    print(f"hybridnet: error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
