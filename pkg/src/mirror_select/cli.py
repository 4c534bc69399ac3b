"""Command-line front end.

Subcommands: ``ds`` / ``mds`` (feature selection on CSV data), ``ggm``
(graph estimation on CSV data), ``simulate`` (emit synthetic data), and
``bench`` (Monte-Carlo benchmark from a JSON config).  Exit codes: 0 on
success, 2 on configuration or usage errors, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, synth
from .errors import ConfigError, MirrorSelectError
from .ggm import ggm_select
from .linalg import make_dataset, substream
from .mds import mds_select
from .mirror import Contrast, ds_select


def _numeric_line(line: str) -> bool:
    for field in line.strip().split(","):
        try:
            float(field)
        except ValueError:
            return False
    return True


def read_matrix_csv(path: str) -> np.ndarray:
    """Load a comma-separated matrix; a non-numeric first line is a header."""
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
    if not first.strip():
        raise ConfigError(f"{path} is empty")
    skip = 0 if _numeric_line(first) else 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)


def read_vector_csv(path: str) -> np.ndarray:
    matrix = read_matrix_csv(path)
    if matrix.shape[1] != 1:
        raise ConfigError(f"{path} must hold a single column")
    return matrix[:, 0]


def _json_float(value: float):
    return float(value) if math.isfinite(value) else None


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_select(args) -> int:
    x = read_matrix_csv(args.x)
    y = read_vector_csv(args.y)
    if y.size != x.shape[0]:
        raise ConfigError("response length does not match design rows")
    data = make_dataset(x, y)
    rng = substream(args.seed, "cli-select")
    contrast = Contrast(args.stat)
    if args.command == "ds":
        result = ds_select(data, args.q, contrast, rng, args.cv_folds, args.grid_size)
    else:
        result = mds_select(
            data, args.q, contrast, args.m, rng, args.cv_folds, args.grid_size
        )
    _write_json(
        {
            "method": args.command,
            "q": args.q,
            "contrast": contrast.value,
            "seed": args.seed,
            "n_rows": int(data.n),
            "n_features": int(data.p),
            "selected": [int(j) for j in result.selected],
            "cutoff": _json_float(result.cutoff),
            "estimated_fdp": _json_float(result.estimated_fdp),
            "flags": list(result.flags),
        },
        args.out,
    )
    return 0


def _cmd_ggm(args) -> int:
    x = read_matrix_csv(args.x)
    rng = substream(args.seed, "cli-ggm")
    estimate = ggm_select(
        x,
        args.q,
        args.method,
        args.m,
        rng,
        Contrast(args.stat),
        args.cv_folds,
        args.grid_size,
    )
    _write_json(
        {
            "method": args.method,
            "q": args.q,
            "seed": args.seed,
            "n_rows": int(x.shape[0]),
            "n_nodes": int(x.shape[1]),
            "edges": sorted([int(i), int(j)] for i, j in estimate.edges),
            "neighborhoods": {
                str(node): [int(i) for i in neighbors]
                for node, neighbors in enumerate(estimate.neighborhoods)
            },
            "failed_nodes": list(estimate.failed_nodes),
        },
        args.out,
    )
    return 0


def _load_config(path: str, overrides: dict) -> harness.ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return harness.config_from_dict(doc)


def _savetxt(path: Path, matrix: np.ndarray, columns: list[str]) -> None:
    np.savetxt(
        path,
        matrix,
        delimiter=",",
        fmt="%.17g",
        header=",".join(columns),
        comments="",
    )


def _cmd_simulate(args) -> int:
    config = _load_config(args.config, {"method": "ds", "n_reps": 1})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = substream(config.master_seed, "data", args.rep)
    if config.scenario == "linear":
        lin = config.linear
        x = synth.sample_design(lin.design, rng)
        truth = synth.sample_linear_truth(
            lin.design.covariance.size,
            lin.num_signals,
            lin.signal_strength,
            lin.design.rows,
            rng,
            lin.scale_reading,
        )
        y = synth.sample_response(x, truth, rng)
        _savetxt(out_dir / "x.csv", x, [f"x{j + 1}" for j in range(x.shape[1])])
        _savetxt(out_dir / "y.csv", y[:, None], ["y"])
        truth_doc = {
            "scenario": "linear",
            "rep": args.rep,
            "signals": [int(j) for j in truth.signals],
            "coef": [float(v) for v in truth.coef],
        }
    elif config.scenario == "ggm":
        x, edges = synth.sample_gaussian_graph_data(
            config.graph.graph, config.graph.rows, rng
        )
        _savetxt(out_dir / "x.csv", x, [f"x{j + 1}" for j in range(x.shape[1])])
        truth_doc = {
            "scenario": "ggm",
            "rep": args.rep,
            "edges": sorted([int(i), int(j)] for i, j in edges),
        }
    else:
        x, signals = harness.sample_normal_means(config.normal_means, rng)
        _savetxt(out_dir / "x.csv", x, [f"x{j + 1}" for j in range(x.shape[1])])
        truth_doc = {
            "scenario": "normal_means",
            "rep": args.rep,
            "signals": [int(j) for j in signals],
        }
    _write_json(truth_doc, str(out_dir / "truth.json"))
    print(f"wrote {config.scenario} data to {out_dir}")
    return 0


def _cmd_bench(args) -> int:
    overrides = {
        "master_seed": args.seed,
        "workers": args.workers,
        "n_reps": args.reps,
        "q": args.q,
        "method": args.method,
        "m": args.m,
    }
    config = _load_config(args.config, overrides)
    records, summary = harness.run_experiment(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    harness.write_records_csv(records, out_dir / "records.csv")
    harness.write_summary_json(summary, out_dir / "summary.json")
    if summary["n_ok"] == 0:
        print("all replications failed", file=sys.stderr)
        return 3
    print(
        f"{config.scenario}/{config.method}: mean_fdp={summary['mean_fdp']:.4f} "
        f"sd_fdp={summary['sd_fdp']:.4f} mean_power={summary['mean_power']:.4f} "
        f"({summary['n_ok']}/{config.n_reps} reps ok)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirror-select",
        description="FDR-controlled feature selection via data splitting",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_select(name: str, description: str):
        cmd = sub.add_parser(name, help=description)
        cmd.add_argument("--x", required=True, help="design matrix CSV")
        cmd.add_argument("--y", required=True, help="response CSV (one column)")
        cmd.add_argument("--q", type=float, default=0.1, help="target FDR level")
        cmd.add_argument(
            "--stat",
            choices=[c.value for c in Contrast],
            default=Contrast.SUM.value,
            help="mirror contrast",
        )
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--cv-folds", type=int, default=10)
        cmd.add_argument("--grid-size", type=int, default=100)
        cmd.add_argument("--out", help="output JSON path (default stdout)")
        return cmd

    add_select("ds", "single data-split selection")
    mds_cmd = add_select("mds", "multiple data-split selection")
    mds_cmd.add_argument("--m", type=int, default=50, help="number of splits")

    ggm_cmd = sub.add_parser("ggm", help="graph estimation from CSV data")
    ggm_cmd.add_argument("--x", required=True)
    ggm_cmd.add_argument("--q", type=float, default=0.2)
    ggm_cmd.add_argument("--method", choices=["ds", "mds"], default="ds")
    ggm_cmd.add_argument("--m", type=int, default=50)
    ggm_cmd.add_argument(
        "--stat", choices=[c.value for c in Contrast], default=Contrast.SUM.value
    )
    ggm_cmd.add_argument("--seed", type=int, default=0)
    ggm_cmd.add_argument("--cv-folds", type=int, default=10)
    ggm_cmd.add_argument("--grid-size", type=int, default=100)
    ggm_cmd.add_argument("--out")

    sim = sub.add_parser("simulate", help="emit synthetic data as CSV")
    sim.add_argument("--config", required=True, help="experiment config JSON")
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--rep", type=int, default=0, help="replication index to emit")

    bench = sub.add_parser("bench", help="run a Monte-Carlo benchmark")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out-dir", required=True)
    bench.add_argument("--seed", type=int, help="override master_seed")
    bench.add_argument("--workers", type=int, help="override workers")
    bench.add_argument("--reps", type=int, help="override n_reps")
    bench.add_argument("--q", type=float, help="override q")
    bench.add_argument("--method", choices=["ds", "mds", "bhq"])
    bench.add_argument("--m", type=int, help="override number of splits")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "ds": _cmd_select,
        "mds": _cmd_select,
        "ggm": _cmd_ggm,
        "simulate": _cmd_simulate,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MirrorSelectError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
