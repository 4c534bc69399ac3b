"""Experiment harness: configs, Monte-Carlo replication, metrics, baselines.

A benchmark run is described by a single JSON-serializable config.  Each
replication derives its own RNG substreams from (master seed, rep index) up
front — one for data generation, one for the selection method — so results
are byte-identical for any worker count, and two configs sharing a master
seed see identical data (which pairs method comparisons).

Per-rep wall times are measured and logged, but the emitted CSV and JSON
artifacts contain only deterministic fields; the CSV's ``wall_time_ms``
column is a fixed 0 placeholder (see README).
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .errors import ConfigError, MirrorSelectError
from .ggm import fdp_power_edges, ggm_select
from .linalg import Dataset, random_split, substream
from .mds import mds_select, normal_means_inclusion_rates, normal_means_mds
from .mirror import Contrast, ds_select, normal_means_ds, normal_means_mirror
from .synth import (
    CovarianceSpec,
    CovKind,
    DesignKind,
    DesignSpec,
    GraphKind,
    GraphSpec,
    sample_design,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_response,
)

logger = logging.getLogger(__name__)

SPEC_VERSION = 1
WORKERS_ENV = "MIRROR_SELECT_THREADS"

CSV_HEADER = "rep,fdp,power,n_selected,cutoff,wall_time_ms,status"


# ---------------------------------------------------------------------------
# Metrics and baselines
# ---------------------------------------------------------------------------


def fdp_power(
    selected: np.ndarray, signals: np.ndarray, size: int
) -> tuple[float, float]:
    """False discovery proportion and power of a selection against truth."""
    selected = np.asarray(selected, dtype=np.int64)
    signals = np.asarray(signals, dtype=np.int64)
    if selected.size and (selected.min() < 0 or selected.max() >= size):
        raise ValueError("selected indices out of range")
    hits = int(np.isin(selected, signals).sum())
    fdp = (selected.size - hits) / max(selected.size, 1)
    power = hits / max(signals.size, 1)
    return fdp, power


def bh_procedure(pvalues: np.ndarray, level: float) -> np.ndarray:
    """Step-up multiple-testing rule on p-values; returns rejected indices."""
    pvalues = np.asarray(pvalues, dtype=np.float64)
    if not np.all(np.isfinite(pvalues)) or pvalues.min() < 0 or pvalues.max() > 1:
        raise ValueError("p-values must be finite and lie in [0, 1]")
    n = pvalues.size
    order = np.argsort(pvalues, kind="stable")
    ranks = np.arange(1, n + 1)
    passing = np.flatnonzero(pvalues[order] <= level * ranks / n)
    if passing.size == 0:
        return np.empty(0, dtype=np.int64)
    k = int(passing[-1]) + 1
    return np.sort(order[:k])


def normal_means_pvalues(x: np.ndarray) -> np.ndarray:
    """Two-sided Gaussian p-values for the full-data column means."""
    x = np.asarray(x, dtype=np.float64)
    z = math.sqrt(x.shape[0]) * np.abs(x.mean(axis=0))
    return np.array([2.0 * NormalDist().cdf(-v) for v in z])


@dataclass(frozen=True)
class MetricsRecord:
    """One replication's outcome; ``wall_ms`` is measured but diagnostic."""

    rep: int
    fdp: float
    power: float
    n_selected: int
    cutoff: float
    wall_ms: float
    status: str


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearScenario:
    design: DesignSpec
    num_signals: int
    signal_strength: float
    scale_reading: str = "sd"


@dataclass(frozen=True)
class GraphScenario:
    graph: GraphSpec
    rows: int


@dataclass(frozen=True)
class NormalMeansScenario:
    rows: int
    size: int
    num_signals: int
    signal_sd: float


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str  # "linear" | "ggm" | "normal_means"
    method: str  # "ds" | "mds" | "bhq"
    level: float
    num_splits: int
    contrast: Contrast
    n_reps: int
    master_seed: int
    workers: int = 1
    cv_folds: int = 10
    grid_size: int = 100
    linear: Optional[LinearScenario] = None
    graph: Optional[GraphScenario] = None
    normal_means: Optional[NormalMeansScenario] = None

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ConfigError("q must lie in (0, 1)")
        if self.n_reps < 1:
            raise ConfigError("n_reps must be >= 1")
        if self.method == "bhq" and self.scenario != "normal_means":
            raise ConfigError("bhq is only available for the normal_means scenario")
        if self.scenario == "linear" and self.linear is None:
            raise ConfigError("linear scenario needs a design/truth block")
        if self.scenario == "ggm" and self.graph is None:
            raise ConfigError("ggm scenario needs a graph block")
        if self.scenario == "normal_means" and self.normal_means is None:
            raise ConfigError("normal_means scenario needs its block")


def _require(d: dict, key: str, kind=None):
    if key not in d:
        raise ConfigError(f"missing config field {key!r}")
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"config field {key!r} has the wrong type")
    return value


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Parse and validate a config document (see README for the schema)."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if doc.get("spec_version") != SPEC_VERSION:
        raise ConfigError(f"spec_version must be {SPEC_VERSION}")
    scenario = _require(doc, "scenario", str)
    method = _require(doc, "method", str).lower()
    if method not in ("ds", "mds", "bhq"):
        raise ConfigError(f"unknown method {method!r}")
    try:
        contrast = Contrast(doc.get("contrast", "sum"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    linear = graph = normal = None
    if scenario == "linear":
        design = _require(doc, "design", dict)
        truth = _require(doc, "truth", dict)
        try:
            cov = CovarianceSpec(
                kind=CovKind(design.get("cov", "identity")),
                size=int(_require(design, "p")),
                correlation=float(design.get("rho", 0.0)),
            )
            spec = DesignSpec(
                distribution=DesignKind(design.get("distribution", "gaussian")),
                covariance=cov,
                rows=int(_require(design, "n")),
                mixture_offset=float(design.get("mixture_offset", 0.5)),
                t_dof=float(design.get("t_dof", 3.0)),
            )
        except (ValueError, MirrorSelectError) as exc:
            raise ConfigError(f"bad design block: {exc}") from exc
        linear = LinearScenario(
            design=spec,
            num_signals=int(_require(truth, "p1")),
            signal_strength=float(_require(truth, "delta")),
            scale_reading=str(truth.get("scale_reading", "sd")),
        )
    elif scenario == "ggm":
        g = _require(doc, "graph", dict)
        try:
            gspec = GraphSpec(
                kind=GraphKind(_require(g, "kind", str)),
                size=int(_require(g, "p")),
                bandwidth=int(g.get("s", 8)),
                band_value=float(g.get("a", -0.6)),
                decay=float(g.get("c", 1.5)),
                block=int(g.get("block", 25)),
                low=float(g.get("low", 0.4)),
                high=float(g.get("high", 0.8)),
            )
        except (ValueError, MirrorSelectError) as exc:
            raise ConfigError(f"bad graph block: {exc}") from exc
        graph = GraphScenario(graph=gspec, rows=int(_require(g, "n")))
    elif scenario == "normal_means":
        nm = _require(doc, "normal_means", dict)
        normal = NormalMeansScenario(
            rows=int(_require(nm, "n")),
            size=int(_require(nm, "p")),
            num_signals=int(_require(nm, "p1")),
            signal_sd=float(_require(nm, "delta")),
        )
    else:
        raise ConfigError(f"unknown scenario {scenario!r}")

    return ExperimentConfig(
        scenario=scenario,
        method=method,
        level=float(_require(doc, "q")),
        num_splits=int(doc.get("m", 50)),
        contrast=contrast,
        n_reps=int(_require(doc, "n_reps")),
        master_seed=int(_require(doc, "master_seed")),
        workers=int(doc.get("workers", 1)),
        cv_folds=int(doc.get("cv_folds", 10)),
        grid_size=int(doc.get("lambda_grid_size", 100)),
        linear=linear,
        graph=graph,
        normal_means=normal,
    )


def resolve_workers(config: ExperimentConfig) -> int:
    """Worker count: the environment override wins over the config field."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
    return max(1, config.workers)


# ---------------------------------------------------------------------------
# Replication
# ---------------------------------------------------------------------------


def _standardized_dataset(x: np.ndarray, y: np.ndarray) -> Dataset:
    return Dataset(
        x=np.asfortranarray(x),
        y=y,
        standardized=True,
        column_means=np.zeros(x.shape[1]),
        column_sds=np.ones(x.shape[1]),
    )


def sample_normal_means(
    scenario: NormalMeansScenario, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    means = np.zeros(scenario.size)
    signals = np.sort(
        rng.choice(scenario.size, size=scenario.num_signals, replace=False)
    )
    means[signals] = scenario.signal_sd * rng.standard_normal(scenario.num_signals)
    x = means + rng.standard_normal((scenario.rows, scenario.size))
    return x, signals


def _run_rep(config: ExperimentConfig, rep: int) -> MetricsRecord:
    data_rng = substream(config.master_seed, "data", rep)
    method_rng = substream(config.master_seed, "method", rep)
    started = time.perf_counter()
    try:
        if config.scenario == "linear":
            lin = config.linear
            x = sample_design(lin.design, data_rng)
            truth = sample_linear_truth(
                lin.design.covariance.size,
                lin.num_signals,
                lin.signal_strength,
                lin.design.rows,
                data_rng,
                lin.scale_reading,
            )
            y = sample_response(x, truth, data_rng)
            data = _standardized_dataset(x, y)
            if config.method == "ds":
                result = ds_select(
                    data, config.level, config.contrast, method_rng,
                    config.cv_folds, config.grid_size,
                )
            else:
                result = mds_select(
                    data, config.level, config.contrast, config.num_splits,
                    method_rng, config.cv_folds, config.grid_size,
                )
            fdp, power = fdp_power(result.selected, truth.signals, data.p)
            n_selected = int(result.selected.size)
            cutoff = result.cutoff
        elif config.scenario == "ggm":
            x, true_edges = sample_gaussian_graph_data(
                config.graph.graph, config.graph.rows, data_rng
            )
            estimate = ggm_select(
                x, config.level, config.method, config.num_splits, method_rng,
                config.contrast, config.cv_folds, config.grid_size,
            )
            fdp, power = fdp_power_edges(estimate.edges, true_edges)
            n_selected = len(estimate.edges)
            cutoff = math.nan
        else:
            x, signals = sample_normal_means(config.normal_means, data_rng)
            if config.method == "ds":
                result = normal_means_ds(x, config.level, method_rng)
                selected, cutoff = result.selected, result.cutoff
            elif config.method == "mds":
                result = normal_means_mds(
                    x, config.level, config.num_splits, method_rng
                )
                selected, cutoff = result.selected, result.cutoff
            else:
                pvalues = normal_means_pvalues(x)
                selected = bh_procedure(pvalues, config.level)
                cutoff = (
                    selected.size * config.level / config.normal_means.size
                    if selected.size
                    else 0.0
                )
            fdp, power = fdp_power(selected, signals, config.normal_means.size)
            n_selected = int(selected.size)
        status = "ok"
    except (MirrorSelectError, np.linalg.LinAlgError) as exc:
        logger.warning("rep %d failed: %s", rep, exc)
        fdp = power = cutoff = math.nan
        n_selected = 0
        status = type(exc).__name__
    wall_ms = (time.perf_counter() - started) * 1000.0
    logger.debug("rep %d finished in %.1f ms (%s)", rep, wall_ms, status)
    return MetricsRecord(rep, fdp, power, n_selected, cutoff, wall_ms, status)


def run_experiment(
    config: ExperimentConfig,
) -> tuple[list[MetricsRecord], dict]:
    """Run every replication and aggregate; see the module docstring for the
    determinism guarantees."""
    workers = resolve_workers(config)
    reps = range(config.n_reps)
    if workers == 1:
        records = [_run_rep(config, rep) for rep in reps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda r: _run_rep(config, r), reps))
    records.sort(key=lambda record: record.rep)
    return records, summarize(config, records)


def summarize(config: ExperimentConfig, records: list[MetricsRecord]) -> dict:
    """Deterministic aggregate of the per-rep records (failures excluded)."""
    ok = [r for r in records if r.status == "ok"]
    failed = len(records) - len(ok)
    if failed:
        logger.warning("%d of %d reps failed and were excluded", failed, len(records))

    def _mean(values):
        return float(np.mean(values)) if values else math.nan

    def _sd(values):
        return float(np.std(values, ddof=1)) if len(values) > 1 else math.nan

    fdps = [r.fdp for r in ok]
    powers = [r.power for r in ok]
    return {
        "spec_version": SPEC_VERSION,
        "scenario": config.scenario,
        "method": config.method,
        "q": config.level,
        "n_reps": config.n_reps,
        "n_ok": len(ok),
        "n_failed": failed,
        "mean_fdp": _mean(fdps),
        "sd_fdp": _sd(fdps),
        "mean_power": _mean(powers),
        "sd_power": _sd(powers),
        "mean_n_selected": _mean([r.n_selected for r in ok]),
    }


def _fmt(value: float) -> str:
    return repr(float(value))


def records_to_csv(records: list[MetricsRecord]) -> str:
    """Render records with the pinned header; byte-identical for a fixed
    seed regardless of worker count (wall time is therefore not included)."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.rep},{_fmt(r.fdp)},{_fmt(r.power)},{r.n_selected},"
            f"{_fmt(r.cutoff)},0,{r.status}"
        )
    return "\n".join(lines) + "\n"


def write_records_csv(records: list[MetricsRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(records_to_csv(records))


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")


# ---------------------------------------------------------------------------
# Ranking-stability (swap) experiment on the column-means problem
# ---------------------------------------------------------------------------

PAIR_PVALUES = (0.020, 0.021)


def _pinned_pair_means(n: int) -> tuple[float, float]:
    """Sample means pinning the two focal p-values at 0.020 and 0.021."""
    first = abs(NormalDist().inv_cdf(PAIR_PVALUES[0] / 2)) / math.sqrt(n)
    return first, first - 0.02 / math.sqrt(n)


def _pin_column_mean(column: np.ndarray, target: float) -> np.ndarray:
    return column + (target - column.mean())


def conditioned_pair_matrix(
    n: int,
    size: int,
    rng: np.random.Generator,
    signal_fraction: float = 0.2,
    signal_sd: float = 0.5,
) -> np.ndarray:
    """Unit-variance Gaussian matrix with the two focal columns' sample
    means pinned and a fixed fraction of the rest carrying random means."""
    x = rng.standard_normal((n, size))
    first, second = _pinned_pair_means(n)
    x[:, 0] = _pin_column_mean(x[:, 0], first)
    x[:, 1] = _pin_column_mean(x[:, 1], second)
    others = size - 2
    k = round(signal_fraction * others)
    locations = rng.choice(others, size=k, replace=False) + 2
    x[:, locations] += signal_sd * rng.standard_normal(k)[None, :]
    return x


def swap_probability_ds(n: int, reps: int, rng: np.random.Generator) -> float:
    """Estimate how often a single split ranks the weaker focal feature
    above the stronger one.

    Only the two pinned columns enter the comparison, so the rest of the
    matrix is not drawn.
    """
    first, second = _pinned_pair_means(n)
    swaps = 0
    for child in rng.spawn(reps):
        a = _pin_column_mean(child.standard_normal(n), first)
        b = _pin_column_mean(child.standard_normal(n), second)
        split = random_split(n, child)
        stat_a = normal_means_mirror(
            a[split.first_half].mean(), a[split.second_half].mean()
        )
        stat_b = normal_means_mirror(
            b[split.first_half].mean(), b[split.second_half].mean()
        )
        swaps += stat_a < stat_b
    return swaps / reps


def swap_probability_mds(
    n: int,
    reps: int,
    level: float,
    rng: np.random.Generator,
    size: int = 800,
    num_splits: Optional[int] = None,
    batch_size: int = 512,
) -> float:
    """Swap probability for inclusion-rate rankings (default 10n splits)."""
    if num_splits is None:
        num_splits = 10 * n
    swaps = 0
    for child in rng.spawn(reps):
        x = conditioned_pair_matrix(n, size, child)
        rates = normal_means_inclusion_rates(x, level, num_splits, child, batch_size)
        swaps += rates.rates[0] < rates.rates[1]
    return swaps / reps
