"""Experiment orchestration: config files, sweeps, and result tables.

A single TOML file describes everything a run needs (trace, AP
designation, window shape, community parameters, traffic, the sweep
axes, and output options).  A sweep runs the full Cartesian product of
router x alpha x ttl x seed, one simulation per cell, in the order the
lists are written; results are emitted as

* ``results.csv`` — one row per cell (stable ordering, stable float
  formatting, so identical configs produce byte-identical files);
* ``summary.csv`` — mean and sample standard deviation per
  (router, alpha, ttl) group;
* ``series_<metric>__<router>__alpha<a>.csv`` — plot-ready series,
  x = ttl; cells whose latency is undefined stay empty rather than
  pretending to be zero.

The detector comparison re-runs the same sweep under the full
space-crossing pipeline and under plain proximity detection, with
identical seeds and therefore identical traffic.
"""

from __future__ import annotations

import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib

from .community import PIPELINE_PP_ONLY, PIPELINE_SC
from .errors import ConfigurationError
from .routing import ROUTERS
from .simulator import CSV_HEADER, Metrics, SimConfig, run_simulation
from .trace import (
    APDesignation,
    designate_aps,
    load_ap_file,
    node_universe,
    parse_contact_trace,
)

DEFAULT_SEEDS = tuple(range(1, 21))


# ======================================================================
# Configuration
# ======================================================================

@dataclass(frozen=True)
class ExperimentConfig:
    trace_path: Path
    ap_count: int | None
    ap_seed: int
    ap_file: Path | None
    mode: str
    interval_s: int
    window: int | None
    alphas: tuple[float, ...]
    pipeline: str
    refresh_interval_s: int
    packets_per_node: int
    size_min: int
    size_max: int
    routers: tuple[str, ...]
    ttls: tuple[int, ...]
    seeds: tuple[int, ...]
    buffer_bytes: int | None
    workers: int
    figures: bool


_SECTION_KEYS = {
    "trace": {"path"},
    "aps": {"count", "seed", "file"},
    "graph": {"mode", "interval_s", "window"},
    "community": {"alphas", "pipeline", "refresh_interval_s"},
    "traffic": {"packets_per_node", "size_min", "size_max"},
    "sim": {"routers", "ttl_s", "seeds", "buffer_bytes"},
    "output": {"workers", "figures"},
}


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment config; paths resolve relative to it."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc

    for section, table in raw.items():
        if section not in _SECTION_KEYS:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigurationError(f"{path}: [{section}] must be a table")
        unknown = set(table) - _SECTION_KEYS[section]
        if unknown:
            raise ConfigurationError(
                f"{path}: unknown key(s) {sorted(unknown)} in [{section}]"
            )

    base = path.parent

    trace = raw.get("trace", {})
    if "path" not in trace:
        raise ConfigurationError(f"{path}: [trace] needs a 'path'")
    trace_path = (base / str(trace["path"])).resolve()

    aps = raw.get("aps", {})
    ap_file = (base / str(aps["file"])).resolve() if "file" in aps else None
    ap_count = int(aps["count"]) if "count" in aps else None
    if (ap_file is None) == (ap_count is None):
        raise ConfigurationError(f"{path}: [aps] needs exactly one of 'count' or 'file'")

    graph = raw.get("graph", {})
    mode = str(graph.get("mode", "growing"))
    if mode not in ("growing", "sliding"):
        raise ConfigurationError(f"{path}: graph.mode must be 'growing' or 'sliding'")
    window = int(graph["window"]) if "window" in graph else None
    if mode == "sliding" and window is None:
        raise ConfigurationError(f"{path}: sliding mode needs graph.window")

    community = raw.get("community", {})
    alphas = tuple(float(a) for a in community.get("alphas", [0.6]))
    for a in alphas:
        if not 0.0 <= a <= 2.0:
            raise ConfigurationError(f"{path}: alpha {a} outside [0, 2]")
    pipeline = str(community.get("pipeline", PIPELINE_SC))
    if pipeline not in (PIPELINE_SC, PIPELINE_PP_ONLY):
        raise ConfigurationError(f"{path}: unknown community.pipeline {pipeline!r}")

    traffic = raw.get("traffic", {})
    sim = raw.get("sim", {})
    routers = tuple(str(r) for r in sim.get("routers", ["saas"]))
    for r in routers:
        if r not in ROUTERS:
            raise ConfigurationError(f"{path}: unknown router {r!r}")
    if not routers:
        raise ConfigurationError(f"{path}: sim.routers cannot be empty")
    ttls = tuple(int(t) for t in sim.get("ttl_s", [86_400]))
    seeds = tuple(int(s) for s in sim.get("seeds", DEFAULT_SEEDS))
    if not ttls or not seeds:
        raise ConfigurationError(f"{path}: sim.ttl_s and sim.seeds cannot be empty")
    buffer_bytes: int | None = int(sim.get("buffer_bytes", 5_000_000))
    if buffer_bytes == 0:
        buffer_bytes = None  # zero means unlimited

    output = raw.get("output", {})
    workers = int(output.get("workers", 1))
    if workers < 1:
        raise ConfigurationError(f"{path}: output.workers must be >= 1")

    cfg = ExperimentConfig(
        trace_path=trace_path,
        ap_count=ap_count,
        ap_seed=int(aps.get("seed", 1)),
        ap_file=ap_file,
        mode=mode,
        interval_s=int(graph.get("interval_s", 86_400)),
        window=window,
        alphas=alphas,
        pipeline=pipeline,
        refresh_interval_s=int(community.get("refresh_interval_s", 1_800)),
        packets_per_node=int(traffic.get("packets_per_node", 50)),
        size_min=int(traffic.get("size_min", 50_000)),
        size_max=int(traffic.get("size_max", 100_000)),
        routers=routers,
        ttls=ttls,
        seeds=seeds,
        buffer_bytes=buffer_bytes,
        workers=workers,
        figures=bool(output.get("figures", True)),
    )
    if cfg.interval_s <= 0 or cfg.refresh_interval_s <= 0:
        raise ConfigurationError(f"{path}: interval lengths must be positive")
    return cfg


def load_inputs(config: ExperimentConfig):
    """Parse the trace and produce the AP designation."""
    with open(config.trace_path) as fh:
        events = parse_contact_trace(fh)
    if config.ap_file is not None:
        with open(config.ap_file) as fh:
            aps = load_ap_file(fh)
    else:
        assert config.ap_count is not None
        aps = designate_aps(node_universe(events), config.ap_count, config.ap_seed)
    return events, aps


def cell_sim_config(
    config: ExperimentConfig,
    router: str,
    alpha: float,
    ttl: int,
    seed: int,
    audit: bool = False,
) -> SimConfig:
    return SimConfig(
        router=router,
        alpha=alpha,
        ttl_s=ttl,
        seed=seed,
        packets_per_node=config.packets_per_node,
        size_min=config.size_min,
        size_max=config.size_max,
        buffer_bytes=config.buffer_bytes,
        interval_s=config.interval_s,
        mode=config.mode,
        window=config.window,
        refresh_interval_s=config.refresh_interval_s,
        pipeline=config.pipeline,
        audit=audit,
    )


# ======================================================================
# Sweep execution
# ======================================================================

_worker_inputs: dict[tuple, tuple] = {}


def _run_remote(payload: tuple) -> Metrics:
    trace_path, ap_file, ap_count, ap_seed, cfg = payload
    key = (trace_path, ap_file, ap_count, ap_seed)
    if key not in _worker_inputs:
        with open(trace_path) as fh:
            events = parse_contact_trace(fh)
        if ap_file is not None:
            with open(ap_file) as fh:
                aps = load_ap_file(fh)
        else:
            aps = designate_aps(node_universe(events), ap_count, ap_seed)
        _worker_inputs[key] = (events, aps)
    events, aps = _worker_inputs[key]
    return run_simulation(events, aps, cfg)


def sweep_cells(config: ExperimentConfig) -> list[SimConfig]:
    """The Cartesian product, in declared list order."""
    return [
        cell_sim_config(config, router, alpha, ttl, seed)
        for router in config.routers
        for alpha in config.alphas
        for ttl in config.ttls
        for seed in config.seeds
    ]


def run_experiment(config: ExperimentConfig) -> list[Metrics]:
    """Run every sweep cell.  Any failing cell aborts the experiment."""
    cells = sweep_cells(config)
    if config.workers > 1:
        payloads = [
            (str(config.trace_path), _opt_str(config.ap_file), config.ap_count, config.ap_seed, c)
            for c in cells
        ]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_remote, payloads))
    events, aps = load_inputs(config)
    return [run_simulation(events, aps, cfg) for cfg in cells]


def _opt_str(p: Path | None) -> str | None:
    return None if p is None else str(p)


def compare_detectors(config: ExperimentConfig) -> dict[str, list[Metrics]]:
    """Paired sweep: the full pipeline vs proximity-only detection.

    Traffic depends only on the seed, so each cell sees an identical
    workload under the two pipelines and differences are attributable to
    the community structure alone.
    """
    out: dict[str, list[Metrics]] = {}
    for pipeline in (PIPELINE_SC, PIPELINE_PP_ONLY):
        out[pipeline] = run_experiment(replace(config, pipeline=pipeline))
    return out


# ======================================================================
# Tables
# ======================================================================

def results_csv(rows: Sequence[Metrics]) -> str:
    return "\n".join([CSV_HEADER] + [m.csv_row() for m in rows]) + "\n"


@dataclass(frozen=True)
class AggRow:
    router: str
    alpha: float
    ttl_s: int
    n: int
    ratio_mean: float
    ratio_std: float | None
    latency_mean: float | None
    latency_std: float | None


def aggregate(rows: Iterable[Metrics]) -> list[AggRow]:
    """Mean and sample stddev per (router, alpha, ttl) group.

    Latency averages only the seeds that delivered anything; when no
    seed did, the group's latency stays undefined.
    """
    groups: dict[tuple[str, float, int], list[Metrics]] = {}
    for m in rows:
        groups.setdefault((m.router, m.alpha, m.ttl_s), []).append(m)
    out = []
    for (router, alpha, ttl), members in groups.items():
        ratios = [m.delivery_ratio for m in members]
        latencies = [m.avg_latency_s for m in members if m.avg_latency_s is not None]
        out.append(
            AggRow(
                router=router,
                alpha=alpha,
                ttl_s=ttl,
                n=len(members),
                ratio_mean=statistics.fmean(ratios),
                ratio_std=statistics.stdev(ratios) if len(ratios) > 1 else None,
                latency_mean=statistics.fmean(latencies) if latencies else None,
                latency_std=statistics.stdev(latencies) if len(latencies) > 1 else None,
            )
        )
    return out


def _fmt(x: float | None, pattern: str = ".6f") -> str:
    return "" if x is None else format(x, pattern)


def summary_csv(agg: Sequence[AggRow]) -> str:
    lines = ["router,alpha,ttl_s,n,delivery_ratio_mean,delivery_ratio_std,avg_latency_mean_s,avg_latency_std_s"]
    for row in agg:
        lines.append(
            f"{row.router},{row.alpha},{row.ttl_s},{row.n},"
            f"{_fmt(row.ratio_mean)},{_fmt(row.ratio_std)},"
            f"{_fmt(row.latency_mean, '.3f')},{_fmt(row.latency_std, '.3f')}"
        )
    return "\n".join(lines) + "\n"


PLOT_METRICS = ("delivery_ratio", "avg_latency_s")


def emit_plot_data(rows: Sequence[Metrics], metric: str, outdir: Path) -> list[Path]:
    """One aggregate series file per (router, alpha); x is the ttl."""
    if metric not in PLOT_METRICS:
        raise ConfigurationError(
            f"unknown plot metric {metric!r}; choose from {PLOT_METRICS}"
        )
    agg = aggregate(rows)
    series: dict[tuple[str, float], list[AggRow]] = {}
    for row in agg:
        series.setdefault((row.router, row.alpha), []).append(row)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for (router, alpha), group in sorted(series.items()):
        group.sort(key=lambda r: r.ttl_s)
        lines = ["ttl_s,mean,stddev"]
        for row in group:
            if metric == "delivery_ratio":
                lines.append(f"{row.ttl_s},{_fmt(row.ratio_mean)},{_fmt(row.ratio_std)}")
            else:
                lines.append(
                    f"{row.ttl_s},{_fmt(row.latency_mean, '.3f')},{_fmt(row.latency_std, '.3f')}"
                )
        target = outdir / f"series_{metric}__{router}__alpha{alpha:g}.csv"
        target.write_text("\n".join(lines) + "\n")
        written.append(target)
    return written


def audit_csv(metrics: Metrics) -> str:
    lines = ["msg_id,src,dst,created_s,outcome,latency_s,hops"]
    for rec in metrics.audit:
        latency = "" if rec.latency_s is None else str(rec.latency_s)
        hops = ">".join(str(h) for h in rec.hops)
        lines.append(
            f"{rec.msg_id},{rec.src},{rec.dst},{rec.created},{rec.outcome},{latency},{hops}"
        )
    return "\n".join(lines) + "\n"
