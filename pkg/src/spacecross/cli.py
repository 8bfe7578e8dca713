"""Command-line entry points.

Exit codes: 0 on success, 2 for configuration problems, 3 for trace
format or consistency problems, 4 for filesystem errors.  Anything else
is a bug and escapes with a traceback.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .community import build_registry
from .errors import ConfigurationError, TraceFormatError, TraceValidationError
from .experiment import (
    ExperimentConfig,
    aggregate,
    audit_csv,
    cell_sim_config,
    compare_detectors,
    emit_plot_data,
    load_config,
    load_inputs,
    results_csv,
    run_experiment,
    summary_csv,
)
from .graph import build_snapshot
from .metrics import activity_csv
from .simulator import CSV_HEADER, run_simulation
from .trace import node_universe, parse_contact_trace, trace_span


def _add_ap_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ap-count", type=int, metavar="N",
                   help="designate N access points, overriding the [aps] section")
    p.add_argument("--ap-seed", type=int, metavar="S",
                   help="seed for --ap-count designation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spacecross",
        description="Space-crossing community routing experiments on contact traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single simulation cell")
    p.add_argument("config", type=Path)
    p.add_argument("--router", help="override the first configured router")
    p.add_argument("--alpha", type=float, help="override the first configured alpha")
    p.add_argument("--ttl", type=int, help="override the first configured ttl")
    p.add_argument("--seed", type=int, help="override the first configured seed")
    p.add_argument("--audit", action="store_true", help="record per-message outcomes")
    p.add_argument("--out", type=Path, help="directory for metrics.csv (and audit.csv)")
    _add_ap_flags(p)

    p = sub.add_parser("sweep", help="run the full router x alpha x ttl x seed sweep")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    _add_ap_flags(p)

    p = sub.add_parser(
        "compare-detectors",
        help="paired sweep: space-crossing pipeline vs proximity-only detection",
    )
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    _add_ap_flags(p)

    p = sub.add_parser("dump-communities", help="print the registry at a point in time")
    p.add_argument("config", type=Path)
    p.add_argument("--at", type=int, required=True, metavar="SECONDS",
                   help="trace time at which to build the snapshot")
    p.add_argument("--alpha", type=float, help="override the first configured alpha")
    p.add_argument("--edges", type=Path, help="also write the snapshot edge list here")
    p.add_argument("--activity", type=Path, help="also write per-node activity rows here")
    _add_ap_flags(p)

    p = sub.add_parser("validate-trace", help="parse a trace and report basic stats")
    p.add_argument("trace", type=Path)

    return parser


def _config_for(args) -> ExperimentConfig:
    """Load the config and apply the AP-designation command-line override."""
    config = load_config(args.config)
    if args.ap_count is not None:
        seed = args.ap_seed if args.ap_seed is not None else config.ap_seed
        return replace(config, ap_count=args.ap_count, ap_seed=seed, ap_file=None)
    if args.ap_seed is not None:
        if config.ap_count is None:
            raise ConfigurationError("--ap-seed without --ap-count needs an [aps] count")
        return replace(config, ap_seed=args.ap_seed)
    return config


# ----------------------------------------------------------------------
# Subcommand bodies
# ----------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    config = _config_for(args)
    cfg = cell_sim_config(
        config,
        router=args.router if args.router is not None else config.routers[0],
        alpha=args.alpha if args.alpha is not None else config.alphas[0],
        ttl=args.ttl if args.ttl is not None else config.ttls[0],
        seed=args.seed if args.seed is not None else config.seeds[0],
        audit=args.audit,
    )
    events, aps = load_inputs(config)
    metrics = run_simulation(events, aps, cfg)
    print(CSV_HEADER)
    print(metrics.csv_row())
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "metrics.csv").write_text(results_csv([metrics]))
        if args.audit:
            (args.out / "audit.csv").write_text(audit_csv(metrics))
            print(f"wrote {args.out / 'audit.csv'}", file=sys.stderr)
    return 0


def _write_sweep_outputs(rows, outdir: Path, label: str = "") -> None:
    suffix = f"_{label}" if label else ""
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"results{suffix}.csv").write_text(results_csv(rows))
    (outdir / f"summary{suffix}.csv").write_text(summary_csv(aggregate(rows)))
    series_dir = outdir / (f"series_{label}" if label else "series")
    for metric in ("delivery_ratio", "avg_latency_s"):
        emit_plot_data(rows, metric, series_dir)


def _cmd_sweep(args) -> int:
    config = _config_for(args)
    rows = run_experiment(config)
    _write_sweep_outputs(rows, args.out)
    print(f"wrote {args.out / 'results.csv'} ({len(rows)} cells)", file=sys.stderr)
    if config.figures and not args.no_figures:
        from .plotting import render_sweep_figures

        for fig_path in render_sweep_figures(aggregate(rows), args.out):
            print(f"wrote {fig_path}", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    config = _config_for(args)
    by_pipeline = compare_detectors(config)
    agg_by_pipeline = {}
    for pipeline, rows in by_pipeline.items():
        _write_sweep_outputs(rows, args.out, label=pipeline)
        agg_by_pipeline[pipeline] = aggregate(rows)
    (args.out / "comparison.csv").write_text(_comparison_csv(agg_by_pipeline))
    print(f"wrote {args.out / 'comparison.csv'}", file=sys.stderr)
    if config.figures and not args.no_figures:
        from .plotting import render_comparison_figures

        for fig_path in render_comparison_figures(agg_by_pipeline, args.out):
            print(f"wrote {fig_path}", file=sys.stderr)
    return 0


def _comparison_csv(agg_by_pipeline) -> str:
    cells: dict[tuple, dict[str, object]] = {}
    for pipeline, agg in agg_by_pipeline.items():
        for row in agg:
            cells.setdefault((row.router, row.alpha, row.ttl_s), {})[pipeline] = row
    lines = [
        "router,alpha,ttl_s,delivery_ratio_sc,delivery_ratio_pp,delivery_ratio_delta,"
        "avg_latency_sc_s,avg_latency_pp_s"
    ]
    for (router, alpha, ttl), sides in sorted(cells.items()):
        sc = sides.get("sc")
        pp = sides.get("pp")
        ratio_sc = "" if sc is None else f"{sc.ratio_mean:.6f}"
        ratio_pp = "" if pp is None else f"{pp.ratio_mean:.6f}"
        delta = "" if sc is None or pp is None else f"{sc.ratio_mean - pp.ratio_mean:.6f}"
        lat_sc = "" if sc is None or sc.latency_mean is None else f"{sc.latency_mean:.3f}"
        lat_pp = "" if pp is None or pp.latency_mean is None else f"{pp.latency_mean:.3f}"
        lines.append(f"{router},{alpha},{ttl},{ratio_sc},{ratio_pp},{delta},{lat_sc},{lat_pp}")
    return "\n".join(lines) + "\n"


def _cmd_dump_communities(args) -> int:
    config = _config_for(args)
    events, aps = load_inputs(config)
    snapshot = build_snapshot(
        events, aps, args.at,
        interval_s=config.interval_s, mode=config.mode, window=config.window,
    )
    alpha = args.alpha if args.alpha is not None else config.alphas[0]
    registry = build_registry(snapshot, alpha=alpha, pipeline=config.pipeline)
    print(registry.dump())
    if args.edges is not None:
        args.edges.write_text(snapshot.dump_edges() + "\n")
        print(f"wrote {args.edges}", file=sys.stderr)
    if args.activity is not None:
        args.activity.write_text(activity_csv(registry, snapshot.weights) + "\n")
        print(f"wrote {args.activity}", file=sys.stderr)
    return 0


def _cmd_validate_trace(args) -> int:
    with open(args.trace) as fh:
        events = parse_contact_trace(fh)
    nodes = node_universe(events)
    span = trace_span(events)
    print(f"ok: {len(events)} events, {len(nodes)} nodes, span {span} s")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "compare-detectors": _cmd_compare,
    "dump-communities": _cmd_dump_communities,
    "validate-trace": _cmd_validate_trace,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TraceFormatError, TraceValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
