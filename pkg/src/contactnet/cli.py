"""Command-line front end.

Every subcommand writes machine-readable outputs plus ``manifest.json`` into
``--out``.  Any flag may instead come from ``--config FILE`` (a JSON object
with the flag names as keys, or a previous run's manifest); flags given on the
command line win.  Exit codes: 0 success, 1 runtime failure, 2 invalid input
or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .graph_core import GraphError, TemporalGraph, load, schedule_days, write
from .reports import BATTERY, dumps, run_battery, write_long_csv

STOCHASTIC = {"nullmodel", "cluster", "homogeneity", "synth"}


class UsageError(Exception):
    """Bad flag combination or value; exits with status 2."""


# -- argument parsing ------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser):
    p.add_argument("--vertices", help="vertices CSV")
    p.add_argument("--edges", help="edges CSV")
    p.add_argument("--epoch-date", help="calendar date of day 0 (YYYY-MM-DD); enables date-valued schedule flags")


def _add_schedule(p: argparse.ArgumentParser):
    p.add_argument("--start", default="0", help="first snapshot: day offset or YYYY-MM-DD (default 0)")
    p.add_argument("--end", default=None, help="last snapshot (default: last detection day)")
    p.add_argument("--step", type=int, default=90, help="days between snapshots (default 90)")
    p.add_argument("--extra", default="", help="comma-separated extra snapshot days or dates")


def _add_common(p: argparse.ArgumentParser, seed: bool = False):
    p.add_argument("--out", default=None, help="output directory (required)")
    p.add_argument("--config", default=None, help="JSON file with flag values")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="master random seed (required)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contactnet", description="Temporal contact-network analytics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check input files and report counts")
    _add_input(p)
    _add_common(p)

    p = sub.add_parser("snapshot-metrics", help="metric battery over a snapshot schedule")
    _add_input(p)
    _add_schedule(p)
    _add_common(p)
    p.add_argument("--metrics", default=",".join(BATTERY), help=f"comma-separated subset of: {','.join(BATTERY)}")
    p.add_argument("--q", type=float, default=0.9, help="effective-diameter fraction")
    p.add_argument("--threshold", type=int, default=730, help="detection-distance threshold in days")
    p.add_argument("--top-fraction", type=float, default=0.1, help="share of most central vertices profiled")

    p = sub.add_parser("nullmodel", help="configuration-model ensemble against observed snapshots")
    _add_input(p)
    _add_schedule(p)
    _add_common(p, seed=True)
    p.add_argument("--K", type=int, default=10, help="replicates per snapshot")
    p.add_argument("--metrics", default="components,giant,degree,distance,trees")
    p.add_argument("--strict", action="store_true", help="resample until simple instead of erasing")

    p = sub.add_parser("cluster", help="modularity partition of the giant component")
    _add_input(p)
    _add_common(p, seed=True)
    p.add_argument("--day", default=None, help="snapshot day or date (default: last detection day)")

    p = sub.add_parser("homogeneity", help="temporal homogeneity of clusters with Monte Carlo nulls")
    _add_input(p)
    _add_common(p, seed=True)
    p.add_argument("--day", default=None, help="snapshot day or date (default: last detection day)")
    p.add_argument("--partition", default=None, help="partition CSV from the cluster command (else computed)")
    p.add_argument("--replicates", type=int, default=1000, help="cluster-label randomizations")
    p.add_argument("--edge-replicates", type=int, default=1000, help="random edge subsets")

    p = sub.add_parser("dpl", help="densification fit and growth breakpoint")
    _add_input(p)
    _add_schedule(p)
    _add_common(p)
    p.add_argument("--window", type=int, default=8, help="points per local-slope window")
    p.add_argument(
        "--break-series",
        choices=("giant_vertices", "vertices", "edges"),
        default="giant_vertices",
        help="series tested for a growth breakpoint",
    )
    p.add_argument("--break-day", default=None, help="candidate break (day or date); default scans")
    p.add_argument("--trim", type=float, default=0.15)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    _add_common(p, seed=True)
    p.add_argument("--mode", choices=("epidemic", "planted"), default="epidemic")
    p.add_argument("--preset", choices=("default", "full"), default="default", help="epidemic parameter preset")
    p.add_argument("--synth-config", default=None, help="JSON of epidemic parameters overriding the preset")
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--p-in", type=float, default=0.4)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--spread", type=int, default=100)
    p.add_argument("--gap", type=int, default=1000)
    parser.set_defaults(_subparsers=sub.choices)
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if isinstance(cfg, dict) and "config" in cfg and "command" in cfg:
            cfg = cfg["config"]
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        sub = args._subparsers[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known - {"command"})
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**{k: v for k, v in cfg.items() if k not in ("command", "config")})
        args = parser.parse_args(argv)
    if args.command in STOCHASTIC and args.seed is None:
        parser.error(f"{args.command}: --seed is required")
    if args.out is None:
        parser.error(f"{args.command}: --out is required")
    if args.command != "synth" and (not args.vertices or not args.edges):
        parser.error(f"{args.command}: --vertices and --edges are required")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    for flag in ("vertices", "edges", "partition", "synth_config"):
        path = getattr(args, flag, None)
        if path and not Path(path).is_file():
            parser.error(f"--{flag.replace('_', '-')}: no such file {path}")
    return args


# -- helpers ------------------------------------------------------------------


def _epoch(args) -> date | None:
    if not args.epoch_date:
        return None
    try:
        return date.fromisoformat(args.epoch_date)
    except ValueError:
        raise UsageError(f"bad --epoch-date {args.epoch_date!r}; expected YYYY-MM-DD") from None


def _day(value, epoch: date | None, flag: str) -> int:
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        when = date.fromisoformat(text)
    except ValueError:
        raise UsageError(f"{flag}: expected a day offset or YYYY-MM-DD, got {text!r}") from None
    if epoch is None:
        raise UsageError(f"{flag}: dates need --epoch-date")
    return (when - epoch).days


def _load(args) -> TemporalGraph:
    g, _ = load(args.vertices, args.edges, _epoch(args))
    return g


def _schedule(args, g: TemporalGraph) -> list[int]:
    epoch = _epoch(args)
    start = _day(args.start, epoch, "--start")
    end = g.max_detect_day if args.end is None else _day(args.end, epoch, "--end")
    if end is None:
        raise UsageError("empty dataset: nothing to schedule")
    extra = [_day(x, epoch, "--extra") for x in str(args.extra).split(",") if x.strip()]
    if args.step < 1:
        raise UsageError("--step must be >= 1")
    if start > end:
        raise UsageError(f"schedule start {start} is after end {end}")
    return schedule_days(start, end, args.step, extra)


def _snapshot_day(args, g: TemporalGraph) -> int:
    if args.day is None:
        if g.max_detect_day is None:
            raise UsageError("empty dataset")
        return g.max_detect_day
    return _day(args.day, _epoch(args), "--day")


def _csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _manifest(args, out: Path, outputs: list[str], extra: dict | None = None):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config", "_subparsers")}
    doc = {
        "command": args.command,
        "toolkit": "contactnet",
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": config,
        "outputs": sorted(outputs),
    }
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(dumps(doc), encoding="utf-8")


# -- commands -----------------------------------------------------------------


def cmd_validate(args, out: Path) -> list[str]:
    g, report = load(args.vertices, args.edges, _epoch(args))
    text = dumps(report.to_dict())
    (out / "validation.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return ["validation.json"]


def cmd_snapshot_metrics(args, out: Path) -> list[str]:
    names = [m.strip() for m in str(args.metrics).split(",") if m.strip()]
    if not names:
        raise UsageError("no metrics selected")
    unknown = [m for m in names if m not in BATTERY]
    if unknown:
        raise UsageError(f"unknown metrics {unknown}; choose from {','.join(BATTERY)}")
    if not 0.0 < args.q <= 1.0:
        raise UsageError("--q must lie in (0, 1]")
    if not 0.0 < args.top_fraction <= 1.0:
        raise UsageError("--top-fraction must lie in (0, 1]")
    g = _load(args)
    days = _schedule(args, g)
    reports = run_battery(g, days, names, args.q, args.threshold, args.top_fraction, args.threads)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    written = []
    width = max(5, len(str(max(days))) if days else 5)
    for rep in reports:
        name = f"snapshots/day_{rep['day']:0{width}d}.json"
        (out / name).write_text(dumps(rep), encoding="utf-8")
        written.append(name)
    write_long_csv(reports, out / "metrics_long.csv")
    return written + ["metrics_long.csv"]


def cmd_nullmodel(args, out: Path) -> list[str]:
    from .nullmodel import METRICS, ensemble_compare

    names = [m.strip() for m in str(args.metrics).split(",") if m.strip()]
    if not names:
        raise UsageError("no metrics selected")
    unknown = [m for m in names if m not in METRICS]
    if unknown:
        raise UsageError(f"unknown null-model metrics {unknown}; choose from {','.join(METRICS)}")
    if args.K < 1:
        raise UsageError("--K must be >= 1")
    g = _load(args)
    ens = ensemble_compare(g, _schedule(args, g), args.K, args.seed, names, args.threads, args.strict)
    fields = ("day", "metric", "observed", "null_mean", "null_std", "K")
    _csv(out / "ensemble.csv", fields, ([r[f] for f in fields] for r in ens.rows))
    return ["ensemble.csv"]


def _partition_for(args, s):
    from .clustering import Partition, cluster_snapshot, modularity
    from .metrics import connected_components, giant_component

    if s.n == 0:
        raise UsageError(f"snapshot at day {s.t} is empty")
    gi = giant_component(s, connected_components(s))
    if gi.n < 2:
        raise UsageError(f"giant component at day {s.t} has fewer than 2 vertices")
    if getattr(args, "partition", None):
        labels = {}
        with open(args.partition, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if int(row["cluster_id"]) >= 0:
                    labels[row["vertex_id"]] = int(row["cluster_id"])
        missing = [v for v in gi.ids if v not in labels]
        if missing:
            raise UsageError(f"partition file misses giant-component vertex {missing[0]!r}")
        arr = [labels[v] for v in gi.ids]
        return gi, Partition(gi.ids, arr, modularity(gi, arr))
    return gi, cluster_snapshot(gi, args.seed)


def cmd_cluster(args, out: Path) -> list[str]:
    from .clustering import edge_partition_sides, export_labels

    g = _load(args)
    s = g.snapshot_at(_snapshot_day(args, g))
    gi, p = _partition_for(args, s)
    _csv(out / "partition.csv", ("vertex_id", "cluster_id"), export_labels(s, p))
    intra, inter = edge_partition_sides(gi, p)
    summary = dict(p.summary(), day=s.t, giant_vertices=gi.n, giant_edges=gi.m)
    summary.update(intra_edges=len(intra), inter_edges=len(inter))
    (out / "partition_summary.json").write_text(dumps(summary), encoding="utf-8")
    return ["partition.csv", "partition_summary.json"]


def cmd_homogeneity(args, out: Path) -> list[str]:
    from .temporal_stats import intra_inter_detection_distance, mc_cluster_randomization, mc_edge_subset

    if args.replicates < 1 or args.edge_replicates < 1:
        raise UsageError("replicate counts must be >= 1")
    g = _load(args)
    s = g.snapshot_at(_snapshot_day(args, g))
    gi, p = _partition_for(args, s)
    spread = mc_cluster_randomization(gi, p, args.replicates, args.seed)
    edges = mc_edge_subset(gi, p, args.edge_replicates, args.seed + 1)
    doc = {
        "day": s.t,
        "n_clusters": p.n_clusters,
        "modularity": p.modularity,
        "cluster_spread": spread.to_dict(),
        "detection_distance": intra_inter_detection_distance(gi, p),
        "edge_subset": {k: v for k, v in edges.items() if k != "null_medians"},
    }
    (out / "homogeneity.json").write_text(dumps(doc), encoding="utf-8")
    _csv(out / "null_cluster_medians.csv", ("median_cluster_std",), ([x] for x in spread.null_medians))
    _csv(out / "null_edge_medians.csv", ("median_detection_distance",), ([x] for x in edges["null_medians"]))
    return ["homogeneity.json", "null_cluster_medians.csv", "null_edge_medians.csv"]


def cmd_dpl(args, out: Path) -> list[str]:
    from .metrics import giant_component
    from .temporal_stats import chow_scan, chow_test, dpl_fit, local_slopes, segment_fit

    g = _load(args)
    rows = []
    for t in _schedule(args, g):
        s = g.snapshot_at(t)
        gi = giant_component(s) if s.n else s
        rows.append({"day": t, "vertices": s.n, "edges": s.m, "giant_vertices": gi.n, "giant_edges": gi.m})
    vc = [(r["vertices"], r["edges"]) for r in rows]
    fit = dpl_fit(vc)
    series = [(r["day"], r[args.break_series]) for r in rows]
    if args.break_day is None:
        scan = chow_scan(series, args.trim)
        brk = scan["break_t"]
        chow = {"F": scan["F"], "p": scan["p"], "break_day": brk, "break_index": scan["break_index"], "scanned": True}
    else:
        brk = _day(args.break_day, _epoch(args), "--break-day")
        f, pval = chow_test(series, brk)
        chow = {"F": f, "p": pval, "break_day": brk, "scanned": False}
    before, after = segment_fit(series, brk)
    doc = {
        "series": rows,
        "dpl": fit.to_dict(),
        "local_slopes": local_slopes(vc, args.window),
        "break_series": args.break_series,
        "chow": chow,
        "segments": {"before": before.to_dict(), "after": after.to_dict()},
    }
    (out / "dpl.json").write_text(dumps(doc), encoding="utf-8")
    return ["dpl.json"]


def cmd_synth(args, out: Path) -> list[str]:
    from .synthdata import SynthConfig, synth_epidemic, synth_planted_temporal, write_labels

    written = ["vertices.csv", "edges.csv"]
    if args.mode == "planted":
        try:
            g, labels = synth_planted_temporal(
                args.clusters, args.size, args.p_in, args.p_out, args.spread, args.gap, args.seed
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        write_labels(labels, out / "labels.csv")
        written.append("labels.csv")
    else:
        overrides = {}
        if args.synth_config:
            overrides = json.loads(Path(args.synth_config).read_text(encoding="utf-8"))
        try:
            if args.preset == "full":
                cfg = SynthConfig.full_scale(args.seed, **overrides)
            else:
                cfg = SynthConfig.from_dict({**overrides, "seed": args.seed})
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad synth config: {exc}") from None
        g = synth_epidemic(cfg)
        (out / "synth_config.json").write_text(dumps(cfg.to_dict()), encoding="utf-8")
        written.append("synth_config.json")
    write(g, out / "vertices.csv", out / "edges.csv")
    return written


COMMANDS = {
    "validate": cmd_validate,
    "snapshot-metrics": cmd_snapshot_metrics,
    "nullmodel": cmd_nullmodel,
    "cluster": cmd_cluster,
    "homogeneity": cmd_homogeneity,
    "dpl": cmd_dpl,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](args, out)
        _manifest(args, out, outputs)
    except (GraphError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
