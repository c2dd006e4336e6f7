"""Per-snapshot metric battery and its JSON / long-CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .graph_core import Snapshot, TemporalGraph
from .metrics import (
    ConvergenceError,
    connected_components,
    degree_stats,
    detection_distances,
    distance_summary,
    edge_betweenness,
    eigenvector_centrality,
    giant_component,
    infection_forest,
    late_infection_edges,
    power_law_exponent,
    top_central_profile,
    triangle_participation,
)

__all__ = [
    "BATTERY",
    "snapshot_report",
    "run_battery",
    "to_jsonable",
    "dumps",
    "long_rows",
    "write_long_csv",
    "LONG_FIELDS",
]

LONG_FIELDS = ("snapshot_day", "metric", "key", "value")


def _hist(arr) -> dict[str, int]:
    return {str(k): int(c) for k, c in enumerate(arr) if c}


def _components(s: Snapshot, ctx: dict) -> dict:
    return ctx["components"].summary()


def _giant(s: Snapshot, ctx: dict) -> dict:
    gi = ctx["giant"]
    return {"vertices": gi.n, "edges": gi.m, "arcs": len(gi.arcs)}


def _degree(s: Snapshot, ctx: dict) -> dict:
    d = degree_stats(s)
    return {"mean": d.mean, "max": int(d.degrees.max()) if s.n else 0, "histogram": _hist(d.histogram)}


def _power_law(s: Snapshot, ctx: dict) -> dict | None:
    d = degree_stats(s)
    try:
        alpha, kl = power_law_exponent(d.histogram)
    except ValueError:
        return None
    return {"alpha": alpha, "kl": kl}


def _distance(s: Snapshot, ctx: dict) -> dict | None:
    return distance_summary(s, ctx["q"]).to_dict() if s.n else None


def _giant_distance(s: Snapshot, ctx: dict) -> dict | None:
    gi = ctx["giant"]
    return distance_summary(gi, ctx["q"]).to_dict() if gi.n else None


def _centrality(s: Snapshot, ctx: dict) -> dict | None:
    gi = ctx["giant"]
    if gi.m == 0:
        return None
    try:
        c = eigenvector_centrality(s)
    except ConvergenceError as exc:
        c = exc.result
    profile = top_central_profile(s, ctx["top_fraction"], centrality=c)
    return {
        "eigenvalue": c.eigenvalue,
        "iterations": c.iterations,
        "residual": c.residual,
        "converged": c.converged,
        "top": profile,
    }


def _betweenness(s: Snapshot, ctx: dict) -> dict | None:
    gi = ctx["giant"]
    if gi.m == 0:
        return None
    bc = edge_betweenness(gi)
    dist = np.abs(gi.detect_day[gi.edges[:, 0]] - gi.detect_day[gi.edges[:, 1]]).astype(np.float64)
    corr = None
    if gi.m > 1 and bc.std() > 0 and dist.std() > 0:
        corr = float(np.corrcoef(bc, dist)[0, 1])
    top = int(np.argmax(bc))
    return {
        "max": float(bc.max()),
        "mean": float(bc.mean()),
        "argmax_edge": list(gi.edge_ids()[top]),
        "corr_detection_distance": corr,
    }


def _triangles(s: Snapshot, ctx: dict) -> dict:
    tri, hist = triangle_participation(s)
    return {"triangles": int(tri.sum()) // 3, "vertices_in_triangles": int((tri > 0).sum()), "histogram": _hist(hist)}


def _detection(s: Snapshot, ctx: dict) -> dict:
    return {
        "all": detection_distances(s, ctx["threshold"]).to_dict(),
        "giant": detection_distances(ctx["giant"], ctx["threshold"]).to_dict(),
    }


def _late(s: Snapshot, ctx: dict) -> dict:
    li = late_infection_edges(s, ctx["threshold"])
    return {"total": li.total, "infectious": li.infectious, "infection_arcs": len(s.arcs)}


def _forest(s: Snapshot, ctx: dict) -> dict:
    return infection_forest(s).summary()


BATTERY: dict[str, Callable[[Snapshot, dict], object]] = {
    "components": _components,
    "giant": _giant,
    "degree": _degree,
    "power_law": _power_law,
    "distance": _distance,
    "giant_distance": _giant_distance,
    "centrality": _centrality,
    "betweenness": _betweenness,
    "triangles": _triangles,
    "detection": _detection,
    "late_infection": _late,
    "forest": _forest,
}


def snapshot_report(
    s: Snapshot,
    metrics: Sequence[str] | None = None,
    q: float = 0.9,
    threshold: int = 730,
    top_fraction: float = 0.1,
) -> dict:
    """Evaluate the selected battery entries (all by default) on one snapshot."""
    names = list(BATTERY) if metrics is None else list(metrics)
    if not names:
        raise ValueError("no metrics selected")
    unknown = [m for m in names if m not in BATTERY]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; choose from {list(BATTERY)}")
    comps = connected_components(s)
    ctx = {
        "q": q,
        "threshold": threshold,
        "top_fraction": top_fraction,
        "components": comps,
        "giant": giant_component(s, comps) if s.n else s,
    }
    out: dict = {"day": s.t, "n_vertices": s.n, "n_edges": s.m, "n_infection_arcs": len(s.arcs)}
    for name in names:
        out[name] = BATTERY[name](s, ctx)
    return out


def run_battery(
    g: TemporalGraph,
    days: Iterable[int],
    metrics: Sequence[str] | None = None,
    q: float = 0.9,
    threshold: int = 730,
    top_fraction: float = 0.1,
    threads: int = 1,
) -> list[dict]:
    """Snapshot reports for every day, in schedule order regardless of ``threads``."""
    days = [int(t) for t in days]
    if metrics is not None and not list(metrics):
        raise ValueError("no metrics selected")

    def job(t):
        return snapshot_report(g.snapshot_at(t), metrics, q, threshold, top_fraction)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, days))
    return [job(t) for t in days]


# -- serialization -----------------------------------------------------------


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if hasattr(obj, "value"):  # enums
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _flatten(prefix: str, obj, out: list[tuple[str, object]]):
    if isinstance(obj, Mapping):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}.{i}" if prefix else str(i), v, out)
    else:
        out.append((prefix, obj))


def long_rows(reports: Iterable[Mapping]) -> list[tuple[int, str, str, object]]:
    """``(snapshot_day, metric, key, value)`` rows; ``key`` is a dotted path inside the metric."""
    rows = []
    for rep in reports:
        rep = to_jsonable(rep)
        day = rep["day"]
        for metric, value in rep.items():
            if metric == "day":
                continue
            flat: list[tuple[str, object]] = []
            _flatten("", value, flat)
            for key, v in flat:
                rows.append((day, metric, key, v))
    return rows


def write_long_csv(reports: Iterable[Mapping], path: str | Path | None = None) -> str:
    """Write the long table to ``path`` (if given) and return it as text.  ``None`` values are empty cells."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LONG_FIELDS)
    for day, metric, key, v in long_rows(reports):
        w.writerow([day, metric, key, "" if v is None else (repr(v) if isinstance(v, float) else v)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
