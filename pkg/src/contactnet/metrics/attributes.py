"""Attribute-based metrics: detection distances, infection trees, time series."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..graph_core import Group, Method, Snapshot, TemporalGraph
from ._kernels import bfs_levels

__all__ = [
    "DetectionDistances",
    "detection_distances",
    "LateInfection",
    "late_infection_edges",
    "entropy",
    "InfectionTree",
    "InfectionForestSummary",
    "infection_forest",
    "attribute_timeseries",
    "lower_median",
]

TWO_YEARS = 730


def lower_median(values) -> float | None:
    """Lower median (element ``(n-1)//2`` of the sorted sample); ``None`` if empty."""
    v = np.sort(np.asarray(values))
    if len(v) == 0:
        return None
    return v[(len(v) - 1) // 2].item()


def _as_snapshot(x: Snapshot | TemporalGraph) -> Snapshot:
    if isinstance(x, TemporalGraph):
        return x.snapshot_at(x.max_detect_day)
    return x


@dataclass(frozen=True)
class DetectionDistances:
    distances: np.ndarray  # aligned with the snapshot's edge array
    median: int | None
    mode: float | None  # midpoint of the fullest histogram bin
    bin_width: int
    histogram: np.ndarray  # histogram[b] counts distances in [b*w, (b+1)*w)
    threshold: int
    n_above: int

    @property
    def fraction_above(self) -> float | None:
        return self.n_above / len(self.distances) if len(self.distances) else None

    def to_dict(self) -> dict:
        return {
            "n_edges": int(len(self.distances)),
            "median": self.median,
            "mode": self.mode,
            "bin_width": self.bin_width,
            "histogram": [int(c) for c in self.histogram],
            "threshold": self.threshold,
            "n_above": self.n_above,
            "fraction_above": self.fraction_above,
        }


def detection_distances(
    s: Snapshot | TemporalGraph, threshold: int = TWO_YEARS, bin_width: int = 30
) -> DetectionDistances:
    """Absolute detection-day difference across every contact edge."""
    s = _as_snapshot(s)
    if s.m:
        d = np.abs(s.detect_day[s.edges[:, 0]] - s.detect_day[s.edges[:, 1]])
        hist = np.bincount(d // bin_width)
        mode = (int(np.argmax(hist)) + 0.5) * bin_width
    else:
        d = np.zeros(0, dtype=np.int64)
        hist = np.zeros(0, dtype=np.int64)
        mode = None
    d.setflags(write=False)
    return DetectionDistances(
        distances=d,
        median=lower_median(d),
        mode=mode,
        bin_width=bin_width,
        histogram=hist,
        threshold=threshold,
        n_above=int((d > threshold).sum()),
    )


class LateInfection(NamedTuple):
    total: int
    infectious: int


def late_infection_edges(g: Snapshot | TemporalGraph, gap: int = TWO_YEARS) -> LateInfection:
    """Contact edges where one end was detected more than ``gap`` days before the other's infection."""
    s = _as_snapshot(g)
    if s.m == 0:
        return LateInfection(0, 0)
    inf = np.array(
        [r.infect_day if r.infect_day is not None else np.iinfo(np.int64).min for r in s.records], dtype=np.int64
    )
    a, b = s.edges[:, 0], s.edges[:, 1]
    late = (s.detect_day[a] + gap < inf[b]) | (s.detect_day[b] + gap < inf[a])
    if len(s.arcs):
        arc_codes = np.sort(np.minimum(s.arcs[:, 0], s.arcs[:, 1]) * s.n + np.maximum(s.arcs[:, 0], s.arcs[:, 1]))
        infectious = np.isin(a * s.n + b, arc_codes)
    else:
        infectious = np.zeros(s.m, dtype=bool)
    return LateInfection(int(late.sum()), int((late & infectious).sum()))


def entropy(values: Iterable, base: float = 2.0) -> float:
    """Shannon entropy of the empirical distribution of ``values``."""
    counts = np.array(list(Counter(values).values()), dtype=np.float64)
    if len(counts) <= 1:
        return 0.0
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum() / math.log(base))


class InfectionTree(NamedTuple):
    root: str
    size: int
    depth: int
    group_entropy: float | None  # None for single-vertex trees
    province_entropy: float | None
    members: tuple[int, ...]


@dataclass(frozen=True)
class InfectionForestSummary:
    trees: tuple[InfectionTree, ...]  # by size descending, then root id

    @property
    def sizes(self) -> list[int]:
        return [t.size for t in self.trees]

    @property
    def depths(self) -> list[int]:
        return [t.depth for t in self.trees]

    def summary(self) -> dict:
        sizes = self.sizes
        depths = self.depths
        multi = [t for t in self.trees if t.size > 1]
        return {
            "n_trees": len(self.trees),
            "max_size": sizes[0] if sizes else 0,
            "second_size": sizes[1] if len(sizes) > 1 else 0,
            "max_depth": max(depths) if depths else 0,
            "depth_of_largest": depths[0] if depths else 0,
            "n_size_le_2": sum(1 for x in sizes if x <= 2),
            "n_depth_ge_2": sum(1 for x in depths if x >= 2),
            "mean_group_entropy": float(np.mean([t.group_entropy for t in multi])) if multi else None,
            "mean_province_entropy": float(np.mean([t.province_entropy for t in multi])) if multi else None,
        }


def infection_forest(s: Snapshot) -> InfectionForestSummary:
    """Trees of the infection graph (weak components of the arcs).

    Roots are vertices without an infector; a component with no such vertex
    (possible only in randomized arc sets) is rooted at its smallest id.
    Depth is the longest root-to-leaf arc count, measured by BFS from the root.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components as _cc

    n = s.n
    if n == 0:
        return InfectionForestSummary(())
    if len(s.arcs):
        src, dst = s.arcs[:, 0], s.arcs[:, 1]
        mat = csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
        _, labels = _cc(mat, directed=True, connection="weak")
        order = np.lexsort((dst, src))
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        out_idx = dst[order]
        indeg = np.bincount(dst, minlength=n)
    else:
        labels = np.arange(n)
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        out_idx = np.zeros(0, dtype=np.int64)
        indeg = np.zeros(n, dtype=np.int64)
    _, labels = np.unique(labels, return_inverse=True)
    k = int(labels.max()) + 1
    size = np.bincount(labels, minlength=k)
    idx = np.arange(n)
    big = np.int64(n)
    root = np.full(k, big)
    np.minimum.at(root, labels, np.where(indeg == 0, idx, big))
    fallback = np.full(k, big)
    np.minimum.at(fallback, labels, idx)
    root = np.where(root == big, fallback, root)
    sources = np.union1d(np.flatnonzero(indeg == 0), root)
    level = bfs_levels(out_ptr, out_idx, n, sources)
    depth = np.zeros(k, dtype=np.int64)
    np.maximum.at(depth, labels, level)
    if s.records is not None:
        group_ent = _tree_entropy(labels, size, [r.group for r in s.records])
        prov_ent = _tree_entropy(labels, size, [r.province for r in s.records])
    order = np.argsort(labels, kind="stable").tolist()
    bounds = np.concatenate([[0], np.cumsum(size)]).tolist()
    size_l, depth_l, root_l = size.tolist(), depth.tolist(), root.tolist()
    has_attr = s.records is not None
    if has_attr:
        group_l, prov_l = group_ent.tolist(), prov_ent.tolist()
    ids = s.ids
    trees = []
    for c in range(k):
        if size_l[c] > 1 and has_attr:
            ge, pe = group_l[c], prov_l[c]
        else:
            ge = pe = None
        mem = tuple(order[bounds[c] : bounds[c + 1]])
        trees.append(InfectionTree(ids[root_l[c]], size_l[c], depth_l[c], ge, pe, mem))
    trees.sort(key=lambda t: (-t.size, t.root))
    return InfectionForestSummary(tuple(trees))


def _tree_entropy(labels: np.ndarray, size: np.ndarray, values: list) -> np.ndarray:
    """Base-2 entropy of ``values`` within each tree."""
    lut: dict = {}
    code = np.fromiter((lut.setdefault(v, len(lut)) for v in values), dtype=np.int64, count=len(values))
    width = max(len(lut), 1)
    pairs, cnt = np.unique(labels * width + code, return_counts=True)
    tree = pairs // width
    p = cnt / size[tree]
    h = np.bincount(tree, weights=-p * np.log(p), minlength=len(size)) / math.log(2.0)
    return np.maximum(h, 0.0)


def _mean(xs) -> float | None:
    return float(np.mean(xs)) if len(xs) else None


def attribute_timeseries(g: TemporalGraph, bucket_days: int = 365) -> list[dict]:
    """Per-bucket detection counts, contact means and cumulative infection mixing.

    Buckets are ``[k*w, (k+1)*w)`` for ``k = 0 ..`` up to the last detection.
    Detection counts and contact means cover individuals detected within the
    bucket; infection-arc counts and the infected-edge proportion are
    cumulative, taken on the snapshot at the bucket's last day.
    """
    if bucket_days < 1:
        raise ValueError("bucket_days must be >= 1")
    recs = list(g.vertices.values())
    provinces = sorted({r.province for r in recs})
    n_buckets = g.max_detect_day // bucket_days + 1 if recs else 0
    by_bucket: dict[int, list] = {}
    for r in recs:
        by_bucket.setdefault(r.detect_day // bucket_days, []).append(r)
    groups = [x.value for x in Group]
    rows = []
    for k in range(n_buckets):
        members = by_bucket.get(k, [])
        end = (k + 1) * bucket_days - 1
        row: dict = {"bucket": k, "start_day": k * bucket_days, "end_day": end, "n_detected": len(members)}
        mc = Counter(r.method.value for r in members)
        gc = Counter(r.group.value for r in members)
        pc = Counter(r.province for r in members)
        for m in Method:
            row[f"method:{m.value}"] = mc.get(m.value, 0)
        for gv in groups:
            row[f"group:{gv}"] = gc.get(gv, 0)
        for p in provinces:
            row[f"province:{p}"] = pc.get(p, 0)
        for fld in ("contacts_declared", "contacts_tested", "contacts_positive"):
            row[f"mean_{fld}"] = _mean([getattr(r, fld) for r in members if getattr(r, fld) is not None])
        ratios = [
            r.contacts_positive / r.contacts_tested
            for r in members
            if r.contacts_tested and r.contacts_positive is not None
        ]
        row["mean_positive_of_tested"] = _mean(ratios)
        snap = g.snapshot_at(end)
        arc_groups = Counter(
            (snap.records[a].group.value, snap.records[b].group.value) for a, b in snap.arcs
        )
        for src in groups:
            for dst in groups:
                row[f"infections:{src}->{dst}"] = arc_groups.get((src, dst), 0)
        row["n_vertices"] = snap.n
        row["n_edges"] = snap.m
        row["n_infection_arcs"] = len(snap.arcs)
        row["infection_edge_proportion"] = len(snap.arcs) / snap.m if snap.m else None
        rows.append(row)
    return rows
