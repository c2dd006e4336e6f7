"""Configuration-model null graphs and ensemble comparison.

Stubs are paired uniformly at random; the resulting multigraph is simplified
by erasure (self-loops dropped, parallel edges collapsed), so realized degrees
never exceed their targets.  Replicate seeds are derived from
``(master_seed, day, replicate)`` and do not depend on evaluation order.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph_core import Snapshot, TemporalGraph

__all__ = [
    "replicate_rng",
    "cm_undirected",
    "cm_directed",
    "NullEnsemble",
    "ensemble_compare",
    "METRICS",
    "CONTACT_METRICS",
    "INFECTION_METRICS",
]

MAX_ATTEMPTS = 1000


class SimplificationError(RuntimeError):
    """Strict mode gave up before drawing a simple graph."""


def replicate_rng(master_seed: int, day: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(day) + 2**31, int(replicate)]))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _erase(pairs: np.ndarray, n: int, directed: bool) -> tuple[np.ndarray, int, int]:
    """Drop self-loops and duplicate pairs; returns ``(edges, n_loops, n_multi)``."""
    loops = pairs[:, 0] == pairs[:, 1]
    keep = pairs[~loops]
    if not directed:
        keep = np.sort(keep, axis=1)
    codes = np.unique(keep[:, 0] * n + keep[:, 1])
    edges = np.stack([codes // n, codes % n], axis=1) if len(codes) else np.empty((0, 2), dtype=np.int64)
    return edges, int(loops.sum()), int(len(keep) - len(codes))


def cm_undirected(
    degrees: Sequence[int],
    seed=None,
    template: Snapshot | None = None,
    strict: bool = False,
) -> Snapshot:
    """Erased configuration model on a degree sequence.

    Parameters
    ----------
    degrees : sequence of int
        Target degree of every vertex; the sum must be even.
    seed : int or numpy Generator
    template : Snapshot, optional
        Supplies vertex ids and attributes (vertex ``i`` keeps ``template``'s
        ``i``-th record); otherwise ids are zero-padded indices.
    strict : bool
        Redraw until the pairing is already simple instead of erasing, up to
        1000 attempts.
    """
    deg = np.asarray(degrees, dtype=np.int64)
    if (deg < 0).any():
        raise ValueError("degrees must be non-negative")
    if int(deg.sum()) % 2:
        raise ValueError(f"degree sum {int(deg.sum())} is odd")
    rng = _as_rng(seed)
    n = len(deg)
    stubs = np.repeat(np.arange(n, dtype=np.int64), deg)
    for _ in range(MAX_ATTEMPTS if strict else 1):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        edges, loops, multi = _erase(pairs, n, directed=False)
        if not strict or (loops == 0 and multi == 0):
            break
    else:
        raise SimplificationError(f"no simple pairing in {MAX_ATTEMPTS} attempts")
    if template is not None:
        if template.n != n:
            raise ValueError("template size does not match degree sequence")
        return template.with_edges(edges)
    return Snapshot.from_edges(n, edges)


def cm_directed(
    in_degrees: Sequence[int],
    out_degrees: Sequence[int],
    seed=None,
    template: Snapshot | None = None,
    strict: bool = False,
) -> Snapshot:
    """Erased directed configuration model; arcs land in ``Snapshot.arcs``.

    Out-stubs are matched to a uniform permutation of in-stubs.  The returned
    snapshot's contact edges are the undirected shadow of the arcs.
    """
    ind = np.asarray(in_degrees, dtype=np.int64)
    outd = np.asarray(out_degrees, dtype=np.int64)
    if ind.shape != outd.shape:
        raise ValueError("in- and out-degree sequences differ in length")
    if (ind < 0).any() or (outd < 0).any():
        raise ValueError("degrees must be non-negative")
    if int(ind.sum()) != int(outd.sum()):
        raise ValueError(f"in-degree sum {int(ind.sum())} != out-degree sum {int(outd.sum())}")
    rng = _as_rng(seed)
    n = len(ind)
    out_stubs = np.repeat(np.arange(n, dtype=np.int64), outd)
    in_stubs = np.repeat(np.arange(n, dtype=np.int64), ind)
    for _ in range(MAX_ATTEMPTS if strict else 1):
        pairs = np.stack([out_stubs, rng.permutation(in_stubs)], axis=1)
        arcs, loops, multi = _erase(pairs, n, directed=True)
        if not strict or (loops == 0 and multi == 0):
            break
    else:
        raise SimplificationError(f"no simple pairing in {MAX_ATTEMPTS} attempts")
    shadow, _, _ = _erase(arcs, n, directed=False) if len(arcs) else (arcs, 0, 0)
    if template is not None:
        if template.n != n:
            raise ValueError("template size does not match degree sequence")
        return template.with_edges(shadow, arcs)
    return Snapshot.from_edges(n, shadow, arcs)


# -- ensemble -----------------------------------------------------------------

MetricFn = Callable[[Snapshot], dict[str, float]]


def _components(s: Snapshot) -> dict[str, float]:
    from .metrics import connected_components

    c = connected_components(s).summary()
    return {k: float(v) for k, v in c.items()}


def _giant(s: Snapshot) -> dict[str, float]:
    from .metrics import connected_components, giant_component

    if s.n == 0:
        return {"giant_vertices": 0.0, "giant_edges": 0.0}
    g = giant_component(s, connected_components(s))
    return {"giant_vertices": float(g.n), "giant_edges": float(g.m)}


def _degree(s: Snapshot) -> dict[str, float]:
    from .metrics import degree_stats

    d = degree_stats(s)
    return {"edges": float(s.m), "mean_degree": d.mean, "max_degree": float(d.degrees.max()) if s.n else 0.0}


def _giant_distance(s: Snapshot, q: float = 0.9) -> dict[str, float]:
    from .metrics import connected_components, distance_summary, giant_component

    if s.n == 0:
        return {}
    g = giant_component(s, connected_components(s))
    d = distance_summary(g, q)
    return {
        "giant_diameter": float(d.diameter),
        "giant_effective_diameter": float(d.effective_diameter),
        "giant_avg_geodesic": d.avg_geodesic,
        "giant_mean_distance_connected_pairs": d.mean_distance_connected_pairs,
    }


def _harmonic(s: Snapshot) -> dict[str, float]:
    from .metrics import distance_summary

    if s.n == 0:
        return {}
    h = distance_summary(s).harmonic_geodesic
    return {"harmonic_geodesic": h if math.isfinite(h) else math.nan}


def _triangles(s: Snapshot) -> dict[str, float]:
    from .metrics import triangle_participation

    tri, _ = triangle_participation(s)
    return {"triangles": float(tri.sum() // 3), "vertices_in_triangles": float((tri > 0).sum())}


def _trees(s: Snapshot) -> dict[str, float]:
    from .metrics import infection_forest

    f = infection_forest(s).summary()
    return {
        "n_trees": float(f["n_trees"]),
        "max_tree_size": float(f["max_size"]),
        "second_tree_size": float(f["second_size"]),
        "max_tree_depth": float(f["max_depth"]),
        "n_depth_ge_2": float(f["n_depth_ge_2"]),
    }


CONTACT_METRICS: dict[str, MetricFn] = {
    "components": _components,
    "giant": _giant,
    "degree": _degree,
    "distance": _giant_distance,
    "harmonic": _harmonic,
    "triangles": _triangles,
}
INFECTION_METRICS: dict[str, MetricFn] = {"trees": _trees}
METRICS = {**CONTACT_METRICS, **INFECTION_METRICS}


def _evaluate(s: Snapshot, names: Iterable[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for name in names:
        out.update(METRICS[name](s))
    return out


@dataclass
class NullEnsemble:
    """Observed metrics and K configuration-model replicates per schedule day.

    ``rows`` holds one dict per ``(day, metric)`` with keys ``day``,
    ``metric``, ``observed``, ``null_mean``, ``null_std``, ``K``; ``replicates``
    maps ``day`` to the per-replicate metric dicts.
    """

    K: int
    seed: int
    days: list[int]
    rows: list[dict] = field(default_factory=list)
    replicates: dict[int, list[dict[str, float]]] = field(default_factory=dict)


def _one_day(s: Snapshot, K: int, seed: int, contact: list[str], infection: list[str], strict: bool):
    observed = _evaluate(s, contact + infection)
    reps = []
    deg = s.degrees()
    indeg, outdeg = s.in_out_degrees()
    for r in range(K):
        rep: dict[str, float] = {}
        if contact:
            g = cm_undirected(deg, replicate_rng(seed, s.t, 2 * r), template=s, strict=strict)
            rep.update(_evaluate(g, contact))
        if infection:
            d = cm_directed(indeg, outdeg, replicate_rng(seed, s.t, 2 * r + 1), template=s, strict=strict)
            rep.update(_evaluate(d, infection))
        reps.append(rep)
    return observed, reps


def ensemble_compare(
    g: TemporalGraph,
    schedule: Sequence[int],
    K: int = 10,
    seed: int = 0,
    metric_set: Sequence[str] = ("components", "giant", "degree", "distance", "trees"),
    threads: int = 1,
    strict: bool = False,
) -> NullEnsemble:
    """Compare observed snapshot metrics to configuration-model replicates.

    For every day in ``schedule`` the contact snapshot's degree sequence and
    the infection graph's in/out-degree sequences are each matched by ``K``
    erased-CM replicates.  Contact metrics run on the undirected replicates,
    infection metrics on the directed ones.  The null standard deviation is
    the population one (divide by K).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    unknown = [m for m in metric_set if m not in METRICS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; choose from {sorted(METRICS)}")
    contact = [m for m in metric_set if m in CONTACT_METRICS]
    infection = [m for m in metric_set if m in INFECTION_METRICS]
    days = [int(t) for t in schedule]
    snaps = [g.snapshot_at(t) for t in days]

    def job(s):
        return _one_day(s, K, seed, contact, infection, strict)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, snaps))
    else:
        results = [job(s) for s in snaps]

    ens = NullEnsemble(K=K, seed=seed, days=days)
    for day, (observed, reps) in zip(days, results):
        ens.replicates[day] = reps
        for key in observed:
            vals = np.array([rep.get(key, math.nan) for rep in reps], dtype=np.float64)
            ens.rows.append(
                {
                    "day": day,
                    "metric": key,
                    "observed": observed[key],
                    "null_mean": float(vals.mean()),
                    "null_std": float(vals.std()),
                    "K": K,
                }
            )
    return ens
