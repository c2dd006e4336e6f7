"""Eigenvector centrality, top-central profiles and edge betweenness."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..graph_core import Group, Method, Snapshot
from ._kernels import edge_betweenness as _eb_kernel

__all__ = [
    "CentralityResult",
    "ConvergenceError",
    "eigenvector_centrality",
    "top_central_profile",
    "edge_betweenness",
]


class ConvergenceError(RuntimeError):
    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class CentralityResult:
    scores: np.ndarray
    eigenvalue: float
    iterations: int
    residual: float
    converged: bool = True

    def by_id(self, ids) -> dict[str, float]:
        return {v: float(x) for v, x in zip(ids, self.scores)}


def eigenvector_centrality(s: Snapshot, tol: float = 1e-10, max_iter: int = 100_000) -> CentralityResult:
    """Principal adjacency eigenvector by power iteration.

    Iterates on ``A + I`` from the uniform vector, normalizing to unit
    Euclidean length each step.  The shift leaves the eigenvectors unchanged
    but breaks the ``+/- lambda`` tie of bipartite graphs, where plain
    iteration on ``A`` oscillates.  Isolated vertices satisfy
    ``lambda * x_i = 0`` and are pinned to zero.

    Raises
    ------
    ValueError
        If the snapshot has no edges.
    ConvergenceError
        If ``max_iter`` is reached; the partial result is attached.
    """
    if s.m == 0:
        raise ValueError("eigenvector centrality needs at least one edge")
    A = s.adjacency()
    active = (s.degrees() > 0).astype(np.float64)
    x = active / math.sqrt(active.sum())
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        y = A @ x + x
        y /= np.linalg.norm(y)
        diff = float(np.max(np.abs(y - x)))
        x = y
        if diff <= tol:
            converged = True
            break
    x = x * active
    x /= np.linalg.norm(x)
    Ax = A @ x
    lam = float(x @ Ax)
    residual = float(np.max(np.abs(Ax - lam * x)))
    np.maximum(x, 0.0, out=x)
    x.setflags(write=False)
    res = CentralityResult(x, lam, it, residual, converged)
    if not converged:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps (residual {residual:.3g})", res)
    return res


def _pct(counter: Counter, total: int, keys) -> dict[str, float]:
    return {k: 100.0 * counter.get(k, 0) / total for k in keys}


def top_central_profile(
    s: Snapshot,
    fraction: float = 0.1,
    centrality: CentralityResult | None = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> dict:
    """Attribute breakdown of the ``ceil(fraction * |V|)`` most central vertices.

    Ties are broken by vertex id.  Percentages are over the selected set;
    mean age uses only vertices with a known age.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if s.records is None:
        raise ValueError("snapshot carries no vertex attributes")
    cent = centrality if centrality is not None else eigenvector_centrality(s, tol, max_iter)
    k = math.ceil(fraction * s.n)
    order = sorted(range(s.n), key=lambda i: (-cent.scores[i], s.ids[i]))[:k]
    recs = [s.records[i] for i in order]
    groups = Counter(r.group.value for r in recs)
    methods = Counter(r.method.value for r in recs)
    provinces = Counter(r.province for r in recs)
    all_provinces = sorted({r.province for r in s.records})
    deg = s.degrees()[order].astype(np.float64)
    ages = [r.age for r in recs if r.age is not None]
    male = groups.get(Group.HETEROSEXUAL_MAN.value, 0) + groups.get(Group.MSM.value, 0)
    hetero = groups.get(Group.WOMAN.value, 0) + groups.get(Group.HETEROSEXUAL_MAN.value, 0)
    return {
        "n_selected": k,
        "ids": [s.ids[i] for i in order],
        "min_score": float(cent.scores[order[-1]]),
        "group_pct": _pct(groups, k, [g.value for g in Group]),
        "male_pct": 100.0 * male / k,
        "female_pct": 100.0 * groups.get(Group.WOMAN.value, 0) / k,
        "heterosexual_pct": 100.0 * hetero / k,
        "msm_pct": 100.0 * groups.get(Group.MSM.value, 0) / k,
        "method_pct": _pct(methods, k, [m.value for m in Method]),
        "province_pct": _pct(provinces, k, all_provinces),
        "mean_degree": float(deg.mean()),
        "std_degree": float(deg.std()),
        "mean_age": float(np.mean(ages)) if ages else None,
        "n_known_age": len(ages),
    }


def edge_betweenness(s: Snapshot) -> np.ndarray:
    """Exact shortest-path betweenness of every edge, aligned with ``s.edges``.

    Each connected unordered pair spreads a total weight of one over its
    shortest paths.
    """
    if s.m == 0:
        return np.zeros(0, dtype=np.float64)
    # CSR slot -> undirected edge index
    src = np.repeat(np.arange(s.n, dtype=np.int64), np.diff(s.indptr))
    lo = np.minimum(src, s.indices)
    hi = np.maximum(src, s.indices)
    codes = s.edges[:, 0] * s.n + s.edges[:, 1]
    slot_edge = np.searchsorted(codes, lo * s.n + hi)
    return _eb_kernel(s.indptr, s.indices, slot_edge, s.n, s.m)
