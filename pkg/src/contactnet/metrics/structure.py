"""Components, degrees, triangles and degree-exponent fitting."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components as _cc

from ..graph_core import Snapshot
from ._kernels import triangle_counts

__all__ = [
    "ComponentDecomposition",
    "connected_components",
    "giant_component",
    "DegreeStats",
    "degree_stats",
    "triangle_participation",
    "power_law_exponent",
]


@dataclass(frozen=True)
class ComponentDecomposition:
    """Connected components of a snapshot.

    ``labels[i]`` is the component of vertex ``i``.  Components are numbered
    by decreasing size, ties by smallest member index, so label 0 is the
    giant component.
    """

    labels: np.ndarray
    sizes: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.sizes)

    def count_at_least(self, k: int) -> int:
        return sum(1 for s in self.sizes if s >= k)

    def summary(self) -> dict:
        return {
            "n_components": self.count,
            "n_size_ge_1": self.count_at_least(1),
            "n_size_ge_2": self.count_at_least(2),
            "n_size_ge_3": self.count_at_least(3),
            "max_size": self.sizes[0] if self.sizes else 0,
            "second_size": self.sizes[1] if len(self.sizes) > 1 else 0,
        }


def connected_components(s: Snapshot) -> ComponentDecomposition:
    if s.n == 0:
        return ComponentDecomposition(np.empty(0, dtype=np.int64), ())
    _, raw = _cc(s.adjacency(), directed=False)
    sizes = np.bincount(raw)
    first = np.full(len(sizes), s.n, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(s.n))
    order = np.lexsort((first, -sizes))
    relabel = np.empty(len(sizes), dtype=np.int64)
    relabel[order] = np.arange(len(sizes))
    labels = relabel[raw]
    labels.setflags(write=False)
    return ComponentDecomposition(labels, tuple(int(x) for x in sizes[order]))


def giant_component(s: Snapshot, components: ComponentDecomposition | None = None) -> Snapshot:
    """Induced subgraph on the largest component.

    Ties go to the component holding the smallest vertex id.
    """
    if s.n == 0:
        raise ValueError("giant component of an empty snapshot")
    comp = components if components is not None else connected_components(s)
    return s.subgraph(np.flatnonzero(comp.labels == 0))


@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray
    mean: float
    histogram: np.ndarray  # histogram[k] = number of vertices of degree k

    def __iter__(self):
        return iter((self.degrees, self.mean, self.histogram))


def degree_stats(s: Snapshot) -> DegreeStats:
    deg = s.degrees()
    mean = 2.0 * s.m / s.n if s.n else 0.0
    hist = np.bincount(deg) if s.n else np.zeros(1, dtype=np.int64)
    return DegreeStats(deg, mean, hist)


def triangle_participation(s: Snapshot) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex triangle counts and their histogram (``hist[c]`` vertices with count ``c``)."""
    if s.n == 0:
        return np.empty(0, dtype=np.int64), np.zeros(1, dtype=np.int64)
    tri = triangle_counts(s.indptr, s.indices, s.n)
    return tri, np.bincount(tri)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _as_support(hist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(hist, Mapping):
        ks = np.array(sorted(hist), dtype=np.int64)
        cs = np.array([hist[k] for k in ks], dtype=np.float64)
    else:
        cs = np.asarray(hist, dtype=np.float64)
        ks = np.arange(len(cs), dtype=np.int64)
    return ks, cs


def power_law_exponent(hist, k_min: int = 1, lo: float = 1.01, hi: float = 10.0, tol: float = 1e-4):
    """Fit a discrete power law to a degree histogram by KL minimization.

    The model is ``p(k) = k**-alpha / Z`` on ``k_min..k_max`` where ``k_max``
    is the largest observed degree.  ``alpha`` is located by golden-section
    search on ``[lo, hi]``.

    Parameters
    ----------
    hist : array_like or mapping
        ``hist[k]`` is the number (or weight) of vertices of degree ``k``.
    k_min : int
        Smallest degree included; zero degrees are always excluded.

    Returns
    -------
    alpha : float
    kl : float
        KL divergence from the empirical distribution to the fitted model.
    """
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    ks, cs = _as_support(hist)
    keep = (ks >= k_min) & (cs > 0)
    ks, cs = ks[keep], cs[keep]
    if len(ks) < 2:
        raise ValueError("degenerate histogram: fewer than two distinct degrees >= k_min")
    emp = cs / cs.sum()
    support = np.arange(k_min, int(ks.max()) + 1, dtype=np.float64)
    log_support = np.log(support)
    log_k = np.log(ks.astype(np.float64))
    entropy_term = float(np.sum(emp * np.log(emp)))

    def kl(alpha: float) -> float:
        # log Z via log-sum-exp over the truncated support
        a = -alpha * log_support
        top = a.max()
        log_z = top + math.log(float(np.exp(a - top).sum()))
        return entropy_term - float(np.sum(emp * (-alpha * log_k - log_z)))

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = kl(c), kl(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = kl(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = kl(d)
    alpha = (a + b) / 2.0
    return alpha, kl(alpha)
