"""Exact all-pairs distance statistics: diameters, geodesic means, hop plot."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..graph_core import Snapshot
from ._kernels import distance_counts

__all__ = ["DistanceSummary", "distance_summary", "summary_from_counts"]


@dataclass(frozen=True)
class DistanceSummary:
    """All-pairs distance statistics of one snapshot.

    ``pair_counts[d]`` is the number of unordered vertex pairs at distance
    ``d`` (``d >= 1``).  ``g[d]`` is the fraction of connected pairs within
    distance ``d``; ``hop_plot[h]`` counts ordered pairs, self-pairs
    included, within ``h`` hops.
    """

    n: int
    q: float
    diameter: int
    effective_diameter: int
    avg_geodesic: float
    harmonic_geodesic: float
    mean_distance_connected_pairs: float
    connected_pairs: int
    pair_counts: tuple[int, ...]
    g: tuple[float, ...]
    hop_plot: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "diameter": self.diameter,
            "effective_diameter": self.effective_diameter,
            "avg_geodesic": self.avg_geodesic,
            "harmonic_geodesic": self.harmonic_geodesic,
            "mean_distance_connected_pairs": self.mean_distance_connected_pairs,
            "connected_pairs": self.connected_pairs,
            "g": {str(d): v for d, v in enumerate(self.g)},
            "hop_plot": {str(h): v for h, v in enumerate(self.hop_plot)},
        }


def summary_from_counts(n: int, ordered_counts, q: float) -> DistanceSummary:
    """Build a summary from ordered-pair counts per distance.

    All means are evaluated in exact rational arithmetic and rounded once, so
    any computation of the same counts gives the same floats.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    oc = np.asarray(ordered_counts, dtype=np.int64)
    nz = np.flatnonzero(oc)
    diameter = int(nz[-1]) if len(nz) else 0
    ordered = [int(x) for x in oc[: diameter + 1]]
    if any(c % 2 for c in ordered):
        raise ValueError("ordered pair counts must be even")
    pairs = [c // 2 for c in ordered]
    pairs[0] = 0
    connected = sum(pairs)

    cum = 0
    g = [0.0]
    effective = None
    qf = Fraction(q)
    if connected == 0:
        effective = 0
    for d in range(1, diameter + 1):
        cum += pairs[d]
        g.append(cum / connected)
        if effective is None and Fraction(cum, connected) >= qf:
            effective = d

    total = sum(d * pairs[d] for d in range(1, diameter + 1))
    norm = Fraction(2, n * (n + 1))
    avg = float(norm * total)
    recip = sum((Fraction(pairs[d], d) for d in range(1, diameter + 1)), Fraction(0))
    harmonic = float(1 / (norm * recip)) if recip else math.inf
    mean_conn = total / connected if connected else 0.0

    hop = [n]
    for h in range(1, diameter + 1):
        hop.append(hop[-1] + ordered[h])

    return DistanceSummary(
        n=n,
        q=q,
        diameter=diameter,
        effective_diameter=effective,
        avg_geodesic=avg,
        harmonic_geodesic=harmonic,
        mean_distance_connected_pairs=mean_conn,
        connected_pairs=connected,
        pair_counts=tuple(pairs),
        g=tuple(g),
        hop_plot=tuple(hop),
    )


def distance_summary(s: Snapshot, q: float = 0.9) -> DistanceSummary:
    """Diameter, effective diameter, geodesic means and hop plot by BFS from every vertex.

    Unconnected and self pairs contribute zero to both geodesic means, which
    are normalized by ``|V|(|V|+1)/2``.  ``harmonic_geodesic`` is ``inf``
    when no pair is connected.
    """
    if s.n == 0:
        raise ValueError("distance summary of an empty snapshot")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    counts = distance_counts(s.indptr, s.indices, s.n)
    return summary_from_counts(s.n, counts, q)
