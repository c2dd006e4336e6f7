"""Brute-force reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np


def distance_oracle(g: nx.Graph, q: float) -> dict:
    """All distance statistics from networkx BFS, evaluated with Fractions."""
    nodes = sorted(g.nodes())
    n = len(nodes)
    dist = dict(nx.all_pairs_shortest_path_length(g))
    pair_d = []
    for i, j in itertools.combinations(nodes, 2):
        if j in dist[i]:
            pair_d.append(dist[i][j])
    diameter = max(pair_d, default=0)
    connected = len(pair_d)
    g_tab = [0.0]
    eff = 0 if connected == 0 else None
    for d in range(1, diameter + 1):
        within = sum(1 for x in pair_d if x <= d)
        g_tab.append(within / connected)
        if eff is None and Fraction(within, connected) >= Fraction(q):
            eff = d
    norm = Fraction(2, n * (n + 1))
    avg = float(norm * sum(pair_d))
    rsum = sum((Fraction(1, x) for x in pair_d), Fraction(0))
    harmonic = float(1 / (norm * rsum)) if rsum else math.inf
    hop = [sum(1 for a in nodes for b in nodes if b in dist[a] and dist[a][b] <= h) for h in range(diameter + 1)]
    return {
        "diameter": diameter,
        "effective_diameter": eff,
        "avg_geodesic": avg,
        "harmonic_geodesic": harmonic,
        "connected_pairs": connected,
        "g": tuple(g_tab),
        "hop_plot": tuple(hop),
        "mean_distance_connected_pairs": sum(pair_d) / connected if connected else 0.0,
    }


def betweenness_oracle(g: nx.Graph) -> dict[tuple[int, int], float]:
    """Edge betweenness by listing every shortest path of every connected pair."""
    eb = {tuple(sorted(e)): Fraction(0) for e in g.edges()}
    for s, t in itertools.combinations(sorted(g.nodes()), 2):
        if not nx.has_path(g, s, t):
            continue
        paths = list(nx.all_shortest_paths(g, s, t))
        w = Fraction(1, len(paths))
        for p in paths:
            for a, b in zip(p, p[1:]):
                eb[(min(a, b), max(a, b))] += w
    return {e: float(v) for e, v in eb.items()}


def triangle_oracle(n: int, edges) -> np.ndarray:
    es = {tuple(sorted(e)) for e in edges}
    out = np.zeros(n, dtype=np.int64)
    for a, b, c in itertools.combinations(range(n), 3):
        if (a, b) in es and (a, c) in es and (b, c) in es:
            out[[a, b, c]] += 1
    return out


def closure_components(n: int, edges) -> list[set[int]]:
    """Components from the transitive closure of the boolean adjacency matrix."""
    r = np.eye(n, dtype=bool)
    for a, b in edges:
        r[a, b] = r[b, a] = True
    while True:
        nxt = (r.astype(np.int64) @ r.astype(np.int64)) > 0
        if (nxt == r).all():
            break
        r = nxt
    seen, comps = set(), []
    for i in range(n):
        if i not in seen:
            c = set(np.flatnonzero(r[i]).tolist())
            seen |= c
            comps.append(c)
    return comps


def set_partitions(items):
    """Every set partition of ``items`` as a label list (restricted growth strings)."""
    n = len(items)

    def rec(i, labels, k):
        if i == n:
            yield list(labels)
            return
        for c in range(k + 1):
            labels.append(c)
            yield from rec(i + 1, labels, max(k, c + 1))
            labels.pop()

    yield from rec(0, [], 0)


def modularity_oracle(n: int, edges, labels) -> Fraction:
    m = len(edges)
    deg = [0] * n
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    q = Fraction(0)
    for c in set(labels):
        e_c = sum(1 for a, b in edges if labels[a] == c and labels[b] == c)
        d_c = sum(deg[i] for i in range(n) if labels[i] == c)
        q += Fraction(e_c, m) - Fraction(d_c, 2 * m) ** 2
    return q


def best_modularity(n: int, edges) -> Fraction:
    """Exhaustive optimum over all set partitions.

    Every partition is scored in floating point at once; the winner is then
    re-evaluated exactly, along with any partition within 1e-9 of it.
    """
    labels = np.array(list(set_partitions(range(n))), dtype=np.int64)
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = len(e)
    deg = np.bincount(e.ravel(), minlength=n).astype(np.float64)
    q = (labels[:, e[:, 0]] == labels[:, e[:, 1]]).sum(axis=1) / m
    for c in range(n):
        q -= (((labels == c) * deg).sum(axis=1) / (2.0 * m)) ** 2
    near = np.flatnonzero(q >= q.max() - 1e-9)
    return max(modularity_oracle(n, edges, labels[i].tolist()) for i in near)
