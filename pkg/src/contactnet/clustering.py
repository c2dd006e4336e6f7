"""Modularity clustering of the giant component.

Multi-level scheme: at each level, adjacent cluster pairs with positive
modularity gain are merged greedily, highest weight density first, each
cluster merging at most once per level; the merged graph is contracted and
the process repeats until no merge gains.  On the way back down every level
is refined by single-node moves (and Kernighan-Lin passes on small levels).
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .graph_core import Snapshot
from .metrics.structure import connected_components, giant_component

__all__ = [
    "Partition",
    "modularity",
    "cluster_giant",
    "cluster_snapshot",
    "edge_partition_sides",
    "normalized_mutual_information",
]

_EPS = 1e-13
KL_LIMIT = 400
REDUCTION = 1.0
MAX_CYCLES = 20
PERTURBATIONS = 30
# graphs above this size get the cheaper budget below by default
LARGE = 100
LARGE_KL_LIMIT = 50
LARGE_PERTURBATIONS = 3


@dataclass(frozen=True)
class Partition:
    """Cluster assignment of a vertex set.

    Labels are canonical: clusters are numbered ``0..k-1`` in order of their
    smallest member id.
    """

    ids: tuple[str, ...]
    labels: np.ndarray
    modularity: float
    tracked: float | None = None  # value maintained incrementally while optimizing

    def __post_init__(self):
        if len(self.ids) != len(self.labels):
            raise ValueError(f"{len(self.ids)} ids but {len(self.labels)} labels")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "labels", _canonical(self.labels))

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def sizes(self) -> list[int]:
        return [int(x) for x in np.bincount(self.labels)] if len(self.labels) else []

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.ids, (int(x) for x in self.labels)))

    def summary(self) -> dict:
        return {"n_clusters": self.n_clusters, "sizes": self.sizes, "modularity": self.modularity}


def _canonical(labels: Sequence[int]) -> np.ndarray:
    mapping: dict[int, int] = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, c in enumerate(labels):
        out[i] = mapping.setdefault(int(c), len(mapping))
    out.setflags(write=False)
    return out


def _labels_for(s: Snapshot, p) -> np.ndarray:
    if isinstance(p, Partition):
        p = p.as_dict()
    if isinstance(p, Mapping):
        try:
            return np.array([p[v] for v in s.ids], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"vertex {exc.args[0]!r} has no cluster assignment") from None
    arr = np.asarray(p, dtype=np.int64)
    if arr.shape != (s.n,):
        raise ValueError(f"expected {s.n} labels, got shape {arr.shape}")
    return arr


def modularity(s: Snapshot, p) -> float:
    """Newman modularity ``sum_c e_c/m - (d_c/2m)^2`` of an assignment.

    ``p`` is a :class:`Partition`, a mapping id -> cluster, or a label array
    aligned with ``s.ids``.
    """
    if s.m == 0:
        raise ValueError("modularity is undefined without edges")
    labels = _labels_for(s, p)
    _, lab = np.unique(labels, return_inverse=True)
    k = lab.max() + 1
    m = s.m
    intra = lab[s.edges[:, 0]] == lab[s.edges[:, 1]]
    e_c = np.bincount(lab[s.edges[intra, 0]], minlength=k).astype(np.float64)
    d_c = np.bincount(lab, weights=s.degrees().astype(np.float64), minlength=k)
    return float(np.sum(e_c / m - (d_c / (2.0 * m)) ** 2))


class _Level:
    """Weighted graph of one level: node volumes, self weights, neighbour weights."""

    __slots__ = ("vol", "self_w", "adj")

    def __init__(self, vol, self_w, adj):
        self.vol = vol
        self.self_w = self_w
        self.adj = adj

    @property
    def size(self):
        return len(self.vol)


def _merge_level(
    level: _Level, m: float, reduction: float = 1.0, within: list[int] | None = None
) -> tuple[list[int], float] | None:
    """One round of greedy pairwise merges; ``None`` if nothing gains.

    At most ``ceil(reduction * size / 2)`` pairs merge per round.  With
    ``within`` given, only nodes sharing a label there may merge.
    """
    two_m2 = 2.0 * m * m
    cands = []
    for a in range(level.size):
        for b, w in level.adj[a].items():
            if a < b and (within is None or within[a] == within[b]):
                dq = w / m - level.vol[a] * level.vol[b] / two_m2
                if dq > _EPS or within is not None:
                    cands.append((-w / (level.vol[a] * level.vol[b]), a, b, dq))
    if not cands:
        return None
    cands.sort()
    parent = list(range(level.size))
    used = [False] * level.size
    gain = 0.0
    budget = max(1, math.ceil(reduction * level.size / 2))
    for _, a, b, dq in cands:
        if budget == 0:
            break
        if used[a] or used[b]:
            continue
        budget -= 1
        used[a] = used[b] = True
        parent[b] = a
        gain += dq
    # relabel so coarse node order follows the smallest fine node
    coarse = {}
    mapping = [coarse.setdefault(parent[i], len(coarse)) for i in range(level.size)]
    return mapping, gain


def _contract(level: _Level, mapping: list[int]) -> _Level:
    k = max(mapping) + 1
    vol = [0.0] * k
    self_w = [0.0] * k
    adj: list[dict[int, float]] = [dict() for _ in range(k)]
    for a in range(level.size):
        ca = mapping[a]
        vol[ca] += level.vol[a]
        self_w[ca] += level.self_w[a]
        for b, w in level.adj[a].items():
            if a < b:
                cb = mapping[b]
                if ca == cb:
                    self_w[ca] += w
                else:
                    adj[ca][cb] = adj[ca].get(cb, 0.0) + w
                    adj[cb][ca] = adj[cb].get(ca, 0.0) + w
    return _Level(vol, self_w, adj)


def _refine(level: _Level, labels: list[int], m: float) -> float:
    """Single-node move sweeps in ascending node order until a sweep makes no move.

    Returns the total modularity gain.
    """
    two_m2 = 2.0 * m * m
    n = level.size
    tot: dict[int, float] = {}
    for v in range(n):
        tot[labels[v]] = tot.get(labels[v], 0.0) + level.vol[v]
    next_label = max(labels) + 1 if labels else 0
    total_gain = 0.0
    while True:
        moved = False
        for v in range(n):
            cv = labels[v]
            dv = level.vol[v]
            links: dict[int, float] = {}
            for u, w in level.adj[v].items():
                cu = labels[u]
                links[cu] = links.get(cu, 0.0) + w
            k_own = links.get(cv, 0.0)
            rest_own = tot[cv] - dv
            # gain of moving v out of its cluster into an empty one
            leave = -k_own / m + dv * rest_own / two_m2
            best_gain, best_c = 0.0, cv
            if leave > best_gain + _EPS and rest_own > 0:
                best_gain, best_c = leave, -1
            for c in sorted(links):
                if c == cv:
                    continue
                gain = leave + links[c] / m - dv * tot[c] / two_m2
                if gain > best_gain + _EPS:
                    best_gain, best_c = gain, c
            if best_c != cv:
                if best_c == -1:
                    best_c = next_label
                    next_label += 1
                tot[cv] -= dv
                tot[best_c] = tot.get(best_c, 0.0) + dv
                labels[v] = best_c
                total_gain += best_gain
                moved = True
        if not moved:
            return total_gain


def _best_move(level: _Level, labels: list[int], tot: dict[int, float], v: int, m: float, fresh: int):
    """Best target cluster for ``v`` (``fresh`` = a new empty cluster) and its gain."""
    two_m2 = 2.0 * m * m
    cv = labels[v]
    dv = level.vol[v]
    links: dict[int, float] = {}
    for u, w in level.adj[v].items():
        cu = labels[u]
        links[cu] = links.get(cu, 0.0) + w
    rest_own = tot[cv] - dv
    leave = -links.get(cv, 0.0) / m + dv * rest_own / two_m2
    best_gain, best_c = -math.inf, cv
    if rest_own > 0:
        best_gain, best_c = leave, fresh
    for c in sorted(links):
        if c != cv:
            gain = leave + links[c] / m - dv * tot[c] / two_m2
            if gain > best_gain + _EPS:
                best_gain, best_c = gain, c
    return best_gain, best_c


def _kl_refine(level: _Level, labels: list[int], m: float) -> float:
    """Kernighan-Lin passes: move every node once, best move first even when
    it loses, then roll back to the best prefix.  Repeats while a pass gains.
    """
    n = level.size
    total_gain = 0.0
    while True:
        tot: dict[int, float] = {}
        for v in range(n):
            tot[labels[v]] = tot.get(labels[v], 0.0) + level.vol[v]
        fresh = max(labels) + 1
        unmoved = set(range(n))
        history: list[tuple[int, int]] = []
        cur = best = 0.0
        best_len = 0
        while unmoved:
            pick = None
            for v in sorted(unmoved):
                gain, c = _best_move(level, labels, tot, v, m, fresh)
                if c != labels[v] and (pick is None or gain > pick[0] + _EPS):
                    pick = (gain, v, c)
            if pick is None:
                break
            gain, v, c = pick
            old = labels[v]
            tot[old] -= level.vol[v]
            if tot[old] <= 0.0:
                del tot[old]
            tot[c] = tot.get(c, 0.0) + level.vol[v]
            if c == fresh:
                fresh += 1
            labels[v] = c
            unmoved.discard(v)
            history.append((v, old))
            cur += gain
            if cur > best + _EPS:
                best, best_len = cur, len(history)
        for v, old in reversed(history[best_len:]):
            labels[v] = old
        if best <= _EPS:
            return total_gain
        total_gain += best


def _level_modularity(level: _Level, labels: list[int], m: float) -> float:
    e: dict[int, float] = {}
    d: dict[int, float] = {}
    for v in range(level.size):
        c = labels[v]
        d[c] = d.get(c, 0.0) + level.vol[v]
        e[c] = e.get(c, 0.0) + level.self_w[v]
        for u, w in level.adj[v].items():
            if v < u and labels[u] == c:
                e[c] += w
    return sum(e[c] / m - (d[c] / (2.0 * m)) ** 2 for c in d)


def _multilevel(level: _Level, labels: list[int], m: float, kl_limit: int, constrained: bool = False) -> float:
    """Coarsen, then refine level by level back to ``level``; updates ``labels`` in place.

    Unconstrained, coarse nodes start as singleton clusters and merging is
    driven by modularity gain.  Constrained (a V-cycle), merges stay inside
    the current clusters and coarse nodes inherit their cluster, so the
    refinement can move whole sub-clusters at once.
    """
    levels = [level]
    maps: list[list[int]] = []
    level_labels = [list(labels)]
    gain = 0.0
    while True:
        res = _merge_level(levels[-1], m, REDUCTION, level_labels[-1] if constrained else None)
        if res is None:
            break
        mapping, merged = res
        if not constrained:
            gain += merged
        coarse = [0] * (max(mapping) + 1)
        for i, c in enumerate(mapping):
            coarse[c] = level_labels[-1][i]
        maps.append(mapping)
        levels.append(_contract(levels[-1], mapping))
        level_labels.append(coarse)
    if constrained:
        cur = level_labels[-1]
    else:
        cur = list(range(levels[-1].size))
    for depth in range(len(levels) - 1, -1, -1):
        step = _refine(levels[depth], cur, m)
        if levels[depth].size <= kl_limit:
            step += _kl_refine(levels[depth], cur, m)
        if step < 0:
            raise AssertionError("refinement decreased modularity")
        gain += step
        if depth > 0:
            cur = [cur[c] for c in maps[depth - 1]]
    labels[:] = cur
    return gain


def _split_clusters(level: _Level, labels: list[int], m: float, kl_limit: int) -> float:
    """Try to split every cluster by optimizing its induced subgraph alone.

    Volumes and ``m`` stay those of the whole graph, so a split's gain is its
    exact modularity change; a split is kept only when it gains.
    """
    members: dict[int, list[int]] = {}
    for v, c in enumerate(labels):
        members.setdefault(c, []).append(v)
    fresh = max(labels) + 1
    total = 0.0
    for c in sorted(members):
        mem = members[c]
        if len(mem) < 2:
            continue
        local = {v: i for i, v in enumerate(mem)}
        adj = [{local[u]: w for u, w in level.adj[v].items() if u in local} for v in mem]
        sub = _Level([level.vol[v] for v in mem], [0.0] * len(mem), adj)
        inner = sum(w for a in adj for w in a.values()) / 2.0
        vol = sum(sub.vol)
        whole = inner / m - (vol / (2.0 * m)) ** 2
        singletons = -sum((x / (2.0 * m)) ** 2 for x in sub.vol)
        sub_labels = list(range(len(mem)))
        split = singletons + _multilevel(sub, sub_labels, m, kl_limit)
        if split > whole + _EPS and len(set(sub_labels)) > 1:
            first = sub_labels[0]
            for v, sl in zip(mem, sub_labels):
                if sl != first:
                    labels[v] = fresh + sl
            fresh += len(mem)
            total += split - whole
    return total


def _polish(level: _Level, labels: list[int], m: float, kl_limit: int) -> float:
    """Alternate V-cycles and cluster splits until neither gains."""
    total = 0.0
    for _ in range(MAX_CYCLES):
        gain = _multilevel(level, labels, m, kl_limit, constrained=True)
        gain += _split_clusters(level, labels, m, kl_limit)
        total += gain
        if gain <= _EPS:
            break
    return total


def _perturb(level: _Level, labels: list[int], rng: np.random.Generator) -> list[int]:
    """Reassign a random 15% of nodes to a neighbour's cluster or a new one."""
    n = level.size
    cand = list(labels)
    fresh = max(cand) + 1
    for v in rng.choice(n, size=min(n, max(2, int(0.15 * n))), replace=False):
        nbrs = sorted(level.adj[v])
        if nbrs and rng.random() < 0.7:
            cand[v] = cand[nbrs[int(rng.integers(len(nbrs)))]]
        else:
            cand[v] = fresh
            fresh += 1
    return cand


def cluster_snapshot(
    s: Snapshot,
    seed: int | None = None,
    perturbations: int | None = None,
    kl_limit: int | None = None,
) -> Partition:
    """Maximize modularity over all vertices of ``s`` (which needs at least one edge).

    The multi-level result is polished by V-cycles and cluster splits, then
    by ``perturbations`` rounds of iterated local search: perturb, polish,
    keep if better.  ``seed`` drives the vertex relabeling that orders
    equal-priority merges (``None`` keeps ascending ids) and the
    perturbations.  Levels with at most ``kl_limit`` nodes also get
    Kernighan-Lin refinement, whose passes cost quadratic time.  Left as
    ``None`` both default to a full search up to ``LARGE`` vertices and to a
    reduced budget above.
    """
    n = s.n
    if n < 2 or s.m == 0:
        raise ValueError("clustering needs at least 2 vertices and one edge")
    large = n > LARGE
    if perturbations is None:
        perturbations = LARGE_PERTURBATIONS if large else PERTURBATIONS
    if kl_limit is None:
        kl_limit = LARGE_KL_LIMIT if large else KL_LIMIT
    m = float(s.m)
    perm_seq, ils_seq = np.random.SeedSequence(0 if seed is None else seed).spawn(2)
    perm = np.arange(n) if seed is None else np.random.default_rng(perm_seq).permutation(n)
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    # node r of level 0 is vertex perm[r]
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for a, b in s.edges:
        ra, rb = int(inv[a]), int(inv[b])
        adj[ra][rb] = 1.0
        adj[rb][ra] = 1.0
    deg = s.degrees()
    level = _Level([float(deg[perm[r]]) for r in range(n)], [0.0] * n, adj)

    labels = list(range(n))
    q = -sum((v / (2.0 * m)) ** 2 for v in level.vol)
    q += _multilevel(level, labels, m, kl_limit)
    q += _polish(level, labels, m, kl_limit)
    rng = np.random.default_rng(ils_seq)
    for _ in range(perturbations):
        cand = _perturb(level, labels, rng)
        q_cand = _level_modularity(level, cand, m)
        q_cand += _polish(level, cand, m, kl_limit)
        if q_cand > q + _EPS:
            labels, q = cand, q_cand

    vertex_labels = np.empty(n, dtype=np.int64)
    vertex_labels[perm] = labels
    canon = _canonical(vertex_labels)
    exact = modularity(s, canon)
    if abs(exact - q) > 1e-9:
        raise AssertionError(f"tracked modularity {q} drifted from exact {exact}")
    return Partition(s.ids, canon, exact, tracked=q)


def cluster_giant(s: Snapshot, seed: int | None = None) -> Partition:
    """Modularity partition of the giant component of ``s``."""
    if s.n == 0:
        raise ValueError("clustering needs at least 2 vertices")
    giant = giant_component(s, connected_components(s))
    if giant.n < 2:
        raise ValueError("giant component has fewer than 2 vertices")
    return cluster_snapshot(giant, seed)


def export_labels(s: Snapshot, p: Partition) -> list[tuple[str, int]]:
    """``(vertex_id, cluster_id)`` for every vertex of ``s``; unclustered vertices get ``-1``."""
    lookup = p.as_dict()
    return [(v, lookup.get(v, -1)) for v in s.ids]


def edge_partition_sides(s: Snapshot, p) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Split the contact edges of ``s`` into intra- and inter-cluster lists."""
    mask = intra_mask(s, p)
    pairs = s.edge_ids()
    return [e for e, k in zip(pairs, mask) if k], [e for e, k in zip(pairs, mask) if not k]


def intra_mask(s: Snapshot, p) -> np.ndarray:
    """Boolean per edge of ``s``: both endpoints in the same cluster."""
    labels = _labels_for(s, p)
    if s.m == 0:
        return np.zeros(0, dtype=bool)
    return labels[s.edges[:, 0]] == labels[s.edges[:, 1]]


def normalized_mutual_information(a: Sequence[int], b: Sequence[int]) -> float:
    """NMI with arithmetic-mean normalization; 1.0 when both labelings are trivial."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label arrays differ in length")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha = -float(np.sum(pa * np.log(pa)))
    hb = -float(np.sum(pb * np.log(pb)))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    pab = table / n
    nz = pab > 0
    mi = float(np.sum(pab[nz] * np.log(pab[nz] / np.outer(pa, pb)[nz])))
    return max(0.0, mi / ((ha + hb) / 2.0)) if (ha + hb) > 0 else 0.0
