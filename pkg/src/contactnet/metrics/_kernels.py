"""Compiled graph traversal kernels over CSR adjacency."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def distance_counts(indptr, indices, n):
    """Number of ordered vertex pairs at each finite distance ``d >= 1``.

    ``counts[d]`` counts pairs ``(s, v)``, ``s != v``; the array has length
    ``n + 1`` (a distance is at most ``n - 1``).

    A leaf whose neighbour ``p`` is not a leaf sees every other vertex one
    step further than ``p`` does, so BFS runs only from the other vertices
    and each leaf adds ``p``'s shifted histogram.
    """
    leaves = np.zeros(n, np.int64)  # pruned leaves hanging off each vertex
    pruned = np.zeros(n, np.bool_)
    for v in range(n):
        if indptr[v + 1] - indptr[v] == 1:
            p = indices[indptr[v]]
            if indptr[p + 1] - indptr[p] > 1:
                pruned[v] = True
                leaves[p] += 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    hist = np.zeros(n + 1, np.int64)
    counts = np.zeros(n + 1, np.int64)
    for s in range(n):
        if pruned[s]:
            continue
        head = 0
        tail = 1
        queue[0] = s
        dist[s] = 0
        maxd = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u] + 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = du
                    hist[du] += 1
                    maxd = du
                    queue[tail] = w
                    tail += 1
        for k in range(tail):
            dist[queue[k]] = -1
        L = leaves[s]
        for d in range(1, maxd + 1):
            counts[d] += hist[d]
        if L > 0:
            # leaf -> s at 1, leaf -> v at d_s(v) + 1, minus the leaf itself
            counts[1] += L
            for d in range(1, maxd + 1):
                counts[d + 1] += L * hist[d]
            counts[2] -= L
        for d in range(1, maxd + 1):
            hist[d] = 0
    return counts


@njit(cache=True, nogil=True)
def edge_betweenness(indptr, indices, slot_edge, n, m):
    """Brandes dependency accumulation onto edges.

    ``slot_edge[p]`` maps CSR slot ``p`` to its undirected edge index.  Every
    unordered pair is visited from both endpoints, hence the final halving.
    """
    eb = np.zeros(m, np.float64)
    dist = np.full(n, -1, np.int64)
    sigma = np.zeros(n, np.float64)
    delta = np.zeros(n, np.float64)
    queue = np.empty(n, np.int64)
    for s in range(n):
        head = 0
        tail = 1
        queue[0] = s
        dist[s] = 0
        sigma[s] = 1.0
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
        for k in range(tail - 1, -1, -1):
            w = queue[k]
            coeff = (1.0 + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] == dist[w] - 1:
                    c = sigma[v] * coeff
                    eb[slot_edge[p]] += c
                    delta[v] += c
        for k in range(tail):
            v = queue[k]
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
    return eb / 2.0


@njit(cache=True, nogil=True)
def triangle_counts(indptr, indices, n):
    """Triangles through each vertex, by merging sorted neighbour lists."""
    tri = np.zeros(n, np.int64)
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            i = indptr[u]
            j = indptr[v]
            iend = indptr[u + 1]
            jend = indptr[v + 1]
            while i < iend and j < jend:
                a = indices[i]
                b = indices[j]
                if a < b:
                    i += 1
                elif a > b:
                    j += 1
                else:
                    if a > v:
                        tri[u] += 1
                        tri[v] += 1
                        tri[a] += 1
                    i += 1
                    j += 1
    return tri


@njit(cache=True, nogil=True)
def bfs_levels(indptr, indices, n, sources):
    """Hop distance from the nearest source (``-1`` if unreachable)."""
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(indptr[u], indptr[u + 1]):
            w = indices[p]
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue[tail] = w
                tail += 1
    return dist
