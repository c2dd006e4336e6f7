import math

import networkx as nx
import numpy as np
import pytest
from conftest import random_snapshot, snap, to_nx
from hypothesis import given
from hypothesis import strategies as st
from oracles import betweenness_oracle, closure_components, distance_oracle, triangle_oracle

from contactnet import EdgeRecord, Group, Method, TemporalGraph, VertexRecord
from contactnet.metrics import (
    ConvergenceError,
    attribute_timeseries,
    connected_components,
    degree_stats,
    detection_distances,
    distance_summary,
    edge_betweenness,
    eigenvector_centrality,
    entropy,
    giant_component,
    infection_forest,
    late_infection_edges,
    lower_median,
    power_law_exponent,
    summary_from_counts,
    top_central_profile,
    triangle_participation,
)


@st.composite
def graphs(draw, max_n=25):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return snap(n, sorted({(min(a, b), max(a, b)) for a, b in pairs if a != b}))


def rec(i, day, group=Group.MSM, province="P", **kw):
    return VertexRecord(i, day, group, Method.OTHER, province, **kw)


# -- components --------------------------------------------------------------


def test_components_trivial():
    assert connected_components(snap(0)).count == 0
    assert connected_components(snap(4, [(0, 1), (2, 3)])).sizes == (2, 2)


def test_components_match_closure():
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = random_snapshot(rng, 50, int(rng.integers(10, 60)))
        comps = connected_components(s)
        ours = sorted(sorted(np.flatnonzero(comps.labels == c).tolist()) for c in range(comps.count))
        ref = sorted(sorted(c) for c in closure_components(s.n, s.edges.tolist()))
        assert ours == ref
        assert sum(comps.sizes) == s.n
        assert list(comps.sizes) == sorted(comps.sizes, reverse=True)


def test_component_summary_counts():
    s = snap(6, [(0, 1), (1, 2)])
    summ = connected_components(s).summary()
    assert summ["n_size_ge_1"] == 4 and summ["n_size_ge_2"] == 1 and summ["n_size_ge_3"] == 1


def test_giant_component_cases():
    tri = snap(3, [(0, 1), (1, 2), (0, 2)])
    assert giant_component(tri).n == 3
    s = snap(8, [(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7)])
    assert giant_component(s).ids == tuple(snap(8).ids[3:])
    tie = snap(8, [(4, 5), (5, 6), (6, 7), (0, 1), (1, 2), (2, 3)])
    assert giant_component(tie).ids == snap(8).ids[:4]
    with pytest.raises(ValueError):
        giant_component(snap(0))


# -- degrees, power law ------------------------------------------------------


def test_degree_stats():
    deg, mean, hist = degree_stats(snap(4, [(0, 1), (0, 2), (0, 3)]))
    assert deg.tolist() == [3, 1, 1, 1] and mean == 1.5 and hist.tolist() == [0, 3, 0, 1]
    assert degree_stats(snap(4)).mean == 0


@given(graphs())
def test_handshake(s):
    assert degree_stats(s).degrees.sum() == 2 * s.m


def test_power_law_recovers_exponent():
    k = np.arange(1, 101)
    counts = 1e6 * k ** -2.0
    alpha, kl = power_law_exponent(counts_to_hist(k, counts))
    assert abs(alpha - 2.0) < 0.02 and kl < 1e-6


def test_power_law_from_samples():
    rng = np.random.default_rng(0)
    k = np.arange(1, 101)
    p = k ** -2.0
    sample = rng.choice(k, size=200_000, p=p / p.sum())
    alpha, _ = power_law_exponent(np.bincount(sample))
    assert abs(alpha - 2.0) < 0.02


def counts_to_hist(k, c):
    return dict(zip(k.tolist(), c.tolist()))


def test_power_law_errors():
    with pytest.raises(ValueError):
        power_law_exponent({3: 10})
    with pytest.raises(ValueError):
        power_law_exponent([0, 5, 0, 0], k_min=1)
    with pytest.raises(ValueError):
        power_law_exponent([0, 5, 3], k_min=0)


def test_power_law_k_min_drops_low_degrees():
    k = np.arange(1, 60)
    hist = counts_to_hist(k, 1e6 * k ** -2.5)
    hist[1] = 1  # junk below k_min
    alpha, _ = power_law_exponent(hist, k_min=2)
    assert abs(alpha - 2.5) < 0.01


# -- distances ---------------------------------------------------------------


def test_path4_distances():
    d = distance_summary(snap(4, [(0, 1), (1, 2), (2, 3)]), 0.9)
    assert d.pair_counts == (0, 3, 2, 1)
    assert d.g[2] == 5 / 6
    assert d.effective_diameter == 3 and d.diameter == 3
    assert d.hop_plot == (4, 10, 14, 16)


def test_single_edge_means():
    d = distance_summary(snap(2, [(0, 1)]))
    assert d.avg_geodesic == 1 / 3
    assert d.harmonic_geodesic == 3.0
    assert d.mean_distance_connected_pairs == 1.0


def test_edgeless_distances():
    d = distance_summary(snap(3))
    assert d.diameter == 0 and d.effective_diameter == 0 and d.avg_geodesic == 0
    assert math.isinf(d.harmonic_geodesic) and d.hop_plot == (3,)


def test_distance_errors():
    with pytest.raises(ValueError):
        distance_summary(snap(0))
    for q in (0.0, 1.5):
        with pytest.raises(ValueError):
            distance_summary(snap(2, [(0, 1)]), q)
    with pytest.raises(ValueError):
        summary_from_counts(3, [3, 1], 0.9)


@pytest.mark.parametrize("seed", range(8))
def test_distance_oracle_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 120))
    s = random_snapshot(rng, n, int(rng.uniform(0.5, 2.0) * n))
    g = to_nx(s)
    for q in (0.5, 0.9, 1.0):
        ours = distance_summary(s, q)
        ref = distance_oracle(g, q)
        for key, val in ref.items():
            assert getattr(ours, key) == val, key


@given(graphs())
def test_distance_properties(s):
    d = distance_summary(s, 1.0)
    assert d.effective_diameter == d.diameter
    assert d.hop_plot[0] == s.n
    assert all(a <= b for a, b in zip(d.hop_plot, d.hop_plot[1:]))
    assert distance_summary(s, 0.9).effective_diameter <= d.diameter


@given(graphs(max_n=15), st.data())
def test_diameters_monotone_under_edge_addition_on_connected(s, data):
    # on a connected vertex set extra edges can only shorten paths
    g = to_nx(s)
    if not nx.is_connected(g) or s.n < 3:
        return
    non = [(a, b) for a in range(s.n) for b in range(a + 1, s.n) if not g.has_edge(a, b)]
    if not non:
        return
    extra = data.draw(st.sampled_from(non))
    s2 = snap(s.n, sorted(s.edges.tolist() + [list(extra)]))
    for q in (0.5, 0.9, 1.0):
        assert distance_summary(s2, q).effective_diameter <= distance_summary(s, q).effective_diameter
    assert distance_summary(s2).mean_distance_connected_pairs <= distance_summary(s).mean_distance_connected_pairs


def test_distance_trees_with_leaf_pruning():
    # stars and caterpillars exercise the degree-1 shortcut in the BFS kernel
    for seed in range(10):
        t = nx.random_labeled_tree(40, seed=seed) if hasattr(nx, "random_labeled_tree") else nx.random_tree(40, seed=seed)
        s = snap(40, [tuple(sorted(e)) for e in t.edges()])
        assert distance_summary(s).hop_plot == distance_oracle(t, 0.9)["hop_plot"]
    star = nx.star_graph(5)
    assert distance_summary(snap(6, list(star.edges()))).pair_counts == (0, 5, 10)


# -- centrality --------------------------------------------------------------


def test_p3_ratio():
    c = eigenvector_centrality(snap(3, [(0, 1), (1, 2)]))
    assert abs(c.scores[1] / c.scores[0] - math.sqrt(2)) < 1e-6
    assert c.residual <= 1e-8
    assert abs(c.eigenvalue - math.sqrt(2)) < 1e-9


def test_isolated_vertex_scores_zero():
    c = eigenvector_centrality(snap(4, [(0, 1), (1, 2), (0, 2)]))
    assert c.scores[3] == 0.0
    assert abs(np.linalg.norm(c.scores) - 1) < 1e-12


def test_k3_plus_edge_mass_on_triangle():
    c = eigenvector_centrality(snap(5, [(0, 1), (1, 2), (0, 2), (3, 4)]))
    assert c.scores[3] <= 1e-8 and c.scores[4] <= 1e-8
    assert np.allclose(c.scores[:3], 1 / math.sqrt(3), atol=1e-8)


def test_centrality_errors():
    with pytest.raises(ValueError):
        eigenvector_centrality(snap(3))
    with pytest.raises(ConvergenceError) as exc:
        eigenvector_centrality(random_snapshot(np.random.default_rng(1), 40, 80), tol=0.0, max_iter=5)
    assert exc.value.result.iterations == 5 and not exc.value.result.converged


def test_centrality_vs_numpy_eig():
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = random_snapshot(rng, 60, 150)
        gi = giant_component(s)
        c = eigenvector_centrality(gi)
        w, v = np.linalg.eigh(gi.adjacency().toarray())
        ref = np.abs(v[:, -1])
        assert np.allclose(c.scores, ref, atol=1e-8)
        assert c.residual <= 1e-8


def test_centrality_relabel_invariance():
    rng = np.random.default_rng(3)
    s = giant_component(random_snapshot(rng, 50, 100))
    perm = rng.permutation(s.n)
    e2 = sorted((min(perm[a], perm[b]), max(perm[a], perm[b])) for a, b in s.edges.tolist())
    c1 = eigenvector_centrality(s).scores
    c2 = eigenvector_centrality(snap(s.n, e2)).scores
    assert np.allclose(c1, c2[perm], atol=1e-8)


def _attr_snapshot(n, edges, groups):
    ids = [f"x{i}" for i in range(n)]
    recs = [rec(ids[i], 0, groups[i], province=f"P{i % 2}", age=20.0 + i) for i in range(n)]
    g = TemporalGraph(recs, [EdgeRecord(ids[a], ids[b]) for a, b in edges])
    return g.snapshot_at(0)


def test_top_profile_star_and_full():
    groups = [Group.WOMAN, Group.MSM, Group.MSM, Group.HETEROSEXUAL_MAN, Group.WOMAN]
    s = _attr_snapshot(5, [(0, 1), (0, 2), (0, 3), (0, 4)], groups)
    top = top_central_profile(s, 0.2)
    assert top["ids"] == ["x0"] and top["female_pct"] == 100.0
    full = top_central_profile(s, 1.0)
    assert full["group_pct"] == {"Woman": 40.0, "HeterosexualMan": 20.0, "MSM": 40.0}
    assert full["mean_age"] == 22.0 and full["male_pct"] == 60.0
    with pytest.raises(ValueError):
        top_central_profile(s, 0.0)


# -- betweenness -------------------------------------------------------------


def test_betweenness_small():
    assert edge_betweenness(snap(2, [(0, 1)])).tolist() == [1.0]
    assert edge_betweenness(snap(3, [(0, 1), (1, 2)])).tolist() == [2.0, 2.0]
    assert edge_betweenness(snap(3)).size == 0


@pytest.mark.parametrize("seed", range(6))
def test_betweenness_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 31))
    s = random_snapshot(rng, n, int(rng.integers(n // 2, 2 * n)))
    bc = edge_betweenness(s)
    ref = betweenness_oracle(to_nx(s))
    for (a, b), x in zip(s.edges.tolist(), bc):
        assert abs(ref[(a, b)] - x) <= 1e-9
    # each connected pair's unit weight spreads over the edges of its paths
    dist = dict(nx.all_pairs_shortest_path_length(to_nx(s)))
    total = sum(d for a in dist for b, d in dist[a].items() if a < b)
    assert abs(bc.sum() - total) < 1e-9


# -- triangles ---------------------------------------------------------------


def test_triangle_examples():
    k3 = snap(3, [(0, 1), (1, 2), (0, 2)])
    assert triangle_participation(k3)[0].tolist() == [1, 1, 1]
    k4 = snap(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    tri, hist = triangle_participation(k4)
    assert tri.tolist() == [3] * 4 and hist[3] == 4
    bip = snap(6, [(a, b) for a in range(3) for b in range(3, 6)])
    assert not triangle_participation(bip)[0].any()


@given(graphs(max_n=20))
def test_triangles_vs_triples(s):
    tri, hist = triangle_participation(s)
    ref = triangle_oracle(s.n, s.edges.tolist())
    assert tri.tolist() == ref.tolist()
    assert tri.sum() % 3 == 0 and hist.sum() == s.n


def test_triangles_100_vertices():
    s = random_snapshot(np.random.default_rng(9), 100, 400)
    assert triangle_participation(s)[0].tolist() == triangle_oracle(100, s.edges.tolist()).tolist()


# -- detection distances, late infection -------------------------------------


def test_detection_distances(tiny):
    g = TemporalGraph([rec("a", 10), rec("b", 800), rec("c", 10)], [EdgeRecord("a", "b"), EdgeRecord("a", "c")])
    dd = detection_distances(g)
    assert sorted(dd.distances.tolist()) == [0, 790]
    assert dd.n_above == 1 and dd.median == 0 and dd.mode == 15.0
    full = detection_distances(tiny)
    # tiny: a-b 10, b-c 90, c-d 700, d-e 100, c-e 800, a-f 900
    assert sorted(full.distances.tolist()) == [10, 90, 100, 700, 800, 900]
    assert full.median == 100 and full.n_above == 2


def test_detection_empty():
    dd = detection_distances(snap(2))
    assert dd.median is None and dd.mode is None and dd.fraction_above is None


def test_lower_median():
    assert lower_median([3, 1]) == 1
    assert lower_median([5, 1, 3]) == 3
    assert lower_median([]) is None


def test_late_infection():
    g0 = TemporalGraph([rec("a", 0), rec("b", 1100)], [EdgeRecord("a", "b")])
    assert late_infection_edges(g0) == (0, 0)
    g = TemporalGraph([rec("a", 0), rec("b", 1100, infect_day=1000)], [EdgeRecord("a", "b", "a->b")])
    assert late_infection_edges(g) == (1, 1)
    g2 = TemporalGraph([rec("a", 0), rec("b", 1100, infect_day=1000)], [EdgeRecord("a", "b")])
    assert late_infection_edges(g2) == (1, 0)
    g3 = TemporalGraph([rec("a", 0), rec("b", 1100, infect_day=730)], [EdgeRecord("a", "b")])
    assert late_infection_edges(g3) == (0, 0)


def test_late_infection_tiny(tiny):
    # a detected 0, f infected 1000 on the a-f edge
    assert late_infection_edges(tiny) == (1, 0)


# -- entropy and forest ------------------------------------------------------


def test_entropy_values():
    assert entropy(["x", "x", "x"]) == 0.0
    assert entropy(["x", "y"]) == 1.0
    assert abs(entropy("abcd") - 2.0) < 1e-12


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40))
def test_entropy_bounds(vals):
    h = entropy(vals)
    k = len(set(vals))
    assert -1e-12 <= h <= math.log2(k) + 1e-12
    assert (h == 0) == (k == 1)


def test_forest_chain_and_entropy():
    recs = [rec("r", 0, Group.MSM), rec("x", 1, Group.WOMAN), rec("y", 2, Group.MSM), rec("z", 3)]
    edges = [EdgeRecord("r", "x", "a->b"), EdgeRecord("x", "y", "a->b")]
    f = infection_forest(TemporalGraph(recs, edges).snapshot_at(3))
    assert f.sizes == [3, 1] and f.depths == [2, 0]
    big = f.trees[0]
    assert big.root == "r" and abs(big.group_entropy - entropy(["MSM", "Woman", "MSM"])) < 1e-12
    assert big.province_entropy == 0.0
    assert f.trees[1].group_entropy is None
    pair = infection_forest(
        TemporalGraph([rec("p", 0, Group.WOMAN), rec("q", 0, Group.HETEROSEXUAL_MAN)], [EdgeRecord("p", "q", "a->b")]).snapshot_at(0)
    )
    assert pair.trees[0].group_entropy == 1.0


@st.composite
def forests(draw):
    n = draw(st.integers(1, 30))
    parent = [None] + [draw(st.one_of(st.none(), st.integers(0, i - 1))) for i in range(1, n)]
    arcs = [(p, i) for i, p in enumerate(parent) if p is not None]
    return n, arcs


@given(forests())
def test_forest_properties(data):
    n, arcs = data
    s = snap(n, sorted({(min(a, b), max(a, b)) for a, b in arcs}), arcs)
    f = infection_forest(s)
    assert sum(f.sizes) == n
    assert f.sizes == sorted(f.sizes, reverse=True)
    g = nx.DiGraph(arcs)
    g.add_nodes_from(range(n))
    for t in f.trees:
        members = set(t.members)
        roots = [v for v in members if g.in_degree(v) == 0]
        assert len(roots) == 1 and s.ids[roots[0]] == t.root
        assert t.depth == max(nx.single_source_shortest_path_length(g, roots[0]).values())
        if t.size == 1:
            assert t.depth == 0


def test_forest_summary_tiny(tiny):
    summ = infection_forest(tiny.snapshot_at(900)).summary()
    assert summ["n_trees"] == 4 and summ["max_size"] == 2 and summ["max_depth"] == 1


# -- attribute time series ---------------------------------------------------


def test_attribute_timeseries_contacts():
    g = TemporalGraph([rec("a", 0, contacts_declared=4, contacts_tested=2, contacts_positive=1)], [])
    (row,) = attribute_timeseries(g, 365)
    assert (row["mean_contacts_declared"], row["mean_contacts_tested"], row["mean_contacts_positive"]) == (4, 2, 1)
    assert row["mean_positive_of_tested"] == 0.5
    assert row["n_detected"] == 1 and row["group:MSM"] == 1


def test_attribute_timeseries_empty_bucket(tiny):
    rows = attribute_timeseries(tiny, 365)
    assert len(rows) == 3
    assert rows[1]["n_detected"] == 0 and rows[1]["mean_contacts_declared"] is None
    # cumulative infection mixing at the end of the data
    last = rows[-1]
    assert last["n_infection_arcs"] == 2 and last["infection_edge_proportion"] == 2 / 6
    with pytest.raises(ValueError):
        attribute_timeseries(tiny, 0)
