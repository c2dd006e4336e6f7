from __future__ import annotations

import os
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from contactnet import Snapshot, load

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def snap(n, edges=(), arcs=(), t=None) -> Snapshot:
    return Snapshot.from_edges(n, list(edges), list(arcs), t=t)


def to_nx(s: Snapshot) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(s.n))
    g.add_edges_from(map(tuple, s.edges.tolist()))
    return g


def from_nx(g: nx.Graph) -> Snapshot:
    nodes = sorted(g.nodes())
    idx = {v: i for i, v in enumerate(nodes)}
    return snap(len(nodes), [(idx[a], idx[b]) for a, b in g.edges() if a != b])


def random_snapshot(rng: np.random.Generator, n: int, m: int) -> Snapshot:
    g = nx.gnm_random_graph(n, m, seed=int(rng.integers(2**31)))
    return from_nx(g)


@pytest.fixture
def tiny_paths():
    return DATA / "tiny_vertices.csv", DATA / "tiny_edges.csv"


@pytest.fixture
def tiny(tiny_paths):
    g, _ = load(*tiny_paths)
    return g


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
