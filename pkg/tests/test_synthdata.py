import filecmp
from collections import Counter

import pytest

from contactnet import Group, Method, load, write
from contactnet.metrics import connected_components, detection_distances, infection_forest
from contactnet.synthdata import SynthConfig, synth_epidemic, synth_planted_temporal, write_labels

SMALL = dict(population=1500, index_cases=60)


@pytest.fixture(scope="module")
def epidemic():
    return synth_epidemic(SynthConfig(seed=21, **SMALL))


def test_determinism_bitwise(tmp_path):
    cfg = SynthConfig(seed=5, **SMALL)
    for tag in ("a", "b"):
        write(synth_epidemic(cfg), tmp_path / f"{tag}_v.csv", tmp_path / f"{tag}_e.csv")
    assert filecmp.cmp(tmp_path / "a_v.csv", tmp_path / "b_v.csv", shallow=False)
    assert filecmp.cmp(tmp_path / "a_e.csv", tmp_path / "b_e.csv", shallow=False)
    other = synth_epidemic(SynthConfig(seed=6, **SMALL))
    assert other != synth_epidemic(cfg)


def test_output_validates(tmp_path, epidemic):
    write(epidemic, tmp_path / "v.csv", tmp_path / "e.csv")
    g, rep = load(tmp_path / "v.csv", tmp_path / "e.csv")
    assert g == epidemic and rep.n_vertices > 50 and rep.n_infection_arcs > 0
    assert min(r.detect_day for r in g.vertices.values()) == 0


def test_orientation_constraints(epidemic):
    v = epidemic.vertices
    for e in epidemic.edges:
        ga, gb = v[e.a].group, v[e.b].group
        if Group.MSM in (ga, gb):
            assert ga == gb == Group.MSM
        else:
            assert {ga, gb} == {Group.WOMAN, Group.HETEROSEXUAL_MAN}


def test_infection_days_increase_along_arcs(epidemic):
    v = epidemic.vertices
    for e in epidemic.edges:
        if e.arc is not None:
            src, dst = e.arc
            assert v[src].infect_day < v[dst].infect_day
    for r in v.values():
        assert r.infect_day is not None and r.infect_day <= r.detect_day
        assert 0 <= r.contacts_positive <= r.contacts_tested


def test_methods_present(epidemic):
    methods = Counter(r.method for r in epidemic.vertices.values())
    assert methods[Method.CONTACT_TRACED] > 0
    assert sum(c for m, c in methods.items() if m != Method.CONTACT_TRACED) > 0


def test_no_transmission_gives_singleton_trees():
    g = synth_epidemic(SynthConfig(seed=3, transmission_prob=0.0, **SMALL))
    s = g.snapshot_at(g.max_detect_day)
    assert len(s.arcs) == 0
    assert set(infection_forest(s).sizes) == {1}


def test_full_zero_delay_tracing():
    # every traced detection happens on the tracer's day, so each has a same-day neighbour
    cfg = SynthConfig(
        seed=3,
        tracing_prob=1.0,
        tracing_delay_mean=0,
        population=800,
        index_cases=1,
        seeding_days=0,
        transmission_prob=1.0,
        partner_exponent=1.6,
        background_rate=1 / 3000,
    )
    g = synth_epidemic(cfg)
    s = g.snapshot_at(g.max_detect_day)
    day = s.detect_day
    nbrs = {i: set() for i in range(s.n)}
    for a, b in s.edges.tolist():
        nbrs[a].add(b)
        nbrs[b].add(a)
    for i, rec in enumerate(s.records):
        if rec.method == Method.CONTACT_TRACED:
            assert any(day[j] == day[i] for j in nbrs[i])
    traced = [i for i, r in enumerate(s.records) if r.method == Method.CONTACT_TRACED]
    assert len(traced) >= 10
    for i in traced:
        assert min(abs(int(day[j]) - int(day[i])) for j in nbrs[i]) <= cfg.lookback_days


@pytest.mark.parametrize(
    "kw",
    [
        dict(transmission_prob=1.5),
        dict(tracing_prob=-0.1),
        dict(horizon_days=0),
        dict(group_mix=(0.5, 0.5, 0.5)),
        dict(index_cases=0),
        dict(partner_exponent=1.0),
        dict(provinces=0),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SynthConfig(**kw)


def test_config_dict_roundtrip():
    cfg = SynthConfig.full_scale(seed=4)
    assert SynthConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        SynthConfig.from_dict({"bogus": 1})
    assert cfg.horizon_days == 6847


def test_planted_no_inter_edges():
    g, labels = synth_planted_temporal(3, 8, 0.9, 0.0, 50, 200, 1)
    s = g.snapshot_at(g.max_detect_day)
    comps = connected_components(s)
    for a, b in s.edges.tolist():
        assert labels[s.ids[a]] == labels[s.ids[b]]
    assert comps.count >= 3
    assert set(labels.values()) == {0, 1, 2}


def test_planted_zero_spread():
    g, labels = synth_planted_temporal(3, 10, 0.6, 0.1, 0, 500, 2)
    s = g.snapshot_at(g.max_detect_day)
    d = detection_distances(s).distances
    for (a, b), x in zip(s.edges.tolist(), d):
        if labels[s.ids[a]] == labels[s.ids[b]]:
            assert x == 0
        else:
            assert x >= 500


def test_planted_validation_and_determinism(tmp_path):
    with pytest.raises(ValueError):
        synth_planted_temporal(1, 5, 0.5, 0.1, 10, 10, 0)
    with pytest.raises(ValueError):
        synth_planted_temporal(2, 5, 0.1, 0.5, 10, 10, 0)
    a = synth_planted_temporal(2, 6, 0.5, 0.1, 10, 10, 4)
    b = synth_planted_temporal(2, 6, 0.5, 0.1, 10, 10, 4)
    assert a[0] == b[0] and a[1] == b[1]
    write_labels(a[1], tmp_path / "labels.csv")
    lines = (tmp_path / "labels.csv").read_text().splitlines()
    assert lines[0] == "vertex_id,planted_cluster" and len(lines) == 13
