"""Seeded synthetic datasets in the ingestion format.

:func:`synth_epidemic` runs a small event-driven contact-tracing simulation
over a hidden population and returns only what a tracing database would hold:
detected individuals and the partnerships among them.
:func:`synth_planted_temporal` builds block graphs whose blocks are also
clustered in detection time, for validating the homogeneity tests.
"""

from __future__ import annotations

import csv
import heapq
from collections.abc import Mapping
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph_core import EdgeRecord, Group, Method, TemporalGraph, VertexRecord

__all__ = [
    "SynthConfig",
    "synth_epidemic",
    "synth_planted_temporal",
    "write_labels",
    "BACKGROUND_METHODS",
]

# detection routes other than tracing, with relative weights
BACKGROUND_METHODS: dict[Method, float] = {
    Method.RANDOM_TEST: 0.35,
    Method.STD_TEST: 0.2,
    Method.BLOOD_DONOR: 0.15,
    Method.DOCTOR_RECOMMENDATION: 0.12,
    Method.VOLUNTARY: 0.1,
    Method.PRISONER: 0.05,
    Method.OTHER: 0.03,
}

_GROUPS = (Group.WOMAN, Group.HETEROSEXUAL_MAN, Group.MSM)


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of :func:`synth_epidemic`.  Days are simulation days from 0."""

    seed: int = 0
    horizon_days: int = 3650
    population: int = 4000
    group_mix: tuple[float, float, float] = (0.25, 0.15, 0.6)  # woman, heterosexual man, MSM
    partner_exponent: float = 2.3
    partner_cap: int = 50
    transmission_prob: float = 0.3
    tracing_prob: float = 0.7
    tracing_delay_mean: float = 60.0
    lookback_days: int = 730
    background_rate: float = 1.0 / 1500
    active_days: float = 1500.0  # mean length of a person's sexually active period
    index_cases: int = 20
    seeding_days: int = 365
    provinces: int = 14
    province_bias: float = 0.8

    def __post_init__(self):
        probs = {
            "transmission_prob": self.transmission_prob,
            "tracing_prob": self.tracing_prob,
            "background_rate": self.background_rate,
            "province_bias": self.province_bias,
        }
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if len(self.group_mix) != 3 or any(not 0.0 <= p <= 1.0 for p in self.group_mix):
            raise ValueError("group_mix needs three probabilities in [0, 1]")
        if abs(sum(self.group_mix) - 1.0) > 1e-9:
            raise ValueError(f"group_mix must sum to 1, got {sum(self.group_mix)}")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.partner_exponent <= 1.0:
            raise ValueError("partner_exponent must exceed 1")
        if self.partner_cap < 1:
            raise ValueError("partner_cap must be >= 1")
        if self.active_days <= 0:
            raise ValueError("active_days must be positive")
        if self.tracing_delay_mean < 0 or self.lookback_days < 0 or self.seeding_days < 0:
            raise ValueError("delays and windows must be non-negative")
        if not 1 <= self.index_cases <= self.population:
            raise ValueError("index_cases must be between 1 and population")
        if self.provinces < 1:
            raise ValueError("provinces must be >= 1")

    @classmethod
    def full_scale(cls, seed: int = 0, **overrides) -> SynthConfig:
        """Preset sized to give roughly 5400 detected individuals and 4100 contact edges over 6847 days."""
        base = dict(
            seed=seed,
            horizon_days=6847,
            population=30000,
            partner_exponent=1.8,
            transmission_prob=0.7,
            tracing_prob=0.7,
            background_rate=1.0 / 1200,
            index_cases=3400,
            seeding_days=6847,
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group_mix"] = list(self.group_mix)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> SynthConfig:
        d = dict(d)
        if "group_mix" in d:
            d["group_mix"] = tuple(d["group_mix"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown synth config keys {sorted(unknown)}")
        return cls(**d)


# -- partnership network -------------------------------------------------------


def _partner_counts(rng: np.random.Generator, n: int, exponent: float, cap: int) -> np.ndarray:
    k = np.arange(1, cap + 1, dtype=np.float64)
    w = k**-exponent
    return rng.choice(np.arange(1, cap + 1), size=n, p=w / w.sum())


def _pair_sides(rng, left, left_t, right, right_t, prov, bias, n_prov):
    """Match two stub lists by rank in time within a province key.

    ``left``/``right`` hold stub owners and ``*_t`` their days.  A stub keeps
    its owner's province as key with probability ``bias`` and gets a random
    one otherwise.  Returns rows ``(a, b, day)``.
    """

    def ranked(owner, when, m):
        pick = rng.permutation(len(owner))[:m]
        owner, when = owner[pick], when[pick]
        local = rng.random(m) < bias
        key = np.where(local, prov[owner], rng.integers(0, n_prov, m))
        order = np.lexsort((when, key))
        return owner[order], when[order]

    m = min(len(left), len(right))
    if m == 0:
        return np.empty((0, 3), dtype=np.int64)
    a, ta = ranked(left, left_t, m)
    b, tb = ranked(right, right_t, m)
    return np.stack([a, b, np.maximum(ta, tb)], axis=1)


def _partnerships(rng, cfg: SynthConfig, group: np.ndarray, prov: np.ndarray) -> np.ndarray:
    """Rows ``(u, v, day)`` of distinct partnerships sorted by day."""
    n = cfg.population
    deg = _partner_counts(rng, n, cfg.partner_exponent, cfg.partner_cap)
    length = rng.exponential(cfg.active_days, n)
    begin = rng.uniform(-length, cfg.horizon_days)
    stubs = np.repeat(np.arange(n), deg)
    # each stub is one partnership of its owner at a day inside the active period
    t = begin[stubs] + rng.uniform(0.0, 1.0, len(stubs)) * length[stubs]
    t = np.clip(np.floor(t), 0, cfg.horizon_days - 1).astype(np.int64)
    g = group[stubs]
    w, h = g == 0, g == 1
    het = _pair_sides(rng, stubs[w], t[w], stubs[h], t[h], prov, cfg.province_bias, cfg.provinces)
    # MSM stubs: split at random into two halves and match those
    msm = np.flatnonzero(g == 2)
    msm = rng.permutation(msm)[: len(msm) // 2 * 2]
    half = len(msm) // 2
    lo, hi = msm[:half], msm[half:]
    same = _pair_sides(rng, stubs[lo], t[lo], stubs[hi], t[hi], prov, cfg.province_bias, cfg.provinces)
    rows = np.concatenate([het, same])
    rows = rows[rows[:, 0] != rows[:, 1]]
    rows[:, :2] = np.sort(rows[:, :2], axis=1)
    # first meeting of a repeated pair wins
    rows = rows[np.lexsort((rows[:, 2], rows[:, 1], rows[:, 0]))]
    first = np.ones(len(rows), dtype=bool)
    first[1:] = (rows[1:, 0] != rows[:-1, 0]) | (rows[1:, 1] != rows[:-1, 1])
    rows = rows[first]
    return rows[np.lexsort((rows[:, 1], rows[:, 0], rows[:, 2]))]


# -- simulation ----------------------------------------------------------------

_PARTNER, _DETECT, _TRACE = 0, 1, 2


def _geometric_delay(rng, mean: float) -> int:
    """Non-negative integer delay with the given mean."""
    if mean <= 0:
        return 0
    return int(rng.geometric(1.0 / (mean + 1.0))) - 1


def synth_epidemic(cfg: SynthConfig) -> TemporalGraph:
    """Simulate partnership formation, transmission, background detection and contact tracing.

    Rules:

    * partnerships pair women with heterosexual men and MSM with MSM; each
      happens once on a uniformly drawn day and is ignored if either side is
      already detected by then;
    * a partnership transmits with ``transmission_prob`` when exactly one side
      is infected (on an earlier day) and undetected;
    * an infected person is detected by a background route after a
      geometric delay with mean ``1/background_rate``;
    * each detected person names partners from the last ``lookback_days``;
      each is traced with ``tracing_prob`` after a geometric delay and, if
      infected by then, detected as contact-traced (which recurses);
    * only detected people and partnerships among them are emitted, with
      days shifted so the earliest detection is day 0.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n = cfg.population
    group = rng.choice(3, size=n, p=np.asarray(cfg.group_mix))
    prov_w = 1.0 / np.arange(1, cfg.provinces + 1)  # a few large provinces
    prov = rng.choice(cfg.provinces, size=n, p=prov_w / prov_w.sum())
    age0 = rng.uniform(16.0, 55.0, n)
    pships = _partnerships(rng, cfg, group, prov)

    infect = np.full(n, -1, dtype=np.int64)
    infector = np.full(n, -1, dtype=np.int64)
    detect = np.full(n, -1, dtype=np.int64)
    method: dict[int, Method] = {}
    tracer = np.full(n, -1, dtype=np.int64)
    history: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (day, partner)
    declared = np.zeros(n, dtype=np.int64)
    tested = np.zeros(n, dtype=np.int64)
    positive = np.zeros(n, dtype=np.int64)
    methods = list(BACKGROUND_METHODS)
    mweights = np.array([BACKGROUND_METHODS[m] for m in methods])
    mweights /= mweights.sum()

    recorded = np.zeros(len(pships), dtype=bool)
    events: list[tuple[int, int, int, int, int]] = []  # (day, kind, seq, who, extra)
    seq = 0

    def push(day, kind, who, extra=-1):
        nonlocal seq
        heapq.heappush(events, (int(day), kind, seq, int(who), int(extra)))
        seq += 1

    def infect_at(v, day, src):
        infect[v] = day
        infector[v] = src
        if cfg.background_rate > 0:
            push(day + int(rng.geometric(cfg.background_rate)), _DETECT, v)

    for v in rng.choice(n, size=cfg.index_cases, replace=False):
        infect_at(int(v), int(rng.integers(0, cfg.seeding_days + 1)), -1)
    for i, (u, v, day) in enumerate(pships):
        push(day, _PARTNER, i)

    traced_pairs: list[tuple[int, int]] = []  # (tracer, traced) with delay 0, for the in-run check
    while events:
        day, kind, _, who, extra = heapq.heappop(events)
        if day >= cfg.horizon_days:
            break
        if kind == _PARTNER:
            u, v, _ = (int(x) for x in pships[who])
            if detect[u] >= 0 or detect[v] >= 0:
                continue
            recorded[who] = True
            history[u].append((day, v))
            history[v].append((day, u))
            iu = 0 <= infect[u] < day
            iv = 0 <= infect[v] < day
            if iu != iv and rng.random() < cfg.transmission_prob:
                src, dst = (u, v) if iu else (v, u)
                infect_at(dst, day, src)
            continue
        v = who
        if kind == _TRACE:
            tested[extra] += 1
            if not (0 <= infect[v] <= day):
                continue
            positive[extra] += 1
        if detect[v] >= 0:
            continue
        detect[v] = day
        if kind == _TRACE:
            method[v] = Method.CONTACT_TRACED
            tracer[v] = extra
            if cfg.tracing_delay_mean == 0:
                traced_pairs.append((extra, v))
        else:
            method[v] = methods[int(rng.choice(len(methods), p=mweights))]
        named = sorted({w for d, w in history[v] if d >= day - cfg.lookback_days})
        declared[v] = len(named)
        for w in named:
            if rng.random() < cfg.tracing_prob:
                push(day + _geometric_delay(rng, cfg.tracing_delay_mean), _TRACE, w, v)

    for a, b in traced_pairs:
        assert detect[a] == detect[b], "zero-delay tracing must detect on the tracer's day"

    return _emit(cfg, detect, infect, infector, method, group, prov, age0, declared, tested, positive, pships[recorded])


def _emit(cfg, detect, infect, infector, method, group, prov, age0, declared, tested, positive, pships):
    found = np.flatnonzero(detect >= 0)
    if len(found) == 0:
        return TemporalGraph([], [])
    shift = int(detect[found].min())
    order = found[np.lexsort((found, detect[found]))]
    width = max(5, len(str(len(order))))
    ids = {int(v): f"v{i:0{width}d}" for i, v in enumerate(order)}
    vertices = []
    for v in order:
        v = int(v)
        vertices.append(
            VertexRecord(
                id=ids[v],
                detect_day=int(detect[v]) - shift,
                group=_GROUPS[int(group[v])],
                method=method[v],
                province=f"P{int(prov[v]):02d}",
                infect_day=int(infect[v]) - shift,
                age=round(float(age0[v] + detect[v] / 365.25), 1),
                contacts_declared=int(declared[v]),
                contacts_tested=int(tested[v]),
                contacts_positive=int(positive[v]),
            )
        )
    edges = []
    for u, v, day in pships:
        u, v = int(u), int(v)
        if u not in ids or v not in ids:
            continue
        a, b = sorted((ids[u], ids[v]))
        inf = None
        if infector[v] == u and infect[v] == day:
            inf = "a->b" if ids[u] == a else "b->a"
        elif infector[u] == v and infect[u] == day:
            inf = "a->b" if ids[v] == a else "b->a"
        edges.append(EdgeRecord(a, b, inf))
    return TemporalGraph(vertices, edges)


# -- planted temporal clusters -------------------------------------------------


def synth_planted_temporal(
    clusters: int,
    size: int,
    p_in: float,
    p_out: float,
    date_spread_within: int,
    date_gap_between: int,
    seed: int,
) -> tuple[TemporalGraph, dict[str, int]]:
    """Planted-partition graph whose blocks also occupy separate detection windows.

    Block ``b`` draws detection days uniformly from
    ``[b * (spread + gap), b * (spread + gap) + spread]``.  Returns the graph
    and the planted block of every vertex id.
    """
    if clusters < 2 or size < 2:
        raise ValueError("need at least 2 clusters of at least 2 vertices")
    if not (0.0 <= p_out < p_in <= 1.0):
        raise ValueError(f"need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if date_spread_within < 0 or date_gap_between < 0:
        raise ValueError("date spread and gap must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = clusters * size
    block = np.repeat(np.arange(clusters), size)
    start = block * (date_spread_within + date_gap_between)
    days = start + rng.integers(0, date_spread_within + 1, n)
    days -= days.min()
    width = max(4, len(str(n)))
    ids = [f"b{i:0{width}d}" for i in range(n)]
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    vertices = [
        VertexRecord(ids[i], int(days[i]), Group.MSM, Method.OTHER, f"P{int(block[i]):02d}") for i in range(n)
    ]
    edges = [EdgeRecord(ids[i], ids[j]) for i, j in zip(iu[keep], ju[keep])]
    return TemporalGraph(vertices, edges), {ids[i]: int(block[i]) for i in range(n)}


def write_labels(labels: Mapping[str, int], path: str | Path) -> None:
    """Write ``vertex_id,planted_cluster`` rows sorted by id."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_id", "planted_cluster"])
        for v in sorted(labels):
            w.writerow([v, labels[v]])
