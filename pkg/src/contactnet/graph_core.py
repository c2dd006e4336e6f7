"""Temporal contact database and snapshot extraction.

A :class:`TemporalGraph` holds every detected individual and every contact
edge, with optional infection direction on edges.  Snapshots are immutable
views of the database at a given day: a vertex is present once detected, an
edge once both of its endpoints are detected.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "Group",
    "Method",
    "VertexRecord",
    "EdgeRecord",
    "TemporalGraph",
    "Snapshot",
    "ValidationReport",
    "GraphError",
    "ParseError",
    "ValidationError",
    "load",
    "write",
    "snapshot_at",
    "snapshot_schedule",
    "VERTEX_FIELDS",
    "EDGE_FIELDS",
]

VERTEX_FIELDS = (
    "id",
    "detect_day",
    "group",
    "method",
    "province",
    "infect_day",
    "age",
    "contacts_declared",
    "contacts_tested",
    "contacts_positive",
)
EDGE_FIELDS = ("a", "b", "infection")


class Group(str, Enum):
    WOMAN = "Woman"
    HETEROSEXUAL_MAN = "HeterosexualMan"
    MSM = "MSM"


class Method(str, Enum):
    CONTACT_TRACED = "ContactTraced"
    BLOOD_DONOR = "BloodDonor"
    RANDOM_TEST = "RandomTest"
    STD_TEST = "StdTest"
    PRISONER = "Prisoner"
    DOCTOR_RECOMMENDATION = "DoctorRecommendation"
    VOLUNTARY = "Voluntary"
    OTHER = "Other"


class GraphError(ValueError):
    """Base class for ingestion and structural errors; carries file and line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class ParseError(GraphError):
    """A record could not be parsed."""


class ValidationError(GraphError):
    """A structural invariant of the database is violated."""


@dataclass(frozen=True)
class VertexRecord:
    """One detected individual.  Days are offsets from the dataset epoch."""

    id: str
    detect_day: int
    group: Group
    method: Method
    province: str
    infect_day: int | None = None
    age: float | None = None
    contacts_declared: int | None = None
    contacts_tested: int | None = None
    contacts_positive: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ParseError("empty vertex id")
        if self.detect_day < 0:
            raise ParseError(f"vertex {self.id!r}: detect_day must be >= 0, got {self.detect_day}")
        object.__setattr__(self, "group", Group(self.group))
        object.__setattr__(self, "method", Method(self.method))
        for name in ("contacts_declared", "contacts_tested", "contacts_positive"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ParseError(f"vertex {self.id!r}: {name} must be non-negative, got {value}")

    def anomalies(self) -> list[str]:
        """Attribute anomalies that are reported but not rejected."""
        out = []
        if self.infect_day is not None and self.infect_day > self.detect_day:
            out.append(f"vertex {self.id}: infect_day {self.infect_day} after detect_day {self.detect_day}")
        d, t, p = self.contacts_declared, self.contacts_tested, self.contacts_positive
        if t is not None and p is not None and p > t:
            out.append(f"vertex {self.id}: contacts_positive {p} > contacts_tested {t}")
        if d is not None and t is not None and t > d:
            out.append(f"vertex {self.id}: contacts_tested {t} > contacts_declared {d}")
        return out


@dataclass(frozen=True)
class EdgeRecord:
    """Undirected contact edge; ``infection`` is ``None``, ``"a->b"`` or ``"b->a"``."""

    a: str
    b: str
    infection: str | None = None

    def __post_init__(self):
        if self.infection == "":
            object.__setattr__(self, "infection", None)
        if self.infection not in (None, "a->b", "b->a"):
            raise ParseError(f"edge {self.a}-{self.b}: bad infection annotation {self.infection!r}")
        if self.a == self.b:
            raise ValidationError(f"self-loop on vertex {self.a!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)

    @property
    def arc(self) -> tuple[str, str] | None:
        """``(infector, infectee)`` if the edge carries an infection."""
        if self.infection == "a->b":
            return (self.a, self.b)
        if self.infection == "b->a":
            return (self.b, self.a)
        return None

    def normalized(self) -> EdgeRecord:
        """Same edge with endpoints in ascending id order."""
        if self.a <= self.b:
            return self
        flipped = {"a->b": "b->a", "b->a": "a->b", None: None}[self.infection]
        return EdgeRecord(self.b, self.a, flipped)


@dataclass
class ValidationReport:
    n_vertices: int = 0
    n_edges: int = 0
    n_infection_arcs: int = 0
    group_counts: dict[str, int] = field(default_factory=dict)
    method_counts: dict[str, int] = field(default_factory=dict)
    max_detect_day: int | None = None
    anomalies: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
            "n_infection_arcs": self.n_infection_arcs,
            "group_counts": dict(sorted(self.group_counts.items())),
            "method_counts": dict(sorted(self.method_counts.items())),
            "max_detect_day": self.max_detect_day,
            "n_anomalies": len(self.anomalies),
            "anomalies": list(self.anomalies),
        }


class _Builder:
    """Accumulates records and enforces structural invariants as they arrive."""

    def __init__(self, path_v: str | None = None, path_e: str | None = None):
        self.vertices: dict[str, VertexRecord] = {}
        self.edges: dict[tuple[str, str], EdgeRecord] = {}
        self.infector_of: dict[str, str] = {}
        self.path_v = path_v
        self.path_e = path_e

    def add_vertex(self, rec: VertexRecord, line: int | None = None):
        if rec.id in self.vertices:
            raise ValidationError(f"duplicate vertex id {rec.id!r}", self.path_v, line)
        self.vertices[rec.id] = rec

    def add_edge(self, rec: EdgeRecord, line: int | None = None):
        for end in (rec.a, rec.b):
            if end not in self.vertices:
                raise ValidationError(f"edge references unknown vertex id {end!r}", self.path_e, line)
        key = rec.key
        if key in self.edges:
            raise ValidationError(f"duplicate edge {key[0]}-{key[1]}", self.path_e, line)
        arc = rec.arc
        if arc is not None:
            src, dst = arc
            if dst in self.infector_of:
                raise ValidationError(
                    f"vertex {dst!r} has infection in-degree > 1 "
                    f"(infected by {self.infector_of[dst]!r} and {src!r})",
                    self.path_e,
                    line,
                )
            self.infector_of[dst] = src
        self.edges[key] = rec.normalized()


class TemporalGraph:
    """Immutable temporal database of detected individuals and their contacts.

    Parameters
    ----------
    vertices : iterable of VertexRecord
    edges : iterable of EdgeRecord
        Infection annotations ride on contact edges, so the infection graph is
        always a subgraph of the contact graph.
    epoch_date : date, optional
        Calendar date of day 0.
    """

    def __init__(
        self,
        vertices: Iterable[VertexRecord],
        edges: Iterable[EdgeRecord] = (),
        epoch_date: date | None = None,
    ):
        b = _Builder()
        for v in vertices:
            b.add_vertex(v)
        for e in edges:
            b.add_edge(e)
        self._init_from_builder(b, epoch_date)

    @classmethod
    def _from_builder(cls, b: _Builder, epoch_date: date | None = None) -> TemporalGraph:
        self = cls.__new__(cls)
        self._init_from_builder(b, epoch_date)
        return self

    def _init_from_builder(self, b: _Builder, epoch_date):
        ids = sorted(b.vertices)
        self._vertices = {i: b.vertices[i] for i in ids}
        self._edges = tuple(b.edges[k] for k in sorted(b.edges))
        self.epoch_date = epoch_date
        self._ids = tuple(ids)
        self._index = {v: i for i, v in enumerate(ids)}
        self._detect = np.array([self._vertices[i].detect_day for i in ids], dtype=np.int64)
        if self._edges:
            ea = np.array([self._index[e.a] for e in self._edges], dtype=np.int64)
            eb = np.array([self._index[e.b] for e in self._edges], dtype=np.int64)
        else:
            ea = eb = np.empty(0, dtype=np.int64)
        self._ea, self._eb = ea, eb
        self._edge_day = np.maximum(self._detect[ea], self._detect[eb]) if len(ea) else ea
        arcs = [(self._index[s], self._index[d]) for e in self._edges if (a := e.arc) for s, d in [a]]
        self._arcs = np.array(arcs, dtype=np.int64).reshape(-1, 2)
        self._arc_day = (
            np.maximum(self._detect[self._arcs[:, 0]], self._detect[self._arcs[:, 1]])
            if len(arcs)
            else np.empty(0, dtype=np.int64)
        )

    @property
    def vertices(self) -> Mapping[str, VertexRecord]:
        return self._vertices

    @property
    def edges(self) -> tuple[EdgeRecord, ...]:
        return self._edges

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def max_detect_day(self) -> int:
        return int(self._detect.max()) if len(self._detect) else 0

    def __len__(self):
        return len(self._vertices)

    def __eq__(self, other):
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __repr__(self):
        return f"TemporalGraph(|V|={len(self._vertices)}, |E|={len(self._edges)}, arcs={len(self._arcs)})"

    def report(self) -> ValidationReport:
        rep = ValidationReport(
            n_vertices=len(self._vertices),
            n_edges=len(self._edges),
            n_infection_arcs=len(self._arcs),
            group_counts=dict(Counter(v.group.value for v in self._vertices.values())),
            method_counts=dict(Counter(v.method.value for v in self._vertices.values())),
            max_detect_day=self.max_detect_day if self._vertices else None,
        )
        for v in self._vertices.values():
            rep.anomalies.extend(v.anomalies())
        return rep

    def snapshot_at(self, t: int) -> Snapshot:
        vmask = self._detect <= t
        keep = np.flatnonzero(vmask)
        remap = np.full(len(self._ids), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        emask = self._edge_day <= t
        edges = np.stack([remap[self._ea[emask]], remap[self._eb[emask]]], axis=1) if len(self._ea) else None
        amask = self._arc_day <= t
        arcs = remap[self._arcs[amask]] if len(self._arcs) else None
        records = tuple(self._vertices[self._ids[i]] for i in keep)
        return Snapshot.from_arrays(
            ids=tuple(self._ids[i] for i in keep),
            edges=edges,
            arcs=arcs,
            records=records,
            t=int(t),
        )

    def snapshot_schedule(self, start_day: int, end_day: int, step_days: int) -> list[Snapshot]:
        return [self.snapshot_at(t) for t in schedule_days(start_day, end_day, step_days)]


def schedule_days(start_day: int, end_day: int, step_days: int, extra: Iterable[int] = ()) -> list[int]:
    """Days ``start, start+step, ...`` up to ``end``, with ``end`` appended if unaligned."""
    if step_days < 1:
        raise ValueError("step_days must be >= 1")
    if start_day > end_day:
        raise ValueError(f"start_day {start_day} > end_day {end_day}")
    days = list(range(start_day, end_day + 1, step_days))
    if days[-1] != end_day:
        days.append(end_day)
    return sorted(set(days) | {int(d) for d in extra})


class Snapshot:
    """Immutable graph at one day.

    Vertices are indexed ``0..n-1`` in ascending id order.  ``edges`` is an
    ``(m, 2)`` array with ``edges[:, 0] < edges[:, 1]`` sorted
    lexicographically; ``indptr``/``indices`` give the symmetric adjacency in
    CSR form with sorted neighbour lists.  ``arcs`` is a ``(k, 2)`` array of
    infection arcs ``(infector, infectee)``.
    """

    __slots__ = (
        "t",
        "ids",
        "records",
        "edges",
        "arcs",
        "indptr",
        "indices",
        "detect_day",
        "_index",
    )

    def __init__(self, *args, **kwargs):
        raise TypeError("use Snapshot.from_arrays or Snapshot.from_edges")

    @classmethod
    def from_arrays(
        cls,
        ids: Sequence[str],
        edges: np.ndarray | None,
        arcs: np.ndarray | None = None,
        records: Sequence[VertexRecord] | None = None,
        t: int | None = None,
    ) -> Snapshot:
        self = object.__new__(cls)
        n = len(ids)
        ids = tuple(ids)
        if list(ids) != sorted(ids) or len(set(ids)) != n:
            raise ValueError("snapshot ids must be unique and ascending")
        e = np.asarray(edges if edges is not None else np.empty((0, 2)), dtype=np.int64).reshape(-1, 2)
        if len(e):
            if (e[:, 0] == e[:, 1]).any():
                raise ValueError("self-loop in snapshot edges")
            e = np.sort(e, axis=1)
            order = np.lexsort((e[:, 1], e[:, 0]))
            e = e[order]
            if (np.diff(e, axis=0) == 0).all(axis=1).any():
                raise ValueError("duplicate edge in snapshot")
        a = np.asarray(arcs if arcs is not None else np.empty((0, 2)), dtype=np.int64).reshape(-1, 2)
        if len(a):
            a = a[np.lexsort((a[:, 1], a[:, 0]))]
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        indices = dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        if records is not None:
            records = tuple(records)
            if len(records) != n:
                raise ValueError("records length does not match ids")
            detect = np.array([r.detect_day for r in records], dtype=np.int64)
        else:
            detect = None
        for arr in (e, a, indptr, indices) + ((detect,) if detect is not None else ()):
            arr.setflags(write=False)
        for name, value in (
            ("t", t),
            ("ids", ids),
            ("records", records),
            ("edges", e),
            ("arcs", a),
            ("indptr", indptr),
            ("indices", indices),
            ("detect_day", detect),
            ("_index", None),
        ):
            object.__setattr__(self, name, value)
        return self

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        arcs: Iterable[tuple[int, int]] = (),
        ids: Sequence[str] | None = None,
        records: Sequence[VertexRecord] | None = None,
        t: int | None = None,
    ) -> Snapshot:
        """Build from integer-indexed edges; default ids are zero-padded indices."""
        if ids is None:
            width = max(1, len(str(max(n - 1, 0))))
            ids = [f"{i:0{width}d}" for i in range(n)]
        return cls.from_arrays(ids, np.array(list(edges), dtype=np.int64), np.array(list(arcs), dtype=np.int64), records, t)

    def __setattr__(self, name, value):
        raise AttributeError("Snapshot is immutable")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return f"Snapshot(t={self.t}, |V|={self.n}, |E|={self.m}, arcs={len(self.arcs)})"

    def index_of(self, vid: str) -> int:
        if self._index is None:
            object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.ids)})
        return self._index[vid]

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_out_degrees(self) -> tuple[np.ndarray, np.ndarray]:
        """In- and out-degree of every vertex in the infection graph."""
        indeg = np.bincount(self.arcs[:, 1], minlength=self.n) if len(self.arcs) else np.zeros(self.n, np.int64)
        outdeg = np.bincount(self.arcs[:, 0], minlength=self.n) if len(self.arcs) else np.zeros(self.n, np.int64)
        return indeg, outdeg

    def adjacency(self):
        """Sparse symmetric 0/1 adjacency matrix (CSR, float64)."""
        from scipy.sparse import csr_matrix

        data = np.ones(len(self.indices), dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def subgraph(self, vertices: Sequence[int] | np.ndarray) -> Snapshot:
        """Induced subgraph on the given vertex indices (contact edges and arcs)."""
        keep = np.unique(np.asarray(vertices, dtype=np.int64))
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        e = remap[self.edges]
        e = e[(e >= 0).all(axis=1)] if len(e) else e
        a = remap[self.arcs]
        a = a[(a >= 0).all(axis=1)] if len(a) else a
        recs = tuple(self.records[i] for i in keep) if self.records is not None else None
        return Snapshot.from_arrays(tuple(self.ids[i] for i in keep), e, a, recs, self.t)

    def with_edges(self, edges: np.ndarray, arcs: np.ndarray | None = None) -> Snapshot:
        """Same vertices and attributes, different edge set."""
        return Snapshot.from_arrays(self.ids, edges, arcs, self.records, self.t)

    def edge_ids(self) -> list[tuple[str, str]]:
        return [(self.ids[i], self.ids[j]) for i, j in self.edges]


def snapshot_at(g: TemporalGraph, t: int) -> Snapshot:
    return g.snapshot_at(t)


def snapshot_schedule(g: TemporalGraph, start_day: int, end_day: int, step_days: int) -> list[Snapshot]:
    return g.snapshot_schedule(start_day, end_day, step_days)


# -- CSV I/O -----------------------------------------------------------------


def _opt_int(text: str, name: str, path, line) -> int | None:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"field {name!r}: expected integer, got {text!r}", path, line) from None


def _opt_float(text: str, name: str, path, line) -> float | None:
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"field {name!r}: expected number, got {text!r}", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"field {name!r}: non-finite value {text!r}", path, line)
    return value


def _read_rows(path: Path, fields: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header", str(path), 1) from None
        header = [h.strip() for h in header]
        missing = [f for f in fields if f not in header]
        if missing:
            raise ParseError(f"header missing columns {missing}", str(path), 1)
        col = {f: header.index(f) for f in fields}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", str(path), line)
            yield line, {f: row[col[f]].strip() for f in fields}


def load(vertices_file: str | Path, edges_file: str | Path, epoch_date: date | None = None):
    """Read and validate a vertex/edge CSV pair.

    Returns
    -------
    (TemporalGraph, ValidationReport)

    Raises
    ------
    ParseError
        Malformed field, with file and line number.
    ValidationError
        Duplicate vertex, unknown endpoint, duplicate edge, self-loop or
        infection in-degree above one.
    """
    vpath, epath = Path(vertices_file), Path(edges_file)
    b = _Builder(str(vpath), str(epath))
    for line, r in _read_rows(vpath, VERTEX_FIELDS):
        try:
            detect = _opt_int(r["detect_day"], "detect_day", str(vpath), line)
            if detect is None:
                raise ParseError("field 'detect_day' is required", str(vpath), line)
            rec = VertexRecord(
                id=r["id"],
                detect_day=detect,
                group=Group(r["group"]),
                method=Method(r["method"]),
                province=r["province"],
                infect_day=_opt_int(r["infect_day"], "infect_day", str(vpath), line),
                age=_opt_float(r["age"], "age", str(vpath), line),
                contacts_declared=_opt_int(r["contacts_declared"], "contacts_declared", str(vpath), line),
                contacts_tested=_opt_int(r["contacts_tested"], "contacts_tested", str(vpath), line),
                contacts_positive=_opt_int(r["contacts_positive"], "contacts_positive", str(vpath), line),
            )
        except ParseError as exc:
            if exc.line is None:
                raise ParseError(str(exc), str(vpath), line) from None
            raise
        except ValueError as exc:
            raise ParseError(str(exc), str(vpath), line) from None
        b.add_vertex(rec, line)
    for line, r in _read_rows(epath, EDGE_FIELDS):
        try:
            rec = EdgeRecord(r["a"], r["b"], r["infection"] or None)
        except ValidationError as exc:
            raise ValidationError(str(exc), str(epath), line) from None
        except ParseError as exc:
            raise ParseError(str(exc), str(epath), line) from None
        b.add_edge(rec, line)
    g = TemporalGraph._from_builder(b, epoch_date)
    return g, g.report()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write(g: TemporalGraph, vertices_file: str | Path, edges_file: str | Path) -> None:
    """Write ``g`` in the CSV formats read by :func:`load`."""
    with open(vertices_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERTEX_FIELDS)
        for v in g.vertices.values():
            w.writerow(
                [
                    v.id,
                    v.detect_day,
                    _fmt(v.group),
                    _fmt(v.method),
                    v.province,
                    _fmt(v.infect_day),
                    _fmt(v.age),
                    _fmt(v.contacts_declared),
                    _fmt(v.contacts_tested),
                    _fmt(v.contacts_positive),
                ]
            )
    with open(edges_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_FIELDS)
        for e in g.edges:
            w.writerow([e.a, e.b, e.infection or ""])
