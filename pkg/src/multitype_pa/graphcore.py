"""Growth state of a multigraph whose edges carry one of ``N`` types.

No adjacency is stored. Each vertex keeps its generalized degree (a vector of
per-type edge counts) and every edge contributes both of its endpoints to a
flat endpoint array, globally and per type. Drawing a uniform position from
an endpoint array is a degree-proportional vertex draw.

Types are 0-based integers ``0..N-1``; vertex ids are dense integers in
birth order.
"""
from __future__ import annotations

import csv
import json
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

Degree = tuple[int, ...]
# (old endpoint vertex id, edge type) for every edge incident to the newborn
NewVertexBundle = list[tuple[int, int]]

DEFAULT_CAP = 256


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class InitialConfig:
    types: int
    vertex_count: int
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.types < 1:
            raise GraphError("at least one edge type is required")
        if self.vertex_count < 2:
            raise GraphError("initial configuration needs at least 2 vertices")
        seen = [0] * self.types
        for a, b, k in self.edges:
            if a == b:
                raise GraphError(f"loop forbidden: edge ({a}, {b})")
            if not (0 <= a < self.vertex_count and 0 <= b < self.vertex_count):
                raise GraphError(f"edge ({a}, {b}) references an unknown vertex")
            if not 0 <= k < self.types:
                raise GraphError(f"edge type {k} out of range for {self.types} types")
            seen[k] += 1
        for k, c in enumerate(seen):
            if c == 0:
                raise GraphError(f"type {k} has no initial edge")

    @classmethod
    def default(cls, types: int) -> "InitialConfig":
        """Two vertices joined by one parallel edge of every type."""
        return cls(types, 2, tuple((0, 1, k) for k in range(types)))

    @classmethod
    def path(cls, types: int, per_type: Iterable[int] | None = None) -> "InitialConfig":
        """A path (hence a tree) whose consecutive edges carry the given type counts."""
        counts = list(per_type) if per_type is not None else [1] * types
        if len(counts) != types:
            raise GraphError("per_type must list one count per type")
        seq = [k for k, c in enumerate(counts) for _ in range(c)]
        edges = tuple((i, i + 1, k) for i, k in enumerate(seq))
        return cls(types, len(seq) + 1, edges)

    def type_counts(self) -> list[int]:
        counts = [0] * self.types
        for _, _, k in self.edges:
            counts[k] += 1
        return counts


@dataclass
class DegreeCensus:
    """Counts of vertices per generalized degree, with degrees above ``cap`` pooled."""

    types: int
    n: int
    vertex_total: int
    cap: int
    entries: dict[Degree, int]
    overflow: int
    edge_counts: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    def proportions(self) -> dict[Degree, float]:
        return {d: c / self.vertex_total for d, c in self.entries.items()}

    def proportion(self, d: Degree) -> float:
        return self.entries.get(tuple(d), 0) / self.vertex_total

    def total_degree(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d, c in self.entries.items():
            out[sum(d)] = out.get(sum(d), 0) + c
        return out

    def header(self) -> dict:
        head = {
            "n": self.n,
            "vertices": self.vertex_total,
            "edges": list(self.edge_counts),
            "cap": self.cap,
            "overflow": self.overflow,
        }
        head.update(self.meta)
        return head

    def to_csv(self, path) -> None:
        cols = [f"d_{k + 1}" for k in range(self.types)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols + ["count", "proportion"])
            for d in sorted(self.entries, key=lambda d: (sum(d), d)):
                c = self.entries[d]
                w.writerow([*d, c, f"{c / self.vertex_total:.12g}"])

    @classmethod
    def from_csv(cls, path) -> "DegreeCensus":
        head, header, rows = read_table_csv(path)
        types = sum(1 for c in header if c.startswith("d_"))
        if "count" not in header:
            raise GraphError(f"{path}: not a census file (no count column)")
        ci = header.index("count")
        entries = {tuple(int(v) for v in r[:types]): int(r[ci]) for r in rows}
        meta = {k: v for k, v in head.items()
                if k not in ("n", "vertices", "edges", "cap", "overflow")}
        return cls(types, int(head.get("n", 0)), int(head["vertices"]),
                   int(head.get("cap", DEFAULT_CAP)), entries,
                   int(head.get("overflow", 0)), tuple(head.get("edges", ())), meta)


def read_table_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Read a CSV with an optional ``# {json}`` metadata first line."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    head = {}
    if text and text[0].startswith("#"):
        head = json.loads(text[0][1:].strip())
        text = text[1:]
    rows = list(csv.reader(text))
    if not rows:
        raise GraphError(f"{path}: empty table")
    return head, rows[0], [r for r in rows[1:] if r]


class MultiTypeGraph:
    """Evolving multigraph with typed edges.

    ``endpoints[i]`` and ``endpoint_types[i]`` give the vertex and the edge
    type at position ``i`` of the global endpoint array; ``type_endpoints[k]``
    lists the endpoints of the type-``k`` edges only.
    """

    def __init__(self, types: int, initial_vertices: int):
        self.types = types
        self.initial_vertices = initial_vertices
        self.n = 0
        self.degrees: list[list[int]] = [[0] * types for _ in range(initial_vertices)]
        self.endpoints = array("q")
        self.endpoint_types = array("q")
        self.type_endpoints = [array("q") for _ in range(types)]
        self.edge_type_counts = [0] * types

    def __repr__(self) -> str:
        return (f"MultiTypeGraph(types={self.types}, n={self.n}, "
                f"vertices={self.num_vertices}, edges={self.edge_type_counts})")

    @property
    def num_vertices(self) -> int:
        return len(self.degrees)

    @property
    def num_edges(self) -> int:
        return len(self.endpoints) // 2

    def _add_edge(self, a: int, b: int, k: int) -> None:
        self.degrees[a][k] += 1
        self.degrees[b][k] += 1
        self.endpoints.append(a)
        self.endpoints.append(b)
        self.endpoint_types.append(k)
        self.endpoint_types.append(k)
        tk = self.type_endpoints[k]
        tk.append(a)
        tk.append(b)
        self.edge_type_counts[k] += 1

    def apply_step(self, bundle: NewVertexBundle) -> "MultiTypeGraph":
        """Add the newborn vertex and its edges; the bundle lists ``(old vertex, type)``."""
        v = len(self.degrees)
        for w, k in bundle:
            if not 0 <= w < v:
                raise GraphError(f"unknown endpoint id {w}")
            if not 0 <= k < self.types:
                raise GraphError(f"unknown edge type {k}")
        self.degrees.append([0] * self.types)
        for w, k in bundle:
            self._add_edge(w, v, k)
        self.n += 1
        return self

    def degree(self, v: int) -> Degree:
        return tuple(self.degrees[v])

    def degree_array(self) -> np.ndarray:
        return np.array(self.degrees, dtype=np.int64).reshape(-1, self.types)

    def edge_type_proportions(self) -> np.ndarray:
        total = self.num_edges
        if total == 0:
            raise GraphError("graph has no edges")
        return np.asarray(self.edge_type_counts, dtype=float) / total

    def degree_census(self, cap: int = DEFAULT_CAP) -> DegreeCensus:
        if cap < 0:
            raise GraphError("cap must be nonnegative")
        deg = self.degree_array()
        keep = deg.sum(axis=1) <= cap
        entries: dict[Degree, int] = {}
        if keep.any():
            rows, counts = np.unique(deg[keep], axis=0, return_counts=True)
            entries = {tuple(int(x) for x in r): int(c) for r, c in zip(rows, counts)}
        return DegreeCensus(self.types, self.n, self.num_vertices, cap, entries,
                            int((~keep).sum()), tuple(self.edge_type_counts))

    def total_degree_census(self, cap: int = DEFAULT_CAP) -> dict[int, int]:
        total = self.degree_array().sum(axis=1)
        counts = np.bincount(total[total <= cap])
        return {d: int(c) for d, c in enumerate(counts) if c}

    def marginal_census(self, k: int) -> dict[int, int]:
        """Number of vertices per type-``k`` degree."""
        counts = np.bincount(self.degree_array()[:, k])
        return {l: int(c) for l, c in enumerate(counts) if c}

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if the stored arrays disagree with the degrees."""
        deg = self.degree_array()
        V = self.num_vertices
        assert V == self.initial_vertices + self.n
        assert len(self.endpoints) == len(self.endpoint_types)
        for k in range(self.types):
            tk = np.frombuffer(self.type_endpoints[k], dtype=np.int64)
            assert len(tk) == 2 * self.edge_type_counts[k]
            assert deg[:, k].sum() == 2 * self.edge_type_counts[k]
            assert np.array_equal(np.bincount(tk, minlength=V), deg[:, k])
            glob = np.frombuffer(self.endpoints, dtype=np.int64)
            gtypes = np.frombuffer(self.endpoint_types, dtype=np.int64)
            assert np.array_equal(np.bincount(glob[gtypes == k], minlength=V), deg[:, k])
        assert deg.sum() == 2 * self.num_edges == 2 * sum(self.edge_type_counts)

    def copy(self) -> "MultiTypeGraph":
        g = MultiTypeGraph(self.types, self.initial_vertices)
        g.n = self.n
        g.degrees = [list(r) for r in self.degrees]
        g.endpoints = array("q", self.endpoints)
        g.endpoint_types = array("q", self.endpoint_types)
        g.type_endpoints = [array("q", t) for t in self.type_endpoints]
        g.edge_type_counts = list(self.edge_type_counts)
        return g

    def save(self, path) -> None:
        """Write a checkpoint (``.npz``)."""
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                meta=np.array([self.types, self.initial_vertices, self.n], dtype=np.int64),
                endpoints=np.frombuffer(self.endpoints, dtype=np.int64),
                endpoint_types=np.frombuffer(self.endpoint_types, dtype=np.int64),
            )

    @classmethod
    def load(cls, path) -> "MultiTypeGraph":
        with np.load(path) as z:
            types, s, n = (int(x) for x in z["meta"])
            ends, etypes = z["endpoints"], z["endpoint_types"]
        g = cls(types, s)
        g.degrees = [[0] * types for _ in range(s + n)]
        for i in range(0, len(ends), 2):
            g._add_edge(int(ends[i]), int(ends[i + 1]), int(etypes[i]))
        g.n = n
        return g


def init_graph(config: InitialConfig) -> MultiTypeGraph:
    g = MultiTypeGraph(config.types, config.vertex_count)
    for a, b, k in config.edges:
        g._add_edge(a, b, k)
    return g
