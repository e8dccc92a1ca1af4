"""Growth laws: the generalized Barabasi-Albert model (BA) and the model of
independent edges (IE), plus the growth loop and a Monte-Carlo auditor for
one-step transition probabilities.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .graphcore import (
    DEFAULT_CAP,
    DegreeCensus,
    Degree,
    InitialConfig,
    MultiTypeGraph,
    NewVertexBundle,
    init_graph,
)
from .rng import RandomStream

PMF_TOL = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class BatchDistribution:
    """Law of the number of edges a newborn vertex sends (BA model).

    Every kind is stored as a finite pmf over positive integers, so
    expectations over it are exact finite sums.
    """

    kind: str
    values: tuple[int, ...]
    probs: tuple[float, ...]
    params: tuple = ()

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ModelError("batch pmf must be nonempty with one probability per value")
        if any(v < 1 or int(v) != v for v in self.values):
            raise ModelError("batch sizes must be positive integers")
        if any(p < 0 for p in self.probs):
            raise ModelError("batch probabilities must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > PMF_TOL:
            raise ModelError(f"batch pmf sums to {math.fsum(self.probs)!r}, not 1")
        cum = np.cumsum(self.probs).tolist()
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def constant(cls, m: int) -> "BatchDistribution":
        return cls("constant", (int(m),), (1.0,), (int(m),))

    @classmethod
    def categorical(cls, pmf: dict[int, float]) -> "BatchDistribution":
        items = sorted((int(k), float(p)) for k, p in pmf.items() if p > 0)
        return cls("categorical", tuple(k for k, _ in items), tuple(p for _, p in items))

    @classmethod
    def shifted_poisson(cls, rate: float, max_value: int | None = None) -> "BatchDistribution":
        """``1 + Poisson(rate)``, truncated at ``max_value`` and renormalized."""
        if rate < 0:
            raise ModelError("poisson rate must be nonnegative")
        if max_value is None:
            max_value = 1 + int(rate + 12 * math.sqrt(rate) + 20)
        ks = range(max_value)
        logw = [k * math.log(rate) - rate - math.lgamma(k + 1) if rate > 0 else
                (0.0 if k == 0 else -math.inf) for k in ks]
        w = [math.exp(x) for x in logw]
        total = math.fsum(w)
        values = tuple(k + 1 for k, x in zip(ks, w) if x > 0)
        probs = [x / total for x in w if x > 0]
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        return cls("poisson", values, tuple(probs), (rate, max_value))

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    @property
    def max_value(self) -> int:
        return max(self.values)

    def prob(self, m: int) -> float:
        try:
            return self.probs[self.values.index(m)]
        except ValueError:
            return 0.0

    def sample(self, stream: RandomStream) -> int:
        if len(self.values) == 1:
            return self.values[0]
        return self.values[bisect.bisect_right(self._cum, stream.uniform())]

    def sample_many(self, generator: np.random.Generator, size: int) -> np.ndarray:
        if len(self.values) == 1:
            return np.full(size, self.values[0], dtype=np.int64)
        return generator.choice(np.asarray(self.values, dtype=np.int64), size=size,
                                p=np.asarray(self.probs))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.values[0]}
        if self.kind == "poisson":
            return {"kind": "poisson", "value": self.params[0], "max": self.params[1]}
        return {"kind": "categorical",
                "pmf": {str(v): p for v, p in zip(self.values, self.probs)}}


@dataclass(frozen=True)
class RateDistribution:
    """Law of the Poisson intensity of a newborn vertex (IE model)."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        p = self.params
        if self.kind == "constant":
            ok = len(p) == 1 and p[0] > 0
        elif self.kind == "gamma":
            ok = len(p) == 2 and p[0] > 0 and p[1] > 0
        elif self.kind == "uniform":
            ok = len(p) == 2 and 0 < p[0] < p[1]
        else:
            raise ModelError(f"unknown rate kind {self.kind!r}")
        if not ok:
            raise ModelError(f"invalid parameters {p} for rate kind {self.kind!r}")

    @classmethod
    def constant(cls, mu: float) -> "RateDistribution":
        return cls("constant", (float(mu),))

    @classmethod
    def gamma(cls, shape: float, scale: float) -> "RateDistribution":
        return cls("gamma", (float(shape), float(scale)))

    @classmethod
    def uniform(cls, a: float, b: float) -> "RateDistribution":
        return cls("uniform", (float(a), float(b)))

    @property
    def mean(self) -> float:
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "gamma":
            return p[0] * p[1]
        return 0.5 * (p[0] + p[1])

    @property
    def variance(self) -> float:
        p = self.params
        if self.kind == "constant":
            return 0.0
        if self.kind == "gamma":
            return p[0] * p[1] ** 2
        return (p[1] - p[0]) ** 2 / 12.0

    def scaled(self, c: float) -> "RateDistribution":
        """Law of ``c * lambda`` for ``c > 0``."""
        p = self.params
        if self.kind == "gamma":
            return RateDistribution("gamma", (p[0], p[1] * c))
        return RateDistribution(self.kind, tuple(x * c for x in p))

    def sample(self, stream: RandomStream) -> float:
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "gamma":
            return float(stream.generator.gamma(p[0], p[1]))
        return p[0] + (p[1] - p[0]) * stream.uniform()

    def sample_many(self, generator: np.random.Generator, size: int) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full(size, p[0])
        if self.kind == "gamma":
            return generator.gamma(p[0], p[1], size)
        return generator.uniform(p[0], p[1], size)

    def to_dict(self) -> dict:
        names = {"constant": ("mu",), "gamma": ("shape", "scale"), "uniform": ("a", "b")}
        return {"kind": self.kind, **dict(zip(names[self.kind], self.params))}


@dataclass
class ModelSpec:
    kind: str
    types: int
    batch: Optional[BatchDistribution] = None
    rate: Optional[RateDistribution] = None
    initial: Optional[InitialConfig] = None
    seed: int = 0
    steps: int = 10_000
    census_schedule: tuple[int, ...] = ()
    cap: int = DEFAULT_CAP
    # deterministic per-step overrides of M_n / lambda_n, keyed by step index
    batch_schedule: Optional[Callable[[int], int]] = None
    rate_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in ("ba", "ie"):
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.types < 1:
            raise ModelError("types must be >= 1")
        if self.kind == "ba" and self.batch is None:
            if self.batch_schedule is None:
                raise ModelError("BA model needs a batch distribution")
        if self.kind == "ie" and self.rate is None:
            if self.rate_schedule is None:
                raise ModelError("IE model needs a rate distribution")
        if self.kind == "ba" and self.rate is not None:
            raise ModelError("BA model takes a batch distribution, not a rate")
        if self.kind == "ie" and self.batch is not None:
            raise ModelError("IE model takes a rate distribution, not a batch")
        if self.initial is None:
            self.initial = InitialConfig.default(self.types)
        if self.initial.types != self.types:
            raise ModelError("initial configuration has a different number of types")
        if self.steps < 0:
            raise ModelError("steps must be nonnegative")

    def batch_size(self, step: int, stream: RandomStream) -> int:
        if self.batch_schedule is not None:
            return int(self.batch_schedule(step))
        return self.batch.sample(stream)

    def intensity(self, step: int, stream: RandomStream) -> float:
        if self.rate_schedule is not None:
            return float(self.rate_schedule(step))
        return self.rate.sample(stream)

    def to_dict(self) -> dict:
        out = {
            "model": self.kind,
            "types": self.types,
            "steps": self.steps,
            "seed": self.seed,
            "initial": {"edges": [list(e) for e in self.initial.edges],
                        "vertices": self.initial.vertex_count},
            "census": {"schedule": list(self.census_schedule), "cap": self.cap},
        }
        if self.batch is not None:
            out["batch"] = self.batch.to_dict()
        if self.rate is not None:
            out["rate"] = self.rate.to_dict()
        return out


def sample_batch(dist: BatchDistribution, stream: RandomStream) -> int:
    return dist.sample(stream)


def ba_step(graph: MultiTypeGraph, m: int, stream: RandomStream) -> NewVertexBundle:
    """Draw the ``m`` edges of a BA newborn from the frozen state ``graph``.

    Each endpoint is a uniform position of the global endpoint array (degree
    proportional); each edge type is drawn from the endpoint's own type mix.
    """
    ends = graph.endpoints
    L = len(ends)
    if L == 0:
        raise ModelError("graph has no edges")
    N = graph.types
    degs = graph.degrees
    bundle = []
    for _ in range(m):
        w = ends[stream.below(L)]
        if N == 1:
            bundle.append((w, 0))
            continue
        row = degs[w]
        x = stream.uniform() * sum(row)
        k = 0
        acc = row[0]
        while k < N - 1 and x >= acc:
            k += 1
            acc += row[k]
        bundle.append((w, k))
    return bundle


def ie_step(graph: MultiTypeGraph, lam: float, stream: RandomStream) -> NewVertexBundle:
    """Draw the edges of an IE newborn from the frozen state ``graph``.

    Per type, a Poisson total with mean ``lam * |E^(k)| / |E|`` is split over
    uniform positions of the type-k endpoint array. By Poisson thinning this
    equals independent Poisson(lam * deg_k(w) / (2|E|)) counts per vertex.
    """
    E = graph.num_edges
    if E == 0:
        raise ModelError("graph has no edges")
    counts = graph.edge_type_counts
    deltas = stream.poisson([lam * c / E for c in counts])
    bundle = []
    for k, dk in enumerate(deltas.tolist()):
        if dk:
            tk = graph.type_endpoints[k]
            Lk = len(tk)
            for _ in range(dk):
                bundle.append((tk[stream.below(Lk)], k))
    return bundle


def ie_step_per_vertex(graph: MultiTypeGraph, lam: float,
                       generator: np.random.Generator) -> NewVertexBundle:
    """Literal per-vertex IE step: O(|V| N) Poisson draws. Reference only."""
    deg = graph.degree_array()
    counts = generator.poisson(lam * deg / (2 * graph.num_edges))
    return [(int(w), int(k)) for w, k in zip(*np.nonzero(counts))
            for _ in range(counts[w, k])]


@dataclass
class Snapshot:
    step: int
    census: DegreeCensus
    zeta: np.ndarray
    edges: int


@dataclass
class Trajectory:
    spec: ModelSpec
    graph: MultiTypeGraph
    snapshots: list[Snapshot] = field(default_factory=list)
    replica: int = 0

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def edges_per_step(self) -> float:
        return self.graph.num_edges / max(self.graph.n, 1)


def grow(spec: ModelSpec, steps: int | None = None,
         census_schedule=None, cap: int | None = None,
         replica: int = 0) -> Trajectory:
    """Grow a graph from ``spec.initial`` for ``steps`` steps.

    The run is a pure function of ``(spec, replica)``: randomness comes from
    the stream ``(spec.seed, replica)``. A census and the edge-type
    proportions are recorded at every scheduled step and at the last step.
    """
    steps = spec.steps if steps is None else steps
    if steps < 1:
        raise ModelError("steps must be >= 1")
    cap = spec.cap if cap is None else cap
    schedule = set(spec.census_schedule if census_schedule is None else census_schedule)
    schedule.add(steps)

    stream = RandomStream(spec.seed, replica)
    graph = init_graph(spec.initial)
    traj = Trajectory(spec, graph, replica=replica)
    is_ba = spec.kind == "ba"
    for i in range(1, steps + 1):
        if is_ba:
            bundle = ba_step(graph, spec.batch_size(i, stream), stream)
        else:
            bundle = ie_step(graph, spec.intensity(i, stream), stream)
        graph.apply_step(bundle)
        if i in schedule:
            traj.snapshots.append(Snapshot(i, graph.degree_census(cap),
                                           graph.edge_type_proportions(), graph.num_edges))
    return traj


@dataclass
class AssumptionProbeReport:
    """Monte-Carlo estimates of the scaled one-step transition probabilities.

    ``u_hat`` estimates n(1 - P(no new edge)) for a vertex of degree ``d``;
    ``r_hat[k]`` estimates n P(exactly one new edge, of type k) for a vertex
    of degree ``d - e_k``; ``q_hat`` estimates P(newborn has degree d);
    ``multi_hat`` estimates n P(two or more new edges) for a vertex of degree ``d``.
    """

    d: Degree
    n: int
    samples: int
    u_hat: float
    u_se: float
    r_hat: dict[int, float]
    r_se: dict[int, float]
    q_hat: float
    q_se: float
    multi_hat: float
    multi_se: float
    synthetic: list[Degree] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "d": list(self.d), "n": self.n, "samples": self.samples,
            "u_hat": self.u_hat, "u_se": self.u_se,
            "r_hat": {str(k): v for k, v in self.r_hat.items()},
            "r_se": {str(k): v for k, v in self.r_se.items()},
            "q_hat": self.q_hat, "q_se": self.q_se,
            "multi_hat": self.multi_hat, "multi_se": self.multi_se,
            "synthetic": [list(s) for s in self.synthetic],
        }


def _binomial(hits: np.ndarray, scale: float) -> tuple[float, float]:
    p = float(hits.mean())
    return scale * p, scale * math.sqrt(p * (1 - p) / hits.size)


def probe_assumptions(graph: MultiTypeGraph, spec: ModelSpec, d, samples: int,
                      stream: RandomStream) -> AssumptionProbeReport:
    """Simulate ``samples`` independent next steps from the frozen ``graph``.

    Vertices of degree ``d`` and ``d - e_k`` are designated among existing
    vertices when available; missing ones are added as synthetic vertices
    whose half-edges join the endpoint arrays for the duration of the probe.
    """
    if samples < 1:
        raise ModelError("samples must be >= 1")
    N = graph.types
    d = tuple(int(x) for x in d)
    if len(d) != N or min(d) < 0:
        raise ModelError(f"degree {d} is not a valid {N}-type degree")
    n = graph.n + 1
    gen = stream.generator

    targets = [d] + [tuple(x - (j == k) for j, x in enumerate(d)) for k in range(N) if d[k] >= 1]
    deg = graph.degree_array()
    V = deg.shape[0]
    ids, synth = [], []
    for t in targets:
        match = np.flatnonzero((deg == np.asarray(t)).all(axis=1))
        match = [int(v) for v in match if int(v) not in ids]
        if match:
            ids.append(match[0])
        else:
            ids.append(V + len(synth))
            synth.append(t)

    glob = np.frombuffer(graph.endpoints, dtype=np.int64)
    gtyp = np.frombuffer(graph.endpoint_types, dtype=np.int64)
    per_type = [np.frombuffer(t, dtype=np.int64) for t in graph.type_endpoints]
    if synth:
        ev = [np.full(row[k], V + j, dtype=np.int64) for j, row in enumerate(synth) for k in range(N)]
        et = [np.full(row[k], k, dtype=np.int64) for row in synth for k in range(N)]
        glob = np.concatenate([glob, *ev])
        gtyp = np.concatenate([gtyp, *et])
        per_type = [np.concatenate([per_type[k]] + [np.full(row[k], V + j, dtype=np.int64)
                                                    for j, row in enumerate(synth)])
                    for k in range(N)]
        deg = np.vstack([deg, np.asarray(synth, dtype=np.int64)])

    if spec.kind == "ba":
        if spec.batch_schedule is not None:
            m = np.full(samples, int(spec.batch_schedule(n)), dtype=np.int64)
        else:
            m = spec.batch.sample_many(gen, samples)
        owner = np.repeat(np.arange(samples), m)
        w = glob[gen.integers(0, glob.size, owner.size)]
        if N == 1:
            etype = np.zeros(owner.size, dtype=np.int64)
        else:
            x = gen.random(owner.size) * deg.sum(axis=1)[w]
            cum = np.cumsum(deg, axis=1)[w]
            etype = np.minimum((x[:, None] >= cum).sum(axis=1), N - 1)
    else:
        if spec.rate_schedule is not None:
            lam = np.full(samples, float(spec.rate_schedule(n)))
        else:
            lam = spec.rate.sample_many(gen, samples)
        owners, ws, ks = [], [], []
        for k in range(N):
            cnt = gen.poisson(lam * per_type[k].size / glob.size)
            o = np.repeat(np.arange(samples), cnt)
            owners.append(o)
            ws.append(per_type[k][gen.integers(0, per_type[k].size, o.size)])
            ks.append(np.full(o.size, k, dtype=np.int64))
        owner, w, etype = np.concatenate(owners), np.concatenate(ws), np.concatenate(ks)

    def counts(mask=None):
        o, t = (owner, etype) if mask is None else (owner[mask], etype[mask])
        return np.bincount(o * N + t, minlength=samples * N).reshape(samples, N)

    hits_d = counts(w == ids[0]).sum(axis=1)
    u_hat, u_se = _binomial(hits_d >= 1, n)
    multi_hat, multi_se = _binomial(hits_d >= 2, n)
    q_hat, q_se = _binomial((counts() == np.asarray(d)).all(axis=1), 1.0)

    r_hat, r_se = {}, {}
    ks_valid = [k for k in range(N) if d[k] >= 1]
    for k, vid in zip(ks_valid, ids[1:]):
        unit = np.zeros(N, dtype=np.int64)
        unit[k] = 1
        r_hat[k], r_se[k] = _binomial((counts(w == vid) == unit).all(axis=1), n)

    return AssumptionProbeReport(d, n, samples, u_hat, u_se, r_hat, r_se,
                                 q_hat, q_se, multi_hat, multi_se, synth)
