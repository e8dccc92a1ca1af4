"""Comparison of simulated censuses against limit laws, tail-exponent fits,
Dirichlet checks on edge-type proportions, and replica ensembles.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .graphcore import DegreeCensus
from .models import ModelSpec, grow
from .theory import TheoryTable, ba_table, ie_table


class StatsError(ValueError):
    pass


@dataclass
class ComparisonReport:
    sup_distance: float
    tv_partial: float
    ignored_mass: float
    n: int
    cap: int
    zeta: tuple[float, ...]
    support: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            **self.extra,
            "n": self.n,
            "cap": self.cap,
            "sup_distance": self.sup_distance,
            "tv_partial": self.tv_partial,
            "ignored_mass": self.ignored_mass,
            "support": self.support,
            "zeta": list(self.zeta),
        }


def distribution_distance(p: dict, q: dict) -> tuple[float, float]:
    """Sup and half-L1 distance over the union of the two supports."""
    keys = set(p) | set(q)
    diffs = [abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys]
    if not diffs:
        return 0.0, 0.0
    return max(diffs), 0.5 * math.fsum(diffs)


def _restrict(values: dict, dmax: int | None) -> dict:
    if dmax is None:
        return dict(values)
    return {d: v for d, v in values.items() if sum(d) <= dmax}


def compare(census: DegreeCensus, table, dmax: int | None = None) -> ComparisonReport:
    """Distances between empirical proportions and a theory table.

    ``table`` may be a :class:`TheoryTable` or another census. Degrees with
    total above ``dmax`` (default: the smaller of the two tabulation caps) are
    left out; the census mass above its cap is reported as ``ignored_mass``.
    """
    if getattr(table, "marginal", False):
        raise StatsError("cannot compare a joint census with a marginal table")
    if table.types != census.types:
        raise StatsError(f"shape mismatch: census has {census.types} types, "
                         f"table has {table.types}")
    caps = [census.cap]
    if isinstance(table, TheoryTable):
        caps.append(max(sum(d) for d in table.values))
        zeta = table.zeta
    else:
        caps.append(table.cap)
        zeta = tuple(census.meta.get("zeta", ()))
    limit = min(caps) if dmax is None else min(dmax, *caps)
    emp = _restrict(census.proportions(), limit)
    theo = _restrict(table.proportions(), limit)
    sup, tv = distribution_distance(emp, theo)
    return ComparisonReport(sup, tv, census.overflow / census.vertex_total, census.n,
                            limit, tuple(zeta), len(set(emp) | set(theo)))


def fit_tail_exponent(pairs, l_min: float, l_max: float) -> tuple[float, float]:
    """OLS slope of log(value) on log(l) over ``l_min <= l <= l_max``, with its standard error."""
    pts = [(l, v) for l, v in pairs if l_min <= l <= l_max]
    if any(v <= 0 for _, v in pts):
        raise StatsError("nonpositive values in the fitting range")
    if len(pts) < 10:
        raise StatsError(f"need at least 10 points in range, got {len(pts)}")
    x = np.log([float(l) for l, _ in pts])
    y = np.log([float(v) for _, v in pts])
    fit = sps.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def dirichlet_marginal_test(zeta_samples, e0_counts) -> list[tuple[float, float]]:
    """KS test of each coordinate against Beta(e0_k, sum_{j != k} e0_j).

    Returns ``(statistic, p_value)`` per type, using the asymptotic
    Kolmogorov distribution.
    """
    z = np.asarray(zeta_samples, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] < 50:
        raise StatsError("need at least 50 samples")
    e0 = [int(c) for c in e0_counts]
    if min(e0) < 1:
        raise StatsError("initial type counts must be positive")
    total = sum(e0)
    out = []
    for k, a in enumerate(e0):
        b = total - a
        cdf = sps.uniform.cdf if (a, b) == (1, 1) else sps.beta(a, b).cdf
        res = sps.kstest(z[:, k], cdf, method="asymp")
        out.append((float(res.statistic), float(res.pvalue)))
    return out


@dataclass
class ReplicaResult:
    replica: int
    zeta: np.ndarray
    edges: int
    steps: int
    report: ComparisonReport | None = None


@dataclass
class EnsembleResult:
    spec: ModelSpec
    results: list[ReplicaResult]

    @property
    def replicas(self) -> int:
        return len(self.results)

    @property
    def zetas(self) -> np.ndarray:
        return np.vstack([r.zeta for r in self.results])

    @property
    def mean_zeta(self) -> np.ndarray:
        return self.zetas.mean(axis=0)

    @property
    def se_zeta(self) -> np.ndarray:
        if self.replicas < 2:
            return np.full(self.spec.types, math.nan)
        return self.zetas.std(axis=0, ddof=1) / math.sqrt(self.replicas)

    def summary(self) -> dict:
        reports = [r.report for r in self.results if r.report is not None]
        out = {
            "spec": self.spec.to_dict(),
            "replicas": self.replicas,
            "mean_zeta": self.mean_zeta.tolist(),
            "se_zeta": self.se_zeta.tolist(),
        }
        if reports:
            sup = np.array([r.sup_distance for r in reports])
            out["mean_sup_distance"] = float(sup.mean())
            out["max_sup_distance"] = float(sup.max())
        return out

    def to_json(self, path) -> None:
        rows = []
        for r in self.results:
            row = {"replica": r.replica, "seed": self.spec.seed, "steps": r.steps,
                   "edges": r.edges, "zeta": r.zeta.tolist()}
            if r.report is not None:
                row.update({k: v for k, v in r.report.to_dict().items() if k != "zeta"})
            rows.append(row)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"summary": self.summary(), "replicas": rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def zeta_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replica"] + [f"zeta_{k + 1}" for k in range(self.spec.types)])
            for r in self.results:
                w.writerow([r.replica] + [f"{x:.12g}" for x in r.zeta])


def _run_replica(args) -> ReplicaResult:
    spec, replica, compare_dmax = args
    try:
        traj = grow(spec, census_schedule=(), replica=replica)
    except Exception as exc:
        raise RuntimeError(f"replica {replica} failed: {exc}") from exc
    snap = traj.final
    report = None
    if compare_dmax is not None:
        zeta = snap.zeta.tolist()
        if spec.kind == "ba" and spec.batch is not None:
            table = ba_table(spec.batch, zeta, compare_dmax)
        elif spec.kind == "ie" and spec.rate is not None:
            table = ie_table(spec.rate, zeta, compare_dmax)
        else:
            table = None
        if table is not None:
            report = compare(snap.census, table, compare_dmax)
    return ReplicaResult(replica, snap.zeta, snap.edges, snap.step, report)


def ensemble_run(spec: ModelSpec, replicas: int, parallelism: int = 1,
                 compare_dmax: int | None = None) -> EnsembleResult:
    """Run ``replicas`` independent growths; replica ``r`` uses stream ``(spec.seed, r)``.

    Results are ordered by replica index and do not depend on ``parallelism``.
    """
    if replicas < 1:
        raise StatsError("replicas must be >= 1")
    jobs = [(spec, r, compare_dmax) for r in range(replicas)]
    if parallelism <= 1 or replicas == 1:
        results = [_run_replica(j) for j in jobs]
    else:
        if spec.batch_schedule is not None or spec.rate_schedule is not None:
            raise StatsError("schedule hooks are not picklable; use parallelism=1")
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_replica, jobs, chunksize=max(1, replicas // (4 * parallelism))))
    return EnsembleResult(spec, results)
