"""Limit degree distributions of the multi-type growth models.

The joint law x(d) over generalized degrees solves a recurrence on the
lattice of nonnegative integer vectors in which x(d) depends only on
x(d - e_k); tables are filled in order of total degree. The edge-type limits
zeta enter as inputs: they are random, so tables are evaluated either at a
run's realized proportions or at a hypothesized vector.
"""
from __future__ import annotations

import csv
import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .graphcore import Degree, read_table_csv
from .models import BatchDistribution, RateDistribution

ZETA_TOL = 1e-9


class TheoryError(ValueError):
    pass


def compositions(total: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first, *rest)


def lattice_order(dmax: int, parts: int):
    """Every degree with total at most ``dmax``, by total then lexicographic."""
    for D in range(dmax + 1):
        yield from compositions(D, parts)


def _check_zeta(zeta: Sequence[float]) -> tuple[float, ...]:
    z = tuple(float(x) for x in zeta)
    if not z or min(z) < 0 or abs(math.fsum(z) - 1) > ZETA_TOL:
        raise TheoryError(f"zeta must be a probability vector, got {z}")
    return z


def _log_weight(d: Degree, zeta: Sequence[float]) -> float:
    """log of prod zeta_k^d_k / prod d_k!, -inf when a zero-probability type is used."""
    out = 0.0
    for dk, zk in zip(d, zeta):
        if dk:
            if zk == 0:
                return -math.inf
            out += dk * math.log(zk)
        out -= math.lgamma(dk + 1)
    return out


def x_general(d, u: Callable[[Degree], float], r: Callable[[int, Degree], float],
              q: Callable[[Degree], float]) -> float:
    """Solve x(d) = [sum_k r(k, d - e_k) x(d - e_k) + q(d)] / (u(d) + 1).

    x vanishes on any vector with a negative coordinate.
    """
    d = tuple(int(x) for x in d)
    if min(d) < 0:
        return 0.0
    memo: dict[Degree, float] = {}
    box = sorted(itertools.product(*(range(x + 1) for x in d)), key=lambda v: (sum(v), v))
    for v in box:
        denom = u(v) + 1
        if denom <= 0:
            raise TheoryError(f"u({v}) + 1 = {denom} is not positive")
        acc = q(v)
        for k, vk in enumerate(v):
            if vk:
                prev = v[:k] + (vk - 1,) + v[k + 1:]
                acc += r(k, prev) * memo[prev]
        memo[v] = acc / denom
    return memo[d]


def limit_u(d) -> float:
    return sum(d) / 2


def limit_r(k: int, prev) -> float:
    """Scaled limit of the probability that a vertex of degree ``prev`` gains one type-k edge."""
    return prev[k] / 2


def ba_newborn_prob(d, batch: BatchDistribution, zeta) -> float:
    """P(M = D) times the multinomial probability of the type split ``d``."""
    D = sum(d)
    pm = batch.prob(D)
    if pm == 0:
        return 0.0
    return pm * math.exp(math.lgamma(D + 1) + _log_weight(d, zeta))


def ie_newborn_prob(d, rate: RateDistribution, zeta_hat) -> float:
    lw = _log_weight(d, zeta_hat)
    if lw == -math.inf:
        return 0.0
    return math.exp(lw + log_poisson_weight(rate, sum(d)))


def _model_recurrence(d: Degree, memo: dict, newborn: float) -> float:
    D = sum(d)
    acc = 0.0
    for k, dk in enumerate(d):
        if dk:
            acc += (dk - 1) / (D + 2) * memo[d[:k] + (dk - 1,) + d[k + 1:]]
    return acc + 2 / (D + 2) * newborn


def _fill(points: Iterable[Degree], newborn: Callable[[Degree], float]) -> dict[Degree, float]:
    memo: dict[Degree, float] = {}
    for v in points:
        memo[v] = _model_recurrence(v, memo, newborn(v))
    return memo


def _box(d: Degree):
    return sorted(itertools.product(*(range(x + 1) for x in d)), key=lambda v: (sum(v), v))


def x_ba(d, batch: BatchDistribution, zeta) -> float:
    """Limit proportion of vertices with generalized degree ``d`` in the BA model."""
    d = tuple(int(x) for x in d)
    if min(d) < 0:
        return 0.0
    zeta = _check_zeta(zeta)
    if len(zeta) != len(d):
        raise TheoryError("zeta and d have different lengths")
    return _fill(_box(d), lambda v: ba_newborn_prob(v, batch, zeta))[d]


def x_ie(d, rate: RateDistribution, zeta_hat) -> float:
    """Limit proportion of vertices with generalized degree ``d`` in the IE model."""
    d = tuple(int(x) for x in d)
    if min(d) < 0:
        return 0.0
    zeta_hat = _check_zeta(zeta_hat)
    if len(zeta_hat) != len(d):
        raise TheoryError("zeta and d have different lengths")
    return _fill(_box(d), lambda v: ie_newborn_prob(v, rate, zeta_hat))[d]


@functools.lru_cache(maxsize=1)
def _gauss_legendre(points: int = 64):
    return np.polynomial.legendre.leggauss(points)


def log_poisson_weight(rate: RateDistribution, D: int) -> float:
    """log E(lambda^D exp(-lambda))."""
    if D < 0:
        raise TheoryError("D must be nonnegative")
    p = rate.params
    if rate.kind == "constant":
        mu = p[0]
        return D * math.log(mu) - mu
    if rate.kind == "gamma":
        shape, scale = p
        # D-th derivative of (1 - scale t)^(-shape) at t = -1
        return (math.lgamma(shape + D) - math.lgamma(shape) + D * math.log(scale)
                - (shape + D) * math.log1p(scale))
    if rate.kind == "uniform":
        a, b = p
        nodes, weights = _gauss_legendre()
        lam = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        logs = D * np.log(lam) - lam
        top = logs.max()
        # density 1/(b-a) cancels the Jacobian (b-a)/2
        return float(top + np.log(0.5 * np.dot(weights, np.exp(logs - top))))
    raise TheoryError(f"unsupported rate kind {rate.kind!r}")


def poisson_weight(rate: RateDistribution, D: int) -> float:
    """E(lambda^D exp(-lambda)), the D-th derivative of the MGF of lambda at -1."""
    return math.exp(log_poisson_weight(rate, D))


def _binomial_term(batch: BatchDistribution, l: int, z: float) -> float:
    """E[C(M, l) z^l (1 - z)^(M - l)], exact over the finite pmf."""
    total = 0.0
    for m, pm in zip(batch.values, batch.probs):
        if m >= l:
            total += pm * math.comb(m, l) * z ** l * (1 - z) ** (m - l)
    return total


def _poisson_term(rate: RateDistribution, l: int, z: float) -> float:
    """E[(lambda z)^l / l! exp(-lambda z)]."""
    if z == 0:
        return 1.0 if l == 0 else 0.0
    return math.exp(log_poisson_weight(rate.scaled(z), l) - math.lgamma(l + 1))


def _marginal(lmax: int, term: Callable[[int], float]) -> list[float]:
    xs, prev = [], 0.0
    for l in range(lmax + 1):
        prev = (l - 1) / (l + 2) * prev + 2 / (l + 2) * term(l)
        xs.append(prev)
    return xs


def marginal_table_ba(lmax: int, batch: BatchDistribution, zeta_k: float) -> list[float]:
    """Type-k degree law x_0..x_lmax in the BA model given the type-k edge share."""
    return _marginal(lmax, lambda l: _binomial_term(batch, l, zeta_k))


def marginal_table_ie(lmax: int, rate: RateDistribution, zeta_hat_k: float) -> list[float]:
    return _marginal(lmax, lambda l: _poisson_term(rate, l, zeta_hat_k))


def marginal_x_ba(l: int, batch: BatchDistribution, zeta_k: float) -> float:
    if l < 0:
        return 0.0
    return marginal_table_ba(l, batch, zeta_k)[l]


def marginal_x_ie(l: int, rate: RateDistribution, zeta_hat_k: float) -> float:
    if l < 0:
        return 0.0
    return marginal_table_ie(l, rate, zeta_hat_k)[l]


def total_degree_ba(Dmax: int, batch: BatchDistribution) -> list[float]:
    """Single-type total-degree law z_0..z_Dmax of the BA model."""
    return _marginal(Dmax, batch.prob)


def characteristic_exponent(a: dict[int, float], b: dict[int, float],
                            tol: float = 1e-12) -> tuple[float, float]:
    """Return ``(q, gamma)`` with sum_n a_n q^n = 1 and gamma = sum b_n q^n / sum n a_n q^n.

    The solution x_n of the associated recurrence behaves like C n^gamma q^-n,
    so for q = 1 the characteristic exponent is ``-gamma``.
    """
    if not a or any(v < 0 for v in a.values()) or any(n < 1 for n in a):
        raise TheoryError("a must have nonnegative coefficients on positive indices")
    support = [n for n, v in a.items() if v > 0]
    if not support or math.gcd(*support) != 1:
        raise TheoryError("gcd of the support of a must be 1")

    def f(x):
        return math.fsum(v * x ** n for n, v in a.items())

    lo, hi = 0.0, 1.0
    while f(hi) < 1:
        lo, hi = hi, hi * 2
        if hi > 1e12:
            raise TheoryError("no positive root found in the search bracket")
    q = hi
    if f(hi) != 1:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 1:
                lo = hi = mid
                break
            if fm < 1:
                lo = mid
            else:
                hi = mid
        q = 0.5 * (lo + hi)
    num = math.fsum(v * q ** n for n, v in b.items())
    den = math.fsum(n * v * q ** n for n, v in a.items())
    return q, num / den


def closed_form_ba_tree(d: int) -> float:
    """Classic single-type BA tree law 4 / (d (d+1) (d+2))."""
    if d <= 0:
        raise TheoryError("degree must be positive")
    return 4.0 / (d * (d + 1) * (d + 2))


@dataclass
class TheoryTable:
    """Tabulated limit law, joint (keys are degree tuples) or marginal (keys are ints)."""

    kind: str
    values: dict
    zeta: tuple[float, ...]
    inputs: dict = field(default_factory=dict)
    marginal: bool = False

    @property
    def partial_mass(self) -> float:
        return math.fsum(self.values.values())

    @property
    def types(self) -> int:
        return len(next(iter(self.values))) if not self.marginal else 1

    def proportions(self) -> dict:
        return dict(self.values)

    def header(self) -> dict:
        return {"theory": self.kind, "zeta": list(self.zeta), "marginal": self.marginal,
                "partial_mass": float(f"{self.partial_mass:.12g}"), **self.inputs}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            if self.marginal:
                w.writerow(["l", "value"])
                for l in sorted(self.values):
                    w.writerow([l, f"{self.values[l]:.12g}"])
            else:
                w.writerow([f"d_{k + 1}" for k in range(self.types)] + ["theory"])
                for d in sorted(self.values, key=lambda d: (sum(d), d)):
                    w.writerow([*d, f"{self.values[d]:.12g}"])

    @classmethod
    def from_csv(cls, path) -> "TheoryTable":
        head, header, rows = read_table_csv(path)
        if header[:1] == ["l"]:
            values = {int(r[0]): float(r[1]) for r in rows}
            marginal = True
        else:
            types = sum(1 for c in header if c.startswith("d_"))
            col = header.index("theory")
            values = {tuple(int(x) for x in r[:types]): float(r[col]) for r in rows}
            marginal = False
        inputs = {k: v for k, v in head.items()
                  if k not in ("theory", "zeta", "marginal", "partial_mass")}
        return cls(head.get("theory", "unknown"), values, tuple(head.get("zeta", ())),
                   inputs, marginal)


def ba_table(batch: BatchDistribution, zeta, dmax: int) -> TheoryTable:
    zeta = _check_zeta(zeta)
    values = _fill(lattice_order(dmax, len(zeta)), lambda v: ba_newborn_prob(v, batch, zeta))
    return TheoryTable("ba", values, zeta, {"batch": batch.to_dict(), "dmax": dmax})


def ie_table(rate: RateDistribution, zeta_hat, dmax: int) -> TheoryTable:
    zeta_hat = _check_zeta(zeta_hat)
    values = _fill(lattice_order(dmax, len(zeta_hat)),
                   lambda v: ie_newborn_prob(v, rate, zeta_hat))
    return TheoryTable("ie", values, zeta_hat, {"rate": rate.to_dict(), "dmax": dmax})


def general_table(types: int, dmax: int, u, r, q) -> dict[Degree, float]:
    """Solve the general recurrence on every degree with total at most ``dmax``."""
    memo: dict[Degree, float] = {}
    for v in lattice_order(dmax, types):
        acc = q(v)
        for k, vk in enumerate(v):
            if vk:
                prev = v[:k] + (vk - 1,) + v[k + 1:]
                acc += r(k, prev) * memo[prev]
        memo[v] = acc / (u(v) + 1)
    return memo


def marginal_table(kind: str, dist, zeta_k: float, lmax: int, k: int = 0) -> TheoryTable:
    if kind == "ba":
        xs = marginal_table_ba(lmax, dist, zeta_k)
        inputs = {"batch": dist.to_dict()}
    else:
        xs = marginal_table_ie(lmax, dist, zeta_k)
        inputs = {"rate": dist.to_dict()}
    inputs.update({"type": k, "lmax": lmax})
    return TheoryTable(kind, dict(enumerate(xs)), (zeta_k,), inputs, marginal=True)
