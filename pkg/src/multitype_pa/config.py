"""TOML run configuration.

Example::

    model = "ba"
    types = 2
    steps = 100000
    seed = 7

    [batch]
    kind = "categorical"
    pmf = { "1" = 0.5, "2" = 0.5 }

    [initial]
    preset = "default"        # or "path", or edges = [[0, 1, 0], [0, 1, 1]]

    [census]
    schedule = [1000, 10000]
    cap = 256
"""
from __future__ import annotations

import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .graphcore import DEFAULT_CAP, GraphError, InitialConfig
from .models import BatchDistribution, ModelError, ModelSpec, RateDistribution

SEED_ENV = "MULTITYPE_PA_SEED"


class ConfigError(ValueError):
    pass


def parse_batch(table: dict) -> BatchDistribution:
    kind = table.get("kind", "constant")
    if kind == "constant":
        return BatchDistribution.constant(int(table["value"]))
    if kind == "categorical":
        pmf = table["pmf"]
        if isinstance(pmf, list):
            pmf = dict(pmf)
        return BatchDistribution.categorical({int(k): float(p) for k, p in pmf.items()})
    if kind == "poisson":
        return BatchDistribution.shifted_poisson(float(table["value"]), table.get("max"))
    raise ConfigError(f"unknown batch kind {kind!r}")


def parse_rate(table: dict) -> RateDistribution:
    kind = table.get("kind", "constant")
    if kind == "constant":
        return RateDistribution.constant(float(table["mu"]))
    if kind == "gamma":
        return RateDistribution.gamma(float(table["shape"]), float(table["scale"]))
    if kind == "uniform":
        return RateDistribution.uniform(float(table["a"]), float(table["b"]))
    raise ConfigError(f"unknown rate kind {kind!r}")


def parse_initial(table: dict, types: int) -> InitialConfig:
    if "edges" in table:
        edges = tuple((int(a), int(b), int(k)) for a, b, k in table["edges"])
        count = table.get("vertices", 1 + max(max(a, b) for a, b, _ in edges))
        return InitialConfig(types, int(count), edges)
    preset = table.get("preset", "default")
    if preset == "default":
        return InitialConfig.default(types)
    if preset == "path":
        return InitialConfig.path(types, table.get("per_type"))
    raise ConfigError(f"unknown initial preset {preset!r}")


def resolve_seed(value=None) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def spec_from_dict(data: dict, overrides: dict | None = None) -> ModelSpec:
    """Build a :class:`ModelSpec`; non-None ``overrides`` replace top-level keys."""
    data = dict(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    try:
        kind = str(data["model"]).lower()
        types = int(data.get("types", 1))
        census = data.get("census", {})
        return ModelSpec(
            kind=kind,
            types=types,
            batch=parse_batch(data["batch"]) if kind == "ba" else None,
            rate=parse_rate(data["rate"]) if kind == "ie" else None,
            initial=parse_initial(data.get("initial", {}), types),
            seed=resolve_seed(data.get("seed")),
            steps=int(data.get("steps", 10_000)),
            census_schedule=tuple(int(s) for s in census.get("schedule", ())),
            cap=int(census.get("cap", DEFAULT_CAP)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except (GraphError, ModelError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def load_spec(path, overrides: dict | None = None) -> ModelSpec:
    return spec_from_dict(load_config(path), overrides)
