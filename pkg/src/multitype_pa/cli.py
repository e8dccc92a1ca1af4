"""Command-line front end: ``multitype-pa <command> ...``.

Commands: simulate, theory, compare, ensemble, probe, fit-tail. Types are
numbered from 1 on the command line and in CSV headers (``d_1 .. d_N``).

Exit status: 0 on success, 2 on usage or configuration errors, 1 on
runtime failures.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import ConfigError, load_spec, spec_from_dict
from .graphcore import DegreeCensus, GraphError, MultiTypeGraph, read_table_csv
from .models import BatchDistribution, ModelError, RateDistribution, grow, probe_assumptions
from .rng import RandomStream
from .stats import StatsError, compare, ensemble_run, fit_tail_exponent
from .theory import TheoryError, TheoryTable, ba_table, ie_table, marginal_table


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: str | None = None
    spec: dict | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    wall_clock: float = 0.0

    def add(self, path) -> None:
        self.outputs[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _pmf(text: str) -> dict[int, float]:
    out = {}
    for item in text.split(","):
        k, p = item.split(":")
        out[int(k)] = float(p)
    return out


def _spec_overrides(args) -> dict:
    return {"steps": getattr(args, "steps", None), "seed": getattr(args, "seed", None)}


def cmd_simulate(args, manifest: RunManifest) -> None:
    spec = load_spec(args.config, _spec_overrides(args))
    if args.cap is not None:
        spec.cap = args.cap
    manifest.config, manifest.spec = str(args.config), spec.to_dict()
    traj = grow(spec)
    out = Path(args.out)
    for snap in traj.snapshots:
        census = snap.census
        census.meta = {"spec": spec.to_dict(), "zeta": [float(f"{z:.12g}") for z in snap.zeta],
                       "seed": spec.seed}
        path = out if snap.step == traj.final.step else out.with_name(
            f"{out.stem}.step{snap.step}{out.suffix}")
        census.to_csv(path)
        manifest.add(path)
    if args.checkpoint:
        traj.graph.save(args.checkpoint)
        manifest.add(args.checkpoint)


def _dist_from_flags(args):
    if args.model == "ba":
        if args.pmf:
            return BatchDistribution.categorical(_pmf(args.pmf))
        if args.poisson is not None:
            return BatchDistribution.shifted_poisson(args.poisson)
        return BatchDistribution.constant(args.m if args.m is not None else 1)
    if args.gamma:
        return RateDistribution.gamma(*_floats(args.gamma))
    if args.uniform:
        return RateDistribution.uniform(*_floats(args.uniform))
    return RateDistribution.constant(args.mu if args.mu is not None else 1.0)


def cmd_theory(args, manifest: RunManifest) -> None:
    zeta = _floats(args.zeta) if args.zeta else None
    if args.from_run:
        head, _, _ = read_table_csv(args.from_run)
        if "spec" not in head:
            raise ConfigError(f"{args.from_run} carries no run metadata")
        spec = spec_from_dict(head["spec"])
        zeta = zeta or head["zeta"]
        dmax = args.dmax if args.dmax is not None else min(head.get("cap", 20), 20)
    elif args.config:
        spec = load_spec(args.config)
        dmax = args.dmax if args.dmax is not None else 20
    else:
        if args.model is None:
            raise ConfigError("theory needs --from-run, --config or --model")
        spec = None
        dmax = args.dmax if args.dmax is not None else 20
    if spec is not None:
        kind, dist, types = spec.kind, spec.batch if spec.kind == "ba" else spec.rate, spec.types
        manifest.spec = spec.to_dict()
    else:
        kind, dist, types = args.model, _dist_from_flags(args), args.types
    if zeta is None:
        zeta = [1.0 / types] * types
    if args.marginal is not None:
        k = args.marginal - 1
        if not 0 <= k < len(zeta):
            raise ConfigError(f"--marginal must be in 1..{len(zeta)}")
        table = marginal_table(kind, dist, zeta[k], args.lmax if args.lmax else dmax, k + 1)
    else:
        if len(zeta) != types:
            raise ConfigError(f"zeta has {len(zeta)} entries for {types} types")
        table = (ba_table if kind == "ba" else ie_table)(dist, zeta, dmax)
    table.to_csv(args.out)
    manifest.add(args.out)


def cmd_compare(args, manifest: RunManifest) -> None:
    census = DegreeCensus.from_csv(args.census)
    head, header, _ = read_table_csv(args.theory)
    table = TheoryTable.from_csv(args.theory) if "theory" in header or header[:1] == ["l"] \
        else DegreeCensus.from_csv(args.theory)
    report = compare(census, table, args.dmax)
    spec = census.meta.get("spec")
    report.extra = {"spec": spec, "seed": census.meta.get("seed")}
    out = report.to_dict()
    text = json.dumps(out, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _write_json(args.out, out)
        manifest.spec = spec
        manifest.add(args.out)


def cmd_ensemble(args, manifest: RunManifest) -> None:
    spec = load_spec(args.config, _spec_overrides(args))
    manifest.config, manifest.spec = str(args.config), spec.to_dict()
    result = ensemble_run(spec, args.replicas, args.jobs, args.compare_dmax)
    result.to_json(args.out)
    manifest.add(args.out)
    if args.zeta_csv:
        result.zeta_csv(args.zeta_csv)
        manifest.add(args.zeta_csv)


def cmd_probe(args, manifest: RunManifest) -> None:
    spec = load_spec(args.config, {"seed": args.seed})
    manifest.config, manifest.spec = str(args.config), spec.to_dict()
    graph = MultiTypeGraph.load(args.checkpoint)
    if graph.types != spec.types:
        raise ConfigError("checkpoint and config disagree on the number of types")
    d = _ints(args.d)
    report = probe_assumptions(graph, spec, d, args.samples, RandomStream(spec.seed, args.replica))
    out = report.to_dict()
    # report types on the command line's 1-based numbering
    for key in ("r_hat", "r_se"):
        out[key] = {str(int(k) + 1): v for k, v in out[key].items()}
    out["targets"] = {"u": sum(d) / 2,
                      "r": {str(k + 1): (d[k] - 1) / 2 for k in range(len(d)) if d[k] >= 1}}
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, out)
        manifest.add(args.out)


def cmd_fit_tail(args, manifest: RunManifest) -> None:
    _, header, rows = read_table_csv(args.table)
    if header[:1] == ["l"]:
        pairs = [(int(r[0]), float(r[1])) for r in rows]
    elif header[0] == "d_1" and header[1] in ("theory", "count", "proportion"):
        col = header.index("proportion") if "proportion" in header else 1
        pairs = [(int(r[0]), float(r[col])) for r in rows]
    else:
        raise ConfigError(f"{args.table}: need an (l, value) table or a single-type table")
    slope, stderr = fit_tail_exponent(pairs, args.lmin, args.lmax)
    out = {"slope": slope, "stderr": stderr, "exponent": -slope,
           "lmin": args.lmin, "lmax": args.lmax}
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, out)
        manifest.add(args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multitype-pa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="grow one graph and write its degree census")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--cap", type=int)
    s.add_argument("--checkpoint", help="also save the final graph (.npz)")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("theory", help="tabulate a limit degree law")
    t.add_argument("--from-run", help="census CSV whose model and zeta are used")
    t.add_argument("--config")
    t.add_argument("--model", choices=["ba", "ie"])
    t.add_argument("--types", type=int, default=1)
    t.add_argument("--zeta", help="comma-separated edge-type proportions")
    t.add_argument("--m", type=int, help="constant batch size (BA)")
    t.add_argument("--pmf", help="batch pmf, e.g. 1:0.5,2:0.5 (BA)")
    t.add_argument("--poisson", type=float, help="batch = 1 + Poisson(rate) (BA)")
    t.add_argument("--mu", type=float, help="constant rate (IE)")
    t.add_argument("--gamma", help="gamma rate shape,scale (IE)")
    t.add_argument("--uniform", help="uniform rate a,b (IE)")
    t.add_argument("--dmax", type=int)
    t.add_argument("--marginal", type=int, metavar="K", help="tabulate the type-K marginal")
    t.add_argument("--lmax", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_theory)

    c = sub.add_parser("compare", help="compare a census with a theory table")
    c.add_argument("census")
    c.add_argument("theory")
    c.add_argument("--dmax", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("ensemble", help="run independent replicas")
    e.add_argument("--config", required=True)
    e.add_argument("--replicas", type=int, required=True)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--steps", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--compare-dmax", type=int)
    e.add_argument("--out", required=True)
    e.add_argument("--zeta-csv")
    e.set_defaults(func=cmd_ensemble)

    pr = sub.add_parser("probe", help="estimate one-step transition rates on a checkpoint")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--config", required=True)
    pr.add_argument("--d", required=True, help="generalized degree, e.g. 1,1")
    pr.add_argument("--samples", type=int, default=100_000)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--replica", type=int, default=0)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_probe)

    f = sub.add_parser("fit-tail", help="fit a log-log tail slope")
    f.add_argument("table")
    f.add_argument("--lmin", type=float, required=True)
    f.add_argument("--lmax", type=float, required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit_tail)
    return p


def _outputs(args) -> list[str]:
    return [v for k in ("out", "zeta_csv", "checkpoint") if (v := getattr(args, k, None))]


def run_command(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    manifest = RunManifest(args.command, argv)
    start = time.perf_counter()
    try:
        args.func(args, manifest)
    except (ConfigError, GraphError, StatsError, TheoryError, ModelError, KeyError, OSError) as exc:
        print(f"multitype-pa {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"multitype-pa {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest.wall_clock = round(time.perf_counter() - start, 6)
    outs = _outputs(args)
    if outs:
        manifest.write(f"{outs[0]}.manifest.json")
    return 0


def main() -> None:
    sys.exit(run_command())
