"""Command-line entry point: gen, solve, bench, gset, convert."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from pignn import bench
from pignn.gnn import TrainConfig
from pignn.graph import generate_random_regular, parse_gset, serialize_gset
from pignn.heuristics import EoConfig
from pignn.qubo import energy_density, figure_of_merit, gamma_from_figure_of_merit, improvement_ratio

log = logging.getLogger("pignn")

_TRAIN_FIELDS = {f.name: f for f in fields(TrainConfig) if f.name not in ("kind", "seed")}
_SPEC_KEYS = {"d", "sizes", "samples_per_size", "solvers", "base_seed", "workers", "optimality_reference"}
_EO_KEYS = {"eo_tau": "tau", "eo_steps": "steps"}


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SPEC_KEYS and key not in _TRAIN_FIELDS and key not in _EO_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _typed(name: str, raw: str):
    if raw.lower() in ("", "none", "auto"):
        return None
    if name in ("learning_rate", "tolerance", "rounding_threshold", "beta1", "beta2", "eps",
                "eo_tau", "optimality_reference"):
        return float(raw)
    return int(raw)


def _list(raw: str) -> list[str]:
    return [t for t in raw.replace(",", " ").split() if t]


def build_spec(cfg: dict[str, str], overrides: dict | None = None) -> bench.ExperimentSpec:
    """ExperimentSpec from parsed config values plus already-typed overrides."""
    train_kw, eo_kw, spec_kw = {}, {}, {}
    for key, raw in cfg.items():
        try:
            if key == "sizes":
                spec_kw["sizes"] = [int(float(s)) for s in _list(raw)]
            elif key == "solvers":
                spec_kw["solvers"] = _list(raw)
            elif key in _SPEC_KEYS:
                spec_kw[key] = _typed(key, raw)
            elif key in _EO_KEYS:
                eo_kw[_EO_KEYS[key]] = _typed(key, raw)
            else:
                train_kw[key] = _typed(key, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in _EO_KEYS:
            eo_kw[_EO_KEYS[key]] = val
        elif key in _TRAIN_FIELDS:
            train_kw[key] = val
        else:
            spec_kw[key] = val
    spec_kw = {k: v for k, v in spec_kw.items() if v is not None}
    return bench.ExperimentSpec(train=TrainConfig(**train_kw), eo=EoConfig(**eo_kw), **spec_kw)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver settings")
    for name, f in _TRAIN_FIELDS.items():
        typ = float if name in ("learning_rate", "tolerance", "rounding_threshold", "beta1", "beta2", "eps") else int
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    g.add_argument("--eo-tau", dest="eo_tau", type=float, default=None)
    g.add_argument("--eo-steps", dest="eo_steps", type=int, default=None)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None, help="output path (default: stdout)")


def _solver_configs(args) -> tuple[TrainConfig, EoConfig]:
    train_kw = {k: getattr(args, k) for k in _TRAIN_FIELDS if getattr(args, k, None) is not None}
    eo_kw = {v: getattr(args, k) for k, v in _EO_KEYS.items() if getattr(args, k, None) is not None}
    return TrainConfig(**train_kw), EoConfig(**eo_kw)


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_gen(args) -> int:
    if args.count == 1:
        g = generate_random_regular(args.n, args.d, args.seed)
        _write(serialize_gset(g), args.out)
        return 0
    if args.out is None:
        raise SystemExit("--out DIR is required with --count > 1")
    args.out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        seed = bench.derive_seed(args.seed, args.n, k)
        g = generate_random_regular(args.n, args.d, seed)
        (args.out / f"rr_n{args.n}_d{args.d}_{k:03d}.txt").write_text(serialize_gset(g), encoding="ascii")
    return 0


def cmd_solve(args) -> int:
    train_cfg, eo_cfg = _solver_configs(args)
    if args.graph is not None:
        g = parse_gset(args.graph.read_text(encoding="ascii"), source=str(args.graph))
        d = None
    else:
        if args.n is None:
            raise SystemExit("give either --graph FILE or --n N (with --d)")
        g = generate_random_regular(args.n, args.d, args.seed)
        d = args.d
    rec = bench.solve_record(g, args.solver, args.seed, train_cfg, eo_cfg, d)
    _write(bench.emit([rec], args.format), args.out)
    return 1 if rec.error else 0


def cmd_bench(args) -> int:
    cfg = parse_config(args.config.read_text(encoding="utf-8"), str(args.config)) if args.config else {}
    overrides = {k: getattr(args, k) for k in (*_TRAIN_FIELDS, *_EO_KEYS)}
    overrides["base_seed"] = args.seed if args.seed_given else None
    overrides["workers"] = args.workers
    if args.sizes:
        overrides["sizes"] = args.sizes
    if args.samples is not None:
        overrides["samples_per_size"] = args.samples
    if args.solvers:
        overrides["solvers"] = args.solvers
    spec = build_spec(cfg, overrides)
    log.info("bench: sizes=%s samples=%d solvers=%s", spec.sizes, spec.samples_per_size, ",".join(spec.solvers))
    records = bench.run_experiment(spec)
    _write(bench.emit(records, args.format), args.out)
    summaries = bench.aggregate(records, spec.optimality_reference)
    table = bench.summary_table(summaries)
    if args.summary:
        args.summary.write_text(table, encoding="utf-8")
    else:
        sys.stderr.write(table)
    return 1 if any(r.error for r in records) else 0


def cmd_gset(args) -> int:
    train_cfg, eo_cfg = _solver_configs(args)
    rec = bench.gset_report(args.graph, args.best_known, args.solver, args.seed, train_cfg, eo_cfg)
    _write(bench.emit([rec], args.format), args.out)
    return 1 if rec.error else 0


def cmd_convert(args) -> int:
    d = args.d
    if args.compare:
        a, b = args.compare
        row = {"a": a, "b": b, "improvement": improvement_ratio(a, b)}
    elif args.gamma is not None:
        row = {"d": d, "gamma": args.gamma, "energy_density": energy_density(args.gamma, d),
               "figure_of_merit": figure_of_merit(args.gamma, d)}
    elif args.fom is not None:
        gamma = gamma_from_figure_of_merit(args.fom, d)
        row = {"d": d, "gamma": gamma, "energy_density": energy_density(gamma, d), "figure_of_merit": args.fom}
    else:
        raise SystemExit("convert needs --gamma, --fom or --compare")
    if args.format == "json":
        text = json.dumps(row) + "\n"
    else:
        text = ",".join(row) + "\n" + ",".join(repr(float(v)) if isinstance(v, float) else str(v)
                                              for v in row.values()) + "\n"
    _write(text, args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pignn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write random d-regular instances in Gset format")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--count", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("--graph", type=Path, default=None, help="Gset file")
    p.add_argument("--n", type=int, default=None, help="generate a random regular instance instead")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--solver", choices=bench.SOLVERS, default="gcn")
    _add_common(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="sweep sizes x samples x solvers")
    p.add_argument("--config", type=Path, default=None, help="key = value config file")
    p.add_argument("--sizes", type=int, nargs="+", default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--solvers", nargs="+", choices=bench.SOLVERS, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--summary", type=Path, default=None, help="write the aggregate table here")
    _add_common(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gset", help="solve a Gset file and report the gap to a best-known cut")
    p.add_argument("graph", type=Path)
    p.add_argument("--best-known", type=float, default=None)
    p.add_argument("--solver", choices=bench.SOLVERS, default="local")
    _add_common(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gset)

    p = sub.add_parser("convert", help="cut density <-> energy figure of merit")
    p.add_argument("--d", type=int, default=3)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--gamma", type=float)
    grp.add_argument("--fom", type=float, help="e/sqrt(d)")
    grp.add_argument("--compare", type=float, nargs=2, metavar=("A", "B"),
                     help="relative improvement |A-B|/|B| of two figures of merit")
    _add_common(p)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.seed_given = "--seed" in argv or any(a.startswith("--seed=") for a in argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        parser.exit(2, f"pignn: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
