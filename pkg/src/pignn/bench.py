"""Experiment sweeps, per-cell records, aggregation and report output."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from pignn.gnn import TrainConfig, solve_pignn
from pignn.graph import Graph, generate_random_regular, parse_gset
from pignn.heuristics import (
    EoConfig,
    _local_search,
    extremal_optimization,
    greedy_construct,
)
from pignn.qubo import cut_metrics

SOLVERS = ("gcn", "sage", "greedy", "local", "eo", "random")

CSV_HEADER = [
    "n", "inverse_n", "d", "solver", "seed", "instance_hash", "cut", "gamma",
    "energy_density", "figure_of_merit", "runtime_ms", "steps", "error",
]
GSET_HEADER = CSV_HEADER + ["best_known", "gap"]


def derive_seed(base_seed: int, n: int, index: int) -> int:
    """Seed for one sweep cell; a pure function of its coordinates."""
    return int(np.random.SeedSequence([base_seed, n, index]).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentSpec:
    d: int = 3
    sizes: Sequence[int] = (1000,)
    samples_per_size: int = 20
    solvers: Sequence[str] = ("gcn", "sage")
    base_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    eo: EoConfig = field(default_factory=EoConfig)
    optimality_reference: float | None = None
    workers: int = 1

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.solvers = tuple(self.solvers)
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be a non-empty list of positive integers")
        if self.samples_per_size < 1:
            raise ValueError("samples_per_size must be at least 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown or not self.solvers:
            raise ValueError(f"unknown solvers {sorted(unknown)}; choose from {SOLVERS}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class BenchRecord:
    n: int
    inverse_n: float
    d: int | None
    solver: str
    seed: int
    instance_hash: str
    cut: float | None
    gamma: float | None
    energy_density: float | None
    figure_of_merit: float | None
    runtime_ms: float | None
    steps: int | None
    error: str = ""

    def key(self) -> tuple:
        """Everything except the runtime, for reproducibility checks."""
        return tuple(v for k, v in asdict(self).items() if k != "runtime_ms")


def run_solver(g: Graph, solver: str, seed: int, train_cfg: TrainConfig, eo_cfg: EoConfig):
    """Run one solver; returns (assignment, metrics, seconds, steps)."""
    t0 = time.perf_counter()
    if solver in ("gcn", "sage"):
        res = solve_pignn(g, replace(train_cfg, kind=solver, seed=seed))
        return res.assignment, res.metrics, res.runtime, res.epochs
    if solver == "greedy":
        x, steps = greedy_construct(g, seed=seed), g.n
    elif solver == "local":
        x, steps = _local_search(g, greedy_construct(g, seed=seed))
    elif solver == "eo":
        x0 = np.random.default_rng(seed).integers(0, 2, g.n)
        cfg = replace(eo_cfg, seed=seed)
        x, steps = extremal_optimization(g, x0, cfg), cfg.steps_for(g.n)
    elif solver == "random":
        x, steps = np.random.default_rng(seed).integers(0, 2, g.n), 0
    else:
        raise ValueError(f"unknown solver {solver!r}")
    elapsed = time.perf_counter() - t0
    return x, cut_metrics(g, x), elapsed, steps


def solve_record(g: Graph, solver: str, seed: int, train_cfg: TrainConfig, eo_cfg: EoConfig,
                 d: int | None = None) -> BenchRecord:
    """Run a solver and package the outcome; failures become an error row."""
    try:
        _, met, secs, steps = run_solver(g, solver, seed, train_cfg, eo_cfg)
    except Exception as exc:  # noqa: BLE001 - a failing cell must not end the sweep
        return BenchRecord(g.n, 1.0 / g.n, d, solver, seed, g.instance_hash,
                           None, None, None, None, None, None, f"{type(exc).__name__}: {exc}")
    return BenchRecord(
        n=g.n, inverse_n=1.0 / g.n, d=met.d if met.d is not None else d, solver=solver, seed=seed,
        instance_hash=g.instance_hash, cut=met.cut, gamma=met.gamma,
        energy_density=met.energy_density, figure_of_merit=met.figure_of_merit,
        runtime_ms=secs * 1e3, steps=int(steps),
    )


def run_cell(spec: ExperimentSpec, n: int, index: int) -> list[BenchRecord]:
    """All solvers of ``spec`` on instance ``index`` of size ``n``."""
    seed = derive_seed(spec.base_seed, n, index)
    try:
        g = generate_random_regular(n, spec.d, seed)
    except Exception as exc:  # noqa: BLE001
        msg = f"{type(exc).__name__}: {exc}"
        return [BenchRecord(n, 1.0 / n, spec.d, s, seed, "", None, None, None, None, None, None, msg)
                for s in spec.solvers]
    return [solve_record(g, s, seed, spec.train, spec.eo, spec.d) for s in spec.solvers]


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec) -> list[BenchRecord]:
    """Records ordered by (size, sample, solver) whatever the worker count."""
    cells = [(spec, n, i) for n in spec.sizes for i in range(spec.samples_per_size)]
    if spec.workers == 1:
        chunks = [run_cell(*c) for c in cells]
    else:
        with ProcessPoolExecutor(spec.workers) as pool:
            chunks = list(pool.map(_run_cell_args, cells))
    return [r for chunk in chunks for r in chunk]


@dataclass
class Summary:
    n: int
    inverse_n: float
    solver: str
    count: int
    gamma_mean: float
    gamma_stderr: float | None
    fom_mean: float | None
    fom_stderr: float | None
    runtime_ms_mean: float | None
    fom_over_reference: float | None = None


def _mean_stderr(vals: list[float]) -> tuple[float | None, float | None]:
    if not vals:
        return None, None
    a = np.asarray(vals, dtype=np.float64)
    # shift by the first value: exact for constant input
    dev = a - a[0]
    mean = float(a[0] + math.fsum(dev) / len(a))
    if len(a) < 2:
        return mean, None
    return mean, float(dev.std(ddof=1) / math.sqrt(len(a)))


def aggregate(records: Iterable[BenchRecord], optimality_reference: float | None = None) -> list[Summary]:
    """Mean and standard error per (size, solver); error rows are skipped.

    The standard error of a single sample is undefined and reported as None.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple[int, str], list[BenchRecord]] = {}
    for r in records:
        if r.error or r.gamma is None:
            continue
        groups.setdefault((r.n, r.solver), []).append(r)
    out = []
    for (n, solver), rows in sorted(groups.items()):
        gm, gs = _mean_stderr([r.gamma for r in rows])
        fm, fs = _mean_stderr([r.figure_of_merit for r in rows if r.figure_of_merit is not None])
        rt, _ = _mean_stderr([r.runtime_ms for r in rows if r.runtime_ms is not None])
        ratio = fm / optimality_reference if (fm is not None and optimality_reference) else None
        out.append(Summary(n, 1.0 / n, solver, len(rows), gm, gs, fm, fs, rt, ratio))
    return out


def scaling_fit(records: Iterable[BenchRecord]) -> float:
    """Least-squares slope of log(runtime) against log(n)."""
    rows = [r for r in records if not r.error and r.runtime_ms]
    if len({r.n for r in rows}) < 3:
        raise ValueError("need runtimes at three or more distinct sizes")
    x = np.log([r.n for r in rows])
    y = np.log([r.runtime_ms for r in rows])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


@dataclass
class GsetRecord(BenchRecord):
    best_known: float | None = None
    gap: float | None = None


def relative_gap(best_known: float, cut: float) -> float:
    if best_known == 0:
        raise ZeroDivisionError("best-known cut is zero")
    return (best_known - cut) / best_known


def gset_report(path, best_known: float | None = None, solver: str = "local", seed: int = 0,
                train_cfg: TrainConfig | None = None, eo_cfg: EoConfig | None = None) -> GsetRecord:
    """Parse a Gset file, solve it and report the gap to ``best_known``."""
    path = Path(path)
    g = parse_gset(path.read_text(encoding="ascii"), source=str(path))
    rec = solve_record(g, solver, seed, train_cfg or TrainConfig(), eo_cfg or EoConfig())
    gap = relative_gap(best_known, rec.cut) if (best_known is not None and rec.cut is not None) else None
    return GsetRecord(**asdict(rec), best_known=best_known, gap=gap)


# -- output -------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _header_for(records: Sequence[BenchRecord]) -> list[str]:
    if records and isinstance(records[0], GsetRecord):
        return GSET_HEADER
    return CSV_HEADER


def emit(records: Sequence[BenchRecord], fmt: str = "csv", dest: str | Path | TextIO | None = None) -> str | None:
    """Write records as CSV (fixed header) or a JSON array.

    ``dest`` may be a path, an open text stream, or None to return the text.
    """
    records = list(records)
    if fmt == "csv":
        import io

        buf = io.StringIO()
        header = _header_for(records)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in records:
            d = asdict(r)
            w.writerow([_cell(d[k]) for k in header])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([asdict(r) for r in records], indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")
    return None


_INT_FIELDS = {"n", "d", "seed", "steps"}
_STR_FIELDS = {"solver", "instance_hash", "error"}


def _parse_cell(name: str, raw: str):
    if name in _STR_FIELDS:
        return raw
    if raw == "":
        return None
    return int(raw) if name in _INT_FIELDS else float(raw)


def read_records(source: str | Path | TextIO, fmt: str = "csv") -> list[BenchRecord]:
    """Inverse of :func:`emit`."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    if fmt == "json":
        rows = json.loads(text)
    elif fmt == "csv":
        rd = csv.reader(text.splitlines())
        header = next(rd)
        rows = [{k: _parse_cell(k, v) for k, v in zip(header, line)} for line in rd]
    else:
        raise ValueError(f"unknown format {fmt!r}")
    out = []
    for row in rows:
        cls = GsetRecord if "gap" in row else BenchRecord
        out.append(cls(**row))
    return out


def summary_table(summaries: Sequence[Summary]) -> str:
    """Tab-separated table of aggregated results."""
    names = [f.name for f in fields(Summary)]
    lines = ["\t".join(names)]
    for s in summaries:
        vals = [getattr(s, k) for k in names]
        lines.append("\t".join("" if v is None else (f"{v:.6g}" if isinstance(v, float) else str(v)) for v in vals))
    return "\n".join(lines) + "\n"
