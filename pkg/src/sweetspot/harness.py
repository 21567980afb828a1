"""Experiment runner: seeded end-to-end optimisation loops, aggregation and
file export.

A run evaluates one sampling strategy on one benchmark: initialise with D+1
Latin hypercube points, then repeatedly fit the model, locate the incumbent
sweet spot, propose the next sweet spot by expected-improvement search, pick
the evaluation location with the strategy, and evaluate the benchmark. The
initial design depends only on (master seed, repetition), so different
strategies under the same seed are paired. Every per-iteration quantity is
deterministic given the config; wall-clock timings are kept out of the
exported tables so re-runs are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acquisition, oracle
from .benchmarks import get_benchmark
from .evo import EvoConfig
from .gp import Dataset, fit
from .region import SweetSpot, SweetSpotShape, in_neighbourhood
from .stats import SeedStream, iqr, latin_hypercube, median_abs_deviation, wilcoxon_signed_rank
from .strategies import SamplingStrategy, select

# stream purpose tags (first spawn key component)
_INIT, _FIT, _BEST, _PROPOSE, _SELECT = 0, 1, 2, 3, 4

BASELINE_EI = "baseline-ei"

DEFAULT_ORACLE_GRID = 200  # per axis, dim <= 2
DEFAULT_ORACLE_BUDGET = 200_000  # quality evaluations, dim > 2


@dataclass
class ExperimentConfig:
    """Full description of one experiment; everything needed to reproduce it."""

    benchmark: str
    dim: int
    strategy: str  # SamplingStrategy value or "baseline-ei"
    iterations: int
    repetitions: int
    seed: int
    init_points: int | None = None  # default dim + 1
    theta: float | None = None  # explicit radius; default eighth of the width
    j_realisations: int = 100
    m_quality: int | None = None  # quality sample count; default 32 * dim
    m_acq: int | None = None  # per-ball sites in the EI estimate; default 16 * dim
    gp_restarts: int = 5
    acq_population: int | None = None  # default 10 * dim
    acq_generations: int = 30
    inner_population: int | None = None
    inner_generations: int = 15
    oracle_resolution: int | None = None
    oracle_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.repetitions < 1 or self.iterations < 0:
            raise ValueError("repetitions must be >= 1 and iterations >= 0")
        if self.strategy != BASELINE_EI:
            SamplingStrategy(self.strategy)  # validates

    @property
    def m(self) -> int:
        return self.m_quality if self.m_quality is not None else 32 * self.dim

    @property
    def m_ei(self) -> int:
        return self.m_acq if self.m_acq is not None else 16 * self.dim

    def shape(self) -> SweetSpotShape:
        bench = get_benchmark(self.benchmark, self.dim)
        if self.theta is not None:
            return SweetSpotShape(self.theta)
        return SweetSpotShape.eighth_of(bench.bounds)

    def acq_evo(self, seed: int | None = None) -> EvoConfig:
        return EvoConfig(
            population=self.acq_population or 10 * self.dim,
            generations=self.acq_generations,
            seed=seed,
        )

    def inner_evo(self, seed: int | None = None) -> EvoConfig:
        return EvoConfig(
            population=self.inner_population or max(8, 6 * self.dim),
            generations=self.inner_generations,
            seed=seed,
        )

    def oracle_res(self) -> int:
        if self.oracle_resolution is not None:
            return self.oracle_resolution
        return DEFAULT_ORACLE_GRID if self.dim <= 2 else DEFAULT_ORACLE_BUDGET

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class IterationRow:
    iteration: int
    proposed: np.ndarray | None
    x_new: np.ndarray | None
    f_new: float | None
    x_star: np.ndarray
    incumbent_quality: float
    regret: float
    wall_time: float = 0.0


@dataclass
class RunRecord:
    benchmark: str
    dim: int
    strategy: str
    repetition: int
    initial_points: np.ndarray
    initial_values: np.ndarray
    rows: list[IterationRow] = field(default_factory=list)

    @property
    def final_regret(self) -> float:
        return self.rows[-1].regret


def initial_design(config: ExperimentConfig, repetition: int, bench) -> np.ndarray:
    """The D+1 maximin Latin hypercube start shared by all strategies under
    the same master seed and repetition."""
    rng = SeedStream(config.seed).stream(_INIT, repetition)
    lo, hi = bench.bounds[:, 0], bench.bounds[:, 1]
    n = config.init_points if config.init_points is not None else config.dim + 1
    unit = latin_hypercube(n, config.dim, rng, candidates=32)
    return lo + unit * (hi - lo)


def _run_single(config: ExperimentConfig, repetition: int, landscape) -> RunRecord:
    bench = get_benchmark(config.benchmark, config.dim)
    shape = config.shape()
    streams = SeedStream(config.seed)

    pts = initial_design(config, repetition, bench)
    vals = bench(pts)
    data = Dataset(pts, vals, bench.bounds)
    record = RunRecord(
        benchmark=config.benchmark,
        dim=config.dim,
        strategy=config.strategy,
        repetition=repetition,
        initial_points=pts,
        initial_values=np.asarray(vals),
    )
    baseline = config.strategy == BASELINE_EI

    def incumbent(model, data, it):
        """Incumbent centre and its model-based quality. The sweet-spot
        optimiser tracks the best neighbourhood-feasible ball; baseline EI's
        answer is simply its best evaluated point, so its recorded regret is
        the quality of the ball centred there."""
        if baseline:
            idx = int(np.argmin(data.values))
            centre = data.points[idx].copy()
            quality = acquisition.make_quality_objective(
                model, data, shape, config.m, streams.stream(_BEST, repetition, it)
            )(centre)
            best = acquisition.BestSoFar(
                point_best=float(data.values[idx]),
                point_best_location=centre,
                sweet_best=centre,
                sweet_best_quality=quality,
            )
        else:
            best = acquisition.best_sweetspot(
                model, data, shape, config.inner_evo(), config.m,
                streams.stream(_BEST, repetition, it),
            )
        assert in_neighbourhood(best.sweet_best, data.points, shape)
        return best

    t0 = time.perf_counter()
    model = fit(data, restarts=config.gp_restarts, rng=streams.stream(_FIT, repetition, 0))
    best = incumbent(model, data, 0)
    record.rows.append(
        IterationRow(
            iteration=0,
            proposed=None,
            x_new=None,
            f_new=None,
            x_star=best.sweet_best,
            incumbent_quality=best.sweet_best_quality,
            regret=landscape.regret(best.sweet_best),
            wall_time=time.perf_counter() - t0,
        )
    )

    for it in range(1, config.iterations + 1):
        t0 = time.perf_counter()
        if baseline:
            proposed = acquisition.propose_point_ei(
                model, data, config.acq_evo(), streams.stream(_PROPOSE, repetition, it)
            )
            x_new = proposed
        else:
            proposed = acquisition.propose(
                model,
                data,
                shape,
                best,
                config.acq_evo(),
                config.j_realisations,
                config.m_ei,
                streams.stream(_PROPOSE, repetition, it),
            )
            ss = SweetSpot(proposed, shape, bench.bounds)
            x_new = select(
                SamplingStrategy(config.strategy),
                model,
                ss,
                config.inner_evo(),
                streams.stream(_SELECT, repetition, it),
            )
        f_new = float(bench(x_new))
        data = data.add(x_new, f_new)
        model = fit(data, restarts=config.gp_restarts, rng=streams.stream(_FIT, repetition, it))
        best = incumbent(model, data, it)
        record.rows.append(
            IterationRow(
                iteration=it,
                proposed=proposed,
                x_new=np.asarray(x_new, dtype=float),
                f_new=f_new,
                x_star=best.sweet_best,
                incumbent_quality=best.sweet_best_quality,
                regret=landscape.regret(best.sweet_best),
                wall_time=time.perf_counter() - t0,
            )
        )
    return record


def run_experiment(
    config: ExperimentConfig, oracle_dir=None, landscape=None
) -> list[RunRecord]:
    """Execute every repetition of the configured experiment.

    The oracle landscape is loaded (or built) once and shared; repetitions run
    sequentially or on a process pool (``config.workers``), with identical
    results either way because every repetition owns counter-derived RNG
    streams.
    """
    bench = get_benchmark(config.benchmark, config.dim)
    if landscape is None:
        landscape = oracle.load_or_build(
            bench, config.shape(), config.oracle_res(), seed=config.oracle_seed,
            directory=oracle_dir,
        )
    reps = range(config.repetitions)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_single, *zip(*[(config, r, landscape) for r in reps])))
    else:
        records = [_run_single(config, r, landscape) for r in reps]
    return records


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass
class StrategySummary:
    strategy: str
    iterations: np.ndarray
    median_regret: np.ndarray
    iqr_lo: np.ndarray
    iqr_hi: np.ndarray
    final_median: float
    final_mad: float
    final_min: float


@dataclass
class Summary:
    strategies: dict[str, StrategySummary]
    pairwise_p: dict[tuple[str, str], float]


def summarise(records: list[RunRecord]) -> Summary:
    """Convergence curves (median and inter-quartile range of regret per
    iteration), end-of-run median/MAD/minimum, and two-sided paired Wilcoxon
    signed-rank p-values between strategies (paired by repetition)."""
    if not records:
        raise ValueError("no records to summarise")
    by_strategy: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_strategy.setdefault(rec.strategy, []).append(rec)

    summaries = {}
    finals = {}
    for strategy, recs in by_strategy.items():
        recs = sorted(recs, key=lambda r: r.repetition)
        n_it = min(len(r.rows) for r in recs)
        regrets = np.array([[row.regret for row in r.rows[:n_it]] for r in recs])
        final = regrets[:, -1]
        summaries[strategy] = StrategySummary(
            strategy=strategy,
            iterations=np.arange(n_it),
            median_regret=np.median(regrets, axis=0),
            iqr_lo=np.percentile(regrets, 25.0, axis=0),
            iqr_hi=np.percentile(regrets, 75.0, axis=0),
            final_median=float(np.median(final)),
            final_mad=median_abs_deviation(final),
            final_min=float(np.min(final)),
        )
        finals[strategy] = {r.repetition: r.final_regret for r in recs}

    pairwise = {}
    names = sorted(by_strategy)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            shared = sorted(set(finals[a]) & set(finals[b]))
            if shared:
                xa = [finals[a][r] for r in shared]
                xb = [finals[b][r] for r in shared]
                _, p = wilcoxon_signed_rank(xa, xb)
                pairwise[(a, b)] = p
    return Summary(strategies=summaries, pairwise_p=pairwise)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def convergence_header(dim: int) -> str:
    cols = ["benchmark", "dim", "strategy", "repetition", "iteration"]
    cols += [f"proposed_{d}" for d in range(dim)]
    cols += [f"x_new_{d}" for d in range(dim)]
    cols += ["f_new"]
    cols += [f"x_star_{d}" for d in range(dim)]
    cols += ["incumbent_quality", "regret"]
    return ",".join(cols)


def export(records: list[RunRecord], out_dir, fmt: str = "csv", config=None) -> list[Path]:
    """Write the long-format convergence table plus a metadata echo.

    ``convergence.csv`` (or ``.json``) holds one row per repetition and
    iteration; initial designs live in ``metadata.json`` together with the
    config and (non-deterministic) wall-clock timings. The tabular outputs
    contain only deterministic quantities, so identical configs export
    byte-identical tables.
    """
    if not records:
        raise ValueError("no records to export")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dim = records[0].dim
    written = []

    if fmt == "csv":
        path = out / "convergence.csv"
        lines = [convergence_header(dim)]
        for rec in records:
            for row in rec.rows:
                cells = [rec.benchmark, str(rec.dim), rec.strategy, str(rec.repetition), str(row.iteration)]
                for vec in (row.proposed, row.x_new):
                    if vec is None:
                        cells += [""] * dim
                    else:
                        cells += [_fmt(v) for v in vec]
                cells.append("" if row.f_new is None else _fmt(row.f_new))
                cells += [_fmt(v) for v in row.x_star]
                cells += [_fmt(row.incumbent_quality), _fmt(row.regret)]
                lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    else:
        path = out / "convergence.json"
        payload = []
        for rec in records:
            payload.append(
                {
                    "benchmark": rec.benchmark,
                    "dim": rec.dim,
                    "strategy": rec.strategy,
                    "repetition": rec.repetition,
                    "rows": [
                        {
                            "iteration": row.iteration,
                            "proposed": None if row.proposed is None else [float(v) for v in row.proposed],
                            "x_new": None if row.x_new is None else [float(v) for v in row.x_new],
                            "f_new": row.f_new,
                            "x_star": [float(v) for v in row.x_star],
                            "incumbent_quality": row.incumbent_quality,
                            "regret": row.regret,
                        }
                        for row in rec.rows
                    ],
                }
            )
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        written.append(path)

    meta = {
        "config": config.to_dict() if config is not None else None,
        "initial_designs": {
            str(rec.repetition): {
                "strategy": rec.strategy,
                "points": [[float(v) for v in p] for p in rec.initial_points],
                "values": [float(v) for v in rec.initial_values],
            }
            for rec in records
        },
        "timings": {
            str(rec.repetition): [row.wall_time for row in rec.rows] for rec in records
        },
    }
    meta_path = out / "metadata.json"
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    written.append(meta_path)
    return written


def load_records(out_dir) -> list[RunRecord]:
    """Rebuild records from an exported run directory (CSV or JSON)."""
    out = Path(out_dir)
    meta = json.loads((out / "metadata.json").read_text())
    init = meta.get("initial_designs", {})

    def make_record(benchmark, dim, strategy, repetition):
        entry = init.get(str(repetition), {})
        return RunRecord(
            benchmark=benchmark,
            dim=dim,
            strategy=strategy,
            repetition=repetition,
            initial_points=np.asarray(entry.get("points", []), dtype=float),
            initial_values=np.asarray(entry.get("values", []), dtype=float),
        )

    records: dict[tuple, RunRecord] = {}
    csv_path = out / "convergence.csv"
    if csv_path.exists():
        lines = csv_path.read_text().strip().split("\n")
        header = lines[0].split(",")
        dim = sum(1 for c in header if c.startswith("x_star_"))
        for line in lines[1:]:
            cells = line.split(",")
            row_map = dict(zip(header, cells))
            key = (row_map["benchmark"], int(row_map["dim"]), row_map["strategy"], int(row_map["repetition"]))
            if key not in records:
                records[key] = make_record(*key)
            proposed = [row_map[f"proposed_{d}"] for d in range(dim)]
            x_new = [row_map[f"x_new_{d}"] for d in range(dim)]
            records[key].rows.append(
                IterationRow(
                    iteration=int(row_map["iteration"]),
                    proposed=None if proposed[0] == "" else np.array([float(v) for v in proposed]),
                    x_new=None if x_new[0] == "" else np.array([float(v) for v in x_new]),
                    f_new=None if row_map["f_new"] == "" else float(row_map["f_new"]),
                    x_star=np.array([float(row_map[f"x_star_{d}"]) for d in range(dim)]),
                    incumbent_quality=float(row_map["incumbent_quality"]),
                    regret=float(row_map["regret"]),
                )
            )
    else:
        payload = json.loads((out / "convergence.json").read_text())
        for rec in payload:
            key = (rec["benchmark"], rec["dim"], rec["strategy"], rec["repetition"])
            records[key] = make_record(*key)
            for row in rec["rows"]:
                records[key].rows.append(
                    IterationRow(
                        iteration=row["iteration"],
                        proposed=None if row["proposed"] is None else np.asarray(row["proposed"]),
                        x_new=None if row["x_new"] is None else np.asarray(row["x_new"]),
                        f_new=row["f_new"],
                        x_star=np.asarray(row["x_star"]),
                        incumbent_quality=row["incumbent_quality"],
                        regret=row["regret"],
                    )
                )
    out_records = sorted(records.values(), key=lambda r: (r.strategy, r.repetition))
    for rec in out_records:
        rec.rows.sort(key=lambda r: r.iteration)
    return out_records


def export_summary(summary: Summary, out_dir) -> list[Path]:
    """Write curves.csv, summary.csv and pairwise.csv for a Summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = ["strategy,iteration,median_regret,iqr_lo,iqr_hi"]
    finals = ["strategy,final_median,final_mad,final_min"]
    for name in sorted(summary.strategies):
        s = summary.strategies[name]
        for i in s.iterations:
            curves.append(
                f"{name},{i},{_fmt(s.median_regret[i])},{_fmt(s.iqr_lo[i])},{_fmt(s.iqr_hi[i])}"
            )
        finals.append(f"{name},{_fmt(s.final_median)},{_fmt(s.final_mad)},{_fmt(s.final_min)}")
    pair = ["strategy_a,strategy_b,wilcoxon_p"]
    for (a, b), p in sorted(summary.pairwise_p.items()):
        pair.append(f"{a},{b},{_fmt(p)}")
    paths = []
    for fname, lines in (
        ("curves.csv", curves),
        ("summary.csv", finals),
        ("pairwise.csv", pair),
    ):
        path = out / fname
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths
