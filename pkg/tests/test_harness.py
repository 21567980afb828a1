"""Experiment harness: pairing of initial designs, determinism of exports,
schema stability, round-trips and summaries."""

import json
from pathlib import Path

import numpy as np
import pytest

from sweetspot.benchmarks import get_benchmark
from sweetspot.harness import (
    BASELINE_EI,
    ExperimentConfig,
    IterationRow,
    RunRecord,
    convergence_header,
    export,
    export_summary,
    initial_design,
    load_records,
    run_experiment,
    summarise,
)
from sweetspot.oracle import build_landscape, load_or_build
from sweetspot.region import SweetSpotShape, in_neighbourhood


def tiny_config(strategy="centre", **kw):
    defaults = dict(
        benchmark="toy1d",
        dim=1,
        strategy=strategy,
        iterations=2,
        repetitions=2,
        seed=5,
        init_points=6,
        j_realisations=8,
        m_quality=8,
        m_acq=4,
        gp_restarts=2,
        acq_population=6,
        acq_generations=4,
        inner_population=6,
        inner_generations=4,
        oracle_resolution=128,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


@pytest.fixture(scope="module")
def toy_landscape(tmp_path_factory):
    d = tmp_path_factory.mktemp("oracle")
    bench = get_benchmark("toy1d", 1)
    return load_or_build(bench, SweetSpotShape.eighth_of(bench.bounds), 128, directory=d)


def test_initial_designs_paired_across_strategies():
    bench = get_benchmark("toy1d", 1)
    a = initial_design(tiny_config("centre"), 1, bench)
    b = initial_design(tiny_config("random"), 1, bench)
    c = initial_design(tiny_config(BASELINE_EI), 1, bench)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)
    # different repetitions differ
    assert not np.array_equal(a, initial_design(tiny_config("centre"), 2, bench))


def test_zero_iterations_yields_single_row(toy_landscape):
    cfg = tiny_config(iterations=0)
    records = run_experiment(cfg, landscape=toy_landscape)
    assert len(records) == cfg.repetitions
    for rec in records:
        assert len(rec.rows) == 1
        row = rec.rows[0]
        assert row.iteration == 0
        assert row.proposed is None and row.x_new is None and row.f_new is None
        assert row.regret >= -1e-9


def test_run_records_consistent_and_feasible(toy_landscape):
    cfg = tiny_config(strategy="uncertain")
    records = run_experiment(cfg, landscape=toy_landscape)
    shape = cfg.shape()
    for rec in records:
        assert len(rec.rows) == cfg.iterations + 1
        evaluated = [p for p in rec.initial_points]
        for row in rec.rows:
            assert row.regret >= -1e-9
            assert in_neighbourhood(row.x_star, np.array(evaluated), shape)
            if row.x_new is not None:
                evaluated.append(row.x_new)
        assert [row.iteration for row in rec.rows] == list(range(cfg.iterations + 1))


def test_baseline_mode_tracks_point_incumbent(toy_landscape):
    cfg = tiny_config(strategy=BASELINE_EI)
    records = run_experiment(cfg, landscape=toy_landscape)
    for rec in records:
        evaluated = list(rec.initial_points)
        values = list(rec.initial_values)
        for row in rec.rows:
            if row.x_new is not None:
                evaluated.append(row.x_new)
                values.append(row.f_new)
            best_idx = int(np.argmin(values))
            np.testing.assert_array_equal(row.x_star, evaluated[best_idx])


def test_workers_parallel_matches_sequential(toy_landscape):
    cfg_seq = tiny_config(strategy="random", repetitions=3)
    cfg_par = tiny_config(strategy="random", repetitions=3, workers=2)
    rec_seq = run_experiment(cfg_seq, landscape=toy_landscape)
    rec_par = run_experiment(cfg_par, landscape=toy_landscape)
    for a, b in zip(rec_seq, rec_par):
        assert a.repetition == b.repetition
        for ra, rb in zip(a.rows, b.rows):
            assert ra.regret == rb.regret
            np.testing.assert_array_equal(ra.x_star, rb.x_star)


def test_export_csv_schema_and_row_counts(tmp_path, toy_landscape):
    cfg = tiny_config()
    records = run_experiment(cfg, landscape=toy_landscape)
    paths = export(records, tmp_path, fmt="csv", config=cfg)
    csv_path = tmp_path / "convergence.csv"
    assert csv_path in paths
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == convergence_header(1)
    assert lines[0] == (
        "benchmark,dim,strategy,repetition,iteration,"
        "proposed_0,x_new_0,f_new,x_star_0,incumbent_quality,regret"
    )
    assert len(lines) - 1 == cfg.repetitions * (cfg.iterations + 1)
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["config"]["benchmark"] == "toy1d"
    assert set(meta["initial_designs"]) == {"0", "1"}


def test_export_requires_records(tmp_path):
    with pytest.raises(ValueError):
        export([], tmp_path)
    with pytest.raises(ValueError):
        export([RunRecord("toy1d", 1, "centre", 0, np.zeros((1, 1)), np.zeros(1))], tmp_path, fmt="xml")


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_export_round_trip(tmp_path, toy_landscape, fmt):
    cfg = tiny_config(strategy="random")
    records = run_experiment(cfg, landscape=toy_landscape)
    export(records, tmp_path, fmt=fmt, config=cfg)
    loaded = load_records(tmp_path)
    assert len(loaded) == len(records)
    for orig, back in zip(sorted(records, key=lambda r: r.repetition), loaded):
        assert back.benchmark == orig.benchmark
        assert back.strategy == orig.strategy
        assert back.repetition == orig.repetition
        np.testing.assert_allclose(back.initial_points, orig.initial_points)
        assert len(back.rows) == len(orig.rows)
        for ra, rb in zip(orig.rows, back.rows):
            assert ra.iteration == rb.iteration
            assert (ra.f_new is None) == (rb.f_new is None)
            if ra.f_new is not None:
                assert ra.f_new == rb.f_new
                np.testing.assert_array_equal(ra.x_new, rb.x_new)
                np.testing.assert_array_equal(ra.proposed, rb.proposed)
            np.testing.assert_array_equal(ra.x_star, rb.x_star)
            assert ra.incumbent_quality == rb.incumbent_quality
            assert ra.regret == rb.regret


def test_reruns_byte_identical(tmp_path, toy_landscape):
    cfg = tiny_config(strategy="uncertain")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    export(run_experiment(cfg, landscape=toy_landscape), out_a, config=cfg)
    export(run_experiment(cfg, landscape=toy_landscape), out_b, config=cfg)
    assert (out_a / "convergence.csv").read_bytes() == (out_b / "convergence.csv").read_bytes()


def test_summarise_trivial_cases():
    def mk(strategy, rep, regrets):
        rows = [
            IterationRow(i, None, None, None, np.zeros(1), 0.0, r)
            for i, r in enumerate(regrets)
        ]
        return RunRecord("toy1d", 1, strategy, rep, np.zeros((1, 1)), np.zeros(1), rows)

    # single repetition: median is the value itself, MAD zero
    s = summarise([mk("centre", 0, [5.0, 2.0])])
    st = s.strategies["centre"]
    assert st.final_median == 2.0 and st.final_mad == 0.0 and st.final_min == 2.0

    # hand-computed summary
    recs = [mk("centre", r, [9.0, v]) for r, v in enumerate([1.0, 2.0, 3.0, 4.0, 5.0])]
    st = summarise(recs).strategies["centre"]
    assert st.final_median == 3.0 and st.final_mad == 1.0 and st.final_min == 1.0

    # identical strategies: Wilcoxon degenerates to p = 1
    recs_a = [mk("centre", r, [v]) for r, v in enumerate([1.0, 2.0, 3.0])]
    recs_b = [mk("random", r, [v]) for r, v in enumerate([1.0, 2.0, 3.0])]
    s = summarise(recs_a + recs_b)
    assert s.pairwise_p[("centre", "random")] == 1.0


def test_summary_csv_export(tmp_path):
    def mk(strategy, rep, final):
        rows = [IterationRow(0, None, None, None, np.zeros(1), 0.0, final)]
        return RunRecord("toy1d", 1, strategy, rep, np.zeros((1, 1)), np.zeros(1), rows)

    records = [mk("centre", r, float(r)) for r in range(3)]
    records += [mk("random", r, float(r) + 0.5) for r in range(3)]
    paths = export_summary(summarise(records), tmp_path)
    names = {p.name for p in paths}
    assert names == {"curves.csv", "summary.csv", "pairwise.csv"}
    lines = (tmp_path / "summary.csv").read_text().strip().split("\n")
    assert lines[0] == "strategy,final_median,final_mad,final_min"
    assert len(lines) == 3
