"""Benchmark harness: cell execution, CSV/manifest formats, reproducibility."""

from __future__ import annotations

import configparser
from dataclasses import replace

import numpy as np
import pytest

from holofact.bench import (
    ACCURACY_TARGET_PCT,
    DESK_ITERATION_CAP,
    EXTENDED_ITERATION_CAP,
    CellResult,
    ExperimentSpec,
    config_digest,
    load_experiment_spec,
    run_adc_study,
    run_capacity,
    run_sweep,
    write_adc_study_csv,
    write_capacity_csv,
    write_manifest,
    write_sweep_csv,
)


def _tiny_spec(**kwargs) -> ExperimentSpec:
    defaults = dict(
        f_values=(2,),
        m_values=(4, 8),
        n=256,
        modes=("deterministic", "stochastic"),
        trials=4,
        master_seed=7,
        max_iterations=200,
    )
    defaults.update(kwargs)
    return ExperimentSpec(**defaults)


def test_sweep_covers_grid_and_counts(tmp_path):
    spec = _tiny_spec()
    result = run_sweep(spec)
    assert len(result.cells) == 2 * 2  # modes x m_values
    for cell in result.cells:
        assert cell.trials == 4
        assert 0 <= cell.successes <= 4
        assert cell.mode in ("deterministic", "stochastic")
        assert cell.n == 256
        # Operation counters accumulate F MVMs per iteration per kind.
        assert cell.similarity_mvms == cell.projection_mvms
        assert cell.similarity_mvms > 0
    # Tiny deterministic cells converge essentially always.
    det = [c for c in result.cells if c.mode == "deterministic"]
    assert all(c.accuracy_pct == 100.0 for c in det)


def test_sweep_reproducible_across_thread_counts(tmp_path):
    spec = _tiny_spec()
    a = run_sweep(spec)
    b = run_sweep(replace(spec, threads=2))
    path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
    digest = config_digest(None, spec)
    write_sweep_csv(a, str(path_a), digest)
    write_sweep_csv(b, str(path_b), config_digest(None, replace(spec, threads=2)))
    text_a = path_a.read_bytes()
    text_b = path_b.read_bytes()
    # Thread count must not leak into results (digest line differs because
    # the spec repr includes it; compare the data rows).
    assert text_a.split(b"\n", 1)[1] == text_b.split(b"\n", 1)[1]


def test_sweep_reproducible_across_runs(tmp_path):
    spec = _tiny_spec()
    digest = config_digest(None, spec)
    paths = []
    for run in range(2):
        path = tmp_path / f"run{run}.csv"
        write_sweep_csv(run_sweep(spec), str(path), digest)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_paired_problems_across_modes():
    # Deterministic and stochastic cells factor identical problems: the
    # problem stream is keyed by (f, m, n, trial) only.
    spec = _tiny_spec(m_values=(8,), trials=6)
    result = run_sweep(spec)
    det = next(c for c in result.cells if c.mode == "deterministic")
    stoch = next(c for c in result.cells if c.mode == "stochastic")
    assert det.trials == stoch.trials == 6
    # Identical problems and a tiny space: both modes solve everything.
    assert det.successes == stoch.successes == 6


def test_iteration_cap_resolution():
    spec = _tiny_spec(max_iterations=None)
    # min(10 * space, desk cap)
    assert spec.iteration_cap(4096) == 40960
    assert spec.iteration_cap(10**9) == DESK_ITERATION_CAP
    extended = replace(spec, extended=True)
    assert extended.iteration_cap(10**9) == EXTENDED_ITERATION_CAP
    pinned = replace(spec, max_iterations=123)
    assert pinned.iteration_cap(10**9) == 123


def test_spec_validation():
    with pytest.raises(ValueError):
        _tiny_spec(modes=("deterministic", "quantum"))
    with pytest.raises(ValueError):
        _tiny_spec(trials=0)
    with pytest.raises(ValueError):
        _tiny_spec(threads=0)
    with pytest.raises(ValueError):
        _tiny_spec(tie_policy="sometimes")


def test_noise_model_construction():
    spec = _tiny_spec(sigma_rel=0.02, adc_bits=8, vtgt_scale=2.0)
    model = spec.noise_model()
    assert model.sigma_rel == 0.02
    assert model.adc_bits == 8
    assert model.vtgt_scale == 2.0
    ideal = _tiny_spec(adc_bits="ideal").noise_model()
    assert ideal.adc_bits == "ideal"
    override = spec.noise_model(adc_bits=4)
    assert override.adc_bits == 4


def test_sweep_csv_format(tmp_path):
    spec = _tiny_spec()
    result = run_sweep(spec)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(result, str(path), "deadbeef")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "# config_digest=deadbeef"
    header = lines[1].split(",")
    assert header[:4] == ["mode", "F", "M", "N"]
    assert "accuracy_pct" in header
    assert "mean_iterations" in header
    assert "median_iterations" in header
    assert len(lines) == 2 + len(result.cells)
    for line in lines[2:]:
        assert len(line.split(",")) == len(header)


def test_capacity_walk_stops_at_target(tmp_path):
    spec = _tiny_spec(f_values=(2,), m_values=(4, 8, 16), trials=4)
    result = run_capacity(spec)
    assert result.f == 2
    assert set(result.per_mode) == {"deterministic", "stochastic"}
    for mode, (max_m, space) in result.per_mode.items():
        # Tiny cells all pass, so the largest size is the capacity.
        assert max_m == 16
        assert space == 16**2
    assert result.capacity_ratio() == 1.0
    path = tmp_path / "capacity.csv"
    write_capacity_csv(result, str(path), "cafe")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "# config_digest=cafe"
    assert len(lines) >= 3


def test_capacity_requires_single_f():
    with pytest.raises(ValueError):
        run_capacity(_tiny_spec(f_values=(2, 3)))


def test_adc_study_variants_and_curves(tmp_path):
    spec = _tiny_spec(f_values=(2,), m_values=(8,), trials=6, max_iterations=100)
    study = run_adc_study(spec, variants=(4, "ideal", "deterministic"))
    assert set(study.variants) == {4, "ideal", "deterministic"}
    assert set(study.curves) == set(study.variants)
    assert set(study.cells) == set(study.variants)
    for label, curve in study.curves.items():
        pct = [p for _, p in curve]
        assert all(b >= a for a, b in zip(pct, pct[1:])), "curve must be monotone"
        assert pct[-1] <= 100.0
    for label, t99 in study.iterations_to_target.items():
        if t99 is not None:
            assert t99 >= 1
    curves_path = tmp_path / "adc_curves.csv"
    summary_path = tmp_path / "adc_summary.csv"
    write_adc_study_csv(study, str(curves_path), str(summary_path), "beef")
    for path in (curves_path, summary_path):
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "# config_digest=beef"
        assert len(lines) >= 2
    summary_lines = summary_path.read_text().strip().split("\n")
    assert summary_lines[1].startswith("variant,")
    assert len(summary_lines) == 2 + len(study.variants)


def test_manifest_contents(tmp_path):
    path = tmp_path / "manifest.txt"
    write_manifest(
        str(path),
        command="sweep",
        digest="abc",
        master_seed=7,
        wall_s=1.25,
        outputs=["sweep.csv"],
        extra={"cells": "4"},
    )
    text = path.read_text()
    fields = dict(
        line.split("=", 1) for line in text.strip().split("\n") if "=" in line
    )
    assert fields["command"] == "sweep"
    assert fields["config_digest"] == "abc"
    assert fields["master_seed"] == "7"
    assert fields["outputs"] == "sweep.csv"
    assert fields["cells"] == "4"
    assert "version" in fields


def test_config_digest_file_and_spec(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text("[sweep]\nf_values = 2\nm_values = 4\n")
    d1 = config_digest(str(config))
    d2 = config_digest(str(config))
    assert d1 == d2 and len(d1) == 64
    spec = _tiny_spec()
    assert config_digest(None, spec) == config_digest(None, spec)
    assert config_digest(None, spec) != config_digest(None, replace(spec, trials=5))
    with pytest.raises(ValueError):
        config_digest(None, None)


def test_load_experiment_spec_sections_and_overrides(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(
        "[sweep]\n"
        "f_values = 3, 4\n"
        "m_values = 16, 32\n"
        "n = 512\n"
        "modes = deterministic, stochastic\n"
        "trials = 50\n"
        "master_seed = 99\n"
        "[noise]\n"
        "sigma_rel = 0.02\n"
        "adc_bits = 8\n"
        "vtgt_scale = 1.5\n"
        "[resonator]\n"
        "tie_policy = random\n"
        "update_schedule = sequential\n"
        "cycle_window = 32\n"
    )
    spec = load_experiment_spec(str(config))
    assert spec.f_values == (3, 4)
    assert spec.m_values == (16, 32)
    assert spec.n == 512
    assert spec.trials == 50
    assert spec.master_seed == 99
    assert spec.sigma_rel == 0.02
    assert spec.adc_bits == 8
    assert spec.vtgt_scale == 1.5
    assert spec.tie_policy == "random"
    assert spec.cycle_window == 32
    overridden = load_experiment_spec(str(config), overrides={"trials": 7})
    assert overridden.trials == 7
    with pytest.raises(FileNotFoundError):
        load_experiment_spec(str(tmp_path / "nope.cfg"))


def test_cell_result_accuracy():
    cell = CellResult(
        mode="deterministic", f=2, m=4, n=64, sigma_rel=0.0, adc_bits="ideal",
        trials=8, successes=6, mean_iterations=3.0, median_iterations=2.0,
        failures_cycle=1, failures_cap=1, similarity_mvms=100,
        projection_mvms=100, unbinds=100, wall_s=0.1,
        first_match=(1, 2, 3, 4, 5, 6),
    )
    assert cell.accuracy_pct == 75.0
