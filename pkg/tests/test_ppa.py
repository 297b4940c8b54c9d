"""Analytical area/throughput/energy model for the three design points."""

from __future__ import annotations

import importlib.resources as resources

import pytest

from holofact import (
    BlockParams,
    PpaConfig,
    TsvSpec,
    compare,
    default_config,
    evaluate,
    load_ppa_config,
    tsv_count,
)

# Derived values the shipped defaults must reproduce (relative error <= 1%).
EXPECTED = {
    "sram_2d": dict(area=0.114, freq=200.0, tops=1.52, density=13.33,
                    efficiency=50.1, tsvs=0),
    "hybrid_2d": dict(area=0.544, freq=200.0, tops=1.52, density=2.794,
                      efficiency=60.6, tsvs=0),
    "h3d_3tier": dict(area=0.091, freq=185.0, tops=1.41, density=15.448,
                      efficiency=60.6, tsvs=5120),
}


def _rel_err(actual: float, expected: float) -> float:
    return abs(actual - expected) / abs(expected)


@pytest.mark.parametrize("kind", sorted(EXPECTED))
def test_design_point_reproduces_reference_values(kind):
    report = evaluate(default_config(kind))
    want = EXPECTED[kind]
    assert report.design_kind == kind
    assert _rel_err(report.total_area_mm2, want["area"]) <= 0.01
    assert report.frequency_mhz == want["freq"]
    assert _rel_err(report.throughput_tops, want["tops"]) <= 0.01
    assert _rel_err(report.compute_density_tops_mm2, want["density"]) <= 0.01
    assert _rel_err(report.energy_efficiency_tops_w, want["efficiency"]) <= 0.01
    assert report.tsv_count == want["tsvs"]


def test_ops_per_mvm():
    config = default_config("sram_2d")
    # 2 ops per MAC x 256 x 256 cells x 4 subarrays.
    assert config.ops_per_mvm() == 2 * 256 * 256 * 4


def test_throughput_formula():
    config = default_config("h3d_3tier")
    report = evaluate(config)
    expected_tops = 185e6 * config.ops_per_mvm() / 69.0 / 1e12
    assert report.throughput_tops == pytest.approx(expected_tops)


def test_efficiency_consistent_with_power():
    for kind in EXPECTED:
        report = evaluate(default_config(kind))
        assert report.energy_efficiency_tops_w == pytest.approx(
            report.throughput_tops / report.power_w
        )


def test_tsv_count_formula():
    # Word lines + bit lines + one source line per column pair, per
    # subarray, per RRAM tier.
    assert tsv_count(256, 256, 4, 2) == (256 + 256 + 128) * 4 * 2
    assert tsv_count(256, 256, 4, 2) == 5120
    assert tsv_count(128, 128, 1, 1) == 320
    assert tsv_count(256, 256, 4, 0) == 0
    with pytest.raises(ValueError):
        tsv_count(256, 255, 4, 2)


def test_headline_ratios_recompute():
    sram = evaluate(default_config("sram_2d"))
    hybrid = evaluate(default_config("hybrid_2d"))
    h3d = evaluate(default_config("h3d_3tier"))
    assert sram.total_area_mm2 / h3d.total_area_mm2 == pytest.approx(1.25, rel=0.05)
    assert hybrid.total_area_mm2 / h3d.total_area_mm2 == pytest.approx(5.97, rel=0.05)
    assert (
        h3d.compute_density_tops_mm2 / hybrid.compute_density_tops_mm2
        == pytest.approx(5.5, rel=0.05)
    )
    assert (
        h3d.energy_efficiency_tops_w / sram.energy_efficiency_tops_w
        == pytest.approx(1.2, rel=0.05)
    )


def test_compare_helper_orientation():
    # compare(a, b): area_ratio is b's area over a's (a is smaller when > 1);
    # density/efficiency ratios are a over b (a is better when > 1).
    sram = evaluate(default_config("sram_2d"))
    hybrid = evaluate(default_config("hybrid_2d"))
    h3d = evaluate(default_config("h3d_3tier"))
    vs_sram = compare(h3d, sram)
    assert vs_sram["area_ratio"] == pytest.approx(1.25, rel=0.05)
    assert vs_sram["efficiency_ratio"] == pytest.approx(1.2, rel=0.05)
    vs_hybrid = compare(h3d, hybrid)
    assert vs_hybrid["area_ratio"] == pytest.approx(5.97, rel=0.05)
    assert vs_hybrid["density_ratio"] == pytest.approx(5.5, rel=0.05)


def test_tier_areas_sum_to_total():
    report = evaluate(default_config("h3d_3tier"))
    assert sum(report.tier_areas_mm2.values()) == pytest.approx(
        report.total_area_mm2
    )
    assert len(report.tier_areas_mm2) == 3


@pytest.mark.parametrize("kind", sorted(EXPECTED))
def test_shipped_config_files_match_defaults(kind):
    ref = resources.files("holofact") / "data" / f"{kind}.cfg"
    with resources.as_file(ref) as path:
        loaded = load_ppa_config(str(path))
    builtin = default_config(kind)
    assert loaded.design_kind == builtin.design_kind
    assert loaded.frequency_mhz == builtin.frequency_mhz
    assert loaded.rram_tiers == builtin.rram_tiers
    assert loaded.adc_count == builtin.adc_count
    assert loaded.cycles_per_mvm == builtin.cycles_per_mvm
    assert len(loaded.blocks) == len(builtin.blocks)
    for got, want in zip(
        sorted(loaded.blocks, key=lambda b: b.name),
        sorted(builtin.blocks, key=lambda b: b.name),
    ):
        assert got.name == want.name
        assert got.tier == want.tier
        assert got.area_mm2 == pytest.approx(want.area_mm2)
        assert got.energy_nj_per_mvm == pytest.approx(want.energy_nj_per_mvm)
    # The file-loaded config evaluates identically to the built-in one.
    a, b = evaluate(loaded), evaluate(builtin)
    assert a.total_area_mm2 == pytest.approx(b.total_area_mm2)
    assert a.energy_efficiency_tops_w == pytest.approx(b.energy_efficiency_tops_w)


def test_load_rejects_malformed_files(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[other]\nx = 1\n")
    with pytest.raises(ValueError):
        load_ppa_config(str(path))
    path.write_text("[design]\nkind = custom\n")
    with pytest.raises(ValueError):
        load_ppa_config(str(path))
    with pytest.raises(FileNotFoundError):
        load_ppa_config(str(tmp_path / "missing.cfg"))


def test_report_serialization_smoke():
    report = evaluate(default_config("h3d_3tier"))
    rows = report.to_csv_rows()
    assert any("area" in r[0] for r in rows)
    text = report.to_text()
    assert "h3d_3tier" in text
    assert "throughput_tops" in text
    assert "tsv_count" in text


def test_unknown_design_kind():
    with pytest.raises(ValueError):
        default_config("sram_3d")


def test_custom_config_evaluates():
    config = PpaConfig(
        design_kind="h3d_3tier",
        rram_tiers=1,
        adc_count=256,
        frequency_mhz=100.0,
        blocks=(
            BlockParams("arrays", tier=1, area_mm2=0.05, energy_nj_per_mvm=3.0),
            BlockParams("stack", tier=2, area_mm2=0.02, energy_nj_per_mvm=1.0),
        ),
        tsv_spec=TsvSpec(),
    )
    report = evaluate(config)
    assert report.total_area_mm2 == pytest.approx(0.07)
    assert report.tsv_count == tsv_count(256, 256, 4, 1)
    assert report.throughput_tops > 0


def test_config_validation_errors():
    with pytest.raises(ValueError):
        PpaConfig(design_kind="custom")
    with pytest.raises(ValueError):
        PpaConfig(design_kind="h3d_3tier", rram_tiers=0)
    with pytest.raises(ValueError):
        PpaConfig(design_kind="sram_2d", adc_count=64)
    with pytest.raises(ValueError):
        evaluate(PpaConfig(design_kind="sram_2d", blocks=()))
