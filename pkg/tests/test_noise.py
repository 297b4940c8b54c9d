"""Behavior of the readout stochasticity pipeline.

Stages: additive read noise, sensing scale, mid-rise ADC quantization, and
the sub-LSB sensing threshold. Quantizer error bounds, monotonicity, and the
identity reduction are checked exhaustively on the integer similarity grid
at small N and fuzzed at N=1024.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holofact import (
    CALIBRATED_ADC_BITS,
    CALIBRATED_SIGMA_REL,
    CALIBRATED_THRESHOLD_FRAC,
    CALIBRATED_VTGT_SCALE,
    ChipNoiseStats,
    NoiseModel,
    RngStream,
    calibrated_vtgt,
    pipeline,
    gate_threshold,
    inject_noise,
    load_chip_stats,
    quantize_adc,
    save_chip_stats,
)

FUZZ_CASES = 10_000


def _model(**kwargs) -> NoiseModel:
    defaults = dict(sigma_rel=0.0, adc_bits="ideal", vtgt_scale=1.0, dim=1024)
    defaults.update(kwargs)
    return NoiseModel(**defaults)


# ---------------------------------------------------------------------------
# Quantizer properties
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 8, 16])
@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_quantizer_error_bound_exhaustive_grid(n, bits):
    model = _model(adc_bits=bits, dim=n)
    # Every representable similarity value, plus out-of-range inputs.
    xs = np.arange(-2 * n, 2 * n + 1, dtype=np.float64)
    q = quantize_adc(xs, model)
    clamped = np.clip(xs, -n, n)
    assert np.all(np.abs(q - clamped) <= n / (1 << bits) + 1e-12)


@pytest.mark.parametrize("bits", [1, 2, 4, 8])
def test_quantizer_outputs_lie_on_midrise_grid(bits):
    model = _model(adc_bits=bits)
    r = 1024.0
    step = 2 * r / (1 << bits)
    xs = np.linspace(-1.5 * r, 1.5 * r, 4097)
    q = quantize_adc(xs, model)
    # Mid-rise levels are odd multiples of step/2; zero is never an output.
    k = (q + r) / step - 0.5
    assert np.allclose(k, np.round(k))
    assert np.all(np.abs(q) >= step / 2 - 1e-9)
    assert q.min() == -r + step / 2 and q.max() == r - step / 2


def test_quantizer_monotonicity_exhaustive():
    model = _model(adc_bits=4, dim=16)
    xs = np.linspace(-40, 40, 8001)
    q = quantize_adc(xs, model)
    assert np.all(np.diff(q) >= 0)


def test_quantizer_monotonicity_fuzz(stream):
    gen = stream.derive("monotone").generator()
    model = _model(adc_bits=4)
    xs = np.sort(gen.uniform(-3000, 3000, size=FUZZ_CASES))
    q = quantize_adc(xs, model)
    assert np.all(np.diff(q) >= 0)


def test_quantizer_error_bound_fuzz(stream):
    gen = stream.derive("qbound").generator()
    for bits in (2, 4, 8):
        model = _model(adc_bits=bits)
        xs = gen.uniform(-2048, 2048, size=FUZZ_CASES)
        q = quantize_adc(xs, model)
        clamped = np.clip(xs, -1024, 1024)
        assert np.all(np.abs(q - clamped) <= 1024 / (1 << bits) + 1e-9)


def test_quantizer_midrise_sign_convention():
    model = _model(adc_bits=4)
    # Mid-rise has no zero level: 0 maps up, -epsilon maps down.
    assert quantize_adc(np.array([0.0]), model)[0] == 64.0
    assert quantize_adc(np.array([-1e-9]), model)[0] == -64.0


def test_adc_range_override():
    model = _model(adc_bits=4, adc_range=256.0)
    assert model.full_scale() == 256.0
    q = quantize_adc(np.array([1000.0]), model)
    assert q[0] == 256.0 - 16.0


def test_ideal_bits_pass_through():
    model = _model(adc_bits="ideal")
    xs = np.array([-1.5, 0.0, 3.25, 2000.0])
    assert np.array_equal(quantize_adc(xs, model), xs)


# ---------------------------------------------------------------------------
# Sensing threshold
# ---------------------------------------------------------------------------


def test_gate_zeroes_lowest_quantizer_level_only():
    model = _model(adc_bits=4, threshold_frac=1.0 / 16.0)
    levels = np.array([-960.0, -192.0, -64.0, 64.0, 192.0, 960.0])
    gated = gate_threshold(levels, model)
    assert np.array_equal(gated, np.array([-960.0, -192.0, 0.0, 0.0, 192.0, 960.0]))


def test_gate_disabled_at_zero_threshold():
    model = _model()
    xs = np.array([-5.0, 0.5, 64.0])
    assert np.array_equal(gate_threshold(xs, model), xs)


def test_gate_boundary_is_inclusive():
    model = _model(adc_bits="ideal", threshold_frac=0.25)
    xs = np.array([-256.0, -255.9, 255.9, 256.0, 256.1])
    gated = gate_threshold(xs, model)
    assert np.array_equal(gated, np.array([0.0, 0.0, 0.0, 0.0, 256.1]))


def test_threshold_frac_validation():
    with pytest.raises(ValueError):
        _model(threshold_frac=1.0)
    with pytest.raises(ValueError):
        _model(threshold_frac=-0.1)


# ---------------------------------------------------------------------------
# Pipeline composition
# ---------------------------------------------------------------------------


def test_identity_pipeline_returns_input_exhaustive():
    for n in (4, 8, 16):
        model = _model(dim=n)
        assert model.is_identity
        xs = np.arange(-n, n + 1, dtype=np.float64)
        out = pipeline(xs, model, rng=RngStream(0))
        assert np.array_equal(out, xs)
        assert out is not xs


def test_identity_pipeline_fuzz(stream):
    model = _model()
    gen = stream.derive("identity").generator()
    xs = gen.uniform(-1024, 1024, size=FUZZ_CASES)
    assert np.array_equal(pipeline(xs, model, rng=stream), xs)


def test_vtgt_scale_multiplies_before_quantization():
    model = _model(vtgt_scale=2.0, adc_bits=4)
    out = pipeline(np.array([100.0]), model, rng=RngStream(0))
    # 100 * 2 = 200 quantizes to the 192-count level.
    assert out[0] == 192.0
    assert not model.is_identity


def test_noise_injection_statistics(stream):
    model = _model(sigma_rel=0.01)
    xs = np.zeros(200_000)
    noisy = inject_noise(xs, model, rng=stream.derive("stats"))
    assert abs(float(noisy.mean())) < 0.15
    assert abs(float(noisy.std()) - 10.24) < 0.15
    assert model.sigma_abs() == pytest.approx(10.24)


def test_noise_is_reproducible_per_stream(stream):
    model = _model(sigma_rel=0.02)
    xs = np.arange(64, dtype=np.float64)
    a = pipeline(xs, model, rng=stream.derive("rep"))
    b = pipeline(xs, model, rng=stream.derive("rep"))
    c = pipeline(xs, model, rng=stream.derive("other"))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stochastic_pipeline_requires_rng():
    model = _model(sigma_rel=0.01)
    with pytest.raises(ValueError):
        inject_noise(np.zeros(4), model)


def test_model_dimension_binding():
    model = NoiseModel(sigma_rel=0.01)
    with pytest.raises(ValueError):
        model.sigma_abs()
    bound = model.resolved(1024)
    assert bound.sigma_abs() == pytest.approx(10.24)
    with pytest.raises(ValueError):
        bound.resolved(512)


def test_calibrated_default_matches_constants():
    model = NoiseModel.calibrated_default()
    assert model.sigma_rel == CALIBRATED_SIGMA_REL
    assert model.adc_bits == CALIBRATED_ADC_BITS
    assert model.vtgt_scale == CALIBRATED_VTGT_SCALE
    assert model.threshold_frac == CALIBRATED_THRESHOLD_FRAC
    assert not model.is_identity
    assert not model.is_deterministic


def test_vtgt_schedule_bands():
    assert calibrated_vtgt(1) == 2.5
    assert calibrated_vtgt(16) == 2.5
    assert calibrated_vtgt(32) == 2.5
    assert calibrated_vtgt(33) == 2.0
    assert calibrated_vtgt(64) == 2.0
    assert calibrated_vtgt(128) == 2.0
    assert calibrated_vtgt(129) == 1.75
    assert calibrated_vtgt(256) == 1.75
    assert calibrated_vtgt(10_000) == 1.75


def test_vtgt_schedule_is_nonincreasing():
    scales = [calibrated_vtgt(m) for m in range(1, 2049)]
    assert all(b <= a for a, b in zip(scales, scales[1:]))


def test_vtgt_schedule_rejects_nonpositive_size():
    with pytest.raises(ValueError):
        calibrated_vtgt(0)
    with pytest.raises(ValueError):
        calibrated_vtgt(-4)


def test_calibrated_default_uses_schedule():
    small = NoiseModel.calibrated_default(max_m=16)
    mid = NoiseModel.calibrated_default(max_m=128)
    large = NoiseModel.calibrated_default(max_m=256)
    assert small.vtgt_scale == calibrated_vtgt(16)
    assert mid.vtgt_scale == calibrated_vtgt(128)
    assert large.vtgt_scale == calibrated_vtgt(256)
    assert small.sigma_rel == mid.sigma_rel == large.sigma_rel
    assert small.threshold_frac == mid.threshold_frac == large.threshold_frac


@settings(max_examples=100, deadline=None)
@given(
    sigma=st.floats(min_value=0.0, max_value=0.1),
    vtgt=st.floats(min_value=0.25, max_value=8.0),
    bits=st.sampled_from([2, 4, 8, "ideal"]),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_pipeline_output_bounded_by_full_scale(sigma, vtgt, bits, seed):
    model = _model(sigma_rel=sigma, vtgt_scale=vtgt, adc_bits=bits)
    gen = np.random.default_rng(seed)
    xs = gen.uniform(-1024, 1024, size=256)
    out = pipeline(xs, model, rng=RngStream(seed))
    if bits != "ideal":
        assert np.all(np.abs(out) <= model.full_scale())
    assert out.shape == xs.shape


# ---------------------------------------------------------------------------
# Imported chip statistics
# ---------------------------------------------------------------------------


def _tiny_stats() -> ChipNoiseStats:
    return ChipNoiseStats(
        levels=np.array([-64.0, 0.0, 64.0]),
        mean_offsets=np.array([2.0, 0.0, -2.0]),
        stds=np.array([4.0, 1.0, 4.0]),
    )


def test_chip_stats_interpolation_midpoint():
    stats = _tiny_stats()
    mean, std = stats.interpolate(np.array([32.0]))
    assert mean[0] == pytest.approx(-1.0)
    assert std[0] == pytest.approx(2.5)
    # Beyond the table the edge statistics hold.
    mean, std = stats.interpolate(np.array([500.0, -500.0]))
    assert np.allclose(mean, [-2.0, 2.0])
    assert np.allclose(std, [4.0, 4.0])


def test_chip_stats_roundtrip(tmp_path):
    stats = _tiny_stats()
    path = tmp_path / "chip.csv"
    save_chip_stats(stats, str(path))
    back = load_chip_stats(str(path))
    assert np.allclose(back.levels, stats.levels)
    assert np.allclose(back.mean_offsets, stats.mean_offsets)
    assert np.allclose(back.stds, stats.stds)


def test_chip_stats_file_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("wrong header\n1,0,1\n")
    with pytest.raises(ValueError):
        load_chip_stats(str(path))
    path.write_text("# chip_noise v1\n64,0,1\n64,0,1\n")
    with pytest.raises(ValueError):
        load_chip_stats(str(path))
    path.write_text("# chip_noise v1\n")
    with pytest.raises(ValueError):
        load_chip_stats(str(path))
    path.write_text("# chip_noise v1\n64,0\n")
    with pytest.raises(ValueError):
        load_chip_stats(str(path))


def test_shipped_example_stats_load():
    import importlib.resources as resources

    ref = resources.files("holofact") / "data" / "chip_noise_example.csv"
    with resources.as_file(ref) as path:
        stats = load_chip_stats(str(path))
    assert len(stats.levels) == 16
    assert np.all(np.diff(stats.levels) > 0)
    model = NoiseModel(stats_source="imported", chip_stats=stats, dim=1024)
    out = inject_noise(np.array([64.0, -64.0]), model, rng=RngStream(5))
    assert out.shape == (2,)


def test_imported_mode_requires_stats():
    with pytest.raises(ValueError):
        NoiseModel(stats_source="imported")


def test_imported_zero_spread_is_deterministic():
    stats = ChipNoiseStats(
        levels=np.array([-64.0, 64.0]),
        mean_offsets=np.array([0.0, 0.0]),
        stds=np.array([0.0, 0.0]),
    )
    model = NoiseModel(stats_source="imported", chip_stats=stats, dim=1024)
    assert model.is_deterministic
    out = inject_noise(np.array([10.0, -10.0]), model)
    assert np.array_equal(out, np.array([10.0, -10.0]))


def test_model_validation_errors():
    with pytest.raises(ValueError):
        _model(sigma_rel=-0.01)
    with pytest.raises(ValueError):
        _model(adc_bits=0)
    with pytest.raises(ValueError):
        _model(adc_bits="fast")
    with pytest.raises(ValueError):
        _model(adc_range=0.0)
    with pytest.raises(ValueError):
        _model(vtgt_scale=0.0)
    with pytest.raises(ValueError):
        _model(stats_source="measured")
