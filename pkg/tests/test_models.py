"""Model construction, parameter budgets, decoding modes, persistence."""

import numpy as np
import pytest

from pvcast.data import (DAY, HOUR, RawNwpSeries, RawPvSeries, consolidate,
                         make_samples)
from pvcast.errors import ConfigError, ContractError
from pvcast.layers import DenseLayer
from pvcast.metrics import nrmse
from pvcast.models import (BENCHMARK_UNITS, Forecast, ModelConfig,
                           benchmark_config, build_model, count_parameters,
                           persistence_forecast)

P_MAX = 1000.0

# (family, mode) -> (published approximate count, tolerance)
BUDGETS = {
    ("ffnn", "expected"): (428_000, 0.03),
    ("ffnn", "pdf"): (428_000, 0.03),
    ("lstm", "expected"): (425_000, 0.03),
    ("lstm", "pdf"): (434_000, 0.03),
    ("s2s", "expected"): (425_000, 0.03),
    ("s2s", "pdf"): (431_000, 0.03),
    ("s2s_attn", "expected"): (441_000, 0.10),
    ("s2s_attn", "pdf"): (423_000, 0.10),
}

# Frozen expected counts for this implementation's layer layout.
EXACT_COUNTS = {
    ("ffnn", "expected"): 426_881,
    ("ffnn", "pdf"): 426_754,
    ("lstm", "expected"): 423_865,
    ("lstm", "pdf"): 432_930,
    ("s2s", "expected"): 424_117,
    ("s2s", "pdf"): 430_386,
    ("s2s_attn", "expected"): 414_745,
    ("s2s_attn", "pdf"): 410_130,
}


@pytest.mark.parametrize("family,mode", sorted(BUDGETS))
def test_parameter_budget_parity(family, mode):
    target, tolerance = BUDGETS[(family, mode)]
    model = build_model(benchmark_config(family, mode), seed=0)
    count = count_parameters(model)
    assert count == EXACT_COUNTS[(family, mode)]
    assert abs(count - target) / target <= tolerance


def test_persistence_has_zero_parameters():
    model = build_model(ModelConfig(family="persistence"), seed=0)
    assert count_parameters(model) == 0


def test_dense_parameter_count_hand_example():
    layer = DenseLayer(2, 3)
    assert sum(p.data.size for _, p in layer.parameters()) == 9


def test_unknown_family_is_config_error():
    with pytest.raises(ConfigError):
        ModelConfig(family="transformer")
    with pytest.raises(ConfigError):
        ModelConfig(family="lstm", target_mode="quantile")


# ---------------------------------------------------------------- samples ---


def _micro_samples(days=8, seed=5, input_steps=96, bins=50):
    rng = np.random.default_rng(seed)
    n = days * DAY
    minutes = np.arange(n, dtype=np.int64)
    mod = minutes % DAY
    envelope = np.clip(np.sin(np.pi * (mod - 6 * HOUR) / (12 * HOUR)), 0.0, None)
    pv = RawPvSeries(minutes, P_MAX * envelope * rng.uniform(0.4, 1.0, size=n), P_MAX)
    hours = HOUR * np.arange(days * 24, dtype=np.int64)
    chans = np.column_stack([
        15 + 5 * np.sin(2 * np.pi * hours / DAY),
        np.full(hours.size, 101.0),
        800 * np.clip(np.sin(np.pi * (hours % DAY - 6 * HOUR) / (12 * HOUR)), 0, None),
        3 + rng.uniform(-1, 1, hours.size),
        np.clip(60 + rng.normal(0, 5, hours.size), 0, 100),
    ])
    ds = consolidate(pv, RawNwpSeries(hours, chans), bins=bins)
    return make_samples(ds, stride_hours=24, input_steps=input_steps), ds


def _micro_config(family, mode, **kw):
    defaults = dict(family=family, target_mode=mode, units_per_layer=6,
                    input_steps=96)
    defaults.update(kw)
    return ModelConfig(**defaults)


@pytest.mark.parametrize("family", ["s2s", "s2s_attn"])
@pytest.mark.parametrize("mode", ["pdf", "expected"])
def test_step_one_identical_under_both_decoding_modes(family, mode):
    samples, _ = _micro_samples()
    model = build_model(_micro_config(family, mode), seed=3)
    teacher = model.forward(samples[0], mode="teacher_forcing")
    recurrent = model.forward(samples[0], mode="self_recurrent")
    if mode == "pdf":
        assert np.array_equal(teacher.steps[0], recurrent.steps[0])
    else:
        assert teacher.steps[0] == recurrent.steps[0]


@pytest.mark.parametrize("family", ["ffnn", "lstm", "s2s", "s2s_attn"])
def test_pdf_forecast_steps_are_distributions(family):
    samples, _ = _micro_samples()
    model = build_model(_micro_config(family, "pdf"), seed=11)
    forecast = model.forward(samples[0])
    assert forecast.steps.shape == (24, 50)
    assert np.all(forecast.steps >= 0.0)
    assert np.all(np.abs(forecast.steps.sum(axis=1) - 1.0) < 1e-9)


@pytest.mark.parametrize("family", ["ffnn", "lstm", "s2s", "s2s_attn"])
def test_forward_deterministic(family):
    samples, _ = _micro_samples()
    model = build_model(_micro_config(family, "pdf"), seed=11)
    a = model.forward(samples[0]).steps
    b = model.forward(samples[0]).steps
    assert np.array_equal(a, b)


def test_expected_mode_outputs_clipped_to_unit_interval():
    samples, _ = _micro_samples()
    model = build_model(_micro_config("s2s", "expected"), seed=1)
    forecast = model.forward(samples[0])
    assert np.all(forecast.steps >= 0.0)
    assert np.all(forecast.steps <= 1.0)


def test_output_steps_independent_of_input_steps():
    samples_long, _ = _micro_samples(input_steps=192)
    model = build_model(_micro_config("s2s", "pdf", input_steps=192), seed=2)
    assert model.forward(samples_long[0]).steps.shape[0] == 24
    samples_short, _ = _micro_samples(input_steps=48)
    model = build_model(_micro_config("lstm", "pdf", input_steps=48), seed=2)
    assert model.forward(samples_short[0]).steps.shape[0] == 24


def test_teacher_forcing_without_targets_is_contract_error():
    samples, _ = _micro_samples()
    s = samples[0]
    s.target_pdf = None
    model = build_model(_micro_config("s2s", "pdf"), seed=0)
    with pytest.raises(ContractError):
        model.forward(s, mode="teacher_forcing")


def test_decoder_nwp_flag_changes_decoder_width_and_runs():
    samples, _ = _micro_samples()
    base = build_model(_micro_config("s2s_attn", "pdf"), seed=4)
    wide = build_model(_micro_config("s2s_attn", "pdf", decoder_nwp=True), seed=4)
    assert count_parameters(wide) > count_parameters(base)
    forecast = wide.forward(samples[0])
    assert forecast.steps.shape == (24, 50)
    with pytest.raises(ConfigError):
        _micro_config("lstm", "pdf", decoder_nwp=True)


# ------------------------------------------------------------ persistence ---


def test_persistence_constant_history():
    history = np.zeros((24, 50))
    history[:, 7] = 1.0
    forecast = persistence_forecast(history)
    assert np.array_equal(forecast.steps, history)


def test_persistence_periodic_signal_has_zero_error():
    # A strictly day-periodic signal: yesterday equals today, so the
    # persistence forecast is exact and its nRMSE vanishes.
    days = 8
    n = days * DAY
    minutes = np.arange(n, dtype=np.int64)
    mod = minutes % DAY
    pattern = P_MAX * np.clip(np.sin(np.pi * (mod - 5 * HOUR) / (14 * HOUR)), 0.0, None)
    pv = RawPvSeries(minutes, pattern, P_MAX)
    hours = HOUR * np.arange(days * 24, dtype=np.int64)
    chans = np.column_stack([np.full(hours.size, 10.0), np.full(hours.size, 101.0),
                             np.full(hours.size, 100.0), np.full(hours.size, 3.0),
                             np.full(hours.size, 50.0)])
    ds = consolidate(pv, RawNwpSeries(hours, chans))
    samples = make_samples(ds, stride_hours=24, input_steps=96)
    model = build_model(ModelConfig(family="persistence", input_steps=96), seed=0)
    for s in samples:
        forecast = model.forward(s)
        assert nrmse(forecast.expected, s.target_e, 1.0) < 1e-12


def test_persistence_matches_index_shift_oracle():
    samples, ds = _micro_samples()
    model = build_model(_micro_config("persistence", "pdf"), seed=0)
    s = samples[1]
    forecast = model.forward(s)
    h0 = ds.hour_index(s.anchor)
    assert np.array_equal(forecast.steps, ds.hour_targets[h0 - 24:h0])


def test_persistence_wrong_history_length():
    samples, _ = _micro_samples()
    s = samples[0]
    s.history_pdf = s.history_pdf[:12]
    model = build_model(_micro_config("persistence", "pdf"), seed=0)
    with pytest.raises(ContractError):
        model.forward(s)


def test_forecast_validation():
    bad = np.full((24, 50), 0.02)
    bad[0, 0] += 0.5
    with pytest.raises(ContractError):
        Forecast("pdf", bad)
    with pytest.raises(ContractError):
        Forecast("expected", np.array([0.5, 1.2]))


def test_benchmark_units_table_complete():
    assert set(BENCHMARK_UNITS) == set(BUDGETS)
