"""Probabilistic day-ahead photovoltaic power forecasting.

Encoder-decoder recurrent forecasters with scaled dot-product attention,
trained on binned hourly power distributions, plus one-block baselines, a
persistence reference, a synthetic data generator, and a benchmark harness.
"""

__version__ = "0.1.0"

from .autodiff import SgdNesterov, Tape, Tensor, backward
from .data import (AlignedDataset, RawNwpSeries, RawPvSeries, Sample,
                   bin_distribution, build_splits, consolidate, expected_value,
                   ingest_csv, make_samples, split, synth_generate)
from .metrics import EvalReport, crps, evaluate, nme, nrmse, skill
from .models import (Forecast, Model, ModelConfig, build_model,
                     count_parameters, persistence_forecast)
from .training import (TrainConfig, TrainReport, fit, kl_loss, load_checkpoint,
                       mse_loss, save_checkpoint)

__all__ = [
    "AlignedDataset", "EvalReport", "Forecast", "Model", "ModelConfig",
    "RawNwpSeries", "RawPvSeries", "Sample", "SgdNesterov", "Tape", "Tensor",
    "TrainConfig", "TrainReport", "backward", "bin_distribution",
    "build_model", "build_splits", "consolidate", "count_parameters", "crps",
    "evaluate", "expected_value", "fit", "ingest_csv", "kl_loss",
    "load_checkpoint", "make_samples", "mse_loss", "nme", "nrmse",
    "persistence_forecast", "save_checkpoint", "skill", "split",
    "synth_generate",
]
