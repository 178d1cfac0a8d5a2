"""The forecaster families: persistence, one-block FFNN/LSTM, and the
encoder-decoder models with and without attention, in expected-value and
binned-distribution target modes.

Decoder wiring for the attention variant, per step:
  layer 1: query = concat(step input, layer-1 hidden state); keys/values are
           the encoder's top-layer output sequence; the resulting context is
           concatenated with the step input and fed to LSTM layer 1.
  layer j>1: query = layer j's hidden state; context is concatenated with
           layer j-1's output and fed to layer j.
The attention projection width is units//2, which keeps the attention
variants' parameter count in line with the equal-capacity baselines.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import layers as ly
from .autodiff import Tensor
from .data import Sample, expected_value
from .errors import ConfigError, ContractError

FAMILIES = ("persistence", "ffnn", "lstm", "s2s", "s2s_attn")
TARGET_MODES = ("pdf", "expected")

_FAMILY_LABEL = {"persistence": "Persistence", "ffnn": "FFNN", "lstm": "LSTM",
                 "s2s": "S2S", "s2s_attn": "S2S-Attn"}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description; fully determines the parameter count."""

    family: str
    target_mode: str = "pdf"
    units_per_layer: int = 110
    depth: int = 2
    input_features: int = 6
    input_steps: int = 480
    output_steps: int = 24
    bins: int = 50
    decoder_nwp: bool = False  # append forecast-day weather to decoder inputs

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family '{self.family}'")
        if self.target_mode not in TARGET_MODES:
            raise ConfigError(f"unknown target mode '{self.target_mode}'")
        for name in ("units_per_layer", "depth", "input_features", "input_steps",
                     "output_steps", "bins"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.decoder_nwp and self.family in ("ffnn", "lstm", "persistence"):
            raise ConfigError("decoder_nwp applies to encoder-decoder families only")

    @property
    def step_width(self) -> int:
        return self.bins if self.target_mode == "pdf" else 1

    @property
    def name(self) -> str:
        label = _FAMILY_LABEL[self.family]
        if self.family == "persistence":
            return label
        return f"{label}-{'pdf' if self.target_mode == 'pdf' else 'E'}"


@dataclass
class Forecast:
    """A day-ahead forecast: one entry per hourly step.

    In pdf mode each step is a binned distribution summing to 1; in expected
    mode each step is a scalar in [0, 1] (power normalized by rated maximum).
    """

    mode: str
    steps: np.ndarray  # (output_steps, bins) or (output_steps,)

    def __post_init__(self):
        if self.mode == "pdf":
            sums = self.steps.sum(axis=-1)
            if np.any(self.steps < 0.0) or np.any(np.abs(sums - 1.0) > 1e-9):
                raise ContractError("pdf forecast steps must be distributions summing to 1")
        else:
            if np.any(self.steps < 0.0) or np.any(self.steps > 1.0):
                raise ContractError("expected-value forecast steps must lie in [0, 1]")

    @property
    def expected(self) -> np.ndarray:
        if self.mode == "pdf":
            return expected_value(self.steps)
        return self.steps


def persistence_forecast(history_pdf: np.ndarray) -> Forecast:
    """Repeat the previous day: F(t) = P(t - steps) for each forecast step."""
    history = np.asarray(history_pdf, dtype=np.float64)
    if history.ndim != 2:
        raise ContractError(f"history must be (steps, bins), got shape {history.shape}")
    return Forecast("pdf", history.copy())


class Model:
    """Common surface: parameters(), forward(sample, mode) and batch forward."""

    def __init__(self, config: ModelConfig):
        self.config = config

    def parameters(self) -> list[tuple[str, Tensor]]:
        return []

    def forward_batch(self, inputs: np.ndarray, p0: np.ndarray,
                      teacher: np.ndarray | None, mode: str,
                      nwp_ahead: np.ndarray | None = None,
                      input_log: list | None = None) -> list[Tensor]:
        raise NotImplementedError

    def forward(self, sample: Sample, mode: str = "self_recurrent") -> Forecast:
        """Run one sample through the model and assemble a Forecast."""
        cfg = self.config
        if mode not in ("teacher_forcing", "self_recurrent"):
            raise ContractError(f"unknown decoding mode '{mode}'")
        teacher = None
        if mode == "teacher_forcing":
            if sample.target_pdf is None:
                raise ContractError("teacher forcing requires a sample with targets")
            teacher = _teacher_array(sample, cfg)[None]
        p0 = _p0_array(sample, cfg)[None]
        nwp = sample.nwp_ahead[None] if sample.nwp_ahead is not None else None
        outs = self.forward_batch(sample.input[None], p0, teacher, mode, nwp)
        return assemble_forecast(cfg, [o.data[0] for o in outs])


def _p0_array(sample: Sample, cfg: ModelConfig) -> np.ndarray:
    if cfg.target_mode == "pdf":
        return np.asarray(sample.p0_pdf, dtype=np.float64)
    return np.asarray([sample.p0_e], dtype=np.float64)


def _teacher_array(sample: Sample, cfg: ModelConfig) -> np.ndarray:
    if cfg.target_mode == "pdf":
        return np.asarray(sample.target_pdf, dtype=np.float64)
    return np.asarray(sample.target_e, dtype=np.float64)[:, None]


def assemble_forecast(cfg: ModelConfig, step_values: list[np.ndarray]) -> Forecast:
    if cfg.target_mode == "pdf":
        return Forecast("pdf", np.stack(step_values, axis=0))
    flat = np.array([float(v) for v in np.concatenate(step_values)])
    return Forecast("expected", np.clip(flat, 0.0, 1.0))


class PersistenceModel(Model):
    """Zero-parameter reference: replays the previous day's distributions."""

    def forward(self, sample: Sample, mode: str = "self_recurrent") -> Forecast:
        history = sample.history_pdf
        if history.shape[0] != self.config.output_steps:
            raise ContractError(
                f"history has {history.shape[0]} hours, need {self.config.output_steps}")
        return persistence_forecast(history)


class OneBlockModel(Model):
    """Stacked per-step layers followed by the temporal transformation.

    The dense variant shares its weights across time steps; the recurrent
    variant rolls its state over the full input window. Both ignore the
    decoding mode because the whole forecast is produced in one shot.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config)
        u = config.units_per_layer
        self.layers = []
        width = config.input_features
        for _ in range(config.depth):
            if config.family == "ffnn":
                self.layers.append(ly.DenseLayer(width, u, activation="tanh", rng=rng))
            else:
                self.layers.append(ly.LstmLayer(width, u, rng=rng))
            width = u
        self.transform = ly.TemporalTransform(config.input_steps, u, config.step_width,
                                              config.output_steps, rng=rng)

    def parameters(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"layer{i}.{n}", p) for n, p in layer.parameters())
        out.extend((f"transform.{n}", p) for n, p in self.transform.parameters())
        return out

    def forward_batch(self, inputs, p0, teacher, mode, nwp_ahead=None, input_log=None):
        cfg = self.config
        x = Tensor(inputs)
        if cfg.family == "ffnn":
            h = x
            for layer in self.layers:
                h = layer(h)
            seq = h
        else:
            batch, steps = inputs.shape[0], inputs.shape[1]
            states = [layer.initial_state(batch) for layer in self.layers]
            top = []
            for t in range(steps):
                h = ad.slice_axis(x, 1, t, t + 1)
                h = ad.reshape(h, (batch, cfg.input_features))
                for i, layer in enumerate(self.layers):
                    h_i, c_i = ly.lstm_step(layer, h, states[i])
                    states[i] = (h_i, c_i)
                    h = h_i
                top.append(h)
            seq = ad.stack_steps(top, axis=1)
        out = ly.temporal_transform(self.transform, seq)
        if cfg.target_mode == "pdf":
            out = ad.softmax(out)
        return [ad.reshape(ad.slice_axis(out, 1, t, t + 1),
                           (inputs.shape[0], cfg.step_width))
                for t in range(cfg.output_steps)]


class Seq2SeqModel(Model):
    """Encoder-decoder forecaster, optionally with per-step attention.

    The encoder's final layer states seed the decoder layers; its top-layer
    output sequence serves as keys and values for every attention layer. The
    first decoder step consumes the last observed hour in both modes; later
    steps consume the previous target (teacher forcing) or the model's own
    previous output (self-recurrent).
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config)
        u = config.units_per_layer
        feat = config.input_features
        self.attention = config.family == "s2s_attn"
        self.attn_width = max(1, u // 2)

        self.encoder = []
        width = feat
        for _ in range(config.depth):
            self.encoder.append(ly.LstmLayer(width, u, rng=rng))
            width = u

        dec_in = config.step_width + (5 if config.decoder_nwp else 0)
        self.decoder = []
        self.attn = []
        width = dec_in
        for i in range(config.depth):
            if self.attention:
                q_size = dec_in + u if i == 0 else u
                self.attn.append(ly.AttentionLayer(q_size, u, u, self.attn_width, rng=rng))
                width = self.attn_width + (dec_in if i == 0 else u)
            self.decoder.append(ly.LstmLayer(width, u, rng=rng))
            width = u
        self.head = ly.DenseLayer(u, config.step_width, rng=rng)

    def parameters(self):
        out = []
        for i, layer in enumerate(self.encoder):
            out.extend((f"encoder{i}.{n}", p) for n, p in layer.parameters())
        for i, layer in enumerate(self.attn):
            out.extend((f"attention{i}.{n}", p) for n, p in layer.parameters())
        for i, layer in enumerate(self.decoder):
            out.extend((f"decoder{i}.{n}", p) for n, p in layer.parameters())
        out.extend((f"head.{n}", p) for n, p in self.head.parameters())
        return out

    def forward_batch(self, inputs, p0, teacher, mode, nwp_ahead=None, input_log=None):
        cfg = self.config
        if mode == "teacher_forcing" and teacher is None:
            raise ContractError("teacher forcing requires target values")
        if cfg.decoder_nwp and nwp_ahead is None:
            raise ContractError("decoder_nwp models need forecast-day weather")
        batch, steps = inputs.shape[0], inputs.shape[1]
        x = Tensor(inputs)

        states = [layer.initial_state(batch) for layer in self.encoder]
        top = []
        for t in range(steps):
            h = ad.reshape(ad.slice_axis(x, 1, t, t + 1), (batch, cfg.input_features))
            for i, layer in enumerate(self.encoder):
                h_i, c_i = ly.lstm_step(layer, h, states[i])
                states[i] = (h_i, c_i)
                h = h_i
            if self.attention:
                top.append(h)

        kp_vp = None
        if self.attention:
            enc_seq = ad.stack_steps(top, axis=1)
            kp_vp = [layer.project_keys_values(enc_seq, enc_seq) for layer in self.attn]

        dec_states = list(states)
        feedback = Tensor(p0)
        outputs = []
        for t in range(cfg.output_steps):
            if t == 0:
                step_in = feedback
                if input_log is not None:
                    input_log.append("p0")
            elif mode == "teacher_forcing":
                step_in = Tensor(teacher[:, t - 1])
                if input_log is not None:
                    input_log.append("truth")
            else:
                step_in = feedback
                if input_log is not None:
                    input_log.append("model")
            if cfg.decoder_nwp:
                step_in = ad.concat(step_in, Tensor(nwp_ahead[:, t]), axis=-1)

            h = step_in
            for i, layer in enumerate(self.decoder):
                if self.attention:
                    query = ad.concat(h, dec_states[i][0], axis=-1) if i == 0 else dec_states[i][0]
                    qp = self.attn[i].w_q(ad.reshape(query, (batch, 1, query.shape[-1])))
                    ctx = ly.attend_projected(qp, kp_vp[i][0], kp_vp[i][1], self.attn_width)
                    ctx = ad.reshape(ctx, (batch, self.attn_width))
                    h = ad.concat(ctx, h, axis=-1)
                h_i, c_i = ly.lstm_step(layer, h, dec_states[i])
                dec_states[i] = (h_i, c_i)
                h = h_i
            out = self.head(h)
            if cfg.target_mode == "pdf":
                out = ad.softmax(out)
                feedback = out
            else:
                feedback = Tensor(np.clip(out.data, 0.0, 1.0))
            outputs.append(out)
        return outputs


def build_model(config: ModelConfig, seed: int = 0) -> Model:
    """Construct a fully initialized model for the configured family."""
    rng = np.random.default_rng(seed)
    if config.family == "persistence":
        return PersistenceModel(config)
    if config.family in ("ffnn", "lstm"):
        return OneBlockModel(config, rng)
    return Seq2SeqModel(config, rng)


def count_parameters(model: Model) -> int:
    return sum(p.data.size for _, p in model.parameters())


# Published per-family layer widths for the ~425k-parameter comparison grid.
BENCHMARK_UNITS = {
    ("ffnn", "expected"): 640,
    ("ffnn", "pdf"): 616,
    ("lstm", "expected"): 184,
    ("lstm", "pdf"): 184,
    ("s2s", "expected"): 132,
    ("s2s", "pdf"): 128,
    ("s2s_attn", "expected"): 115,
    ("s2s_attn", "pdf"): 110,
}


def benchmark_config(family: str, target_mode: str, **overrides) -> ModelConfig:
    """Config with the published unit count for a family/mode pair."""
    units = BENCHMARK_UNITS[(family, target_mode)]
    cfg = ModelConfig(family=family, target_mode=target_mode, units_per_layer=units)
    return replace(cfg, **overrides) if overrides else cfg
