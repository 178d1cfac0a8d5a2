"""Data pipeline: CSV ingestion, 15-minute consolidation, binned hourly
targets, sliding-window samples, randomized splits with overlap discard, and
a seeded synthetic PV + weather generator.

Time is handled as integer minutes since the Unix epoch. A 15-minute grid
slot labeled t covers [t, t+15); an hourly value labeled t covers [t, t+60).
Sample anchors t0 are hour-aligned; the input window covers [t0 - W, t0) and
the forecast targets cover [t0, t0 + 24h).
"""

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, ContractError, DataError, ParseError

MINUTE = 1
HOUR = 60
DAY = 1440
GRID_STEP = 15
SLOTS_PER_HOUR = HOUR // GRID_STEP

NWP_CHANNELS = ("temp_c", "pressure_kpa", "ghi_wm2", "wind_ms", "rh_pct")
PV_CSV_HEADER = ("timestamp", "power_w")
NWP_CSV_HEADER = ("timestamp",) + NWP_CHANNELS


def parse_timestamp(text: str) -> int:
    """ISO-8601 UTC timestamp to whole minutes since the epoch."""
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"bad timestamp '{text}'") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    seconds = dt.timestamp()
    if seconds % 60:
        raise ParseError(f"timestamp '{text}' is not minute-aligned")
    return int(seconds // 60)


def format_timestamp(minute: int) -> str:
    dt = datetime.fromtimestamp(minute * 60, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Raw series
# ---------------------------------------------------------------------------


@dataclass
class RawPvSeries:
    """1-minute PV power stream in watts, clipped to [0, p_max]."""

    timestamps: np.ndarray
    power: np.ndarray
    p_max: float
    clip_warnings: int = 0


@dataclass
class RawNwpSeries:
    """Hourly weather stream; each value is valid for the hour it labels."""

    timestamps: np.ndarray
    channels: np.ndarray  # (n, 5) in NWP_CHANNELS order


def _check_monotone(stamps: np.ndarray, what: str) -> None:
    diffs = np.diff(stamps)
    bad = np.nonzero(diffs <= 0)[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"{what} timestamps not strictly increasing at row {i + 2}: "
            f"{format_timestamp(int(stamps[i]))} then {format_timestamp(int(stamps[i + 1]))}")


def _read_rows(path, header: tuple) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if tuple(h.strip() for h in first) != header:
            raise ParseError(f"{path}: expected header {','.join(header)}")
        return [row for row in reader if row]


def ingest_csv(pv_path, nwp_path, p_max: float) -> tuple[RawPvSeries, RawNwpSeries]:
    """Parse and validate the PV and weather CSV files.

    PV power below 0 or up to 5% above p_max is clipped (counted as a
    warning); beyond 5% is a data error. Timestamps must strictly increase.
    """
    if p_max <= 0:
        raise ContractError("p_max must be positive")

    pv_rows = _read_rows(pv_path, PV_CSV_HEADER)
    stamps = np.empty(len(pv_rows), dtype=np.int64)
    power = np.empty(len(pv_rows))
    clipped = 0
    for i, row in enumerate(pv_rows):
        if len(row) != 2:
            raise ParseError(f"{pv_path}: line {i + 2}: expected 2 fields, got {len(row)}")
        try:
            stamps[i] = parse_timestamp(row[0])
            value = float(row[1])
        except (ParseError, ValueError) as exc:
            raise ParseError(f"{pv_path}: line {i + 2}: {exc}") from None
        if value > p_max * 1.05:
            raise DataError(
                f"{pv_path}: line {i + 2}: power {value} exceeds rated {p_max} by more than 5%")
        if value < 0.0 or value > p_max:
            clipped += 1
            value = min(max(value, 0.0), p_max)
        power[i] = value
    _check_monotone(stamps, "PV")

    nwp_rows = _read_rows(nwp_path, NWP_CSV_HEADER)
    nstamps = np.empty(len(nwp_rows), dtype=np.int64)
    chans = np.empty((len(nwp_rows), 5))
    for i, row in enumerate(nwp_rows):
        if len(row) != 6:
            raise ParseError(f"{nwp_path}: line {i + 2}: expected 6 fields, got {len(row)}")
        try:
            nstamps[i] = parse_timestamp(row[0])
            chans[i] = [float(v) for v in row[1:]]
        except (ParseError, ValueError) as exc:
            raise ParseError(f"{nwp_path}: line {i + 2}: {exc}") from None
        if not 0.0 <= chans[i, 4] <= 100.0:
            raise DataError(f"{nwp_path}: line {i + 2}: humidity {chans[i, 4]} outside [0, 100]")
        if chans[i, 2] < 0.0:
            raise DataError(f"{nwp_path}: line {i + 2}: negative irradiance {chans[i, 2]}")
    _check_monotone(nstamps, "NWP")

    return (RawPvSeries(stamps, power, float(p_max), clipped),
            RawNwpSeries(nstamps, chans))


# ---------------------------------------------------------------------------
# Binned distributions
# ---------------------------------------------------------------------------


def bin_distribution(minute_values, p_max: float, bins: int = 50) -> np.ndarray:
    """Histogram of sub-hourly power over uniform bins of [0, p_max].

    Bin k covers [k*p_max/bins, (k+1)*p_max/bins); the last bin is closed
    above so the rated maximum itself lands in bin bins-1.
    """
    values = np.asarray(minute_values, dtype=np.float64)
    if values.size == 0:
        raise ContractError("bin_distribution needs at least one value")
    values = np.clip(values, 0.0, p_max)
    idx = np.minimum((values * bins / p_max).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return counts / counts.sum()


def expected_value(probs) -> float:
    """Bin-center expectation of a binned distribution, normalized to [0, 1]."""
    p = np.asarray(probs, dtype=np.float64)
    bins = p.shape[-1]
    centers = (np.arange(bins) + 0.5) / bins
    return float(p @ centers) if p.ndim == 1 else p @ centers


def distribution_quantile(probs, q: float) -> float:
    """Quantile of a binned distribution with linear within-bin interpolation,
    in normalized [0, 1] power units."""
    p = np.asarray(probs, dtype=np.float64)
    bins = p.size
    cdf = np.cumsum(p)
    k = int(np.searchsorted(cdf, q, side="left"))
    if k >= bins:
        return 1.0
    prev = cdf[k - 1] if k > 0 else 0.0
    frac = (q - prev) / (cdf[k] - prev) if cdf[k] > prev else 0.0
    return (k + frac) / bins


# ---------------------------------------------------------------------------
# Consolidated dataset
# ---------------------------------------------------------------------------


@dataclass
class AlignedDataset:
    """Uniform 15-minute grid of 5 weather channels plus PV, with hourly
    binned target distributions built from the native 1-minute PV stream."""

    grid_start: int                 # minute stamp of the first 15-min slot
    features: np.ndarray            # (n_slots, 6), normalized to [0, 1]
    norm_min: np.ndarray            # (6,) physical-unit constants
    norm_max: np.ndarray
    hour_targets: np.ndarray        # (n_hours, bins)
    p_max: float
    bins: int = 50

    @property
    def n_slots(self) -> int:
        return self.features.shape[0]

    @property
    def n_hours(self) -> int:
        return self.hour_targets.shape[0]

    @property
    def hours_end(self) -> int:
        return self.grid_start + self.n_hours * HOUR

    def slot_index(self, minute: int) -> int:
        offset = minute - self.grid_start
        if offset % GRID_STEP:
            raise ContractError(f"minute {minute} is not on the 15-minute grid")
        return offset // GRID_STEP

    def hour_index(self, minute: int) -> int:
        offset = minute - self.grid_start
        if offset % HOUR:
            raise ContractError(f"minute {minute} is not hour-aligned")
        return offset // HOUR

    def denormalize(self, channel: int, values: np.ndarray) -> np.ndarray:
        lo, hi = self.norm_min[channel], self.norm_max[channel]
        return values * (hi - lo) + lo


def _fill_minute_gaps(stamps: np.ndarray, values: np.ndarray, max_gap: int,
                      what: str) -> tuple[np.ndarray, np.ndarray]:
    gaps = np.diff(stamps)
    worst = int(gaps.max()) if gaps.size else 1
    if worst > max_gap:
        i = int(np.argmax(gaps))
        raise DataError(
            f"{what} gap of {worst} minutes at {format_timestamp(int(stamps[i]))} "
            f"exceeds the 120-minute fill limit")
    full = np.arange(stamps[0], stamps[-1] + 1, dtype=np.int64)
    if full.size == stamps.size:
        return stamps, values
    return full, np.interp(full, stamps, values)


def _build_grid(pv: RawPvSeries, nwp: RawNwpSeries, bins: int,
                min_days: int) -> tuple[int, np.ndarray, np.ndarray]:
    """Shared grid construction; returns (first_hour, raw features, targets)."""
    if pv.timestamps.size < 2 or nwp.timestamps.size < 2:
        raise DataError("need at least two records in each stream")

    pv_stamps, pv_power = _fill_minute_gaps(pv.timestamps, pv.power, 120, "PV")
    nwp_gaps = np.diff(nwp.timestamps)
    if nwp_gaps.size and int(nwp_gaps.max()) > 120:
        i = int(np.argmax(nwp_gaps))
        raise DataError(
            f"NWP gap of {int(nwp_gaps.max())} minutes at "
            f"{format_timestamp(int(nwp.timestamps[i]))} exceeds the 120-minute fill limit")

    lo = max(int(pv_stamps[0]), int(nwp.timestamps[0]))
    hi = min(int(pv_stamps[-1]), int(nwp.timestamps[-1]) + HOUR - 1)
    if hi - lo + 1 < min_days * DAY:
        raise DataError(
            f"overlapping coverage is {(hi - lo + 1) / DAY:.2f} days; need >= {min_days}")

    first_hour = int(math.ceil(lo / HOUR)) * HOUR
    last_hour_start = ((hi - HOUR + 1) // HOUR) * HOUR
    n_hours = (last_hour_start - first_hour) // HOUR + 1
    if n_hours <= 0:
        raise DataError("no complete hour in the overlapping coverage")
    n_slots = n_hours * SLOTS_PER_HOUR
    slot_stamps = first_hour + GRID_STEP * np.arange(n_slots, dtype=np.int64)

    # PV: mean over each [t, t+15) slot; minute stream is gap-free here.
    base = first_hour - int(pv_stamps[0])
    pv_window = pv_power[base:base + n_slots * GRID_STEP]
    pv_15 = pv_window.reshape(n_slots, GRID_STEP).mean(axis=1)

    # NWP: linear interpolation at slot stamps, clamped at the range ends.
    features = np.empty((n_slots, 6))
    for ch in range(5):
        features[:, ch] = np.interp(slot_stamps, nwp.timestamps, nwp.channels[:, ch])
    features[:, 5] = pv_15

    hour_minutes = pv_window.reshape(n_hours, HOUR)
    targets = np.empty((n_hours, bins))
    for h in range(n_hours):
        targets[h] = bin_distribution(hour_minutes[h], pv.p_max, bins)

    return first_hour, features, targets


def _normalized_dataset(first_hour: int, features: np.ndarray, targets: np.ndarray,
                        p_max: float, bins: int, norm_min: np.ndarray | None,
                        norm_max: np.ndarray | None) -> AlignedDataset:
    if norm_min is None or norm_max is None:
        norm_min = features.min(axis=0)
        norm_max = features.max(axis=0)
    norm_min = np.asarray(norm_min, dtype=np.float64)
    norm_max = np.asarray(norm_max, dtype=np.float64)
    span = np.where(norm_max > norm_min, norm_max - norm_min, 1.0)
    scaled = np.clip((features - norm_min) / span, 0.0, 1.0)
    return AlignedDataset(first_hour, scaled, norm_min, norm_max, targets, p_max, bins)


def consolidate(pv: RawPvSeries, nwp: RawNwpSeries,
                norm_min: np.ndarray | None = None,
                norm_max: np.ndarray | None = None,
                bins: int = 50,
                min_days: int = 6) -> AlignedDataset:
    """Merge the two streams onto the common 15-minute grid.

    Weather channels are linearly interpolated from hourly to 15-minute
    resolution; PV is averaged over each 15-minute slot; hourly targets are
    histograms of the 60 underlying minute values. Interior gaps up to two
    hours are filled linearly, larger ones are an error. Channels are min-max
    normalized; pass explicit constants to reuse training-split statistics.
    """
    first_hour, features, targets = _build_grid(pv, nwp, bins, min_days)
    return _normalized_dataset(first_hour, features, targets, pv.p_max, bins,
                               norm_min, norm_max)


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


@dataclass
class Sample:
    """One forecasting example: an input window ending just before the anchor
    and the next day of hourly targets."""

    anchor: int
    input: np.ndarray                  # (input_steps, 6)
    history_pdf: np.ndarray            # (output_steps, bins) hours before anchor
    p0_pdf: np.ndarray                 # (bins,) the hour ending at the anchor
    target_pdf: np.ndarray | None      # (output_steps, bins)
    nwp_ahead: np.ndarray | None = None  # (output_steps, 5) forecast-day weather

    @property
    def input_steps(self) -> int:
        return self.input.shape[0]

    @property
    def output_steps(self) -> int:
        return self.history_pdf.shape[0]

    @property
    def p0_e(self) -> float:
        return expected_value(self.p0_pdf)

    @property
    def target_e(self) -> np.ndarray:
        if self.target_pdf is None:
            raise ContractError("sample has no targets")
        return expected_value(self.target_pdf)

    @property
    def history_e(self) -> np.ndarray:
        return expected_value(self.history_pdf)

    def input_span(self) -> tuple[int, int]:
        return (self.anchor - self.input_steps * GRID_STEP,
                self.anchor + self.output_steps * HOUR)

    def target_span(self) -> tuple[int, int]:
        return (self.anchor, self.anchor + self.output_steps * HOUR)


def make_sample(data: AlignedDataset, anchor: int, input_steps: int = 480,
                output_steps: int = 24, with_targets: bool = True) -> Sample:
    """Build the sample anchored at the given hour-aligned minute."""
    window = input_steps * GRID_STEP
    s0 = data.slot_index(anchor - window)
    s1 = data.slot_index(anchor)
    if s0 < 0 or s1 > data.n_slots:
        raise ContractError(f"anchor {format_timestamp(anchor)} lacks a full input window")
    h_hist = data.hour_index(anchor - output_steps * HOUR)
    if h_hist < 0:
        raise ContractError(f"anchor {format_timestamp(anchor)} lacks forecast-length history")
    h0 = data.hour_index(anchor)
    history = data.hour_targets[h_hist:h0]
    target = None
    nwp_ahead = None
    if with_targets:
        if h0 + output_steps > data.n_hours:
            raise ContractError(f"anchor {format_timestamp(anchor)} lacks a full target day")
        target = data.hour_targets[h0:h0 + output_steps].copy()
        hour_slots = data.slot_index(anchor) + SLOTS_PER_HOUR * np.arange(output_steps)
        nwp_ahead = data.features[hour_slots, :5].copy()
    return Sample(anchor, data.features[s0:s1].copy(), history.copy(),
                  data.hour_targets[h0 - 1].copy(), target, nwp_ahead)


def list_anchors(data: AlignedDataset, stride_hours: int = 24, input_steps: int = 480,
                 output_steps: int = 24) -> list[int]:
    window = input_steps * GRID_STEP
    lead = max(window, output_steps * HOUR)
    first = data.grid_start + lead
    last = data.hours_end - output_steps * HOUR
    return list(range(first, last + 1, stride_hours * HOUR))


def make_samples(data: AlignedDataset, stride_hours: int = 24, input_steps: int = 480,
                 output_steps: int = 24) -> list[Sample]:
    """One sample per stride step over every anchor with full coverage."""
    return [make_sample(data, t0, input_steps, output_steps)
            for t0 in list_anchors(data, stride_hours, input_steps, output_steps)]


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass
class SplitResult:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]
    discarded: int

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def _spans_conflict(a: Sample, b: Sample) -> bool:
    for span, target in ((a.input_span(), b.target_span()),
                         (b.input_span(), a.target_span())):
        if span[0] < target[1] and target[0] < span[1]:
            return True
    return False


def split(samples, fractions=(0.70, 0.15, 0.15), seed: int = 0) -> SplitResult:
    """Seeded random assignment at the given ratios, then discard of any
    sample whose full span overlaps a differently assigned sample's target
    span. Ties keep the earlier-anchored sample and drop the later one.
    """
    samples = list(samples)
    if not samples:
        raise ContractError("split needs a nonempty sample set")
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ConfigError(f"fractions must be three values summing to 1, got {fractions}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_train = int(round(fractions[0] * len(samples)))
    n_val = int(round(fractions[1] * len(samples)))
    assign = np.empty(len(samples), dtype=np.int64)
    assign[order[:n_train]] = 0
    assign[order[n_train:n_train + n_val]] = 1
    assign[order[n_train + n_val:]] = 2

    by_anchor = sorted(range(len(samples)), key=lambda i: samples[i].anchor)
    kept: list[int] = []
    discarded = 0
    for i in by_anchor:
        conflict = any(assign[j] != assign[i] and _spans_conflict(samples[j], samples[i])
                       for j in kept)
        if conflict:
            discarded += 1
        else:
            kept.append(i)

    parts: tuple[list[Sample], list[Sample], list[Sample]] = ([], [], [])
    for i in kept:
        parts[assign[i]].append(samples[i])
    return SplitResult(parts[0], parts[1], parts[2], discarded)


@dataclass
class PreparedData:
    """Fully prepared splits plus the constants a run manifest records."""

    dataset: AlignedDataset
    splits: SplitResult
    split_seed: int
    stride_hours: int
    input_steps: int
    output_steps: int


def build_splits(pv: RawPvSeries, nwp: RawNwpSeries, stride_hours: int = 24,
                 input_steps: int = 480, output_steps: int = 24,
                 fractions=(0.70, 0.15, 0.15), seed: int = 0,
                 bins: int = 50) -> PreparedData:
    """End-to-end preparation with leakage-safe normalization.

    The split is decided first; min-max constants are then computed over the
    grid rows covered by training-sample input windows only, and applied to
    the whole grid before the final samples are materialized.
    """
    first_hour, raw_features, targets = _build_grid(pv, nwp, bins, min_days=6)
    probe = AlignedDataset(first_hour, raw_features, np.zeros(6), np.ones(6),
                           targets, pv.p_max, bins)
    first = split(make_samples(probe, stride_hours, input_steps, output_steps),
                  fractions, seed)

    mask = np.zeros(probe.n_slots, dtype=bool)
    for s in first.train:
        i1 = probe.slot_index(s.anchor)
        mask[i1 - input_steps:i1] = True
    if not mask.any():
        raise DataError("no training coverage left after the overlap discard")
    norm_min = raw_features[mask].min(axis=0)
    norm_max = raw_features[mask].max(axis=0)

    data = _normalized_dataset(first_hour, raw_features, targets, pv.p_max, bins,
                               norm_min, norm_max)

    def rebuild(part: list[Sample]) -> list[Sample]:
        return [make_sample(data, s.anchor, input_steps, output_steps) for s in part]

    splits = SplitResult(rebuild(first.train), rebuild(first.val), rebuild(first.test),
                         first.discarded)
    return PreparedData(data, splits, seed, stride_hours, input_steps, output_steps)


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------


def _daylight(day_of_year: np.ndarray, minute_of_day: np.ndarray):
    """Seasonal half-sine envelope; zero outside the sunrise-sunset span."""
    season = np.sin(2.0 * np.pi * (day_of_year - 80.0) / 365.0)
    sunrise = (6.5 - 1.5 * season) * HOUR
    sunset = (17.5 + 1.5 * season) * HOUR
    amplitude = 0.75 + 0.25 * season
    phase = (minute_of_day - sunrise) / (sunset - sunrise)
    up = (phase > 0.0) & (phase < 1.0)
    env = np.where(up, amplitude * np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)
    return env, up


def synth_generate(days: int, seed: int = 0, p_max: float = 5000.0,
                   start_minute: int = 0) -> tuple[RawPvSeries, RawNwpSeries]:
    """Seeded synthetic stand-in for a real site: a clear-sky envelope with
    seasonal modulation, an hourly AR(1) cloudiness factor in [0.1, 1], and
    weather channels driven by the same processes."""
    if days < 6:
        raise ConfigError(f"need at least 6 days of data, got {days}")
    rng = np.random.default_rng(seed)

    n_min = days * DAY
    minutes = start_minute + np.arange(n_min, dtype=np.int64)
    day_of_year = (minutes // DAY) % 365
    minute_of_day = minutes % DAY

    n_hours = days * 24
    # Hourly AR(1) with unit stationary variance; phi trades within-day
    # smoothness against day-to-day carryover of cloud conditions.
    phi = 0.7
    sigma = math.sqrt(1.0 - phi * phi)
    z = np.empty(n_hours + 1)
    z[0] = rng.normal()
    shocks = rng.normal(size=n_hours)
    for h in range(n_hours):
        z[h + 1] = phi * z[h] + sigma * shocks[h]
    cloud_hourly = 0.1 + 0.9 / (1.0 + np.exp(-1.4 * z[1:] + 0.3))

    hour_stamps = start_minute + HOUR * np.arange(n_hours, dtype=np.int64)
    cloud_min = np.interp(minutes, hour_stamps, cloud_hourly)

    env, up = _daylight(day_of_year, minute_of_day)
    pv = p_max * env * cloud_min
    noise = rng.normal(scale=0.01 * p_max, size=n_min)
    pv = np.where(up, np.clip(pv + noise, 0.0, p_max), 0.0)

    doy_h = (hour_stamps // DAY) % 365
    mod_h = hour_stamps % DAY
    env_h, _ = _daylight(doy_h, mod_h)
    hour_frac = mod_h / DAY

    ghi = 1000.0 * env_h * cloud_hourly
    ghi = np.clip(ghi + rng.normal(scale=15.0, size=n_hours) * (env_h > 0), 0.0, None)
    temp = (10.0 + 12.0 * np.sin(2.0 * np.pi * (doy_h - 100.0) / 365.0)
            + 6.0 * np.sin(2.0 * np.pi * (hour_frac - 0.375)) * (0.4 + 0.6 * cloud_hourly)
            + rng.normal(scale=0.3, size=n_hours))
    pressure = (101.3 + 1.2 * np.sin(2.0 * np.pi * doy_h / 365.0 + 0.7)
                + rng.normal(scale=0.05, size=n_hours))
    wind = np.clip(3.0 + 1.5 * np.sin(2.0 * np.pi * hour_frac + 1.0)
                   + 2.0 * (1.0 - cloud_hourly) * 0.5
                   + rng.normal(scale=0.4, size=n_hours), 0.0, None)
    rh = np.clip(55.0 + 30.0 * (1.0 - cloud_hourly)
                 + 8.0 * np.sin(2.0 * np.pi * (hour_frac - 0.2))
                 + rng.normal(scale=2.0, size=n_hours), 0.0, 100.0)

    channels = np.column_stack([temp, pressure, ghi, wind, rh])
    return (RawPvSeries(minutes, pv, float(p_max)),
            RawNwpSeries(hour_stamps, channels))


def write_csv(pv: RawPvSeries, nwp: RawNwpSeries, pv_path, nwp_path) -> None:
    with open(pv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PV_CSV_HEADER)
        for t, w in zip(pv.timestamps, pv.power):
            writer.writerow([format_timestamp(int(t)), f"{w:.3f}"])
    with open(nwp_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NWP_CSV_HEADER)
        for t, row in zip(nwp.timestamps, nwp.channels):
            writer.writerow([format_timestamp(int(t))] + [f"{v:.4f}" for v in row])
