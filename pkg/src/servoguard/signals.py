"""Synthetic servo-axis day traces and their on-disk CSV schema.

A "day" is one fixed-length window of position, speed and torque samples
from a single axis.  Two built-in operation profiles (O1, O2) model the
same machine running two different motion programs; an anomaly replaces
a stretch of the torque channel with an off-pattern waveform while the
commanded motion stays untouched.
"""

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ParameterError

CHANNEL_NAMES = ("position", "speed", "torque")

DAY_TOKENS = ("O1", "O2", "A_O1")

DEFAULT_DAY_PLAN = ("O1", "O1", "O1", "A_O1", "O1", "O2", "O2", "O2", "O1")

_SEED_MASK = (1 << 63) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ANOMALY_SALT = 0x5EED0A11


def _derive_seed(seed, index):
    # per-index seed: xor the base seed with a golden-ratio hash of the index
    h = ((index + 1) * _GOLDEN) & ((1 << 64) - 1)
    return (seed ^ h) & _SEED_MASK


@dataclass(frozen=True)
class OperationProfile:
    """Waveform parameters for one motion program.

    Frequencies are in cycles per day window (the sample grid is
    n = i / n_samples, so a frequency f completes f cycles over the
    window).  Torque carries a unit-amplitude fundamental plus a small
    high-frequency ripple.
    """

    position_amp: float
    position_freq: float
    speed_amp: float
    speed_freq: float
    torque_freq: float
    torque_ripple_amp: float = 0.05
    torque_ripple_freq: float = 300.0
    noise_std: float = 1e-4

    def validate(self):
        if self.noise_std < 0:
            raise ParameterError("noise_std must be >= 0, got %r" % (self.noise_std,))
        for name in ("position_amp", "position_freq", "speed_amp", "speed_freq",
                     "torque_freq", "torque_ripple_amp", "torque_ripple_freq",
                     "noise_std"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ParameterError("%s must be finite, got %r" % (name, v))


OP1 = OperationProfile(position_amp=2.0, position_freq=9.0,
                       speed_amp=10.0, speed_freq=10.0, torque_freq=10.0)

OP2 = OperationProfile(position_amp=2.0, position_freq=4.0,
                       speed_amp=10.0, speed_freq=5.0, torque_freq=5.0)

PROFILES = {"O1": OP1, "O2": OP2, "A_O1": OP1}


@dataclass
class SignalTrace:
    """One day of raw axis signals.

    position may be sampled at a lower rate than speed/torque; speed and
    torque always share the motion rate and length.
    """

    day: int
    position: np.ndarray
    speed: np.ndarray
    torque: np.ndarray
    position_rate: float
    motion_rate: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.speed = np.asarray(self.speed, dtype=float)
        self.torque = np.asarray(self.torque, dtype=float)
        if self.day < 1:
            raise ParameterError("day index must be >= 1, got %r" % (self.day,))
        if self.speed.shape != self.torque.shape or self.speed.ndim != 1:
            raise ParameterError("speed and torque must be 1-d arrays of equal length")
        if self.position.ndim != 1 or self.position.size < 1 or self.speed.size < 1:
            raise ParameterError("channels must be non-empty 1-d arrays")
        if self.position_rate <= 0 or self.motion_rate <= 0:
            raise ParameterError("sample rates must be positive")
        for name in ("position", "speed", "torque"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterError("%s contains non-finite samples" % name)


@dataclass(frozen=True)
class AnomalySpec:
    """Replacement-torque description for an injected mechanical fault.

    Torque samples in [start_sample, start_sample + duration) are
    replaced by a fundamental at base_freq plus two interference tones
    and fresh measurement noise.
    """

    start_sample: int
    duration: int
    fast_amp: float = 0.3
    fast_freq: float = 100.0
    slow_amp: float = 0.3
    slow_freq: float = 1.0
    base_freq: float = 10.0
    noise_std: float = 1e-4


@dataclass(frozen=True)
class ScenarioSchedule:
    """Ordered day plan plus the master seed that fixes every draw."""

    days: tuple = DEFAULT_DAY_PLAN
    rng_seed: int = 0
    anomaly: AnomalySpec = None

    def validate(self):
        if len(self.days) == 0:
            raise ParameterError("schedule must contain at least one day")
        for tok in self.days:
            if tok not in DAY_TOKENS:
                raise ParameterError(
                    "unknown day token %r (expected one of %s)" % (tok, ", ".join(DAY_TOKENS)))


def default_schedule(rng_seed=0, trailing_healthy_day=False):
    """The stock nine-day plan: training day, two more healthy days, one
    anomalous day, a healthy day, three days on the second program, then
    a return to the first.  ``trailing_healthy_day`` appends a tenth O1
    day."""
    days = DEFAULT_DAY_PLAN + (("O1",) if trailing_healthy_day else ())
    return ScenarioSchedule(days=days, rng_seed=rng_seed)


def generate_day(profile, n_samples, seed, day=1):
    """Synthesize one day of signals for a motion program.

    All three channels are generated on the same n_samples grid with
    i.i.d. Gaussian measurement noise per channel (draw order: position,
    speed, torque).  Rates are set to n_samples per second so one day
    window spans one second and profile frequencies read as Hz.
    """
    profile.validate()
    if n_samples < 2:
        raise ParameterError("n_samples must be >= 2, got %r" % (n_samples,))
    n = np.arange(n_samples) / n_samples
    rng = np.random.default_rng(seed)
    position = profile.position_amp * np.sin(2 * np.pi * profile.position_freq * n)
    position = position + rng.normal(0.0, profile.noise_std, n_samples)
    speed = profile.speed_amp * np.sin(2 * np.pi * profile.speed_freq * n)
    speed = speed + rng.normal(0.0, profile.noise_std, n_samples)
    torque = (np.sin(2 * np.pi * profile.torque_freq * n)
              + profile.torque_ripple_amp * np.sin(2 * np.pi * profile.torque_ripple_freq * n))
    torque = torque + rng.normal(0.0, profile.noise_std, n_samples)
    rate = float(n_samples)
    return SignalTrace(day=day, position=position, speed=speed, torque=torque,
                       position_rate=rate, motion_rate=rate)


def inject_anomaly(trace, spec, seed=0):
    """Return a copy of ``trace`` with the torque fault from ``spec``.

    Only torque samples inside the window change; position and speed are
    untouched.  duration 0 returns an identical trace.
    """
    m = trace.torque.shape[0]
    if spec.duration < 0:
        raise ParameterError("anomaly duration must be >= 0, got %r" % (spec.duration,))
    if spec.noise_std < 0:
        raise ParameterError("anomaly noise_std must be >= 0, got %r" % (spec.noise_std,))
    if spec.start_sample < 0 or spec.start_sample + spec.duration > m:
        raise ParameterError(
            "anomaly window [%d, %d) falls outside the %d-sample torque trace"
            % (spec.start_sample, spec.start_sample + spec.duration, m))
    torque = trace.torque.copy()
    if spec.duration > 0:
        idx = np.arange(spec.start_sample, spec.start_sample + spec.duration)
        n = idx / m
        rng = np.random.default_rng(seed)
        torque[idx] = (np.sin(2 * np.pi * spec.base_freq * n)
                       + spec.fast_amp * np.sin(2 * np.pi * spec.fast_freq * n)
                       + spec.slow_amp * np.sin(2 * np.pi * spec.slow_freq * n)
                       + rng.normal(0.0, spec.noise_std, spec.duration))
    return replace(trace, torque=torque)


def default_anomaly(n_samples, noise_std=1e-4, base_freq=10.0):
    """Anomaly window centred fractionally as in the stock scenario:
    start at the midpoint, last a fifth of the day."""
    return AnomalySpec(start_sample=n_samples // 2, duration=n_samples // 5,
                       noise_std=noise_std, base_freq=base_freq)


def generate_scenario(schedule, n_samples=300):
    """Generate every day in the schedule.

    Returns (traces, labels) where labels[i] is True for anomalous days.
    Each day draws from its own seed derived from schedule.rng_seed and
    the day index, so day k is reproducible in isolation.
    """
    schedule.validate()
    traces = []
    labels = []
    for i, tok in enumerate(schedule.days):
        day_seed = _derive_seed(schedule.rng_seed, i)
        profile = PROFILES[tok]
        trace = generate_day(profile, n_samples, day_seed, day=i + 1)
        if tok == "A_O1":
            spec = schedule.anomaly
            if spec is None:
                spec = default_anomaly(n_samples, noise_std=profile.noise_std,
                                       base_freq=profile.torque_freq)
            trace = inject_anomaly(trace, spec, seed=day_seed ^ _ANOMALY_SALT)
            labels.append(True)
        else:
            labels.append(False)
        traces.append(trace)
    return traces, labels


def _meta_path(path):
    return Path(path).with_suffix(".meta.json")


def write_csv(traces, path, extra_metadata=None):
    """Write traces to the long-form CSV schema plus a metadata sidecar.

    Columns: day, channel, sample_index, value.  Rows are grouped by day
    then channel (position, speed, torque), sample indices ascending.
    Values are written with 17 significant digits so a read round-trips
    bitwise.
    """
    if len(traces) == 0:
        raise ParameterError("need at least one trace to write")
    first = traces[0]
    for t in traces:
        if (t.position_rate != first.position_rate or t.motion_rate != first.motion_rate
                or t.speed.size != first.speed.size or t.position.size != first.position.size):
            raise ParameterError("all traces in one file must share rates and lengths")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "channel", "sample_index", "value"])
        for t in traces:
            for name in CHANNEL_NAMES:
                arr = getattr(t, name)
                for i in range(arr.shape[0]):
                    writer.writerow([t.day, name, i, format(arr[i], ".17g")])
    meta = {
        "position_rate_hz": first.position_rate,
        "motion_rate_hz": first.motion_rate,
        "n_samples_per_day": int(first.speed.size),
    }
    if extra_metadata:
        meta.update(extra_metadata)
    with open(_meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_metadata(path):
    """Load the sidecar metadata for a dataset CSV, or None if absent."""
    mp = _meta_path(path)
    if not mp.exists():
        return None
    with open(mp) as fh:
        return json.load(fh)


def read_csv(path):
    """Read traces back from the CSV schema.

    Enforces the schema strictly: exact header, known channel names,
    contiguous ordered sample groups, equal lengths across days.  Errors
    name the offending 1-based row.  An empty file yields [].
    """
    path = Path(path)
    meta = read_metadata(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if [h.strip() for h in header] != list(("day", "channel", "sample_index", "value")):
            raise DataFormatError(
                "row 1: expected header day,channel,sample_index,value, got %r" % (",".join(header),))
        days = {}          # day -> {channel: [values]}
        day_order = []
        current = None     # (day, channel) of the open group
        closed = set()
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise DataFormatError("row %d: expected 4 columns, got %d" % (rownum, len(row)))
            day_s, channel, idx_s, val_s = row
            try:
                day = int(day_s)
                idx = int(idx_s)
            except ValueError:
                raise DataFormatError("row %d: non-integer day or sample_index" % rownum)
            if channel not in CHANNEL_NAMES:
                raise DataFormatError("row %d: unknown channel %r" % (rownum, channel))
            try:
                val = float(val_s)
            except ValueError:
                raise DataFormatError("row %d: non-numeric value %r" % (rownum, val_s))
            if not np.isfinite(val):
                raise DataFormatError("row %d: non-finite value %r" % (rownum, val_s))
            key = (day, channel)
            if key != current:
                if key in closed:
                    raise DataFormatError(
                        "row %d: samples for day %d channel %s are not contiguous" % (rownum, day, channel))
                if current is not None:
                    closed.add(current)
                current = key
                if day not in days:
                    days[day] = {}
                    day_order.append(day)
                if channel in days[day]:
                    raise DataFormatError(
                        "row %d: duplicate group for day %d channel %s" % (rownum, day, channel))
                days[day][channel] = []
            expected = len(days[day][channel])
            if idx != expected:
                raise DataFormatError(
                    "row %d: sample_index %d out of order (expected %d)" % (rownum, idx, expected))
            days[day][channel].append(val)
    if not day_order:
        return []
    ref = days[day_order[0]]
    for ch in CHANNEL_NAMES:
        if ch not in ref:
            raise DataFormatError("day %d is missing channel %s" % (day_order[0], ch))
    ref_lens = {ch: len(ref[ch]) for ch in CHANNEL_NAMES}
    traces = []
    for day in day_order:
        chans = days[day]
        for ch in CHANNEL_NAMES:
            if ch not in chans:
                raise DataFormatError("day %d is missing channel %s" % (day, ch))
            if len(chans[ch]) != ref_lens[ch]:
                raise DataFormatError(
                    "day %d channel %s has %d samples, expected %d (inconsistent day lengths)"
                    % (day, ch, len(chans[ch]), ref_lens[ch]))
        n_motion = ref_lens["speed"]
        if meta is not None:
            pos_rate = float(meta["position_rate_hz"])
            motion_rate = float(meta["motion_rate_hz"])
        else:
            pos_rate = float(ref_lens["position"])
            motion_rate = float(n_motion)
        traces.append(SignalTrace(day=day,
                                  position=np.array(chans["position"]),
                                  speed=np.array(chans["speed"]),
                                  torque=np.array(chans["torque"]),
                                  position_rate=pos_rate,
                                  motion_rate=motion_rate))
    return traces
