"""Frame-wise spectral features.

Each day becomes an N x K matrix: N overlapping frames, and per frame
the one-sided STFT magnitudes of every channel concatenated in a fixed
order.  Optionally the three raw channels are augmented with their
pairwise products before the transform; products surface interaction
tones (for example torque ripple amplitude-modulated by speed) that no
single channel shows on its own.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .preprocess import UNIFORM_CHANNELS

WINDOW_KINDS = ("rectangular", "hann")
COMBINATION_MODES = ("none", "pairwise_products")

_PRODUCT_PAIRS = (("speed", "position"), ("speed", "torque"), ("position", "torque"))


@dataclass(frozen=True)
class StftConfig:
    """Framing and windowing parameters for the feature transform."""

    window_len: int = 200
    hop: int = 20
    window: str = "hann"
    combinations: str = "pairwise_products"

    def validate(self):
        if self.window_len < 2:
            raise ParameterError("window_len must be >= 2, got %r" % (self.window_len,))
        if not 1 <= self.hop <= self.window_len:
            raise ParameterError(
                "hop must satisfy 1 <= hop <= window_len, got hop=%r window_len=%r"
                % (self.hop, self.window_len))
        if self.window not in WINDOW_KINDS:
            raise ParameterError("window must be one of %s, got %r"
                                 % (", ".join(WINDOW_KINDS), self.window))
        if self.combinations not in COMBINATION_MODES:
            raise ParameterError("combinations must be one of %s, got %r"
                                 % (", ".join(COMBINATION_MODES), self.combinations))

    @property
    def n_bins(self):
        return self.window_len // 2 + 1


@dataclass
class FeatureMatrix:
    """N x K spectral feature rows for one day.

    data[j] holds frame j's magnitudes, channel blocks concatenated in
    channel_names order, each block n_bins wide.  frame_times gives the
    centre time of each frame in seconds.
    """

    data: np.ndarray
    frame_times: np.ndarray
    config: StftConfig
    channel_names: tuple
    day: int = 0


def window_taper(config):
    """The analysis taper as a length-window_len array (periodic hann)."""
    config.validate()
    w = config.window_len
    if config.window == "rectangular":
        return np.ones(w)
    k = np.arange(w)
    return 0.5 - 0.5 * np.cos(2 * np.pi * k / w)


def frame_count(n_samples, config):
    """Number of full frames: floor((M - window_len)/hop) + 1."""
    config.validate()
    if n_samples < config.window_len:
        raise ParameterError(
            "signal of length %d is shorter than window_len %d" % (n_samples, config.window_len))
    return (n_samples - config.window_len) // config.hop + 1


def stft(signal, config):
    """One-sided STFT of a 1-d signal.

    Returns an N x (window_len//2 + 1) complex array; frame j covers
    samples [j*hop, j*hop + window_len).  Trailing samples that do not
    fill a frame are dropped.
    """
    signal = np.ascontiguousarray(signal, dtype=float)
    if signal.ndim != 1:
        raise ParameterError("signal must be 1-d")
    if not np.all(np.isfinite(signal)):
        raise ParameterError("signal contains non-finite samples")
    n = frame_count(signal.shape[0], config)
    taper = window_taper(config)
    frames = np.lib.stride_tricks.sliding_window_view(signal, config.window_len)[::config.hop][:n]
    return np.fft.rfft(frames * taper, axis=1)


def combine_channels(uniform, mode):
    """Stack the raw channels, optionally followed by their pairwise products.

    Returns (channels, names): a C x M array and the matching name tuple.
    mode 'none' keeps the 3 raw rows; 'pairwise_products' appends
    speed*position, speed*torque and position*torque, giving 6 rows.
    """
    if mode not in COMBINATION_MODES:
        raise ParameterError("combinations must be one of %s, got %r"
                             % (", ".join(COMBINATION_MODES), mode))
    rows = {name: uniform.channels[i] for i, name in enumerate(UNIFORM_CHANNELS)}
    names = list(UNIFORM_CHANNELS)
    stacked = [rows[name] for name in names]
    if mode == "pairwise_products":
        for a, b in _PRODUCT_PAIRS:
            stacked.append(rows[a] * rows[b])
            names.append("%s*%s" % (a, b))
    return np.vstack(stacked), tuple(names)


def feature_matrix(uniform, config):
    """Day features: per frame, per channel, one-sided STFT magnitudes.

    Row j is the concatenation over channels of |STFT| for frame j, so
    K = n_channels * (window_len//2 + 1).
    """
    config.validate()
    channels, names = combine_channels(uniform, config.combinations)
    blocks = [np.abs(stft(channels[i], config)) for i in range(channels.shape[0])]
    data = np.hstack(blocks)
    n = blocks[0].shape[0]
    centres = np.arange(n) * config.hop + config.window_len / 2.0
    frame_times = centres / uniform.rate
    return FeatureMatrix(data=data, frame_times=frame_times, config=config,
                         channel_names=names, day=uniform.day)


def write_feature_csv(fm, path):
    """Dump the feature matrix as CSV with header f0..f{K-1} (debug aid)."""
    k = fm.data.shape[1]
    header = ",".join("f%d" % i for i in range(k))
    np.savetxt(path, fm.data, delimiter=",", header=header, comments="", fmt="%.17g")
