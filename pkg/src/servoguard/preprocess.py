"""Bring the three channels onto one sample grid.

Position is commonly logged at a fraction of the motion-controller rate,
so it is upsampled with a shape-preserving (monotone) cubic interpolant
before the channels are stacked.  Monotone cubic matters here: position
ramps must stay ramps, with no overshoot that would leak fake harmonics
into the spectra downstream.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError

# row order of UniformTrace.channels
UNIFORM_CHANNELS = ("speed", "position", "torque")


@dataclass
class UniformTrace:
    """All channels on the motion-rate grid, stacked [speed; position; torque]."""

    day: int
    channels: np.ndarray
    rate: float

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.ndim != 2 or self.channels.shape[0] != len(UNIFORM_CHANNELS):
            raise ParameterError("channels must be a 3 x M array")
        if not np.all(np.isfinite(self.channels)):
            raise ParameterError("channels contain non-finite samples")


def _check_knots(knots, values):
    knots = np.ascontiguousarray(knots, dtype=float)
    values = np.ascontiguousarray(values, dtype=float)
    if knots.ndim != 1 or values.ndim != 1 or knots.shape != values.shape:
        raise ParameterError("knots and values must be 1-d arrays of equal length")
    if knots.shape[0] < 2:
        raise ParameterError("need at least 2 knots, got %d" % knots.shape[0])
    if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
        raise ParameterError("knots and values must be finite")
    diffs = np.diff(knots)
    if np.any(diffs <= 0):
        bad = int(np.argmax(diffs <= 0))
        raise ParameterError(
            "knots must be strictly increasing (violation between index %d and %d)" % (bad, bad + 1))
    return knots, values


def pchip_slopes(knots, values):
    """Derivative estimates at the knots for the monotone cubic.

    Interior slopes are zero wherever the neighbouring secants change
    sign (local extrema) and a weighted harmonic mean of the secants
    otherwise; endpoints use a clamped one-sided three-point rule.
    """
    knots, values = _check_knots(knots, values)
    return _kernels.monotone_slopes(knots, values)


def pchip_interpolate(knots, values, queries):
    """Evaluate the monotone cubic through (knots, values) at queries.

    Queries outside the knot span clamp to the boundary values; a query
    equal to a knot reproduces the knot value exactly.
    """
    knots, values = _check_knots(knots, values)
    queries = np.ascontiguousarray(queries, dtype=float)
    if queries.ndim != 1:
        raise ParameterError("queries must be a 1-d array")
    if not np.all(np.isfinite(queries)):
        raise ParameterError("queries must be finite")
    slopes = _kernels.monotone_slopes(knots, values)
    return _kernels.hermite_eval(knots, values, slopes, queries)


def upsample_position(position, factor):
    """Raise the position sample count by an integer factor.

    Treats samples as knots on a unit grid and inserts factor-1 monotone
    cubic interpolants between each pair, so L samples become
    factor*(L-1)+1.  factor 1 returns a copy.
    """
    position = np.ascontiguousarray(position, dtype=float)
    if position.ndim != 1 or position.shape[0] < 2:
        raise ParameterError("position must be a 1-d array with at least 2 samples")
    if not np.all(np.isfinite(position)):
        raise ParameterError("position contains non-finite samples")
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ParameterError("factor must be an integer >= 1, got %r" % (factor,))
    if factor == 1:
        return position.copy()
    knots = np.arange(position.shape[0], dtype=float)
    slopes = _kernels.monotone_slopes(knots, position)
    return _kernels.hermite_eval_uniform(position, slopes, int(factor))


def assemble(trace):
    """Build the uniform 3 x M channel stack for one day.

    The motion rate must be an integer multiple of the position rate;
    position is upsampled by that factor and every channel is truncated
    to the shortest length so all rows align sample for sample.
    """
    ratio = trace.motion_rate / trace.position_rate
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9:
        raise ParameterError(
            "motion_rate/position_rate must be a positive integer, got %g" % ratio)
    position = upsample_position(trace.position, factor)
    m = min(position.shape[0], trace.speed.shape[0], trace.torque.shape[0])
    channels = np.vstack((trace.speed[:m], position[:m], trace.torque[:m]))
    return UniformTrace(day=trace.day, channels=channels, rate=trace.motion_rate)
