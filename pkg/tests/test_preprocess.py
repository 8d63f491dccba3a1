import numpy as np
import pytest
import scipy.interpolate

from servoguard.errors import ParameterError
from servoguard.preprocess import (UniformTrace, assemble, pchip_interpolate,
                                   pchip_slopes, upsample_position)
from servoguard.signals import SignalTrace, generate_day, OP1
from dataclasses import replace


def test_interpolation_matches_scipy_pchip():
    # scipy implements the same monotone cubic scheme; use it as oracle
    rng = np.random.default_rng(11)
    for _ in range(30):
        m = int(rng.integers(3, 12))
        knots = np.sort(rng.uniform(0, 10, m))
        while np.any(np.diff(knots) <= 0):
            knots = np.sort(rng.uniform(0, 10, m))
        values = rng.normal(size=m) * rng.uniform(0.1, 5)
        queries = rng.uniform(knots[0], knots[-1], 50)
        ours = pchip_interpolate(knots, values, queries)
        ref = scipy.interpolate.PchipInterpolator(knots, values)(queries)
        assert np.max(np.abs(ours - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_slopes_match_scipy_derivative():
    rng = np.random.default_rng(3)
    knots = np.sort(rng.uniform(0, 5, 9))
    values = np.cumsum(rng.uniform(0.1, 1, 9))
    ours = pchip_slopes(knots, values)
    ref = scipy.interpolate.PchipInterpolator(knots, values).derivative()(knots)
    assert np.max(np.abs(ours - ref)) <= 1e-12


def test_knot_values_reproduced_bitwise():
    rng = np.random.default_rng(7)
    knots = np.cumsum(rng.uniform(0.5, 2, 10))
    values = rng.normal(size=10)
    out = pchip_interpolate(knots, values, knots)
    assert np.array_equal(out, values)


def test_linear_data_reproduced():
    knots = np.linspace(0, 9, 10)
    values = 3.0 * knots - 1.0
    queries = np.linspace(0, 9, 101)
    out = pchip_interpolate(knots, values, queries)
    assert np.max(np.abs(out - (3.0 * queries - 1.0))) <= 1e-12


def test_monotone_inputs_stay_monotone():
    rng = np.random.default_rng(19)
    violations = 0
    for _ in range(200):
        m = int(rng.integers(3, 15))
        knots = np.cumsum(rng.uniform(0.2, 2, m))
        values = np.cumsum(rng.uniform(0.0, 1.0, m))
        if rng.random() < 0.5:
            values = -values
        dense = np.linspace(knots[0], knots[-1], 400)
        out = pchip_interpolate(knots, values, dense)
        steps = np.diff(out)
        sign = 1.0 if values[-1] >= values[0] else -1.0
        violations += int(np.any(sign * steps < -1e-12))
    assert violations == 0


def test_interpolation_validation():
    with pytest.raises(ParameterError):
        pchip_interpolate(np.array([1.0]), np.array([1.0]), np.array([1.0]))
    with pytest.raises(ParameterError):
        pchip_interpolate(np.array([1.0, 1.0]), np.array([1.0, 2.0]), np.array([1.0]))


def test_upsample_length_and_knots():
    rng = np.random.default_rng(2)
    pos = rng.normal(size=40)
    up = upsample_position(pos, 8)
    assert up.shape[0] == 8 * (40 - 1) + 1
    assert np.array_equal(up[::8], pos)
    assert np.array_equal(upsample_position(pos, 1), pos)


def test_upsample_validation():
    with pytest.raises(ParameterError):
        upsample_position(np.array([1.0]), 8)
    with pytest.raises(ParameterError):
        upsample_position(np.arange(4.0), 0)


def test_assemble_same_rate_passthrough():
    trace = generate_day(OP1, 300, seed=0)
    uni = assemble(trace)
    assert isinstance(uni, UniformTrace)
    assert uni.channels.shape == (3, 300)
    assert np.array_equal(uni.channels[0], trace.speed)
    assert np.array_equal(uni.channels[1], trace.position)
    assert np.array_equal(uni.channels[2], trace.torque)
    assert uni.rate == trace.motion_rate


def test_assemble_upsamples_slow_position():
    rng = np.random.default_rng(4)
    pos = np.sin(np.linspace(0, 2 * np.pi, 40)) + 0.01 * rng.normal(size=40)
    trace = SignalTrace(day=1, position=pos,
                        speed=rng.normal(size=315), torque=rng.normal(size=315),
                        position_rate=250.0, motion_rate=2000.0)
    uni = assemble(trace)
    # 8x upsample of 40 knots gives 313 samples; everything truncates there
    assert uni.channels.shape == (3, 313)
    assert np.array_equal(uni.channels[1][::8], pos)
    assert np.array_equal(uni.channels[0], trace.speed[:313])


def test_assemble_rejects_non_integer_ratio():
    rng = np.random.default_rng(4)
    trace = SignalTrace(day=1, position=rng.normal(size=40),
                        speed=rng.normal(size=100), torque=rng.normal(size=100),
                        position_rate=300.0, motion_rate=2000.0)
    with pytest.raises(ParameterError):
        assemble(trace)


def test_assemble_deterministic():
    trace = generate_day(OP1, 300, seed=9)
    a = assemble(trace)
    b = assemble(trace)
    assert np.array_equal(a.channels, b.channels)
