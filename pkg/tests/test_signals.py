import numpy as np
import pytest

from servoguard.errors import DataFormatError, ParameterError
from servoguard.signals import (OP1, OP2, AnomalySpec, OperationProfile,
                                ScenarioSchedule, SignalTrace, default_anomaly,
                                default_schedule, generate_day, generate_scenario,
                                inject_anomaly, read_csv, read_metadata, write_csv)
from dataclasses import replace


def test_generate_day_matches_formula_without_noise():
    quiet = replace(OP1, noise_std=0.0)
    trace = generate_day(quiet, 300, seed=1)
    n = np.arange(300) / 300.0
    pos = 2.0 * np.sin(2 * np.pi * 9 * n)
    spd = 10.0 * np.sin(2 * np.pi * 10 * n)
    trq = np.sin(2 * np.pi * 10 * n) + 0.05 * np.sin(2 * np.pi * 300 * n)
    assert np.max(np.abs(trace.position - pos)) <= 1e-12
    assert np.max(np.abs(trace.speed - spd)) <= 1e-12
    assert np.max(np.abs(trace.torque - trq)) <= 1e-12


def test_generate_day_noise_level_and_determinism():
    a = generate_day(OP1, 300, seed=42)
    b = generate_day(OP1, 300, seed=42)
    assert np.array_equal(a.position, b.position)
    assert np.array_equal(a.speed, b.speed)
    assert np.array_equal(a.torque, b.torque)
    n = np.arange(300) / 300.0
    assert np.max(np.abs(a.position - 2.0 * np.sin(2 * np.pi * 9 * n))) <= 5e-4
    c = generate_day(OP1, 300, seed=43)
    assert not np.array_equal(a.torque, c.torque)


def test_generate_day_zero_phase_sample():
    quiet = replace(OP2, noise_std=0.0)
    trace = generate_day(quiet, 300, seed=0)
    assert trace.position[0] == 0.0


def test_generate_day_rejects_bad_profile():
    with pytest.raises(ParameterError):
        OperationProfile(position_amp=2.0, position_freq=9.0, speed_amp=10.0,
                         speed_freq=10.0, torque_freq=10.0, noise_std=-1.0).validate()
    with pytest.raises(ParameterError):
        generate_day(OP1, 1, seed=0)


def test_inject_anomaly_is_local_and_analytic():
    quiet = replace(OP1, noise_std=0.0)
    trace = generate_day(quiet, 300, seed=0)
    spec = AnomalySpec(start_sample=150, duration=60, noise_std=0.0)
    out = inject_anomaly(trace, spec)
    assert np.array_equal(out.position, trace.position)
    assert np.array_equal(out.speed, trace.speed)
    changed = np.flatnonzero(out.torque != trace.torque)
    assert changed.min() >= 150 and changed.max() < 210
    # replacement formula at the window start, n = 150/300
    n0 = 0.5
    want = (np.sin(2 * np.pi * 10 * n0) + 0.3 * np.sin(2 * np.pi * 100 * n0)
            + 0.3 * np.sin(2 * np.pi * n0))
    assert abs(out.torque[150] - want) <= 1e-12


def test_inject_anomaly_empty_window_is_identity():
    trace = generate_day(OP1, 300, seed=5)
    out = inject_anomaly(trace, AnomalySpec(start_sample=150, duration=0))
    assert np.array_equal(out.torque, trace.torque)


def test_inject_anomaly_window_validation():
    trace = generate_day(OP1, 300, seed=5)
    with pytest.raises(ParameterError):
        inject_anomaly(trace, AnomalySpec(start_sample=280, duration=60))
    with pytest.raises(ParameterError):
        inject_anomaly(trace, AnomalySpec(start_sample=-1, duration=10))


def test_default_scenario_shape_and_labels():
    traces, labels = generate_scenario(default_schedule(rng_seed=0))
    assert len(traces) == 9
    assert labels == [False, False, False, True, False, False, False, False, False]
    assert [t.day for t in traces] == list(range(1, 10))
    again, _ = generate_scenario(default_schedule(rng_seed=0))
    for a, b in zip(traces, again):
        assert np.array_equal(a.torque, b.torque)


def test_trailing_healthy_day_flag():
    schedule = default_schedule(rng_seed=0, trailing_healthy_day=True)
    traces, labels = generate_scenario(schedule)
    assert len(traces) == 10
    assert labels[-1] is False


def test_single_day_schedule():
    traces, labels = generate_scenario(ScenarioSchedule(days=("O1",), rng_seed=3))
    assert len(traces) == 1 and labels == [False]


def test_scenario_days_differ_and_anomaly_day_deviates():
    traces, _ = generate_scenario(default_schedule(rng_seed=0))
    healthy, anomalous = traces[0], traces[3]
    # outside the fault window the A_O1 day is just another O1 day
    diff = np.abs(anomalous.torque - np.sin(2 * np.pi * 10 * np.arange(300) / 300))
    assert diff[:150].max() <= 0.06     # ripple 0.05 plus noise
    assert diff[150:210].max() > 0.2    # fault band
    assert not np.array_equal(healthy.torque, traces[1].torque)


def test_schedule_validation():
    with pytest.raises(ParameterError):
        ScenarioSchedule(days=(), rng_seed=0).validate()
    with pytest.raises(ParameterError):
        ScenarioSchedule(days=("O1", "bogus"), rng_seed=0).validate()


def test_csv_round_trip(tmp_path):
    traces, _ = generate_scenario(default_schedule(rng_seed=1))
    path = tmp_path / "scenario.csv"
    write_csv(traces, path, extra_metadata={"rng_seed": 1})
    back = read_csv(path)
    assert len(back) == len(traces)
    for a, b in zip(traces, back):
        assert a.day == b.day
        assert np.array_equal(a.position, b.position)
        assert np.array_equal(a.speed, b.speed)
        assert np.array_equal(a.torque, b.torque)
    meta = read_metadata(path)
    assert meta["rng_seed"] == 1
    assert meta["n_samples_per_day"] == 300


def test_read_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("day,channel,sample_index,value\n")
    assert read_csv(path) == []


def test_read_csv_reports_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("day,channel,sample_index,value\n1,torque,0,not-a-number\n")
    with pytest.raises(DataFormatError) as err:
        read_csv(path)
    assert "2" in str(err.value)


def test_read_csv_rejects_missing_channel(tmp_path):
    path = tmp_path / "partial.csv"
    lines = ["day,channel,sample_index,value"]
    for i in range(4):
        lines.append("1,position,%d,0.0" % i)
        lines.append("1,speed,%d,0.0" % i)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataFormatError):
        read_csv(path)


def test_signal_trace_validation():
    good = np.zeros(8)
    with pytest.raises(ParameterError):
        SignalTrace(day=0, position=good, speed=good, torque=good,
                    position_rate=8.0, motion_rate=8.0)
    with pytest.raises(ParameterError):
        SignalTrace(day=1, position=good, speed=good, torque=np.zeros(7),
                    position_rate=8.0, motion_rate=8.0)
    bad = good.copy()
    bad[3] = np.nan
    with pytest.raises(ParameterError):
        SignalTrace(day=1, position=good, speed=bad, torque=good,
                    position_rate=8.0, motion_rate=8.0)


def test_default_anomaly_tracks_length():
    spec = default_anomaly(300)
    assert spec.start_sample == 150 and spec.duration == 60
    spec = default_anomaly(500)
    assert spec.start_sample == 250 and spec.duration == 100
