import math

import numpy as np
import pytest

from memcirc.errors import InvalidArgument
from memcirc.signals import (FALLING, RISING, PeriodicWaveform, find_zerocrossings, loop_metrics,
                             positive_lobe_area, read_waveform_csv, sample_crossings,
                             signed_loop_area, square_partial_sum, synth_square,
                             write_pair_csv, write_waveform_csv)


def test_waveform_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        PeriodicWaveform(1.0, np.zeros(4))
    with pytest.raises(InvalidArgument):
        PeriodicWaveform(0.0, np.zeros(16))
    with pytest.raises(InvalidArgument):
        PeriodicWaveform(1.0, np.r_[np.zeros(15), np.nan])


def test_grid_and_properties(unit_sine):
    assert unit_sine.n == 4096
    assert unit_sine.dt == pytest.approx(2 * math.pi / 4096)
    assert unit_sine.omega == pytest.approx(1.0)
    assert unit_sine.t[0] == 0.0 and unit_sine.t[-1] < unit_sine.period
    assert unit_sine.mean() == pytest.approx(0.0, abs=1e-12)
    assert unit_sine.max_abs() == pytest.approx(1.0, abs=1e-6)


def test_at_interpolates_between_samples(unit_sine):
    t = np.array([0.1234, 3.3, 6.0, 2 * math.pi + 0.5, -0.5])
    assert np.allclose(unit_sine.at(t), np.sin(t), atol=1e-11)


def test_derivative_of_sine_is_cosine(unit_sine):
    d = unit_sine.derivative()
    assert np.max(np.abs(d.samples - np.cos(d.t))) < 1e-6


def test_reversed_runs_time_backwards(unit_sine):
    r = unit_sine.reversed()
    assert np.allclose(r.samples, np.sin(-r.t), atol=1e-12)


def test_square_partial_sum_plateaus():
    t = np.array([0.5, 0.75, 0.0])
    y = square_partial_sum(t, 0.25, 1.0, 2000)
    # rising edge at t1 = 0.25, falling edge at 0.75
    assert y[0] == pytest.approx(1.0, abs=2e-3)
    assert abs(y[1]) < 1e-9
    assert y[2] == pytest.approx(-1.0, abs=2e-3)


def test_single_harmonic_square_is_scaled_sine():
    w = synth_square(0.0, 1.0, 1, 256)
    assert np.allclose(w.samples, 4 / math.pi * np.sin(2 * math.pi * w.t), atol=1e-12)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0), (1.0, 1.0, 10), (-0.1, 1.0, 10), (0.0, -1.0, 10)])
def test_synth_square_validation(args):
    with pytest.raises(InvalidArgument):
        synth_square(*args)


def test_zerocrossings_of_sine(unit_sine):
    zc = find_zerocrossings(unit_sine)
    assert len(zc) == 2
    assert zc.rising() == [pytest.approx(0.0, abs=1e-12)]
    assert zc.falling() == [pytest.approx(math.pi, abs=1e-9)]
    assert zc.first_rising() == pytest.approx(0.0, abs=1e-12)


def test_exact_zero_sample_takes_next_sign():
    t = np.arange(8.0)
    y = np.array([-1.0, 0.0, 0.0, 2.0, 1.0, -1.0, -2.0, -1.0])
    times, dirs = sample_crossings(t, y)
    # the run of zeros starts the crossing at its first sample
    assert times[0] == 1.0 and dirs[0] == RISING
    assert times[1] == pytest.approx(4.5) and dirs[1] == FALLING


def test_identically_zero_is_degenerate():
    zc = find_zerocrossings(PeriodicWaveform(1.0, np.zeros(32)))
    assert zc.degenerate and len(zc) == 0


def test_inductor_capacitor_resistor_loops(unit_sine, unit_cosine):
    ind = loop_metrics(unit_sine, unit_cosine)
    cap = loop_metrics(unit_sine, PeriodicWaveform(unit_cosine.period, -unit_cosine.samples))
    res = loop_metrics(unit_sine, unit_sine)
    assert ind.classification == "inductive" and ind.signed_area == pytest.approx(math.pi, abs=1e-3)
    assert cap.classification == "capacitive" and cap.signed_area == pytest.approx(-math.pi, abs=1e-3)
    assert res.classification == "resistive" and abs(res.signed_area) < 1e-12
    assert res.avg_power == pytest.approx(0.5, rel=1e-9)


def test_loop_metrics_needs_shared_grid(unit_sine):
    with pytest.raises(InvalidArgument):
        loop_metrics(unit_sine, PeriodicWaveform(unit_sine.period, np.zeros(100)))


def test_signed_area_of_square_path_is_clockwise_positive():
    # (0,0) -> (0,1) -> (1,1) -> (1,0): clockwise in the (i, v) plane
    i = np.array([0.0, 0.0, 1.0, 1.0])
    v = np.array([0.0, 1.0, 1.0, 0.0])
    assert signed_loop_area(i, v) == pytest.approx(1.0)


def test_positive_lobe_area_of_odd_loop():
    # the two lobes of an odd loop cancel; the i > 0 lobe alone does not
    t = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    i = np.sin(t)
    v = np.where(np.cos(t) > 0, 2 * i, np.abs(i) * i)
    assert abs(signed_loop_area(i, v)) < 1e-3
    assert positive_lobe_area(i, v) == pytest.approx(2 / 3, abs=1e-5)


def test_csv_round_trip(tmp_path, unit_sine, unit_cosine):
    p = tmp_path / "w.csv"
    write_waveform_csv(p, unit_sine)
    back = read_waveform_csv(p)
    assert back.period == pytest.approx(unit_sine.period, rel=1e-13)
    assert np.allclose(back.samples, unit_sine.samples, rtol=0, atol=1e-14)
    assert p.read_text().splitlines()[0] == "t,value"
    q = tmp_path / "pair.csv"
    write_pair_csv(q, unit_sine, unit_cosine)
    assert q.read_text().splitlines()[0] == "t,i,v"
    assert not list(tmp_path.glob("*.tmp"))
