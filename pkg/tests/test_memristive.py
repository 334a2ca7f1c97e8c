import math
import warnings

import numpy as np
import pytest

from memcirc.errors import InvalidArgument, SimulationAborted
from memcirc.memristive import (ChargeControlledModel, FluxControlledModel, GenericMemristiveSystem,
                                MemristiveTraces, PassivityWarning, compare_flux_charge,
                                flux_charge_curve, monotone_segments, pinched_loop_check,
                                psi_at_charge, psi_q_deviation, simulate_current_driven,
                                simulate_voltage_driven, write_traces_csv)
from memcirc.signals import PeriodicWaveform

T = 2 * math.pi


def drive(f, n=4096):
    return PeriodicWaveform.from_function(f, T, n)


def test_flux_of_charge_is_antiderivative():
    m = ChargeControlledModel((1.0, 1.0))
    # psi = q + q^2/2 for M = 1 + q
    assert m.flux_of_charge(1.0) == pytest.approx(1.5)
    assert m.flux_of_charge(np.array([0.0, 2.0])) == pytest.approx([0.0, 4.0])
    assert m.memristance(2.0) == 3.0


def test_charge_of_flux_is_antiderivative():
    m = FluxControlledModel((2.0, 0.0, 3.0))
    assert m.charge_of_flux(1.0) == pytest.approx(3.0)


def test_constant_memristance_is_a_resistor():
    tr = simulate_current_driven(ChargeControlledModel((5.0,)), drive(np.sin), periods=1)
    assert np.allclose(tr.v, 5 * tr.i, atol=1e-12)
    assert np.allclose(tr.q, 1 - np.cos(tr.t), atol=1e-12)
    assert tr.t[-1] == pytest.approx(T)


def test_current_driven_flux_matches_closed_form():
    m = ChargeControlledModel((1.0, 1.0))
    tr = simulate_current_driven(m, drive(lambda t: np.cos(t) + 0.6 * np.sin(t)), periods=2)
    assert not tr.warnings
    assert psi_q_deviation(tr, m) < 1e-10
    vals = psi_at_charge(tr, 1.0)
    assert vals and all(abs(v - 1.5) < 1e-9 for v in vals)


def test_voltage_driven_dual():
    m = FluxControlledModel((1.0, 0.5))
    tr = simulate_voltage_driven(m, drive(np.sin), periods=1)
    psi = 1 - np.cos(tr.t)
    assert np.allclose(tr.psi, psi, atol=1e-12)
    assert np.allclose(tr.i, (1 + 0.5 * psi) * np.sin(tr.t), atol=1e-9)
    assert np.allclose(tr.q, m.charge_of_flux(tr.psi), atol=1e-9)


def test_generic_system_with_state():
    # R = 1 + x^2, dx/dt = i: same as M(q) = 1 + q^2 with x = q
    sysm = GenericMemristiveSystem(lambda x, i: 1 + x[0] ** 2, lambda x, i: np.array([i]), [0.0])
    tr = simulate_current_driven(sysm, drive(np.cos), periods=1)
    assert tr.x.shape == (tr.t.size, 1)
    assert np.allclose(tr.x[:, 0], np.sin(tr.t), atol=1e-9)
    assert np.allclose(tr.v, (1 + np.sin(tr.t) ** 2) * np.cos(tr.t), atol=1e-9)


def test_negative_memristance_warns():
    with pytest.warns(PassivityWarning):
        tr = simulate_current_driven(ChargeControlledModel((0.5, 1.0)), drive(lambda t: -np.sin(t)))
    assert tr.warnings


def test_nonfinite_callback_aborts():
    sysm = GenericMemristiveSystem(lambda x, i: 1.0, lambda x, i: np.array([x[0] ** 2]), [1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(SimulationAborted):
            simulate_current_driven(sysm, drive(np.sin), periods=3)


@pytest.mark.parametrize("dt", [T / 100, 0.0, -1.0, T / 4096 * 1.37])
def test_bad_step_rejected(dt):
    with pytest.raises(InvalidArgument):
        simulate_current_driven(ChargeControlledModel((1.0,)), drive(np.sin), dt=dt)


def test_distinct_drives_share_flux_charge_curve():
    m = ChargeControlledModel((1.0, 1.0))
    a = simulate_current_driven(m, drive(lambda t: np.cos(t) + 0.6 * np.sin(t)))
    b = simulate_current_driven(m, drive(lambda t: 0.8 * np.cos(t) + 0.3 * np.sin(2 * t)))
    scale = max(np.max(np.abs(a.psi)), np.max(np.abs(b.psi)))
    assert compare_flux_charge(a, b) < 1e-5 * scale


def test_pinched_and_unpinched():
    m = ChargeControlledModel((1.0, 1.0))
    tr = simulate_current_driven(m, drive(lambda t: np.cos(t) + 0.6 * np.sin(t)))
    rep = pinched_loop_check(tr)
    assert rep.pinched and rep.status == "pinched" and rep.n_crossings >= 2
    t = np.linspace(0, T, 4097)
    inductor = MemristiveTraces.from_arrays(t, np.sin(t), np.cos(t), period=T)
    rep = pinched_loop_check(inductor)
    assert rep.applicable and not rep.pinched
    assert rep.worst_violation == pytest.approx(1.0, abs=1e-6)


def test_pinch_not_applicable_without_crossings():
    t = np.linspace(0, 1, 100)
    tr = MemristiveTraces.from_arrays(t, 1 + t, 1 + t)
    assert pinched_loop_check(tr).status == "not applicable"


def test_from_arrays_integrates():
    t = np.linspace(0, 1, 1001)
    tr = MemristiveTraces.from_arrays(t, np.ones_like(t), 2 * t, q0=1.0)
    assert tr.q[-1] == pytest.approx(2.0)
    assert tr.psi[-1] == pytest.approx(1.0)
    assert flux_charge_curve(tr).shape == (1001, 2)


def test_monotone_segments():
    assert monotone_segments(np.array([0, 1, 2, 1, 0, 1.0])) == [(0, 2), (2, 4), (4, 5)]


def test_traces_csv_header(tmp_path):
    tr = simulate_current_driven(ChargeControlledModel((1.0,)), drive(np.sin, 256), dt=T / 256)
    write_traces_csv(tmp_path / "t.csv", tr)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,i,v,q,psi" and len(lines) == 258


def test_rk4_order():
    m = ChargeControlledModel((1.0, 1.0))
    d = drive(lambda t: np.cos(t) + 0.6 * np.sin(t))
    runs = [simulate_current_driven(m, d, dt=T / n) for n in (256, 512, 1024)]
    # compare on the coarse grid
    psi = [r.psi[::k] for r, k in zip(runs, (1, 2, 4))]
    ratio = np.max(np.abs(psi[0] - psi[1])) / np.max(np.abs(psi[1] - psi[2]))
    assert 16 * 0.7 < ratio < 16 * 1.3


def test_zero_mean_drive_returns_charge():
    m = ChargeControlledModel((2.0, 0.5))
    tr = simulate_current_driven(m, drive(lambda t: np.sin(t) + 0.4 * np.cos(3 * t)), periods=3)
    n = 4096
    assert np.max(np.abs(tr.q[::n] - tr.q[0])) < 1e-12
