"""Property-based checks of the invariants each module promises."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from memcirc.fields import CylindricalConductor, poynting_inflow
from memcirc.lamp import (HardlimiterLamp, HysteresisLamp, RationalAdmittance, SeriesBallast,
                          SolverOptions, SourceSpec, affine_check, asymptotic_inductance,
                          simulate_lamp_circuit)
from memcirc.memristive import ChargeControlledModel, psi_q_deviation, simulate_current_driven
from memcirc.powerlaw import (EyeElement, OnePortNetwork, PowerLawElement, effective_coefficient,
                              element_i, element_v, eye_v, return_point, solve_dc)
from memcirc.signals import (PeriodicWaveform, find_zerocrossings, fmt, loop_metrics, synth_square)
from memcirc.switched import LevelCrossing, SwitchedLinearSystem, simulate_switched

pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
alphas = st.floats(min_value=0.1, max_value=10.0)
coefs = st.floats(min_value=0.1, max_value=10.0)
FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SLOW = settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])


# --- fields ---------------------------------------------------------------------

@FAST
@given(pos, pos, pos, pos)
def test_inflow_equals_vi_and_ignores_geometry(l, r, v, i):
    c = CylindricalConductor(l, r, v, i)
    assert abs(poynting_inflow(c) - v * i) <= 8 * math.ulp(v * i)
    c2 = CylindricalConductor(2 * l + 1, r / 3, v, i)
    assert abs(poynting_inflow(c2) - poynting_inflow(c)) <= 16 * math.ulp(v * i)


# --- signals -------------------------------------------------------------------

@FAST
@given(st.floats(0.0, 0.999), st.integers(1, 60))
def test_square_bounded_and_crossing_recovered(frac, nh):
    w = synth_square(frac, 1.0, nh, 1024)
    bound = 4 / math.pi * sum(1.0 / k for k in range(1, 2 * nh, 2))
    assert w.max_abs() <= bound + 1e-12
    t1 = find_zerocrossings(w).first_rising()
    d = abs(t1 - frac)
    assert min(d, 1.0 - d) <= w.dt


@FAST
@given(st.floats(0.1, 3.0), st.floats(-3.0, 3.0), st.floats(0.0, 6.0))
def test_reversal_negates_area_and_keeps_power(a, b, phase):
    t = np.arange(512) * (2 * math.pi / 512)
    i = PeriodicWaveform(2 * math.pi, np.sin(t))
    v = PeriodicWaveform(2 * math.pi, a * np.sin(t + phase) + b * np.sin(2 * t))
    fwd, back = loop_metrics(i, v), loop_metrics(i.reversed(), v.reversed())
    assert back.signed_area == pytest.approx(-fwd.signed_area, abs=1e-12)
    assert back.avg_power == pytest.approx(fwd.avg_power, abs=1e-12)


@FAST
@given(st.floats(0.1, 5.0), st.floats(1.0, 3.0), st.floats(0.0, 6.0), st.booleans())
def test_single_valued_characteristic_has_no_area(D, alpha, phase, saturating):
    # rise and fall visit different sample points, so the polygon keeps an O(h^2) sliver
    t = np.arange(4096) * (2 * math.pi / 4096)
    i = PeriodicWaveform(2 * math.pi, np.sin(t + phase) + 0.3 * np.cos(2 * t))
    y = np.tanh(D * i.samples) if saturating else D * np.abs(i.samples) ** alpha * np.sign(i.samples)
    v = PeriodicWaveform(i.period, y)
    assert abs(loop_metrics(i, v).signed_area) < 1e-6 * v.max_abs() * i.max_abs()


@FAST
@given(st.floats(min_value=-1e300, max_value=1e300))
def test_fmt_keeps_fifteen_digits(x):
    y = float(fmt(x))
    assert y == x or abs(y - x) <= 1e-14 * abs(x)


# --- power law -----------------------------------------------------------------

@FAST
@given(alphas, coefs, st.floats(1e-6, 1e6))
def test_element_round_trip_and_odd(alpha, D, i):
    e = PowerLawElement(alpha, D)
    v = element_v(e, i)
    assert element_i(e, v) == pytest.approx(i, rel=1e-12)
    assert element_v(e, -i) == -v


@FAST
@given(st.floats(0.1, 9.0), st.floats(0.1, 9.0), pos, pos)
def test_sharpening_monotone_in_alpha(a1, da, i_o, v_o):
    a2 = a1 + max(da, 0.05)
    lo = [element_v(PowerLawElement.from_reference(i_o, v_o, a), 0.9 * i_o) / v_o for a in (a1, a2)]
    hi = [element_v(PowerLawElement.from_reference(i_o, v_o, a), 1.1 * i_o) / v_o for a in (a1, a2)]
    assert lo[1] < lo[0] and hi[1] > hi[0]


@FAST
@given(st.sampled_from([0.5, 1.5, 3.0]), st.lists(coefs, min_size=1, max_size=5))
def test_series_parallel_closed_forms(alpha, D):
    elems = [PowerLawElement(alpha, d) for d in D]
    assert effective_coefficient(OnePortNetwork.series(elems)) == pytest.approx(sum(D), rel=1e-9)
    par = sum(d ** (-1 / alpha) for d in D) ** (-alpha)
    assert effective_coefficient(OnePortNetwork.parallel(elems)) == pytest.approx(par, rel=1e-9)


@FAST
@given(st.sampled_from([0.5, 1.5, 3.0]), st.lists(coefs, min_size=5, max_size=5), st.floats(0.1, 10.0))
def test_deff_linear_in_leaf_coefficients(alpha, D, lam):
    def bridge(scale):
        pairs = [("a", "b"), ("a", "c"), ("b", "c"), ("b", "d"), ("c", "d")]
        return OnePortNetwork(("a", "b", "c", "d"), tuple(
            (x, y, PowerLawElement(alpha, scale * d)) for (x, y), d in zip(pairs, D)), "a", "d")

    assert effective_coefficient(bridge(lam)) == pytest.approx(lam * effective_coefficient(bridge(1.0)),
                                                               rel=1e-9)


@FAST
@given(alphas, coefs, alphas, coefs)
def test_return_point_lies_on_both_branches(a1, D1, a2, D2):
    if abs(a1 - a2) < 1e-3:
        return
    i_r, v_r = return_point(EyeElement(a1, D1, a2, D2))
    if not (1e-100 < i_r < 1e100):
        return
    assert D1 * i_r ** a1 == pytest.approx(v_r, rel=1e-9)
    assert D2 * i_r ** a2 == pytest.approx(v_r, rel=1e-9)


@FAST
@given(alphas, coefs, alphas, coefs, st.floats(0.0, 6.0))
def test_eye_is_odd_in_drive(a1, D1, a2, D2, phase):
    e = EyeElement(a1, D1, a2, D2)
    i = PeriodicWaveform.from_function(lambda t: np.sin(t + phase), 2 * math.pi, 256)
    neg = PeriodicWaveform(i.period, -i.samples)
    assert np.array_equal(eye_v(e, neg).samples, -eye_v(e, i).samples)


# --- lamp ------------------------------------------------------------------------

@FAST
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.01, 10.0))
def test_asymptotic_inductance_ignores_faster_branches(L, C, G):
    Y = SeriesBallast(L, C).admittance()
    # a parallel branch G/(s^2 + 1) decays faster than 1/s
    extra = Y + RationalAdmittance((G,), (1.0, 0.0, 1.0))
    assert asymptotic_inductance(extra, 1.0) == pytest.approx(asymptotic_inductance(Y, 1.0), rel=1e-4)


@SLOW
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.05, 0.5), st.floats(0.0, 6.0))
def test_affine_identity(U1, U2, A, t1):
    rep = affine_check(SeriesBallast(1.0, 4.0), A, SourceSpec.sine(1.0, 2 * math.pi), t1, U1, U2, steps=512)
    assert rep.affine_residual < 1e-8 * rep.max_i


@SLOW
@given(st.floats(0.1, 5.0), st.floats(1.2, 6.0))
def test_linear_lamp_matches_phasor(L, U):
    C = 4.0 / L
    st_ = simulate_lamp_circuit(SeriesBallast(L, C), HardlimiterLamp(0.0), SourceSpec.sine(U, 2 * math.pi),
                                SolverOptions(tol=1e-10))
    Z = L - 1 / C
    t = st_.i.t
    # i = U sin(t) / (j X) -> -U cos(t) / X
    assert np.max(np.abs(st_.i.samples + U * np.cos(t) / Z)) < 1e-6 * abs(U / Z)
    assert st_.energy_balance_error < 1e-6


@SLOW
@given(st.floats(1.5, 6.0), st.floats(0.05, 0.4), st.floats(0.0, 0.2))
def test_lamp_steady_states_are_periodic_and_balanced(U, A, Lp):
    lamp = HysteresisLamp(A, Lp) if Lp > 0.01 else HardlimiterLamp(A)
    s = simulate_lamp_circuit(SeriesBallast(1.0, 4.0), lamp, SourceSpec.sine(U, 2 * math.pi),
                              SolverOptions(tol=1e-9))
    assert s.converged
    assert s.periodicity_error < 10 * 1e-9
    assert s.energy_balance_error < 1e-6
    if isinstance(lamp, HysteresisLamp):
        assert loop_metrics(s.i, s.v_lamp).classification == "inductive"


# --- memristive ----------------------------------------------------------------------

@SLOW
@given(st.floats(1.0, 3.0), st.floats(-0.3, 0.3), st.floats(0.05, 0.3), st.floats(0.2, 1.5),
       st.floats(0.0, 6.0))
def test_flux_follows_memristance_integral(m0, m1, m2, amp, phase):
    model = ChargeControlledModel((m0, m1, m2))
    drive = PeriodicWaveform.from_function(lambda t: amp * np.cos(t + phase), 2 * math.pi, 1024)
    tr = simulate_current_driven(model, drive)
    assert psi_q_deviation(tr, model) <= 1e-6 * np.max(np.abs(tr.psi))


# --- switched ---------------------------------------------------------------------

@SLOW
@given(st.floats(0.5, 3.0), st.floats(-0.2, 0.2), st.floats(0.5, 2.0))
def test_switched_trajectory_piecewise_exponential(w2, damping, x0):
    A0 = np.array([[damping, 1.0], [-1.0, damping]])
    A1 = np.array([[0.0, 1.0], [-w2 ** 2, 0.0]])
    Z = np.zeros((2, 1))
    tr = simulate_switched(SwitchedLinearSystem(((A0, Z), (A1, Z)), LevelCrossing(0)), [x0, 0.0],
                           t_span=(0.0, 6.0), dt=1e-3)
    assert all(j == 0.0 for j in tr.state_jumps)
    bounds = [0.0, *tr.switch_times, 6.0]
    scale = np.max(np.abs(tr.x))
    for lo, hi in zip(bounds, bounds[1:]):
        idx = np.flatnonzero((tr.t > lo) & (tr.t < hi))
        if idx.size < 2:
            continue
        A = (A0, A1)[tr.mode[idx[0]]]
        pred = expm((tr.t[idx[-1]] - tr.t[idx[0]]) * A) @ tr.x[idx[0]]
        assert np.max(np.abs(pred - tr.x[idx[-1]])) < 1e-8 * scale
