"""Fluorescent-lamp models in a series L-C ballast circuit.

The circuit obeys ``L di/dt + A sign(i) + q/C = U xi(t)`` where ``q`` is the
capacitor charge.  Between sign changes of ``i`` the equation is linear, so it
is integrated with fixed-step RK4 and every sign change is located by
bisection inside the step.  When the current sticks at zero (the drive cannot
overcome the lamp voltage) the solver holds ``i = 0`` until it can leave.

The periodic steady state is the fixed point of the one-period map, found by
Newton shooting with a finite-difference monodromy matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (ConvergenceError, CurrentPauseError, InvalidArgument,
                     NoAsymptoteError, ResonanceError)
from .signals import (FALLING, RISING, LoopMetrics, PeriodicWaveform, classify_area,
                      default_area_tolerance, signed_loop_area)

DEFAULT_STEPS = 2048
EVENT_TOL = 1e-12
PAUSE_LEVEL = 1e-9
PAUSE_FRACTION = 0.01
ENERGY_TOL = 1e-6


# --- element models -------------------------------------------------------

@dataclass(frozen=True)
class HardlimiterLamp:
    A: float

    def __post_init__(self):
        if not (self.A >= 0):
            raise InvalidArgument(f"HardlimiterLamp: A must be >= 0, got {self.A!r}")

    def sign_coefficient(self, L: float) -> float:
        return float(self.A)

    @property
    def series_inductance(self) -> float:
        return 0.0


@dataclass(frozen=True)
class HysteresisLamp:
    """``v = A(1 + k L'/L) sign(i) + L' di/dt``, with k = 2 (L1 = L2 = L').

    Passing ``L1`` and ``L2`` selects the unsplit form
    ``v = A(1 + (L1 + L2)/L) sign(i) + L1 di/dt``.
    """

    A: float
    Lprime: float
    k: float = 2.0
    L1: float | None = None
    L2: float | None = None

    def __post_init__(self):
        if not (self.A >= 0):
            raise InvalidArgument(f"HysteresisLamp: A must be >= 0, got {self.A!r}")
        if (self.L1 is None) != (self.L2 is None):
            raise InvalidArgument("HysteresisLamp: give both L1 and L2 or neither")
        if self.L1 is not None:
            if not (self.L1 > 0 and self.L2 > 0):
                raise InvalidArgument("HysteresisLamp: L1 and L2 must be > 0")
        elif not (self.Lprime > 0):
            raise InvalidArgument(f"HysteresisLamp: Lprime must be > 0, got {self.Lprime!r}")

    def sign_coefficient(self, L: float) -> float:
        if not (L > 0):
            raise InvalidArgument(f"HysteresisLamp: ballast inductance must be > 0, got {L!r}")
        if self.L1 is not None:
            return self.A * (1.0 + (self.L1 + self.L2) / L)
        return self.A * (1.0 + self.k * self.Lprime / L)

    @property
    def series_inductance(self) -> float:
        return self.L1 if self.L1 is not None else self.Lprime


@dataclass(frozen=True)
class RationalAdmittance:
    """Y(s) = num(s)/den(s), coefficients in ascending powers of s."""

    num: tuple
    den: tuple

    def __post_init__(self):
        num = tuple(float(x) for x in np.trim_zeros(np.atleast_1d(np.asarray(self.num, float)), "b")) or (0.0,)
        den = tuple(float(x) for x in np.trim_zeros(np.atleast_1d(np.asarray(self.den, float)), "b"))
        if not den:
            raise InvalidArgument("RationalAdmittance: denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, s):
        return P.polyval(s, self.num) / P.polyval(s, self.den)

    def parallel(self, other: "RationalAdmittance") -> "RationalAdmittance":
        """Admittance of the two one-ports connected in parallel (Y1 + Y2)."""
        num = P.polyadd(P.polymul(self.num, other.den), P.polymul(other.num, self.den))
        return RationalAdmittance(tuple(num), tuple(P.polymul(self.den, other.den)))

    __add__ = parallel

    @property
    def relative_degree(self) -> int:
        return (len(self.den) - 1) - (len(self.num) - 1)


@dataclass(frozen=True)
class SeriesBallast:
    L: float
    C: float

    def __post_init__(self):
        for name in ("L", "C"):
            val = getattr(self, name)
            if val is None or not (isinstance(val, (int, float)) and val > 0):
                raise InvalidArgument(f"SeriesBallast: {name} must be a number > 0, got {val!r}")

    def admittance(self) -> RationalAdmittance:
        return RationalAdmittance((0.0, self.C), (1.0, 0.0, self.L * self.C))

    @property
    def resonance(self) -> float:
        return 1.0 / math.sqrt(self.L * self.C)


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """v_in(t) = U xi(t); xi is normalized to max|xi| = 1 on construction."""

    U: float
    xi: PeriodicWaveform
    exact: Callable | None = None

    def __post_init__(self):
        if not math.isfinite(self.U):
            raise InvalidArgument(f"SourceSpec: U must be finite, got {self.U!r}")
        peak = self.xi.max_abs()
        if peak == 0:
            raise InvalidArgument("SourceSpec: waveform xi is identically zero")
        if peak != 1.0:
            object.__setattr__(self, "xi", PeriodicWaveform(self.xi.period, self.xi.samples / peak))
            if self.exact is not None:
                f = self.exact
                object.__setattr__(self, "exact", lambda t: f(t) / peak)

    @classmethod
    def sine(cls, U: float, period: float, n: int = 4096) -> "SourceSpec":
        w = 2.0 * math.pi / period
        return cls(U, PeriodicWaveform.from_function(lambda t: np.sin(w * t), period, n),
                   exact=lambda t: np.sin(w * t))

    @property
    def period(self) -> float:
        return self.xi.period

    def with_amplitude(self, U: float) -> "SourceSpec":
        return SourceSpec(U, self.xi, self.exact)

    def shape(self, t):
        """xi at arbitrary times."""
        if self.exact is not None:
            return self.exact(t)
        return self.xi.at(t)


@dataclass(frozen=True)
class SolverOptions:
    dt: float | None = None
    max_periods: int = 500
    tol: float = 1e-8

    def steps(self, period: float) -> int:
        if self.dt is None:
            return DEFAULT_STEPS
        if not (self.dt > 0):
            raise InvalidArgument(f"solver dt must be > 0, got {self.dt!r}")
        n = int(round(period / self.dt))
        if n < 64:
            raise InvalidArgument("solver dt must resolve the period with at least 64 steps")
        return n


@dataclass(frozen=True, eq=False)
class LampSteadyState:
    i: PeriodicWaveform
    v_lamp: PeriodicWaveform
    v_in: PeriodicWaveform
    q: PeriodicWaveform
    t1: float | None
    P: float
    converged: bool
    iterations: int
    residual: float
    periods_used: int
    events: tuple = ()
    energy_in: float = 0.0
    energy_lamp: float = 0.0
    periodicity_error: float = math.nan
    pause_fraction: float = 0.0
    W_Lprime_max: float = 0.0
    sign_coefficient: float = 0.0

    @property
    def crossing_free(self) -> bool:
        return not self.events

    @property
    def energy_balance_error(self) -> float:
        """|E_in - E_lamp| relative to the period integral of |v_in i|."""
        scale = float(np.sum(np.abs(self.v_in.samples * self.i.samples))) * self.i.dt
        if scale == 0:
            return abs(self.energy_in - self.energy_lamp)
        return abs(self.energy_in - self.energy_lamp) / scale


# --- element voltages ---------------------------------------------------------

def lamp_voltage_hardlimiter(i: PeriodicWaveform, lamp: HardlimiterLamp) -> PeriodicWaveform:
    return PeriodicWaveform(i.period, lamp.A * np.sign(i.samples))


def lamp_voltage_hysteresis(i: PeriodicWaveform, lamp: HysteresisLamp, L_ballast: float) -> PeriodicWaveform:
    if not (L_ballast > 0):
        raise InvalidArgument(f"lamp_voltage_hysteresis: ballast inductance must be > 0, got {L_ballast!r}")
    A1 = lamp.sign_coefficient(L_ballast)
    didt = i.derivative().samples
    return PeriodicWaveform(i.period, A1 * np.sign(i.samples) + lamp.series_inductance * didt)


def lamp_loop_metrics(st: "LampSteadyState") -> LoopMetrics:
    """Loop metrics of the lamp v-i loop.

    The a*sign(i) part closes on itself (its integral of v di is a*|i| taken
    around the cycle, i.e. zero), so only the continuous remainder enters the
    area; a trapezoid across the sign jump would otherwise leave an O(a*di) residue.
    """
    i, v = st.i.samples, st.v_lamp.samples
    area = signed_loop_area(i, v - st.sign_coefficient * np.sign(i))
    tol = default_area_tolerance(i, v)
    return LoopMetrics(area, float(np.mean(i * v)), classify_area(area, tol), tol)


# --- series circuit integrator --------------------------------------------------

class _Circuit:
    """One-period propagator for L di/dt = v_in - a*s - q/C, dq/dt = i.

    ``s`` is sign(i) (event-driven) or, when ``t1_fixed`` is set, the square wave
    that is +1 on (t1, t1 + T/2) modulo T.
    """

    def __init__(self, L, C, a, src: SourceSpec, steps, t1_fixed=None):
        self.L, self.C, self.a = float(L), float(C), float(a)
        self.src = src
        self.U = float(src.U)
        self.T = src.period
        self.steps = steps
        self.h = self.T / steps
        self.t1_fixed = t1_fixed
        self.table = (self.U * np.asarray(src.shape(np.arange(2 * steps + 1) * (0.5 * self.h)), float)).tolist()
        self.i_scale = 1.0

    def vin(self, t):
        return self.U * float(self.src.shape(t % self.T))

    def scheduled_sign(self, t):
        return 1.0 if ((t - self.t1_fixed) % self.T) < 0.5 * self.T else -1.0

    def _rk4(self, s, i, q, h, va, vm, vb):
        """One RK4 step of size h; returns (i, q, int v_in*i, int s*i)."""
        L, C, a = self.L, self.C, self.a
        as_ = a * s
        di1 = (va - as_ - q / C) / L
        i2 = i + 0.5 * h * di1
        q2 = q + 0.5 * h * i
        di2 = (vm - as_ - q2 / C) / L
        i3 = i + 0.5 * h * di2
        q3 = q + 0.5 * h * i2
        di3 = (vm - as_ - q3 / C) / L
        i4 = i + h * di3
        q4 = q + h * i3
        di4 = (vb - as_ - q4 / C) / L
        h6 = h / 6.0
        i_new = i + h6 * (di1 + 2.0 * di2 + 2.0 * di3 + di4)
        q_new = q + h6 * (i + 2.0 * i2 + 2.0 * i3 + i4)
        e_in = h6 * (va * i + 2.0 * vm * i2 + 2.0 * vm * i3 + vb * i4)
        e_s = h6 * s * (i + 2.0 * i2 + 2.0 * i3 + i4)
        return i_new, q_new, e_in, e_s

    def _step_from(self, s, i, q, t, h):
        return self._rk4(s, i, q, h, self.vin(t), self.vin(t + 0.5 * h), self.vin(t + h))

    def _leave_zero(self, t, q):
        """Mode taken by the current when it sits at zero at time t."""
        d = self.vin(t) - q / self.C
        if d > self.a:
            return 1.0
        if d < -self.a:
            return -1.0
        return 0.0

    def _initial_mode(self, i, q):
        if self.t1_fixed is not None:
            return self.scheduled_sign(0.0)
        if i > 0:
            return 1.0
        if i < 0:
            return -1.0
        return self._leave_zero(0.0, q)

    def propagate(self, i, q, collect=False):
        """Integrate one period from t=0; returns a dict with the end state and,
        if ``collect``, the per-sample traces and located events."""
        h, T, C, a = self.h, self.T, self.C, self.a
        table = self.table
        s = self._initial_mode(i, q)
        last_sign = s
        e_in = e_s = 0.0
        i_max = abs(i)
        pause = 0.0
        longest_pause = 0.0
        events = []
        if collect:
            ii = np.empty(self.steps)
            qq = np.empty(self.steps)
            ss = np.empty(self.steps)
            dd = np.empty(self.steps)
        scale = max(self.i_scale, 1e-300)
        for k in range(self.steps):
            t = k * h
            if collect:
                ii[k], qq[k], ss[k] = i, q, s
                dd[k] = 0.0 if s == 0 else (table[2 * k] - a * s - q / C) / self.L
            t_cur, rem, whole = t, h, True
            guard = 0
            while rem > 0.0:
                guard += 1
                if guard > 64:
                    raise ConvergenceError("lamp integrator: too many events within one step")
                if s == 0.0:
                    # current paused: i = 0, q constant until |v_in - q/C| exceeds a
                    t_end = t_cur + rem
                    if abs(self.vin(t_end) - q / C) <= a:
                        pause += rem
                        longest_pause = max(longest_pause, pause)
                        rem = 0.0
                        continue
                    lo, hi = t_cur, t_end
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        if abs(self.vin(mid) - q / C) > a:
                            hi = mid
                        else:
                            lo = mid
                        if hi - lo <= 1e-15 * T:
                            break
                    pause += hi - t_cur
                    longest_pause = max(longest_pause, pause)
                    pause = 0.0
                    rem -= hi - t_cur
                    t_cur = hi
                    whole = False
                    s = 1.0 if self.vin(hi) - q / C > 0 else -1.0
                    if s != last_sign:
                        events.append((t_cur, RISING if s > 0 else FALLING))
                    last_sign = s
                    continue
                if whole:
                    res = self._rk4(s, i, q, h, table[2 * k], table[2 * k + 1], table[2 * k + 2])
                else:
                    res = self._step_from(s, i, q, t_cur, rem)
                i1 = res[0]
                if self.t1_fixed is not None:
                    # scheduled sign flips
                    nxt = self._next_flip(t_cur)
                    if nxt < t_cur + rem - 1e-15 * T:
                        tau = nxt - t_cur
                        res = self._step_from(s, i, q, t_cur, tau)
                        i, q = res[0], res[1]
                        e_in += res[2]
                        e_s += res[3]
                        s = -s
                        t_cur, rem, whole = nxt, rem - tau, False
                        continue
                    i, q = i1, res[1]
                    e_in += res[2]
                    e_s += res[3]
                    rem = 0.0
                    continue
                if s * i1 > 0.0:
                    i, q = i1, res[1]
                    e_in += res[2]
                    e_s += res[3]
                    i_max = max(i_max, abs(i))
                    rem = 0.0
                    continue
                # sign change of i inside (t_cur, t_cur + rem]: bisect on the step length
                lo, hi = 0.0, rem
                best = res
                tol = EVENT_TOL * scale
                if abs(i1) > tol:
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        r = self._step_from(s, i, q, t_cur, mid)
                        if s * r[0] > 0.0:
                            lo = mid
                        else:
                            hi, best = mid, r
                        if abs(best[0]) <= tol or hi - lo <= 1e-16 * T:
                            break
                tau = hi
                i, q = 0.0, best[1]
                e_in += best[2]
                e_s += best[3]
                t_cur += tau
                rem -= tau
                whole = False
                new_s = self._leave_zero(t_cur, q)
                if new_s == -s:
                    events.append((t_cur, RISING if new_s > 0 else FALLING))
                    last_sign = new_s
                # a pause settles its direction when it ends
                s = new_s
        out = {"i": i, "q": q, "e_in": e_in, "e_s": e_s, "i_max": i_max,
               "longest_pause": longest_pause + (pause if s == 0 else 0.0), "s_end": s}
        if collect:
            out.update(ii=ii, qq=qq, ss=ss, dd=dd, events=tuple(events))
        return out

    def _next_flip(self, t):
        T, t1 = self.T, self.t1_fixed
        half = 0.5 * T
        phase = (t - t1) % half
        nxt = t + (half - phase)
        if nxt <= t:
            nxt += half
        return nxt


def _phasor_guess(L, C, src: SourceSpec, lossless: bool = False):
    """Initial state of the lamp-free linear steady state, from the FFT of xi.

    With ``lossless`` a drive harmonic at the LC resonance has no periodic
    response and raises ResonanceError.
    """
    xi = src.xi.samples
    n = xi.size
    X = np.fft.rfft(xi) / n
    w = src.xi.omega
    i0 = 0.0
    q0 = C * src.U * X[0].real  # dc of the source sits on the capacitor
    for m in range(1, X.size):
        coeff = (1.0 if (n % 2 == 0 and m == n // 2) else 2.0) * src.U * X[m]
        jw = 1j * m * w
        Z = jw * L + 1.0 / (jw * C)
        if abs(Z) < 1e-12 * (m * w * L):
            if lossless and abs(coeff) > 1e-12 * abs(src.U):
                raise ResonanceError(f"drive harmonic {m} sits at the ballast resonance; "
                                     "no periodic steady state without lamp damping")
            continue
        Im = coeff / Z
        i0 += Im.real
        q0 += (Im / jw).real
    return float(i0), float(q0)


def _ballast_parts(ballast: SeriesBallast, lamp):
    if not isinstance(lamp, (HardlimiterLamp, HysteresisLamp)):
        raise InvalidArgument(f"unsupported lamp model {type(lamp).__name__}")
    return ballast.L + lamp.series_inductance, lamp.sign_coefficient(ballast.L)


def simulate_lamp_circuit(ballast: SeriesBallast, lamp, src: SourceSpec,
                          opts: SolverOptions = SolverOptions()) -> LampSteadyState:
    """Periodic steady state of the ballast + lamp circuit driven by ``src``."""
    L_tot, a = _ballast_parts(ballast, lamp)
    steps = opts.steps(src.period)
    circ = _Circuit(L_tot, ballast.C, a, src, steps)
    x = np.array(_phasor_guess(L_tot, ballast.C, src, lossless=(a == 0)))
    w = src.xi.omega
    circ.i_scale = max(abs(src.U) / max(abs(L_tot * w - 1.0 / (ballast.C * w)), 1e-12 * L_tot * w), 1e-300)
    periods = 0

    def pmap(x):
        nonlocal periods
        periods += 1
        out = circ.propagate(x[0], x[1])
        circ.i_scale = max(out["i_max"], 1e-300)
        return out

    def residual(x, out):
        i_scale = max(out["i_max"], abs(x[0]), 1e-300)
        q_scale = max(abs(x[1]), abs(out["q"]), i_scale / src.xi.omega)
        return max(abs(out["i"] - x[0]) / i_scale, abs(out["q"] - x[1]) / q_scale)

    out = pmap(x)
    res = residual(x, out)
    iterations = 0
    converged = res < opts.tol
    while not converged and periods + 3 <= opts.max_periods:
        iterations += 1
        F = np.array([out["i"] - x[0], out["q"] - x[1]])
        i_scale = max(out["i_max"], 1e-12)
        q_scale = max(abs(x[1]), i_scale / src.xi.omega)
        J = np.empty((2, 2))
        for col, d in enumerate((1e-7 * i_scale, 1e-7 * q_scale)):
            xp = x.copy()
            xp[col] += d
            op = pmap(xp)
            J[0, col] = (op["i"] - out["i"]) / d
            J[1, col] = (op["q"] - out["q"]) / d
        try:
            step = np.linalg.solve(J - np.eye(2), -F)
        except np.linalg.LinAlgError:
            step = F  # plain substitution
        accepted = False
        lam = 1.0
        while periods < opts.max_periods and lam >= 1.0 / 64:
            xn = x + lam * step
            on = pmap(xn)
            rn = residual(xn, on)
            if rn < res:
                x, out, res, accepted = xn, on, rn, True
                break
            lam *= 0.5
        if not accepted and periods < opts.max_periods:
            # Newton failed to reduce the residual: fall back to substitution
            xn = np.array([out["i"], out["q"]])
            on = pmap(xn)
            x, out, res = xn, on, residual(xn, on)
        converged = res < opts.tol
    return _finish(circ, ballast, lamp, src, x, converged, iterations, res, periods)


def _finish(circ, ballast, lamp, src, x, converged, iterations, res, periods):
    T = src.period
    final = circ.propagate(x[0], x[1], collect=True)
    again = circ.propagate(final["i"], final["q"])
    i_scale = max(final["i_max"], 1e-300)
    q_scale = max(abs(final["q"]), i_scale / src.xi.omega)
    periodicity = max(abs(again["i"] - final["i"]) / i_scale, abs(again["q"] - final["q"]) / q_scale)
    i = final["ii"]
    pause_frac = final["longest_pause"] / T
    paused_samples = np.mean(np.abs(i) <= PAUSE_LEVEL * max(np.max(np.abs(i)), 1e-300))
    if np.max(np.abs(i)) == 0 or pause_frac > PAUSE_FRACTION or paused_samples > PAUSE_FRACTION:
        raise CurrentPauseError(
            "uninterrupted-current assumption violated: current pauses for "
            f"{100 * max(pause_frac, paused_samples):.3g}% of a period at U={src.U!r}")
    a = circ.a
    iw = PeriodicWaveform(T, i)
    sgn = np.sign(i)
    v_lamp = a * sgn + lamp.series_inductance * final["dd"]
    vin = np.asarray(circ.table[0:2 * circ.steps:2])
    events = final["events"]
    t1 = next((t for t, d in events if d == RISING), None)
    e_in = final["e_in"]
    # L' di/dt contributes L'(i_T^2 - i_0^2)/2 to the lamp energy
    e_lamp = a * final["e_s"] + 0.5 * lamp.series_inductance * (final["i"] ** 2 - x[0] ** 2)
    # A state drifting to infinity (e.g. drive power outgrowing the lamp at
    # resonance) can pass the relative periodicity test while storing energy
    # every period; a true steady state has E_in = E_lamp.
    scale = float(np.sum(np.abs(vin * i))) * (T / i.size)
    if scale > 0 and abs(e_in - e_lamp) > ENERGY_TOL * scale:
        converged = False
    return LampSteadyState(
        i=iw,
        v_lamp=PeriodicWaveform(T, v_lamp),
        v_in=PeriodicWaveform(T, vin),
        q=PeriodicWaveform(T, final["qq"]),
        t1=t1,
        P=e_lamp / T,
        converged=bool(converged),
        iterations=iterations,
        residual=float(res),
        periods_used=periods,
        events=events,
        energy_in=e_in,
        energy_lamp=e_lamp,
        periodicity_error=float(periodicity),
        pause_fraction=float(pause_frac),
        W_Lprime_max=0.5 * lamp.series_inductance * float(np.max(i ** 2)),
        sign_coefficient=a,
    )


# --- sweeps and probes ------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    U: float
    t1: float | None
    P: float | None
    P_over_U2: float | None
    converged: bool
    error: str | None = None


def zerocrossing_sweep(ballast: SeriesBallast, lamp, src: SourceSpec, U_list,
                       opts: SolverOptions = SolverOptions()) -> list:
    rows = []
    for U in U_list:
        try:
            st = simulate_lamp_circuit(ballast, lamp, src.with_amplitude(float(U)), opts)
        except Exception as exc:  # row-level failure, reported in the table
            rows.append(SweepRow(float(U), None, None, None, False, f"{type(exc).__name__}: {exc}"))
            continue
        err = None if st.converged else "no convergence"
        rows.append(SweepRow(float(U), st.t1, st.P, st.P / (U * U) if U else None, st.converged, err))
    return rows


@dataclass(frozen=True, eq=False)
class AffineReport:
    affine_residual: float
    relative_residual: float
    scaling_gap: float
    max_i: float
    U1: float
    U2: float
    currents: dict = field(default_factory=dict)


def periodic_linear_response(ballast: SeriesBallast, A: float, src: SourceSpec, t1_fixed: float,
                             steps: int = DEFAULT_STEPS) -> PeriodicWaveform:
    """Steady current of L di/dt + q/C = U xi(t) + f(t), f = -A * square(t - t1).

    The one-period map is affine, so its fixed point is one linear solve.
    """
    circ = _Circuit(ballast.L, ballast.C, A, src, steps, t1_fixed=t1_fixed)
    b = circ.propagate(0.0, 0.0)
    b = np.array([b["i"], b["q"]])
    phi = np.empty((2, 2))
    for col in range(2):
        e = np.zeros(2)
        e[col] = 1.0
        o = circ.propagate(*e)
        phi[:, col] = np.array([o["i"], o["q"]]) - b
    M = np.eye(2) - phi
    # a drive harmonic at the ballast resonance makes the one-period map (nearly) the identity
    if np.linalg.svd(M, compute_uv=False)[-1] <= 1e-10 * max(1.0, np.linalg.norm(phi, 2)):
        raise ResonanceError("linear solve failed: ballast is resonant with a drive harmonic")
    x = np.linalg.solve(M, b)
    out = circ.propagate(x[0], x[1], collect=True)
    return PeriodicWaveform(src.period, out["ii"])


def affine_check(ballast: SeriesBallast, A: float, src: SourceSpec, t1_fixed: float,
                 U1: float, U2: float, steps: int = DEFAULT_STEPS) -> AffineReport:
    """With the sign term frozen to a known square wave, verify
    i(U1 + U2) = i(U1) + i(U2) - i(0) and measure how far i(2 U1) is from 2 i(U1)."""
    if not (0 <= t1_fixed < src.period):
        raise InvalidArgument("affine_check: t1 must lie in [0, T)")
    resp = {}
    for U in (U1, U2, U1 + U2, 0.0, 2.0 * U1):
        resp[U] = periodic_linear_response(ballast, A, src.with_amplitude(U), t1_fixed, steps).samples
    affine = resp[U1 + U2] - resp[U1] - resp[U2] + resp[0.0]
    scale = max(float(np.max(np.abs(r))) for r in resp.values())
    gap = float(np.max(np.abs(resp[2.0 * U1] - 2.0 * resp[U1])))
    res = float(np.max(np.abs(affine)))
    return AffineReport(res, res / scale if scale else res, gap, scale, U1, U2,
                        {"U1": resp[U1], "U2": resp[U2], "U1+U2": resp[U1 + U2], "0": resp[0.0]})


def _neville(xs, ys, x=0.0):
    p = list(ys)
    n = len(xs)
    for m in range(1, n):
        for k in range(n - m):
            p[k] = ((x - xs[k + m]) * p[k] + (xs[k] - x) * p[k + 1]) / (xs[k] - xs[k + m])
    return p[0]


def asymptotic_inductance(Y: RationalAdmittance, omega: float, n_max: int = 9999) -> float:
    """Ballast inductance seen by high harmonics: 1 / lim n w |Y(j n w)|.

    The limit is extrapolated to 1/n -> 0 from odd harmonics up to ``n_max``.
    """
    if n_max < 100:
        raise InvalidArgument(f"asymptotic_inductance: n_max must be >= 100, got {n_max}")
    if not (omega > 0):
        raise InvalidArgument("asymptotic_inductance: omega must be > 0")
    if Y.num == (0.0,):
        raise NoAsymptoteError("ballast lacks asymptotic inductance: Y is identically zero")
    if Y.relative_degree != 1:
        kind = "diverges" if Y.relative_degree < 1 else "vanishes"
        raise NoAsymptoteError(
            f"ballast lacks asymptotic inductance: n*w*|Y(j n w)| {kind} (relative degree {Y.relative_degree})")
    top = n_max if n_max % 2 else n_max - 1
    ns = [top]
    while len(ns) < 5:
        nxt = ns[-1] // 2
        nxt = nxt if nxt % 2 else nxt - 1
        ns.append(nxt)
    vals = [n * omega * abs(Y(1j * n * omega)) for n in ns]
    limit = _neville([1.0 / n for n in ns], vals)
    if not (math.isfinite(limit) and limit > 0):
        raise NoAsymptoteError(f"ballast lacks asymptotic inductance: limit {limit!r} is not positive")
    return 1.0 / limit


def write_lamp_traces_csv(path, st: LampSteadyState):
    from .signals import write_columns

    write_columns(path, ["t", "i", "v_lamp", "v_in"], [st.i.t, st.i.samples, st.v_lamp.samples, st.v_in.samples])


def write_sweep_csv(path, rows):
    import csv

    from .signals import fmt

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["U", "t1", "P", "P_over_U2"])
        for r in rows:
            w.writerow([fmt(r.U)] + ["" if x is None else fmt(x) for x in (r.t1, r.P, r.P_over_U2)])
