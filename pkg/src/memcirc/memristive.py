"""Memristive one-ports: charge-, flux- and generic-state models.

Current-driven models obey ``v = R(x, i) i``, ``dx/dt = f(x, i)``; the dual
voltage-driven form is ``i = G(x, v) v``, ``dx/dt = f(x, v)``.  Charge and
flux are carried as extra integrator states so that the flux-charge locus is
accurate to the integrator's order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline

from .errors import InvalidArgument, SimulationAborted
from .signals import PeriodicWaveform, sample_crossings


class PassivityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ChargeControlledModel:
    """``v = M(q) i`` with polynomial memristance ``M`` (ascending coefficients)."""

    coeffs: tuple
    q0: float = 0.0

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.coeffs))
        if not c:
            raise InvalidArgument("ChargeControlledModel: memristance needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    def memristance(self, q):
        return P.polyval(q, self.coeffs)

    def flux_of_charge(self, q, psi0: float = 0.0):
        """Closed form psi(q) = psi0 + integral of M from q0 to q."""
        anti = P.polyint(self.coeffs)
        return psi0 + P.polyval(q, anti) - P.polyval(self.q0, anti)


@dataclass(frozen=True)
class FluxControlledModel:
    """``i = W(psi) v`` with polynomial memductance ``W`` (ascending coefficients)."""

    coeffs: tuple
    psi0: float = 0.0

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.coeffs))
        if not c:
            raise InvalidArgument("FluxControlledModel: memductance needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    def memductance(self, psi):
        return P.polyval(psi, self.coeffs)

    def charge_of_flux(self, psi, q0: float = 0.0):
        anti = P.polyint(self.coeffs)
        return q0 + P.polyval(psi, anti) - P.polyval(self.psi0, anti)


@dataclass(frozen=True)
class GenericMemristiveSystem:
    """State-space memristive one-port with user callbacks.

    ``coefficient(x, u)`` is the memristance R(x, i) when current-driven, or the
    memductance G(x, v) when voltage-driven; ``evolution(x, u)`` returns dx/dt.
    """

    coefficient: Callable
    evolution: Callable
    x0: Sequence[float]

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.ndim != 1 or x0.size < 1:
            raise InvalidArgument("GenericMemristiveSystem: state dimension must be >= 1")
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return self.x0.size


@dataclass(frozen=True, eq=False)
class MemristiveTraces:
    t: np.ndarray
    i: np.ndarray
    v: np.ndarray
    q: np.ndarray
    psi: np.ndarray
    x: np.ndarray = None
    period: float = None
    driven_by: str = "current"
    warnings: tuple = field(default=())

    @classmethod
    def from_arrays(cls, t, i, v, q0=0.0, psi0=0.0, period=None):
        """Wrap measured or synthetic traces; q and psi are cumulative trapezoidal integrals."""
        t = np.asarray(t, dtype=float)
        i = np.asarray(i, dtype=float)
        v = np.asarray(v, dtype=float)
        dt = np.diff(t)
        q = q0 + np.concatenate([[0.0], np.cumsum(0.5 * (i[1:] + i[:-1]) * dt)])
        psi = psi0 + np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)])
        return cls(t, i, v, q, psi, x=np.empty((t.size, 0)), period=period)

    def last_period(self, name: str) -> PeriodicWaveform:
        """One trailing period of ``i`` or ``v`` as a PeriodicWaveform."""
        if self.period is None:
            raise InvalidArgument("traces carry no period")
        n = int(round(self.period / (self.t[1] - self.t[0])))
        y = getattr(self, name)
        return PeriodicWaveform(self.period, y[-n - 1:-1])


@dataclass(frozen=True)
class PinchReport:
    applicable: bool
    pinched: bool | None
    worst_violation: float | None
    rel_tol: float
    n_crossings: int = 0

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not applicable"
        return "pinched" if self.pinched else "not pinched"


def _check_drive(drive: PeriodicWaveform, periods: int, dt):
    if periods < 1:
        raise InvalidArgument(f"periods must be >= 1, got {periods}")
    T = drive.period
    if dt is None:
        dt = T / 4096
    if not (0 < dt <= T / 256 * (1 + 1e-12)):
        raise InvalidArgument(f"dt must lie in (0, T/256], got {dt!r} for T={T!r}")
    steps_per_period = int(round(T / dt))
    if not math.isclose(steps_per_period * dt, T, rel_tol=1e-9):
        raise InvalidArgument("dt must divide the drive period into a whole number of steps")
    return T / steps_per_period, steps_per_period * periods


def _simulate(coef, evol, x0, drive, periods, dt, driven_by, watch_passivity):
    """RK4 on the augmented state [x, integral of the drive, integral of the response]."""
    h, nsteps = _check_drive(drive, periods, dt)
    d = x0.size
    # drive values at every RK4 stage time (whole and half steps)
    u_half = drive.at(np.arange(2 * nsteps + 1) * (0.5 * h))

    def rhs(s, u):
        x = s[:d]
        out = np.empty(d + 2)
        out[:d] = evol(x, u)
        out[d] = u
        out[d + 1] = coef(x, u) * u
        return out

    t = np.arange(nsteps + 1) * h
    states = np.empty((nsteps + 1, d + 2))
    y = np.concatenate([x0, [0.0, 0.0]])
    states[0] = y
    for k in range(nsteps):
        ua, um, ub = u_half[2 * k], u_half[2 * k + 1], u_half[2 * k + 2]
        try:
            with np.errstate(all="raise"):
                k1 = rhs(y, ua)
                k2 = rhs(y + 0.5 * h * k1, um)
                k3 = rhs(y + 0.5 * h * k2, um)
                k4 = rhs(y + h * k3, ub)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except (ArithmeticError, ValueError) as exc:
            raise SimulationAborted(f"model evaluation failed: {exc}", float(t[k])) from exc
        if not np.all(np.isfinite(y)):
            raise SimulationAborted("model produced a non-finite state", float(t[k]))
        states[k + 1] = y
    u = u_half[::2]
    x = states[:, :d]
    c = np.array([coef(x[k], u[k]) for k in range(t.size)], dtype=float)
    notes = []
    if watch_passivity and np.any(c <= 0):
        msg = f"passivity violated: coefficient <= 0 at {int(np.sum(c <= 0))} samples (min {c.min():.6g})"
        notes.append(msg)
        warnings.warn(msg, PassivityWarning, stacklevel=3)
    # drive integral, response integral
    return t, u, c * u, states[:, d], states[:, d + 1], x, tuple(notes)


def simulate_current_driven(model, i_drive: PeriodicWaveform, periods: int = 1,
                            dt: float | None = None) -> MemristiveTraces:
    """Integrate a charge-controlled or generic model under an imposed current.

    Fixed-step RK4; the drive is evaluated through its periodic spline.
    """
    if isinstance(model, ChargeControlledModel):
        coeffs = model.coeffs

        def coef(x, u):
            return P.polyval(x[0], coeffs)

        def evol(x, u):
            return u

        x0 = np.array([model.q0])
    elif isinstance(model, GenericMemristiveSystem):
        coef, x0 = model.coefficient, model.x0

        def evol(x, u):
            return np.asarray(model.evolution(x, u), dtype=float)
    else:
        raise InvalidArgument(f"simulate_current_driven: unsupported model {type(model).__name__}")
    charge = isinstance(model, ChargeControlledModel)
    t, i, v, q, psi, x, notes = _simulate(coef, evol, x0, i_drive, periods, dt, "current", charge)
    if charge:
        # the state is the charge itself
        q, x = x[:, 0].copy(), np.empty((t.size, 0))
    return MemristiveTraces(t, i, v, q, psi, x=x, period=i_drive.period,
                            driven_by="current", warnings=notes)


def simulate_voltage_driven(model, v_drive: PeriodicWaveform, periods: int = 1,
                            dt: float | None = None) -> MemristiveTraces:
    """Dual of :func:`simulate_current_driven`: ``i = W(psi) v`` or ``i = G(x, v) v``."""
    if isinstance(model, FluxControlledModel):
        coeffs = model.coeffs

        def coef(x, u):
            return P.polyval(x[0], coeffs)

        def evol(x, u):
            return u

        x0 = np.array([model.psi0])
    elif isinstance(model, GenericMemristiveSystem):
        coef, x0 = model.coefficient, model.x0

        def evol(x, u):
            return np.asarray(model.evolution(x, u), dtype=float)
    else:
        raise InvalidArgument(f"simulate_voltage_driven: unsupported model {type(model).__name__}")
    flux = isinstance(model, FluxControlledModel)
    t, v, i, psi, q, x, notes = _simulate(coef, evol, x0, v_drive, periods, dt, "voltage", flux)
    if flux:
        psi, x = x[:, 0].copy(), np.empty((t.size, 0))
    return MemristiveTraces(t, i, v, q, psi, x=x, period=v_drive.period,
                            driven_by="voltage", warnings=notes)


def flux_charge_curve(tr: MemristiveTraces) -> np.ndarray:
    """The (q, psi) locus as an array of shape (n, 2)."""
    return np.column_stack([tr.q, tr.psi])


def psi_q_deviation(tr: MemristiveTraces, model: ChargeControlledModel) -> float:
    """Largest |psi(t) - psi0 - integral of M from q0 to q(t)| along the trace."""
    expected = model.flux_of_charge(tr.q, tr.psi[0])
    return float(np.max(np.abs(tr.psi - expected)))


def monotone_segments(q):
    """Index ranges [a, b] on which ``q`` is strictly monotone."""
    dq = np.sign(np.diff(q))
    segs, start = [], 0
    for k in range(1, dq.size):
        if dq[k] != dq[k - 1]:
            segs.append((start, k))
            start = k
    segs.append((start, dq.size))
    return segs


def psi_at_charge(tr: MemristiveTraces, q_target: float) -> list:
    """psi wherever the trace passes through ``q_target``.

    Each strictly monotone stretch of q(t) is interpolated with a cubic spline in q.
    """
    out = []
    for a, b in monotone_segments(tr.q):
        q = tr.q[a:b + 1]
        if b - a < 3:
            continue
        lo, hi = min(q[0], q[-1]), max(q[0], q[-1])
        if lo <= q_target <= hi:
            order = np.argsort(q)
            spline = CubicSpline(q[order], tr.psi[a:b + 1][order])
            out.append(float(spline(q_target)))
    return out


def compare_flux_charge(tr_a: MemristiveTraces, tr_b: MemristiveTraces, n_points: int = 512) -> float:
    """Max |psi_a(q) - psi_b(q)| over the shared q-range, both sampled on their
    monotone segments and linearly interpolated in q."""
    def branches(tr):
        out = []
        for a, b in monotone_segments(tr.q):
            q = tr.q[a:b + 1]
            if b - a < 2:
                continue
            order = np.argsort(q)
            out.append((q[order], tr.psi[a:b + 1][order]))
        return out

    ba, bb = branches(tr_a), branches(tr_b)
    worst = 0.0
    for qa, pa in ba:
        for qb, pb in bb:
            lo, hi = max(qa[0], qb[0]), min(qa[-1], qb[-1])
            if hi <= lo:
                continue
            grid = np.linspace(lo, hi, n_points)
            worst = max(worst, float(np.max(np.abs(np.interp(grid, qa, pa) - np.interp(grid, qb, pb)))))
    return worst


def pinched_loop_check(tr: MemristiveTraces, rel_tol: float = 1e-5) -> PinchReport:
    """Check that v vanishes at every zerocrossing of i (v interpolated linearly there)."""
    times, _ = sample_crossings(tr.t, tr.i)
    if not times:
        return PinchReport(False, None, None, rel_tol)
    vmax = float(np.max(np.abs(tr.v)))
    worst = 0.0
    for tc in times:
        j = min(int(np.searchsorted(tr.t, tc, side="right")) - 1, tr.t.size - 2)
        span = tr.t[j + 1] - tr.t[j]
        w = 0.0 if span == 0 else (tc - tr.t[j]) / span
        vc = tr.v[j] + w * (tr.v[j + 1] - tr.v[j])
        worst = max(worst, abs(vc))
    return PinchReport(True, worst <= rel_tol * vmax, worst, rel_tol, len(times))


def write_traces_csv(path, tr: MemristiveTraces):
    from .signals import write_columns

    header = ["t", "i", "v", "q", "psi"]
    cols = [tr.t, tr.i, tr.v, tr.q, tr.psi]
    if tr.x is not None:
        for k in range(tr.x.shape[1]):
            header.append(f"x{k + 1}")
            cols.append(tr.x[:, k])
    write_columns(path, header, cols)
