"""Periodic waveforms, square-wave synthesis, zerocrossings and v-i loop metrics.

All waveforms live on a uniform one-period grid ``t_j = j*T/N``.  Quadratures
are trapezoidal and wrap around the period.
"""

from __future__ import annotations

import contextlib
import csv
import math
import os
import tempfile
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidArgument

MIN_SAMPLES = 8
DEFAULT_SAMPLES = 4096

RISING = "rising"
FALLING = "falling"


@dataclass(frozen=True, eq=False)
class PeriodicWaveform:
    """One period of a T-periodic signal sampled at ``t_j = j*T/N``."""

    period: float
    samples: np.ndarray

    def __post_init__(self):
        y = np.array(self.samples, dtype=float).ravel()
        if not (math.isfinite(self.period) and self.period > 0):
            raise InvalidArgument(f"PeriodicWaveform: period must be > 0, got {self.period!r}")
        if y.size < MIN_SAMPLES:
            raise InvalidArgument(f"PeriodicWaveform: need at least {MIN_SAMPLES} samples, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise InvalidArgument("PeriodicWaveform: samples must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "samples", y)
        object.__setattr__(self, "period", float(self.period))

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], period: float,
                      n: int = DEFAULT_SAMPLES) -> "PeriodicWaveform":
        if n < MIN_SAMPLES:
            raise InvalidArgument(f"PeriodicWaveform: need at least {MIN_SAMPLES} samples, got {n}")
        t = np.arange(n) * (period / n)
        return cls(period, np.asarray(func(t), dtype=float) * np.ones(n))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def dt(self) -> float:
        return self.period / self.n

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @cached_property
    def _spline(self) -> CubicSpline:
        tt = np.arange(self.n + 1) * self.dt
        yy = np.append(self.samples, self.samples[0])
        return CubicSpline(tt, yy, bc_type="periodic")

    def at(self, t):
        """Evaluate the periodic cubic-spline interpolant at arbitrary times."""
        return self._spline(np.mod(t, self.period))

    def derivative(self) -> "PeriodicWaveform":
        """Central-difference derivative on the periodic grid."""
        y = self.samples
        return PeriodicWaveform(self.period, (np.roll(y, -1) - np.roll(y, 1)) / (2.0 * self.dt))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def reversed(self) -> "PeriodicWaveform":
        """Time-reversed signal y(-t), sampled on the same grid."""
        return PeriodicWaveform(self.period, np.roll(self.samples[::-1], 1))

    def same_grid(self, other: "PeriodicWaveform") -> bool:
        return self.n == other.n and math.isclose(self.period, other.period, rel_tol=1e-12)


@dataclass(frozen=True)
class ZeroCrossingSet:
    times: tuple = ()
    directions: tuple = ()
    degenerate: bool = False

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.directions))

    def rising(self) -> list:
        return [t for t, d in self if d == RISING]

    def falling(self) -> list:
        return [t for t, d in self if d == FALLING]

    def first_rising(self):
        """First -/+ crossing in [0, T), or None."""
        r = self.rising()
        return r[0] if r else None


@dataclass(frozen=True)
class LoopMetrics:
    signed_area: float
    avg_power: float
    classification: str
    area_tolerance: float


def square_partial_sum(t, t1: float, period: float, n_harmonics: int, chunk: int = 256):
    """(4/pi) * sum over the first ``n_harmonics`` odd n of sin(n w (t - t1)) / n."""
    t = np.asarray(t, dtype=float)
    phase = (2.0 * math.pi / period) * np.mod(t - t1, period)
    flat = phase.ravel()
    out = np.zeros_like(flat)
    orders = 2 * np.arange(n_harmonics) + 1
    for start in range(0, n_harmonics, chunk):
        n = orders[start:start + chunk].astype(float)
        out += np.sin(np.outer(flat, n)) @ (1.0 / n)
    return (4.0 / math.pi) * out.reshape(phase.shape)


def synth_square(t1: float, period: float, n_harmonics: int,
                 n: int = DEFAULT_SAMPLES) -> PeriodicWaveform:
    """Truncated Fourier series of the unit square wave whose -/+ edge sits at ``t1``."""
    if not (period > 0):
        raise InvalidArgument(f"synth_square: period must be > 0, got {period!r}")
    if n < MIN_SAMPLES:
        raise InvalidArgument(f"synth_square: need at least {MIN_SAMPLES} samples, got {n}")
    if n_harmonics < 1:
        raise InvalidArgument(f"synth_square: n_harmonics must be >= 1, got {n_harmonics}")
    if not (0 <= t1 < period):
        raise InvalidArgument(f"synth_square: t1 must lie in [0, T), got {t1!r}")
    t = np.arange(n) * (period / n)
    return PeriodicWaveform(period, square_partial_sum(t, t1, period, n_harmonics))


def sample_crossings(t, y, periodic_span: float | None = None):
    """Sign changes of ``y`` sampled at ``t``, located by linear interpolation.

    Exact-zero samples take the sign of the next nonzero sample, so a zero lying
    between opposite signs is reported once, at its own instant.  With
    ``periodic_span`` the last sample is joined to the first one shifted by the span.
    Returns ``(times, directions)``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return [], []
    s = np.sign(y)
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return [], []
    # zeros inherit the sign of the following nonzero sample
    eff = s.copy()
    nxt = None if periodic_span is None else s[nz[0]]
    for j in range(y.size - 1, -1, -1):
        if s[j] != 0:
            nxt = s[j]
        elif nxt is not None:
            eff[j] = nxt
    if periodic_span is None and eff[-1] == 0:
        # trailing zeros: keep the previous sign, they start no new interval
        last = s[nz[-1]]
        eff[nz[-1]:] = last
    if periodic_span is None:
        y0, y1, e0, e1, t0, t1 = y[:-1], y[1:], eff[:-1], eff[1:], t[:-1], t[1:]
    else:
        y0, y1, e0, e1, t0 = y, np.roll(y, -1), eff, np.roll(eff, -1), t
        t1 = np.append(t[1:], t[0] + periodic_span)
    idx = np.flatnonzero(e0 != e1)
    times, dirs = [], []
    for j in idx:
        a, b = y0[j], y1[j]
        tc = t0[j] if a == b else t0[j] + (t1[j] - t0[j]) * a / (a - b)
        times.append(float(tc))
        dirs.append(RISING if e1[j] > 0 else FALLING)
    return times, dirs


def find_zerocrossings(w: PeriodicWaveform) -> ZeroCrossingSet:
    """Zerocrossings of a periodic waveform, as instants modulo T sorted in [0, T)."""
    if not np.any(w.samples):
        return ZeroCrossingSet(degenerate=True)
    times, dirs = sample_crossings(w.t, w.samples, periodic_span=w.period)
    pairs = sorted((tc % w.period, d) for tc, d in zip(times, dirs))
    return ZeroCrossingSet(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def signed_loop_area(i, v) -> float:
    """Trapezoidal estimate of the closed integral of v di over one period.

    Positive for clockwise traversal in the (i, v) plane.
    """
    i = np.asarray(i, dtype=float)
    v = np.asarray(v, dtype=float)
    di = np.roll(i, -1) - i
    vm = 0.5 * (v + np.roll(v, -1))
    return float(np.sum(vm * di))


def positive_lobe_area(i, v) -> float:
    """Closed integral of v di over the part of the cyclic polyline with i >= 0.

    For odd-symmetric loops through the origin the two half-plane lobes cancel
    in ``signed_loop_area``; this isolates the i > 0 lobe.  Segments crossing
    i = 0 are cut at the linearly interpolated crossing.
    """
    i = np.asarray(getattr(i, "samples", i), dtype=float)
    v = np.asarray(getattr(v, "samples", v), dtype=float)
    i0, i1 = i, np.roll(i, -1)
    v0, v1 = v, np.roll(v, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(i1 != i0, -i0 / (i1 - i0), 0.0)
    vc = v0 + s * (v1 - v0)
    full = 0.5 * (v0 + v1) * (i1 - i0)
    # entering i >= 0: keep the part after the crossing, leaving: the part before it
    enter = 0.5 * (vc + v1) * i1
    leave = 0.5 * (v0 + vc) * (-i0)
    area = np.where((i0 >= 0) & (i1 >= 0), full,
                    np.where((i0 < 0) & (i1 > 0), enter,
                             np.where((i0 > 0) & (i1 < 0), leave, 0.0)))
    return float(np.sum(area))


def default_area_tolerance(i, v) -> float:
    return 1e-9 * float(np.max(np.abs(v))) * float(np.max(np.abs(i)))


def classify_area(area: float, tol: float) -> str:
    if area > tol:
        return "inductive"
    if area < -tol:
        return "capacitive"
    return "resistive"


def loop_metrics(i: PeriodicWaveform, v: PeriodicWaveform, tol: float | None = None) -> LoopMetrics:
    if not i.same_grid(v):
        raise InvalidArgument("loop_metrics: current and voltage must share period and sample count")
    if tol is None:
        tol = default_area_tolerance(i.samples, v.samples)
    area = signed_loop_area(i.samples, v.samples)
    power = float(np.mean(i.samples * v.samples))
    return LoopMetrics(area, power, classify_area(area, tol), tol)


# --- CSV -----------------------------------------------------------------

def fmt(x) -> str:
    """Fixed 15-significant-digit rendering used by every writer."""
    return format(float(x), ".15g")


def write_columns(path, header, columns):
    """Write equal-length numeric columns as CSV with a header row."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])


@contextlib.contextmanager
def atomic_open(path):
    """Text file handle whose content replaces ``path`` only on clean exit."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def write_waveform_csv(path, w: PeriodicWaveform):
    write_columns(path, ["t", "value"], [w.t, w.samples])


def write_pair_csv(path, i: PeriodicWaveform, v: PeriodicWaveform):
    if not i.same_grid(v):
        raise InvalidArgument("write_pair_csv: waveforms must share the grid")
    write_columns(path, ["t", "i", "v"], [i.t, i.samples, v.samples])


def read_waveform_csv(path) -> PeriodicWaveform:
    """Read a ``t,value`` CSV; the period is inferred from the uniform spacing."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t, y = data[:, 0], data[:, 1]
    if t.size < 2:
        raise InvalidArgument("read_waveform_csv: need at least two rows")
    return PeriodicWaveform((t[1] - t[0]) * t.size, y)
