"""Switched linear systems ``dx/dt = A_m x + B_m u`` with mode changes either
prescribed in time or triggered when a state variable crosses a level."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChatteringError, InvalidArgument
from .signals import PeriodicWaveform, RISING, FALLING

MAX_SWITCHES = 1_000_000
EVENT_TOL = 1e-12


@dataclass(frozen=True)
class NoSwitching:
    kind = "none"


@dataclass(frozen=True)
class Schedule:
    times: tuple

    kind = "schedule"

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        if any(b <= a for a, b in zip(t, t[1:])):
            raise InvalidArgument("Schedule: switching times must be strictly increasing")
        object.__setattr__(self, "times", t)


@dataclass(frozen=True)
class LevelCrossing:
    """Toggle the mode whenever x[index] crosses ``level``.

    With ``band > 0`` an upward switch needs x[index] > level + band/2 and a
    downward one x[index] < level - band/2.
    """

    index: int
    level: float = 0.0
    band: float = 0.0

    kind = "level_crossing"

    def __post_init__(self):
        if self.band < 0:
            raise InvalidArgument("LevelCrossing: band must be >= 0")


@dataclass(frozen=True, eq=False)
class SwitchedLinearSystem:
    modes: tuple
    rule: object = field(default_factory=NoSwitching)

    def __post_init__(self):
        if not self.modes:
            raise InvalidArgument("SwitchedLinearSystem: need at least one mode")
        modes = []
        for k, m in enumerate(self.modes):
            A, B = (m if isinstance(m, tuple) else (m[0], m[1]))
            A = np.atleast_2d(np.asarray(A, dtype=float))
            B = np.asarray(B, dtype=float)
            if B.ndim == 1:
                B = B.reshape(-1, 1)
            modes.append((A, B))
        n = modes[0][0].shape[0]
        m = modes[0][1].shape[1]
        for k, (A, B) in enumerate(modes):
            if A.shape != (n, n):
                raise InvalidArgument(f"SwitchedLinearSystem: mode {k} A must be {n}x{n}, got {A.shape}")
            if B.shape != (n, m):
                raise InvalidArgument(f"SwitchedLinearSystem: mode {k} B must be {n}x{m}, got {B.shape}")
        if isinstance(self.rule, LevelCrossing) and not (0 <= self.rule.index < n):
            raise InvalidArgument(f"LevelCrossing: index {self.rule.index} outside state dimension {n}")
        if not isinstance(self.rule, (NoSwitching, Schedule, LevelCrossing)):
            raise InvalidArgument(f"unsupported switching rule {type(self.rule).__name__}")
        object.__setattr__(self, "modes", tuple(modes))

    @property
    def n(self) -> int:
        return self.modes[0][0].shape[0]

    @property
    def m(self) -> int:
        return self.modes[0][1].shape[1]


@dataclass(frozen=True, eq=False)
class SwitchedTrajectory:
    t: np.ndarray
    x: np.ndarray
    mode: np.ndarray
    switch_times: tuple
    directions: tuple
    state_jumps: tuple = ()
    band: float = 0.0


def classify_system(sys: SwitchedLinearSystem) -> str:
    """LTI for constant structure, LTV for prescribed switching, NL for state-driven switching."""
    if isinstance(sys.rule, LevelCrossing):
        return "NL"
    if isinstance(sys.rule, Schedule):
        return "LTV" if sys.rule.times and len(sys.modes) > 1 else "LTI"
    return "LTI"


def _input_fn(u, m):
    if u is None:
        return lambda t: np.zeros(m)
    if isinstance(u, PeriodicWaveform):
        if m != 1:
            raise InvalidArgument("a waveform input needs a single-input system")
        return lambda t: np.array([float(u.at(t))])
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if arr.size != m:
        raise InvalidArgument(f"constant input must have {m} entries, got {arr.size}")
    return lambda t: arr


def simulate_switched(sys: SwitchedLinearSystem, x0, u=None, t_span=(0.0, 1.0), dt: float = 1e-3,
                      initial_mode: int = 0) -> SwitchedTrajectory:
    """Fixed-step RK4 with level crossings located by bisection inside the step."""
    x = np.asarray(x0, dtype=float).ravel().copy()
    if x.size != sys.n:
        raise InvalidArgument(f"x0 must have dimension {sys.n}, got {x.size}")
    if not (dt > 0):
        raise InvalidArgument(f"dt must be > 0, got {dt!r}")
    t0, tf = float(t_span[0]), float(t_span[1])
    if not (tf > t0):
        raise InvalidArgument("t_span must be increasing")
    if not (0 <= initial_mode < len(sys.modes)):
        raise InvalidArgument(f"initial_mode {initial_mode} out of range")
    nsteps = int(math.ceil((tf - t0) / dt - 1e-9))
    grid = t0 + np.arange(nsteps + 1) * dt
    grid[-1] = min(grid[-1], tf)
    ufn = _input_fn(u, sys.m)
    rule = sys.rule
    mode = initial_mode

    def rk4(x, t, h, mode):
        A, B = sys.modes[mode]

        def f(tt, xx):
            return A @ xx + B @ ufn(tt)

        k1 = f(t, x)
        k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t + h, x + h * k3)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    xs = np.empty((grid.size, sys.n))
    modes = np.empty(grid.size, dtype=int)
    xs[0], modes[0] = x, mode
    switch_times, dirs, jumps = [], [], []
    pending = list(rule.times) if isinstance(rule, Schedule) else []
    pending = [tk for tk in pending if tk > t0]
    level = isinstance(rule, LevelCrossing)
    if level:
        j, c, half = rule.index, rule.level, 0.5 * rule.band
        side = 1.0 if x[j] > c else -1.0
    scale = max(float(np.max(np.abs(x))), 1e-300)

    def g(xx):
        # signed distance to the threshold that would flip the current side
        return xx[j] - (c - half if side > 0 else c + half)

    for k in range(nsteps):
        t_cur, t_end = grid[k], grid[k + 1]
        while t_cur < t_end:
            t_stop = t_end
            scheduled = False
            if pending and pending[0] <= t_end:
                t_stop, scheduled = pending[0], True
            h = t_stop - t_cur
            xn = rk4(x, t_cur, h, mode) if h > 0 else x
            if level and side * g(xn) < 0:
                # crossing inside (t_cur, t_stop]: bisect on the sub-step length
                lo, hi, best = 0.0, h, xn
                tol = EVENT_TOL * scale
                for _ in range(200):
                    if abs(g(best)) <= tol or hi - lo <= 1e-15 * max(abs(t_cur), 1.0):
                        break
                    mid = 0.5 * (lo + hi)
                    xm = rk4(x, t_cur, mid, mode)
                    if side * g(xm) < 0:
                        hi, best = mid, xm
                    else:
                        lo = mid
                t_cur += hi
                x = best
                switch_times.append(t_cur)
                dirs.append(FALLING if side > 0 else RISING)
                jumps.append(0.0)
                side = -side
                mode = (mode + 1) % len(sys.modes)
                if len(switch_times) > MAX_SWITCHES:
                    raise ChatteringError(f"chattering detected: more than {MAX_SWITCHES} switches")
                continue
            x, t_cur = xn, t_stop
            if scheduled:
                pending.pop(0)
                switch_times.append(t_stop)
                dirs.append("scheduled")
                jumps.append(0.0)
                mode = (mode + 1) % len(sys.modes)
                if len(switch_times) > MAX_SWITCHES:
                    raise ChatteringError(f"chattering detected: more than {MAX_SWITCHES} switches")
        scale = max(scale, float(np.max(np.abs(x))))
        xs[k + 1], modes[k + 1] = x, mode
    return SwitchedTrajectory(grid, xs, modes, tuple(switch_times), tuple(dirs), tuple(jumps),
                              rule.band if level else 0.0)


def write_switched_csv(path, tr: SwitchedTrajectory):
    from .signals import write_columns

    header = ["t", "mode"] + [f"x{k + 1}" for k in range(tr.x.shape[1])]
    write_columns(path, header, [tr.t, tr.mode] + [tr.x[:, k] for k in range(tr.x.shape[1])])
