"""Power-law resistive elements, one-port networks of them, and eye-type
hysteresis elements built from two power-law branches.

An element obeys ``v = D |i|**alpha * sign(i)``.  Networks are solved by
nodal analysis: the node voltages minimize the convex co-content
``sum_b D_b**(-1/a_b) |dv_b|**(1 + 1/a_b) / (1 + 1/a_b) - I * V_in``,
whose gradient is the KCL residual, so damped Newton with a descent check
converges for every positive exponent.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InvalidArgument, InvalidNetwork
from .signals import PeriodicWaveform


@dataclass(frozen=True)
class PowerLawElement:
    alpha: float
    D: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise InvalidArgument(f"PowerLawElement: alpha must be > 0, got {self.alpha!r}")
        if not (self.D > 0):
            raise InvalidArgument(f"PowerLawElement: D must be > 0, got {self.D!r}")

    @classmethod
    def from_reference(cls, i_o: float, v_o: float, alpha: float) -> "PowerLawElement":
        """Element through the point (i_o, v_o): v/v_o = (i/i_o)**alpha."""
        if not (i_o > 0 and v_o > 0):
            raise InvalidArgument("PowerLawElement: reference point must be positive")
        return cls(alpha, v_o / i_o ** alpha)

    def scaled(self, factor: float) -> "PowerLawElement":
        return PowerLawElement(self.alpha, self.D * factor)


def element_v(e: PowerLawElement, i):
    """v = D |i|^alpha sign(i)."""
    i = np.asarray(i, dtype=float)
    out = e.D * np.abs(i) ** e.alpha * np.sign(i)
    return float(out) if out.ndim == 0 else out


def element_i(e: PowerLawElement, v):
    """Inverse characteristic: i = (|v|/D)^(1/alpha) sign(v)."""
    v = np.asarray(v, dtype=float)
    out = (np.abs(v) / e.D) ** (1.0 / e.alpha) * np.sign(v)
    return float(out) if out.ndim == 0 else out


# --- networks ------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    a: str
    b: str
    element: object  # PowerLawElement or OnePortNetwork


@dataclass(frozen=True)
class OnePortNetwork:
    nodes: tuple
    branches: tuple
    plus: str
    minus: str

    def __post_init__(self):
        nodes = tuple(str(n) for n in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        branches = tuple(b if isinstance(b, Branch) else Branch(str(b[0]), str(b[1]), b[2])
                         for b in self.branches)
        object.__setattr__(self, "branches", branches)
        known = set(nodes)
        if len(known) != len(nodes):
            raise InvalidNetwork("OnePortNetwork: duplicate node names")
        if self.plus not in known or self.minus not in known:
            raise InvalidNetwork("OnePortNetwork: input terminals must be network nodes")
        if self.plus == self.minus:
            raise InvalidNetwork("OnePortNetwork: input terminals must differ")
        if not branches:
            raise InvalidNetwork("OnePortNetwork: no branches")
        for br in branches:
            if br.a not in known or br.b not in known:
                raise InvalidNetwork(f"OnePortNetwork: branch ({br.a}, {br.b}) uses an unknown node")
            if br.a == br.b:
                raise InvalidNetwork(f"OnePortNetwork: self-loop at node {br.a}")
            if not isinstance(br.element, (PowerLawElement, OnePortNetwork)):
                raise InvalidNetwork(f"OnePortNetwork: unsupported element {type(br.element).__name__}")
        # every node must be reachable from the input pair
        adj = {n: [] for n in nodes}
        for br in branches:
            adj[br.a].append(br.b)
            adj[br.b].append(br.a)
        seen, todo = {self.plus}, deque([self.plus])
        while todo:
            n = todo.popleft()
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    todo.append(m)
        if self.minus not in seen:
            raise InvalidNetwork("OnePortNetwork: input terminals are not connected")
        if len(seen) != len(nodes):
            raise InvalidNetwork(f"OnePortNetwork: nodes {sorted(known - seen)} are floating")

    @classmethod
    def series(cls, elements) -> "OnePortNetwork":
        n = len(elements)
        nodes = tuple(f"n{k}" for k in range(n + 1))
        return cls(nodes, tuple(Branch(nodes[k], nodes[k + 1], e) for k, e in enumerate(elements)),
                   nodes[0], nodes[-1])

    @classmethod
    def parallel(cls, elements) -> "OnePortNetwork":
        return cls(("p", "m"), tuple(Branch("p", "m", e) for e in elements), "p", "m")

    def leaves(self):
        """Leaf power-law elements, depth first."""
        for br in self.branches:
            if isinstance(br.element, OnePortNetwork):
                yield from br.element.leaves()
            else:
                yield br.element

    def exponents(self) -> set:
        return {e.alpha for e in self.leaves()}

    def map_leaves(self, fn) -> "OnePortNetwork":
        """Copy of the network with every leaf element replaced by ``fn(leaf)``."""
        return OnePortNetwork(self.nodes, tuple(
            Branch(br.a, br.b, br.element.map_leaves(fn) if isinstance(br.element, OnePortNetwork)
                   else fn(br.element)) for br in self.branches), self.plus, self.minus)

    def depth(self) -> int:
        sub = [br.element.depth() for br in self.branches if isinstance(br.element, OnePortNetwork)]
        return 1 + max(sub, default=0)

    def flatten(self) -> "OnePortNetwork":
        """Equivalent network with nested one-ports inlined; inner nodes get a path prefix."""
        if all(isinstance(br.element, PowerLawElement) for br in self.branches):
            return self
        nodes = list(self.nodes)
        branches = []
        for k, br in enumerate(self.branches):
            if isinstance(br.element, PowerLawElement):
                branches.append(br)
                continue
            sub = br.element.flatten()
            rename = {sub.plus: br.a, sub.minus: br.b}
            for n in sub.nodes:
                if n not in rename:
                    rename[n] = f"{k}/{n}"
                    nodes.append(rename[n])
            for sb in sub.branches:
                branches.append(Branch(rename[sb.a], rename[sb.b], sb.element))
        return OnePortNetwork(tuple(nodes), tuple(branches), self.plus, self.minus)


@dataclass(frozen=True, eq=False)
class DcSolution:
    node_voltages: dict
    branch_currents: np.ndarray
    I_in: float
    V_in: float
    iterations: int
    residual: float
    network: OnePortNetwork = field(repr=False, default=None)


def _newton_minimize(z, objective, gradient, hessian, converged, max_iter, polish=3):
    """Damped Newton on a convex objective; a step is kept if it lowers the
    objective or the gradient norm.  Returns (z, iterations, gradient max-norm)."""
    g = gradient(z)
    res = float(np.max(np.abs(g))) if g.size else 0.0
    it = 0
    extra = 0
    while it < max_iter and g.size:
        if converged(z, res):
            # a few more full steps take quadratic convergence to rounding level
            if extra >= polish:
                break
            extra += 1
        it += 1
        H = hessian(z)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        f0 = objective(z)
        lam, accepted = 1.0, False
        for _ in range(60):
            zn = z + lam * step
            gn = gradient(zn)
            rn = float(np.max(np.abs(gn)))
            if rn < res or objective(zn) < f0:
                z, g, res, accepted = zn, gn, rn, True
                break
            lam *= 0.5
        if not accepted:
            break
    return z, it, res


def _incidence(flat: OnePortNetwork):
    index = {n: k for k, n in enumerate(flat.nodes)}
    A = np.zeros((len(flat.nodes), len(flat.branches)))
    for k, br in enumerate(flat.branches):
        A[index[br.a], k] = 1.0
        A[index[br.b], k] = -1.0
    return index, A


def _potentials(flat: OnePortNetwork, v_branch, v_ref=0.0):
    """Node potentials from branch voltages, walking a spanning tree from the minus node."""
    adj = {n: [] for n in flat.nodes}
    for k, br in enumerate(flat.branches):
        adj[br.a].append((br.b, k, -1.0))
        adj[br.b].append((br.a, k, 1.0))
    phi = {flat.minus: v_ref}
    todo = deque([flat.minus])
    while todo:
        n = todo.popleft()
        for m, k, sgn in adj[n]:
            if m not in phi:
                # v_branch = phi_a - phi_b
                phi[m] = phi[n] + sgn * v_branch[k]
                todo.append(m)
    return phi


def _solve_nodal(flat, current, voltage, alpha, D, max_iter, rtol):
    """Unknown node voltages; gradient of the co-content is the KCL residual."""
    inv_a = 1.0 / alpha
    gcoef = D ** (-inv_a)  # i = gcoef |dv|^(1/alpha) sign(dv)
    index, A = _incidence(flat)
    keep = [k for k, n in enumerate(flat.nodes) if n != flat.minus and (voltage is None or n != flat.plus)]
    Au = A[keep]  # rows of unknown nodes
    plus_row = index[flat.plus]
    fixed = np.zeros(len(flat.nodes))
    if voltage is not None:
        fixed[plus_row] = voltage
    inj = np.zeros(len(keep))
    if current is not None:
        inj[keep.index(plus_row)] = current

    def full(x):
        out = fixed.copy()
        out[keep] = x
        return out

    def dv(x):
        return A.T @ full(x)

    def currents(d):
        return gcoef * np.abs(d) ** inv_a * np.sign(d)

    def gradient(x):
        return Au @ currents(dv(x)) - inj

    def objective(x):
        p = 1.0 + inv_a
        return float(np.sum(gcoef * np.abs(dv(x)) ** p / p)) - float(inj @ x)

    def hessian(x):
        d = dv(x)
        floor = 1e-12 * max(float(np.max(np.abs(full(x)))), 1e-300)
        g = gcoef * inv_a * np.maximum(np.abs(d), floor) ** (inv_a - 1.0)
        return (Au * g) @ Au.T

    # alpha = 1 network with the same D values as the starting point
    Gl = 1.0 / D
    x0 = np.linalg.solve((Au * Gl) @ Au.T, inj - (Au * Gl) @ (A.T @ fixed))
    if current is not None and current != 0:
        x0 = x0 * abs(current) ** (float(np.exp(np.mean(np.log(alpha)))) - 1.0)

    def converged(x, res):
        if current is not None:
            return res <= rtol * abs(current) or res == 0.0
        return res <= rtol * max(float(np.max(np.abs(currents(dv(x))))), 1e-300)

    x, it, res = _newton_minimize(x0, objective, gradient, hessian, converged, max_iter)
    if not converged(x, res):
        raise ConvergenceError(f"solve_dc: Newton did not converge in {it} iterations", res)
    volts = full(x)
    ib = currents(A.T @ volts)
    I_in = float(current) if current is not None else float(A[plus_row] @ ib)
    node_v = {n: float(volts[k]) for k, n in enumerate(flat.nodes)}
    return DcSolution(node_v, ib, I_in, node_v[flat.plus], it, res, flat)


def _solve_mesh(flat, current, voltage, alpha, D, max_iter, rtol):
    """Unknown loop currents (plus the input current under voltage drive);
    gradient of the content is the loop KVL residual."""
    from scipy.linalg import null_space

    index, A = _incidence(flat)
    Ar = np.delete(A, index[flat.minus], axis=0)
    inj = np.zeros(A.shape[0])
    inj[index[flat.plus]] = 1.0
    i_unit = np.linalg.lstsq(Ar, np.delete(inj, index[flat.minus]), rcond=None)[0]
    N = null_space(Ar) if Ar.shape[1] > np.linalg.matrix_rank(Ar) else np.zeros((len(flat.branches), 0))
    if voltage is not None:
        B = np.column_stack([i_unit, N])
        base = np.zeros(len(flat.branches))
        src = np.zeros(B.shape[1])
        src[0] = voltage
    else:
        B = N
        base = current * i_unit
        src = np.zeros(B.shape[1])

    def branch_i(z):
        return base + B @ z

    def branch_v(i):
        return D * np.abs(i) ** alpha * np.sign(i)

    def gradient(z):
        return B.T @ branch_v(branch_i(z)) - src

    def objective(z):
        i = np.abs(branch_i(z))
        return float(np.sum(D * i ** (alpha + 1.0) / (alpha + 1.0))) - float(src @ z)

    def hessian(z):
        i = np.abs(branch_i(z))
        floor = 1e-12 * max(float(np.max(i)), 1e-300)
        h = D * alpha * np.maximum(i, floor) ** (alpha - 1.0)
        return (B.T * h) @ B

    if voltage is not None:
        # linear (alpha = 1) guess, then set the input current to the nonlinear scale
        H1 = (B.T * D) @ B
        z0 = np.linalg.solve(H1, src)
        if z0[0] != 0:
            I_lin = z0[0]
            v_lin = voltage / I_lin  # equivalent linear resistance
            a_mean = float(np.exp(np.mean(np.log(alpha))))
            z0 = z0 * (abs(voltage) / v_lin) ** (1.0 / a_mean) / abs(I_lin) if v_lin > 0 else z0
    else:
        z0 = np.linalg.lstsq((B.T * D) @ B, -(B.T * D) @ base, rcond=None)[0] if B.shape[1] else np.zeros(0)

    def converged(z, res):
        vs = np.abs(branch_v(branch_i(z)))
        return res <= rtol * max(float(np.max(vs)), abs(voltage or 0.0), 1e-300)

    z, it, res = _newton_minimize(z0, objective, gradient, hessian, converged, max_iter)
    if B.shape[1] and not converged(z, res):
        raise ConvergenceError(f"solve_dc: Newton did not converge in {it} iterations", res)
    ib = branch_i(z)
    vb = branch_v(ib)
    phi = _potentials(flat, vb)
    I_in = float(current) if current is not None else float(z[0])
    node_v = {n: float(phi[n]) for n in flat.nodes}
    if voltage is not None:
        node_v[flat.plus] = float(voltage)
    return DcSolution(node_v, ib, I_in, node_v[flat.plus], it, res, flat)


def solve_dc(net: OnePortNetwork, current: float | None = None, voltage: float | None = None,
             max_iter: int = 200, rtol: float = 1e-10) -> DcSolution:
    """Node voltages and branch currents for an imposed input current or voltage.

    The minus terminal is the reference node.  Networks whose exponents are
    mostly above 1 are solved for loop currents, the rest for node voltages;
    both are Newton iterations on a strictly convex potential.
    """
    if (current is None) == (voltage is None):
        raise InvalidArgument("solve_dc: give exactly one of current or voltage")
    drive = current if current is not None else voltage
    if not math.isfinite(drive):
        raise InvalidArgument("solve_dc: drive must be finite")
    flat = net.flatten()
    alpha = np.array([br.element.alpha for br in flat.branches])
    D = np.array([br.element.D for br in flat.branches])
    if drive == 0:
        zero = {n: 0.0 for n in flat.nodes}
        return DcSolution(zero, np.zeros(len(flat.branches)), 0.0, 0.0, 0, 0.0, flat)
    if float(np.mean(np.log(alpha))) > 0:
        return _solve_mesh(flat, current, voltage, alpha, D, max_iter, rtol)
    return _solve_nodal(flat, current, voltage, alpha, D, max_iter, rtol)


def effective_coefficient(net: OnePortNetwork) -> float:
    """D_eff = V_in at unit input current, for networks whose leaves share one exponent."""
    if len(net.exponents()) != 1:
        raise InvalidArgument("degree preservation not applicable: leaves carry mixed exponents")
    return solve_dc(net, current=1.0).V_in


def homogeneity_residual(net: OnePortNetwork, I: float = 1.0, ks=(0.1, 2.0, 10.0)) -> float:
    """max_k |V(kI) - k^alpha V(I)| / |V(kI)| for a uniform-exponent network."""
    alphas = net.exponents()
    if len(alphas) != 1:
        raise InvalidArgument("degree preservation not applicable: leaves carry mixed exponents")
    (alpha,) = alphas
    base = solve_dc(net, current=I).V_in
    worst = 0.0
    for k in ks:
        vk = solve_dc(net, current=k * I).V_in
        worst = max(worst, abs(vk - k ** alpha * base) / abs(vk))
    return worst


def fractal_expand(net: OnePortNetwork, depth: int) -> OnePortNetwork:
    """Replace every leaf by a copy of ``net`` whose leaves carry that leaf's D, ``depth`` times."""
    if depth < 0:
        raise InvalidArgument(f"fractal_expand: depth must be >= 0, got {depth}")
    if len(net.exponents()) != 1:
        raise InvalidArgument("fractal_expand: exponent mismatch among leaves")
    (alpha,) = net.exponents()
    out = net
    for _ in range(depth):
        out = out.map_leaves(lambda e: net.map_leaves(lambda _leaf: PowerLawElement(alpha, e.D)))
    return out


@dataclass(frozen=True)
class SuperpositionReport:
    i_combined: float
    i_sum: float
    relative_deviation: float
    intermediate: bool
    worst_excursion: float
    i_a: float
    i_b: float


def _same_topology(a: OnePortNetwork, b: OnePortNetwork) -> bool:
    if set(a.nodes) != set(b.nodes) or (a.plus, a.minus) != (b.plus, b.minus):
        return False
    return sorted((br.a, br.b) for br in a.branches) == sorted((br.a, br.b) for br in b.branches)


def approximate_superposition(net_a: OnePortNetwork, net_b: OnePortNetwork, V_in: float,
                              tol: float = 1e-9) -> SuperpositionReport:
    """Connect two same-topology networks node to node and compare the input
    current with the sum of the separate input currents at the same voltage."""
    fa, fb = net_a.flatten(), net_b.flatten()
    if not _same_topology(fa, fb):
        raise InvalidArgument("approximate_superposition: networks differ in topology")
    merged = OnePortNetwork(fa.nodes, fa.branches + fb.branches, fa.plus, fa.minus)
    sa = solve_dc(fa, voltage=V_in)
    sb = solve_dc(fb, voltage=V_in)
    sm = solve_dc(merged, voltage=V_in)
    i_sum = sa.I_in + sb.I_in
    dev = abs(sm.I_in - i_sum) / abs(i_sum) if i_sum else abs(sm.I_in)
    worst = 0.0
    for n in fa.nodes:
        lo = min(sa.node_voltages[n], sb.node_voltages[n])
        hi = max(sa.node_voltages[n], sb.node_voltages[n])
        vm = sm.node_voltages[n]
        worst = max(worst, lo - vm, vm - hi)
    return SuperpositionReport(sm.I_in, i_sum, dev, worst <= tol * abs(V_in), max(worst, 0.0),
                               sa.I_in, sb.I_in)


# --- eye elements --------------------------------------------------------------------

@dataclass(frozen=True)
class EyeElement:
    """Rising branch (alpha1, D1) used while di/dt > 0, falling branch (alpha2, D2) while di/dt < 0."""

    alpha1: float
    D1: float
    alpha2: float
    D2: float

    def __post_init__(self):
        for name in ("alpha1", "D1", "alpha2", "D2"):
            if not (getattr(self, name) > 0):
                raise InvalidArgument(f"EyeElement: {name} must be > 0, got {getattr(self, name)!r}")

    @property
    def rising(self) -> PowerLawElement:
        return PowerLawElement(self.alpha1, self.D1)

    @property
    def falling(self) -> PowerLawElement:
        return PowerLawElement(self.alpha2, self.D2)


def return_point(e: EyeElement) -> tuple:
    """(i_r, v_r) where the two branches meet for i > 0."""
    if e.alpha1 == e.alpha2:
        raise InvalidArgument("branches parallel: return point needs alpha1 != alpha2")
    i_r = (e.D2 / e.D1) ** (1.0 / (e.alpha1 - e.alpha2))
    return i_r, e.D1 * i_r ** e.alpha1


def eye_v(e: EyeElement, i: PeriodicWaveform) -> PeriodicWaveform:
    """Voltage of the eye element along a periodic current.

    The characteristic is odd, v(-i) = -v(i), so the rising branch applies while
    |i| grows (i di/dt > 0) and the falling branch while |i| shrinks; for i > 0
    this is the sign of di/dt.  di/dt is a central difference, and the branch is
    held where i di/dt = 0.
    """
    y = i.samples
    grow = y * (np.roll(y, -1) - np.roll(y, 1))
    rising = np.empty(y.size, dtype=bool)
    nz = np.flatnonzero(grow)
    if nz.size == 0:
        rising[:] = True
    else:
        # hold the branch of the last nonzero entry, cyclically
        state = grow[nz[-1]] > 0
        for j in range(y.size):
            if grow[j] != 0:
                state = grow[j] > 0
            rising[j] = state
    mag = np.abs(y)
    v = np.where(rising, e.D1 * mag ** e.alpha1, e.D2 * mag ** e.alpha2) * np.sign(y)
    return PeriodicWaveform(i.period, v)
