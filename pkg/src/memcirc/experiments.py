"""Config-driven experiments: validate a JSON config, run it, and collect the
headline scalars, tables and figures that the CLI writes out."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields, lamp, memristive, powerlaw, signals, switched
from .errors import ConvergenceError, InvalidArgument

KINDS = ("square", "poynting", "memristor", "lamp", "lamp-sweep", "powerlaw", "eye",
         "superposition", "switched")


class ConfigError(InvalidArgument):
    pass


@dataclass
class Result:
    kind: str
    headline: dict
    flags: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)   # filename -> (header, columns)
    documents: dict = field(default_factory=dict)  # filename -> JSON-able dict
    figures: list = field(default_factory=list)   # callables taking an output directory


# --- config helpers -------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, key: str, value) -> dict:
    """Set a dotted ``key`` (e.g. ``source.U``) in a copy of ``cfg``."""
    out = copy.deepcopy(cfg)
    node = out
    parts = key.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value
    return out


def _need(block: dict, key: str, where: str):
    if not isinstance(block, dict) or key not in block or block[key] is None:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return block[key]


def _num(block, key, where, default=None):
    if default is not None and (not isinstance(block, dict) or block.get(key) is None):
        return float(default)
    val = _need(block, key, where)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}: field '{key}' must be a number, got {val!r}")
    return float(val)


def _int(block, key, where, default=None):
    val = _num(block, key, where, default)
    if val != int(val):
        raise ConfigError(f"{where}: field '{key}' must be an integer, got {val!r}")
    return int(val)


def _waveform(block: dict, where: str) -> signals.PeriodicWaveform:
    """``{waveform: sine|cosine|samples, amplitude, T, N, samples, harmonics}``.

    ``harmonics`` adds ``[[n, a_cos, a_sin], ...]`` terms on top of the base shape.
    """
    T = _num(block, "T", where, 2 * math.pi)
    shape = block.get("waveform", "sine")
    amp = _num(block, "amplitude", where, 1.0)
    w = 2 * math.pi / T
    if shape == "samples":
        samples = _need(block, "samples", where)
        return signals.PeriodicWaveform(T, amp * np.asarray(samples, dtype=float))
    n = _int(block, "N", where, signals.DEFAULT_SAMPLES)
    if shape not in ("sine", "cosine"):
        raise ConfigError(f"{where}: waveform must be 'sine', 'cosine' or 'samples', got {shape!r}")
    extra = block.get("harmonics", [])

    def f(t):
        y = amp * (np.sin(w * t) if shape == "sine" else np.cos(w * t))
        for k, ac, as_ in extra:
            y = y + ac * np.cos(k * w * t) + as_ * np.sin(k * w * t)
        return y

    return signals.PeriodicWaveform.from_function(f, T, n)


def _r(x):
    """Round-trip a float through 15 significant digits for stable JSON."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(format(x, ".15g"))


# --- experiments -------------------------------------------------------------------

def run_square(cfg):
    where = "square"
    T = _num(cfg, "T", where, 1.0)
    t1 = _num(cfg, "t1", where, 0.0)
    nh = _int(cfg, "n_harmonics", where, 1000)
    n = _int(cfg, "N", where, signals.DEFAULT_SAMPLES)
    w = signals.synth_square(t1, T, nh, n)
    zc = signals.find_zerocrossings(w)
    bound = 4 / math.pi * sum(1.0 / k for k in range(1, 2 * nh, 2))
    head = {"t1": t1, "t1_recovered": zc.first_rising(), "n_crossings": len(zc),
            "max_abs": w.max_abs(), "partial_sum_bound": bound, "grid_step": w.dt}
    res = Result("square", head, tables={"traces.csv": (["t", "value"], [w.t, w.samples])})
    res.figures.append(lambda out, w=w: _plots().plot_traces(out / "traces.png", w.t, {"square": w.samples},
                                                             "t", "value"))
    return res


def run_poynting(cfg):
    where = "poynting (CylindricalConductor)"
    c = fields.CylindricalConductor(_num(cfg, "l", where), _num(cfg, "r", where),
                                    _num(cfg, "v", where), _num(cfg, "i", where))
    head = {"E": c.e_field, "H": c.h_field, "S": c.poynting, "surface": c.surface,
            "inflow": fields.poynting_inflow(c), "vi": c.voltage * c.current}
    return Result("poynting", head)


def _memristor_model(block):
    where = "memristor.model"
    kind = block.get("type", "charge") if isinstance(block, dict) else None
    coeffs = _need(block, "coeffs", where)
    if kind == "charge":
        return memristive.ChargeControlledModel(tuple(coeffs), _num(block, "q0", where, 0.0))
    if kind == "flux":
        return memristive.FluxControlledModel(tuple(coeffs), _num(block, "psi0", where, 0.0))
    raise ConfigError(f"{where}: type must be 'charge' or 'flux', got {kind!r}")


def run_memristor(cfg):
    model = _memristor_model(_need(cfg, "model", "memristor"))
    drive = _waveform(_need(cfg, "drive", "memristor"), "memristor.drive")
    periods = _int(cfg, "periods", "memristor", 1)
    dt = cfg.get("dt")
    if dt is None:
        dt = drive.period / 4096
    if isinstance(model, memristive.ChargeControlledModel):
        tr = memristive.simulate_current_driven(model, drive, periods, dt)
        dev = memristive.psi_q_deviation(tr, model)
    else:
        tr = memristive.simulate_voltage_driven(model, drive, periods, dt)
        dev = float(np.max(np.abs(tr.q - model.charge_of_flux(tr.psi, tr.q[0]))))
    rep = memristive.pinched_loop_check(tr, float(cfg.get("rel_tol", 1e-5)))
    i_last, v_last = tr.last_period("i"), tr.last_period("v")
    lm = signals.loop_metrics(i_last, v_last)
    head = {"pinched": rep.pinched, "worst_violation": rep.worst_violation,
            "psi_q_max_dev": dev, "pinch_status": rep.status, "signed_area": lm.signed_area,
            "classification": lm.classification, "P": lm.avg_power,
            "q_range": [float(tr.q.min()), float(tr.q.max())]}
    flags = {"passivity_warnings": list(tr.warnings)}
    cols = ["t", "i", "v", "q", "psi"] + [f"x{k + 1}" for k in range(tr.x.shape[1])]
    data = [tr.t, tr.i, tr.v, tr.q, tr.psi] + [tr.x[:, k] for k in range(tr.x.shape[1])]
    res = Result("memristor", head, flags, tables={"traces.csv": (cols, data)},
                 documents={"report.json": {"pinched": rep.pinched, "worst_violation": rep.worst_violation,
                                            "psi_q_max_dev": dev}})
    res.figures.append(lambda out: _plots().plot_loop(out / "loop.png", tr.i, tr.v, "memristive v-i loop"))
    res.figures.append(lambda out: _plots().plot_loop(out / "flux_charge.png", tr.q, tr.psi,
                                                      "flux-charge locus", "q [C]", "psi [Wb]"))
    return res


def _lamp_setup(cfg):
    b = cfg.get("ballast")
    if not isinstance(b, dict):
        raise ConfigError("lamp: missing 'ballast' block (SeriesBallast needs L > 0 and C > 0)")
    ballast = lamp.SeriesBallast(b.get("L"), b.get("C"))
    lb = _need(cfg, "lamp", "lamp")
    model = lb.get("model", "hardlimiter")
    A = _num(lb, "A", "lamp.lamp")
    if model == "hardlimiter":
        lm = lamp.HardlimiterLamp(A)
    elif model == "hysteresis":
        lm = lamp.HysteresisLamp(A, float(lb.get("Lprime") or 0.0), float(lb.get("k", 2.0)),
                                 lb.get("L1"), lb.get("L2"))
    else:
        raise ConfigError(f"lamp.lamp: model must be 'hardlimiter' or 'hysteresis', got {model!r}")
    sb = _need(cfg, "source", "lamp")
    U = _num(sb, "U", "lamp.source")
    T = _num(sb, "T", "lamp.source", 2 * math.pi)
    shape = sb.get("waveform", "sine")
    if shape == "sine":
        src = lamp.SourceSpec.sine(U, T)
    elif shape == "samples":
        src = lamp.SourceSpec(U, signals.PeriodicWaveform(T, _need(sb, "samples", "lamp.source")))
    else:
        raise ConfigError(f"lamp.source: waveform must be 'sine' or 'samples', got {shape!r}")
    so = cfg.get("solver") or {}
    opts = lamp.SolverOptions(so.get("dt"), int(so.get("max_periods", 500)), float(so.get("tol", 1e-8)))
    opts.steps(T)
    return ballast, lm, src, opts


def run_lamp(cfg):
    ballast, lm, src, opts = _lamp_setup(cfg)
    st = lamp.simulate_lamp_circuit(ballast, lm, src, opts)
    if not st.converged:
        raise ConvergenceError(f"lamp steady state not reached in {st.periods_used} periods", st.residual)
    loop = lamp.lamp_loop_metrics(st)
    L_asym = lamp.asymptotic_inductance(ballast.admittance(), src.xi.omega)
    head = {"U": src.U, "P": st.P, "P_over_U2": st.P / src.U ** 2 if src.U else None, "t1": st.t1,
            "signed_area": loop.signed_area, "classification": loop.classification,
            "L_asymptotic": L_asym, "sign_coefficient": st.sign_coefficient,
            "W_Lprime_max": st.W_Lprime_max, "i_max": st.i.max_abs(),
            "energy_balance_error": st.energy_balance_error}
    flags = {"converged": st.converged, "iterations": st.iterations, "residual": st.residual,
             "periods_used": st.periods_used, "periodicity_error": st.periodicity_error}
    res = Result("lamp", head, flags,
                 tables={"traces.csv": (["t", "i", "v_lamp", "v_in"],
                                        [st.i.t, st.i.samples, st.v_lamp.samples, st.v_in.samples])})
    res.figures.append(lambda out: _plots().plot_loop(out / "loop.png", st.i.samples, st.v_lamp.samples,
                                                      "lamp v-i loop"))
    res.figures.append(lambda out: _plots().plot_traces(out / "traces.png", st.i.t,
                                                        {"i": st.i.samples, "v_lamp": st.v_lamp.samples,
                                                         "v_in": st.v_in.samples}, "t [s]", ""))
    return res


def run_lamp_sweep(cfg):
    ballast, lm, src, opts = _lamp_setup(cfg)
    U_list = _need(cfg, "U_list", "lamp-sweep")
    rows = lamp.zerocrossing_sweep(ballast, lm, src, [float(u) for u in U_list], opts)
    ok = [r for r in rows if r.error is None]
    t1s = [r.t1 for r in ok if r.t1 is not None]
    ratios = [r.P_over_U2 for r in ok if r.P_over_U2 is not None]
    head = {"rows": len(rows), "succeeded": len(ok),
            "t1_span": (max(t1s) - min(t1s)) if t1s else None,
            "P_over_U2_rel_span": ((max(ratios) - min(ratios)) / max(abs(x) for x in ratios))
            if ratios and max(abs(x) for x in ratios) > 0 else 0.0}
    flags = {"row_errors": [r.error for r in rows]}
    cols = [[r.U for r in rows], [_nan(r.t1) for r in rows], [_nan(r.P) for r in rows],
            [_nan(r.P_over_U2) for r in rows]]
    res = Result("lamp-sweep", head, flags, tables={"sweep.csv": (["U", "t1", "P", "P_over_U2"], cols)})
    res.figures.append(lambda out: _plots().plot_sweep(out / "sweep.png", cols[0],
                                                       {"t1": cols[1], "P/U^2": cols[3]}, "U"))
    return res


def _nan(x):
    return math.nan if x is None else x


def network_from_config(block, where="network"):
    nodes = _need(block, "nodes", where)
    inp = _need(block, "input", where)
    branches = []
    for k, br in enumerate(_need(block, "branches", where)):
        if not (isinstance(br, (list, tuple)) and len(br) == 3):
            raise ConfigError(f"{where}.branches[{k}]: expected [a, b, element]")
        a, b, el = br
        if isinstance(el, dict) and "net" in el:
            elem = network_from_config(el["net"], f"{where}.branches[{k}].net")
        else:
            elem = powerlaw.PowerLawElement(_num(el, "alpha", f"{where}.branches[{k}]"),
                                            _num(el, "D", f"{where}.branches[{k}]"))
        branches.append((str(a), str(b), elem))
    return powerlaw.OnePortNetwork(tuple(nodes), tuple(branches), str(inp[0]), str(inp[1]))


def run_powerlaw(cfg):
    net = network_from_config(_need(cfg, "network", "powerlaw"))
    depth = _int(cfg, "fractal_depth", "powerlaw", 0)
    if depth:
        net = powerlaw.fractal_expand(net, depth)
    drive = _need(cfg, "drive", "powerlaw")
    if "current" in drive:
        sol = powerlaw.solve_dc(net, current=_num(drive, "current", "powerlaw.drive"))
    else:
        sol = powerlaw.solve_dc(net, voltage=_num(drive, "voltage", "powerlaw.drive"))
    head = {"V_in": sol.V_in, "I_in": sol.I_in, "leaves": sum(1 for _ in net.leaves()),
            "fractal_depth": depth}
    if len(net.exponents()) == 1:
        head["D_eff"] = powerlaw.effective_coefficient(net)
        head["homogeneity_residual"] = powerlaw.homogeneity_residual(net)
    flags = {"iterations": sol.iterations, "residual": sol.residual}
    doc = {"node_voltages": {k: _r(v) for k, v in sol.node_voltages.items()},
           "V_in": _r(sol.V_in), "I_in": _r(sol.I_in), "D_eff": _r(head.get("D_eff"))}
    return Result("powerlaw", head, flags, documents={"solution.json": doc})


def run_eye(cfg):
    where = "eye"
    if "epsilon" in cfg:
        eps = _num(cfg, "epsilon", where)
        center = _num(cfg, "alpha_center", where, 1.0)
        D = _num(cfg, "D", where, 1.0)
        e = powerlaw.EyeElement(center - eps, D, center + eps, D)
    else:
        e = powerlaw.EyeElement(_num(cfg, "alpha1", where), _num(cfg, "D1", where),
                                _num(cfg, "alpha2", where), _num(cfg, "D2", where))
    i_r, v_r = powerlaw.return_point(e)
    d = dict(cfg.get("drive") or {})
    d.setdefault("amplitude", i_r)
    d.setdefault("T", 1.0)
    i = _waveform(d, "eye.drive")
    v = powerlaw.eye_v(e, i)
    lm = signals.loop_metrics(i, v)
    head = {"alpha1": e.alpha1, "alpha2": e.alpha2, "i_r": i_r, "v_r": v_r,
            "signed_area": lm.signed_area, "classification": lm.classification,
            "lobe_area": signals.positive_lobe_area(i, v), "P": lm.avg_power}
    res = Result("eye", head, tables={"loop.csv": (["t", "i", "v"], [i.t, i.samples, v.samples])})
    res.figures.append(lambda out: _plots().plot_loop(out / "loop.png", i.samples, v.samples, "eye loop"))
    return res


def run_superposition(cfg):
    a = network_from_config(_need(cfg, "network_a", "superposition"), "network_a")
    b = network_from_config(_need(cfg, "network_b", "superposition"), "network_b")
    rep = powerlaw.approximate_superposition(a, b, _num(cfg, "voltage", "superposition"))
    head = {"i_combined": rep.i_combined, "i_sum": rep.i_sum, "deviation": rep.relative_deviation,
            "i_a": rep.i_a, "i_b": rep.i_b, "intermediate": rep.intermediate,
            "worst_excursion": rep.worst_excursion}
    return Result("superposition", head)


def run_switched(cfg):
    where = "switched"
    modes = []
    for k, m in enumerate(_need(cfg, "modes", where)):
        modes.append((np.asarray(_need(m, "A", f"{where}.modes[{k}]"), float),
                      np.asarray(m.get("B", [[0.0]] * len(m["A"])), float)))
    rb = cfg.get("rule") or {"type": "none"}
    rt = rb.get("type", "none")
    if rt == "none":
        rule = switched.NoSwitching()
    elif rt == "schedule":
        rule = switched.Schedule(tuple(_need(rb, "times", f"{where}.rule")))
    elif rt == "level_crossing":
        rule = switched.LevelCrossing(_int(rb, "j", f"{where}.rule"), _num(rb, "c", f"{where}.rule", 0.0),
                                      _num(rb, "band", f"{where}.rule", 0.0))
    else:
        raise ConfigError(f"{where}.rule: type must be none, schedule or level_crossing, got {rt!r}")
    sysm = switched.SwitchedLinearSystem(tuple(modes), rule)
    inp = cfg.get("input") or {"type": "none"}
    it = inp.get("type", "none")
    if it == "none":
        u = None
    elif it == "constant":
        u = _need(inp, "value", f"{where}.input")
    elif it in ("sine", "cosine", "samples"):
        u = _waveform(dict(inp, waveform=it), f"{where}.input")
    else:
        raise ConfigError(f"{where}.input: unknown type {it!r}")
    span = _need(cfg, "t_span", where)
    tr = switched.simulate_switched(sysm, _need(cfg, "x0", where), u, tuple(span), _num(cfg, "dt", where, 1e-3),
                                    _int(cfg, "initial_mode", where, 0))
    head = {"classification": switched.classify_system(sysm), "n_switches": len(tr.switch_times),
            "x_final": [float(x) for x in tr.x[-1]]}
    flags = {"band": tr.band}
    cols = ["t", "mode"] + [f"x{k + 1}" for k in range(sysm.n)]
    data = [tr.t, tr.mode] + [tr.x[:, k] for k in range(sysm.n)]
    res = Result("switched", head, flags, tables={"traces.csv": (cols, data)},
                 documents={"switch_times.json": {"switch_times": [_r(t) for t in tr.switch_times],
                                                  "directions": list(tr.directions)}})
    res.headline["switch_times"] = [float(t) for t in tr.switch_times]
    res.figures.append(lambda out: _plots().plot_traces(
        out / "traces.png", tr.t, {f"x{k + 1}": tr.x[:, k] for k in range(sysm.n)}, "t", "state",
        events=tr.switch_times))
    return res


RUNNERS: dict[str, Callable] = {
    "square": run_square,
    "poynting": run_poynting,
    "memristor": run_memristor,
    "lamp": run_lamp,
    "lamp-sweep": run_lamp_sweep,
    "powerlaw": run_powerlaw,
    "eye": run_eye,
    "superposition": run_superposition,
    "switched": run_switched,
}


def run_config(cfg: dict) -> Result:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    kind = cfg.get("kind")
    if kind not in RUNNERS:
        raise ConfigError(f"config: 'kind' must be one of {', '.join(KINDS)}, got {kind!r}")
    return RUNNERS[kind](cfg)


def summary_document(cfg: dict, result: Result) -> dict:
    return {
        "kind": result.kind,
        "input_hash": config_hash(cfg),
        "headline": _clean(result.headline),
        "flags": _clean(result.flags),
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    return _r(obj)


def _plots():
    from . import plotting

    return plotting
