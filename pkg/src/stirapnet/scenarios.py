"""Scenario drivers behind the command line: single runs, sweeps and pulse calibration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import OesBasis, evolve
from .analysis import fidelity, reduce_to_cavity, wigner
from .config import (Units, build_network, build_network_schedule, build_node,
                     build_swap_schedule, coupling_split)
from .ensemble import sample_ensemble
from .errors import ConfigurationError, IntegrationError
from .network import NetworkModel, run_transfer
from .node import NodeParams, cavity_shift, raman_coupling, single_node_generator


@dataclass
class RunResult:
    """Columns of the time series, summary metrics and an optional Wigner grid."""

    columns: dict[str, np.ndarray]
    metrics: dict[str, float]
    wigner: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    extras: dict = field(default_factory=dict)


def _peak(times: np.ndarray, pop: np.ndarray) -> tuple[int, float, float, float]:
    k = int(np.argmax(pop))
    p = float(max(pop[k], 0.0))
    return k, float(times[k]), p, math.sqrt(p)


def _wigner_index(cfg: dict, units: Units, times: np.ndarray, peak_index: int) -> int | None:
    wt = cfg["output"]["wigner_time"]
    if wt is None:
        return None
    if wt == "peak":
        return peak_index
    return int(np.argmin(np.abs(times - units.time(wt))))


# ---------------------------------------------------------------- swap


@dataclass
class SwapSetup:
    params: NodeParams
    groups: list
    delta_en: float
    schedule: object


def swap_setup(cfg: dict, units: Units, kappa: float | None = None, coupling: float | None = None,
               width: float | None = None, delay_factor: float | None = None) -> SwapSetup:
    """Node, ensemble and schedule of a swap run; keyword overrides serve the sweep."""
    qubit_peak = cfg["pulse"].get("qubit_peak", 0.58)
    params = build_node(cfg["node"], units, cfg["seed"], qubit_peak=qubit_peak)
    over = {}
    if kappa is not None:
        over["kappa"] = kappa
    if coupling is not None:
        over["g_f"], over["gc"] = coupling_split(coupling, params.omega_c0, params.delta0,
                                                 params.delta1, qubit_peak)
    if over:
        params = build_node(cfg["node"], units, cfg["seed"], qubit_peak=qubit_peak, overrides=over)
    groups = sample_ensemble(params.ensemble)
    delta_en = cavity_shift(params, groups)
    if width is None:
        schedule = build_swap_schedule(cfg, params, delta_en, units, delay_factor=delay_factor)
    else:
        wo0 = units.time(cfg["pulse"]["width_optical"])
        wq0 = units.time(cfg["pulse"]["width_qubit"])
        ratio = wq0 / wo0
        schedule = build_swap_schedule(cfg, params, delta_en, units, width_optical=width,
                                       width_qubit=width * ratio, delay_factor=delay_factor)
    return SwapSetup(params, groups, delta_en, schedule)


def simulate_swap(setup: SwapSetup, samples: int, rel_tol: float, abs_tol: float,
                  store_states: bool = False):
    gen = single_node_generator(setup.params, setup.groups, setup.schedule)
    basis = OesBasis(1, len(setup.groups))
    sp = basis.spins(0)
    obs = {
        "qubitA": lambda r: r[basis.qubit(0), basis.qubit(0)].real,
        "spinsTotal": lambda r: float(np.sum(r[sp, sp].real)),
        "cavityA": lambda r: r[basis.photon(0), basis.photon(0)].real,
        "sink": lambda r: r[0, 0].real,
    }
    times = setup.schedule.times(samples)
    traj = evolve(gen, basis.pure(basis.qubit(0)), times, rel_tol, abs_tol, observables=obs,
                  store_states=store_states)
    return basis, traj


def run_swap(cfg: dict) -> RunResult:
    units = Units.from_config(cfg)
    setup = swap_setup(cfg, units)
    integ = cfg["integrator"]
    want_wigner = cfg["output"]["wigner_time"] is not None
    basis, traj = simulate_swap(setup, integ["samples"], integ["rel_tol"], integ["abs_tol"],
                                store_states=want_wigner)
    times = traj.times
    k, t_peak, pop, _ = _peak(times, traj["cavityA"])
    photon = basis.ket(basis.photon(0))
    f_peak = fidelity(traj.states[k], photon) if want_wigner else math.sqrt(pop)
    s = setup.schedule
    lam = raman_coupling(setup.params, setup.groups, 1.0).mean()
    columns = {
        "time": times,
        "qubitA": traj["qubitA"],
        "spinsTotal": traj["spinsTotal"],
        "cavityA": traj["cavityA"],
        "sink": traj["sink"],
        "control_opticalLeg": np.array([lam * s.optical(t) for t in times]),
        "control_qubitLeg": np.array([setup.params.g_f * s.qubit_leg(t) for t in times]),
    }
    metrics = {
        "peak_fidelity": f_peak,
        "peak_time": t_peak,
        "peak_population": pop,
        "max_spin_population": float(traj["spinsTotal"].max()),
        "final_loss": float(traj["sink"][-1]),
        "cavity_shift": setup.delta_en,
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
    }
    result = RunResult(columns, metrics)
    wi = _wigner_index(cfg, units, times, k)
    if wi is not None:
        cav = reduce_to_cavity(traj.states[wi], basis, 0)
        result.wigner = wigner(cav, cfg["output"]["wigner_half_width"], cfg["output"]["wigner_points"])
        metrics["wigner_time"] = float(times[wi])
    return result


# ---------------------------------------------------------------- network


def run_network(cfg: dict, overrides: dict | None = None, width: float | None = None,
                center: float | None = None, samples: int | None = None) -> RunResult:
    units = Units.from_config(cfg)
    params = build_network(cfg, units, node_overrides=overrides)
    schedule = build_network_schedule(cfg, params, units, width=width, center=center)
    integ = cfg["integrator"]
    want_wigner = cfg["output"]["wigner_time"] is not None
    model = NetworkModel(params)
    times = schedule.times(samples or integ["samples"])
    res = run_transfer(params, schedule, times, integ["rel_tol"], integ["abs_tol"], model=model,
                       store_states=want_wigner)
    traj = res.trajectory
    lam = raman_coupling(params.node_a, model.groups[0], 1.0).mean()
    columns = {"time": times}
    for name in ("qubitA", "qubitB", "spinsTotal", "cavityA", "cavityB", "antisym", "sink"):
        columns[name] = traj[name]
    columns["control_opticalLeg"] = np.array([lam * schedule.optical(t) for t in times])
    columns["control_qubitLeg"] = np.full(times.size, params.node_a.g_f)
    metrics = {
        "peak_fidelity": res.peak_fidelity,
        "peak_time": res.peak_time,
        "peak_population": res.peak_population,
        "final_loss": res.final_loss,
        "max_spin_population": float(traj["spinsTotal"].max()),
        "max_antisym_population": float(traj["antisym"].max()),
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
    }
    result = RunResult(columns, metrics)
    k = int(np.argmax(traj["qubitB"]))
    wi = _wigner_index(cfg, units, times, k)
    if wi is not None:
        cav = reduce_to_cavity(traj.states[wi], model.basis, 1)
        result.wigner = wigner(cav, cfg["output"]["wigner_half_width"], cfg["output"]["wigner_points"])
        metrics["wigner_time"] = float(times[wi])
    return result


def run_scenario(cfg: dict) -> RunResult:
    scen = cfg["scenario"]
    if scen in ("swap", "swap-constant-chirp"):
        return run_swap(cfg)
    if scen in ("network-nv", "network-er"):
        return run_network(cfg)
    raise ConfigurationError(f"scenario {scen!r} is not a single run; use the sweep or calibrate command")


# ---------------------------------------------------------------- sweep


@dataclass
class SweepCell:
    kappa: float
    coupling: float
    peak_fidelity: float
    peak_time: float
    width: float
    delay_factor: float
    in_region: bool
    passed: bool
    error: str = ""


def _axis(block: dict, units: Units) -> np.ndarray:
    raw = np.linspace(block["start"], block["stop"], block["num"])
    return np.array([units.axis_value(v, block["unit"]) for v in raw])


def _swap_peak(cfg, units, kappa, coupling, width, delay_factor, samples):
    setup = swap_setup(cfg, units, kappa=kappa, coupling=coupling, width=width,
                       delay_factor=delay_factor)
    integ = cfg["integrator"]
    _, traj = simulate_swap(setup, samples, integ["rel_tol"], integ["abs_tol"])
    _, t_peak, _, f = _peak(traj.times, traj["cavityA"])
    return f, t_peak


def _optimize_pulse(cfg, units, kappa, coupling, start, wb, db, max_evals, samples):
    """Bounded Nelder-Mead over (log width, delay factor) for one sweep cell."""
    lo = np.array([math.log(wb[0]), db[0]])
    hi = np.array([math.log(wb[1]), db[1]])
    x0 = np.clip(np.array([math.log(start[0]), start[1]]), lo, hi)
    step = 0.15 * (hi - lo)
    simplex = np.array([x0, x0 + [step[0], 0], x0 + [0, step[1]]])
    for i in (1, 2):
        over = simplex[i] > hi
        simplex[i][over] = x0[over] - step[over]

    def objective(x):
        f, _ = _swap_peak(cfg, units, kappa, coupling, math.exp(x[0]), x[1], samples)
        return -f

    res = minimize(objective, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                   options={"maxfev": max_evals, "initial_simplex": simplex,
                            "xatol": 1e-3, "fatol": 1e-4})
    return math.exp(res.x[0]), float(res.x[1])


def run_sweep(cfg: dict, progress=None) -> list[SweepCell]:
    """Peak swap fidelity over a (kappa, g) grid; a failing cell is recorded and skipped."""
    units = Units.from_config(cfg)
    sw = cfg["sweep"]
    kappas = _axis(sw["kappa"], units)
    couplings = _axis(sw["coupling"], units)
    region = sw.get("region")
    k_max = units.rate(region["kappa_max"]) if region else math.inf
    g_min = units.rate(region["coupling_min"]) if region else -math.inf
    width0 = units.time(cfg["pulse"]["width_optical"])
    delay0 = cfg["pulse"].get("delay_factor", 1.25)
    if sw["pulse_policy"] == "optimize":
        wb = [units.time(q) for q in sw.get("width_bounds", [
            {"value": 0.5 * width0, "unit": "ratio"}, {"value": 4.0 * width0, "unit": "ratio"}])]
        if not 0 < wb[0] <= wb[1]:
            raise ConfigurationError("sweep/width_bounds must satisfy 0 < lower <= upper")
    cells = []
    for g in couplings:
        start = (width0, delay0)
        for kappa in kappas:
            in_region = bool(kappa <= k_max + 1e-12 and g >= g_min - 1e-12)
            try:
                if sw["pulse_policy"] == "optimize" and g > 0:
                    w, dfac = _optimize_pulse(cfg, units, kappa, g, start, wb, sw["delay_bounds"],
                                              sw["max_evaluations"], sw["samples"])
                    start = (w, dfac)
                else:
                    w, dfac = width0, delay0
                f, t_peak = _swap_peak(cfg, units, kappa, g, w, dfac, cfg["integrator"]["samples"])
                cell = SweepCell(float(kappa), float(g), f, t_peak, w, dfac, in_region,
                                 f > sw["threshold"])
            except (IntegrationError, ConfigurationError) as exc:
                cell = SweepCell(float(kappa), float(g), math.nan, math.nan, math.nan, math.nan,
                                 in_region, False, str(exc))
            cells.append(cell)
            if progress:
                progress(cell)
    return cells


# ---------------------------------------------------------------- calibration


@dataclass
class CalibrationResult:
    parameters: dict[str, float]
    peak_fidelity: float
    peak_population: float
    peak_time: float
    evaluations: int
    history: list = field(default_factory=list)


CALIBRATION_KEYS = ("width", "center", "gc", "delta_q")


def calibrate_network_pulse(cfg: dict, progress=None) -> CalibrationResult:
    """Maximise the peak qubit-B fidelity over the bounded calibration parameters.

    Parameters whose bounds coincide are held fixed; with every bound
    degenerate the single point is evaluated once.  The simplex start is
    the configured value clipped into the bounds, so the search is
    deterministic.
    """
    units = Units.from_config(cfg)
    cal = cfg["calibrate"]
    run_cfg = dict(cfg, scenario=cal["target"], output={**cfg["output"], "wigner_time": None})
    base_node = build_node(cfg["node"], units, cfg["seed"])
    current = {
        "width": units.time(cfg["pulse"]["width"]),
        "center": units.time(cfg["pulse"]["center"]),
        "gc": base_node.gc,
        "delta_q": base_node.delta_q,
    }
    bounds = {}
    for key in CALIBRATION_KEYS:
        if key in cal:
            conv = units.time if key in ("width", "center") else units.rate
            lo, hi = (conv(q) for q in cal[key])
            if lo > hi:
                raise ConfigurationError(f"calibrate/{key}: lower bound exceeds upper bound")
            if key == "width" and lo <= 0:
                raise ConfigurationError("calibrate/width: bounds must be positive")
            bounds[key] = (lo, hi)
    free = [k for k, (lo, hi) in bounds.items() if hi > lo]
    fixed = {k: lo for k, (lo, hi) in bounds.items() if hi == lo}
    history = []

    def evaluate(point: dict) -> RunResult:
        over = {k: point[k] for k in ("gc", "delta_q") if k in point}
        try:
            res = run_network(run_cfg, overrides=over or None, width=point["width"],
                              center=point["center"])
        except IntegrationError as exc:
            raise IntegrationError(f"calibration objective failed at {point}: {exc}", exc.time) from exc
        history.append({**point, "peak_fidelity": res.metrics["peak_fidelity"]})
        if progress:
            progress(history[-1])
        return res

    def point_of(x) -> dict:
        p = {**current, **fixed}
        p.update({k: float(v) for k, v in zip(free, x)})
        return p

    if free:
        lo = np.array([bounds[k][0] for k in free])
        hi = np.array([bounds[k][1] for k in free])
        x0 = np.clip(np.array([current[k] for k in free]), lo, hi)
        step = 0.1 * (hi - lo)
        simplex = [x0]
        for i in range(len(free)):
            v = x0.copy()
            v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
            simplex.append(v)
        opt = minimize(lambda x: -evaluate(point_of(x)).metrics["peak_fidelity"], x0,
                       method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"maxfev": cal["max_evaluations"], "initial_simplex": np.array(simplex),
                                "xatol": cal["xatol"], "fatol": cal["fatol"]})
        best = point_of(np.clip(opt.x, lo, hi))
    else:
        best = point_of([])
    final = evaluate(best)
    m = final.metrics
    return CalibrationResult(best, m["peak_fidelity"], m["peak_population"], m["peak_time"],
                             len(history), history)
