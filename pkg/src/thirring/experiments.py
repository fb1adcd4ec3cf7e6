"""Scripted studies turning the model's analytic properties into
reproducible pass/fail artifacts: oracle/self convergence order, charge
drift against the frozen baseline, scaling and time-reversal symmetry,
Lipschitz dependence on data, and long-time rough-data continuation.

Every study is a pure function of its spec and seed; re-running writes
byte-identical CSV/JSON artifacts (timestamps only ever live in directory
names chosen by the caller).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import NullGrid
from .io import write_manifest
from .model import InitialData, ModelParams, generate_data, massless_exact_star
from .norms import FunctionSample, hs_norm
from .solver import (ConcentrationSuspected, SolverConfig, continue_globally,
                     solve, solve_marching)
from .util import fmt17, sup_abs

__all__ = [
    "StudySpec",
    "StudyResult",
    "baselines",
    "convergence_study",
    "conservation_study",
    "scaling_study",
    "reversal_study",
    "lipschitz_study",
    "rough_longtime_study",
    "write_study",
    "STUDIES",
    "run_study",
]

_BASELINES = None


def baselines():
    """Frozen regression constants, calibrated once and stored with 2x slack."""
    global _BASELINES
    if _BASELINES is None:
        path = os.path.join(os.path.dirname(__file__), "baselines.json")
        with open(path) as fh:
            _BASELINES = json.load(fh)
    return _BASELINES


@dataclass
class StudySpec:
    """What a study ran on: data generator, model parameters, grid ladder,
    tolerances, and the seed that makes it reproducible."""

    name: str
    data_kind: str = "gaussian"
    data_params: dict = field(default_factory=dict)
    params: ModelParams = ModelParams(1.0, 1.0)
    radius: float = 1.0
    ladder: tuple = (129, 257, 513)
    scheme: str = "marching"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ladder) < 3:
            raise ValueError("grid ladder needs at least 3 rungs")

    def to_manifest(self):
        return {"name": self.name, "data_kind": self.data_kind,
                "data_params": self.data_params, "params": self.params.to_manifest(),
                "radius": self.radius, "ladder": list(self.ladder),
                "scheme": self.scheme, "seed": self.seed,
                "tolerances": self.tolerances, "extra": self.extra}


@dataclass
class StudyResult:
    name: str
    spec: dict
    table: list
    verdict: dict

    @property
    def passed(self):
        return all(v.get("pass", False) for v in self.verdict.values())


def _fit_order(hs, errs):
    """Least-squares slope of log error vs log h over the whole ladder."""
    hs = np.asarray(hs, float)
    errs = np.asarray(errs, float)
    keep = errs > 0
    if keep.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(hs[keep]), np.log(errs[keep]), 1)[0])


def _data_for(spec: StudySpec, radius, n):
    return generate_data(spec.data_kind, dict(spec.data_params), spec.seed,
                         interval=(-radius, radius), n=n)


def _solve_for(spec: StudySpec, data, grid):
    cfg = SolverConfig(scheme=spec.scheme)
    return solve(data, spec.params, grid, cfg)


def convergence_study(spec: StudySpec) -> StudyResult:
    """Discretization order of the characteristic scheme.

    m = 0: sup error over all grid nodes against the exact massless solution.
    m != 0: Richardson self-convergence, comparing each rung against the next
    on shared nodes (the ladder should carry >= 4 rungs so the least-squares
    fit never rests on a single pair).  PASS iff the fitted slope lies in
    [1.7, 2.3].
    """
    oracle_mode = spec.params.m == 0.0
    sols = []
    hs = []
    for n in spec.ladder:
        grid = NullGrid(spec.radius, n)
        data = _data_for(spec, spec.radius, n)
        sols.append(_solve_for(spec, data, grid).fields)
        hs.append(grid.h)
    rows = []
    if oracle_mode:
        errs = []
        for n, h, fld in zip(spec.ladder, hs, sols):
            grid = NullGrid(spec.radius, n)
            data = _data_for(spec, spec.radius, n)
            exact = massless_exact_star(data, spec.params, grid)
            err = max(sup_abs(fld.psi - exact.psi), sup_abs(fld.phi - exact.phi))
            errs.append(err)
            rows.append({"n": n, "h": h, "sup_error": err})
        fit_h = hs
    else:
        errs = []
        fit_h = hs[:-1]
        for k in range(len(sols) - 1):
            step = (spec.ladder[k + 1] - 1) // (spec.ladder[k] - 1)
            fine = sols[k + 1]
            err = max(sup_abs(sols[k].psi - fine.psi[::step, ::step]),
                      sup_abs(sols[k].phi - fine.phi[::step, ::step]))
            errs.append(err)
            rows.append({"n": spec.ladder[k], "h": hs[k], "sup_error": err})
    order = _fit_order(fit_h, errs)
    lo, hi = spec.tolerances.get("order_range", (1.7, 2.3))
    verdict = {"order": {"value": order, "low": lo, "high": hi,
                         "pass": bool(lo <= order <= hi)}}
    return StudyResult("convergence", spec.to_manifest(), rows, verdict)


def conservation_study(spec: StudySpec) -> StudyResult:
    """Relative charge drift across every representable slice |t| <= T.

    PASS iff max drift <= C*h^2 with the frozen baseline constant, and iff
    the drift at each refinement is at least 3x below the previous rung's.
    """
    T = spec.extra.get("T", 1.0)
    drifts = []
    hs = []
    rows = []
    for n in spec.ladder:
        grid = NullGrid(spec.radius, n)
        data = _data_for(spec, spec.radius, n)
        sol = _solve_for(spec, data, grid)
        q0 = data.charge()
        D = int(round(2.0 * T / grid.h))
        worst = 0.0
        for d in range(-D, D + 1):
            x, ps, ph = sol.time_slice(d * grid.h / 2.0)
            q = float(np.trapezoid(np.abs(ps) ** 2 + np.abs(ph) ** 2, dx=grid.h))
            worst = max(worst, abs(q - q0) / q0)
        drifts.append(worst)
        hs.append(grid.h)
        rows.append({"n": n, "h": grid.h, "max_rel_drift": worst})
    C = spec.tolerances.get("drift_C", baselines()["charge_drift_C"])
    bound_ok = all(dr <= C * h * h for dr, h in zip(drifts, hs))
    order_ok = all(drifts[k + 1] <= drifts[k] / 3.0 for k in range(len(drifts) - 1))
    verdict = {
        "drift_bound": {"value": max(drifts), "C": C, "pass": bool(bound_ok)},
        "drift_order": {"pass": bool(order_ok)},
    }
    return StudyResult("conservation", spec.to_manifest(), rows, verdict)


def scaling_study(spec: StudySpec) -> StudyResult:
    """Exact scaling symmetry: data (f, g) on radius R against
    (tau^1/2 f(tau .), tau^1/2 g(tau .)) on radius R/tau with mass tau*m.

    The two grids share node indices, so tau^1/2 psi(tau t, tau x) and
    psi_tau(t, x) compare exactly node by node; PASS iff the sup difference
    stays below the frozen C*h^2 bound (the discrete updates are exactly
    equivariant, so the measured value is roundoff-level).
    """
    taus = spec.extra.get("taus", (0.5, 2.0))
    rows = []
    worst_by_tau = {}
    for tau in taus:
        for n in spec.ladder:
            grid = NullGrid(spec.radius, n)
            data = _data_for(spec, spec.radius, n)
            base = _solve_for(spec, data, grid).fields
            grid_t = NullGrid(spec.radius / tau, n)
            data_t = InitialData(data.x0 / tau, data.h / tau,
                                 math.sqrt(tau) * data.f, math.sqrt(tau) * data.g,
                                 {"kind": "scaled", "tau": tau})
            spec_t = ModelParams(tau * spec.params.m, spec.params.lam)
            scaled = solve(data_t, spec_t, grid_t, SolverConfig(scheme=spec.scheme)).fields
            diff = max(sup_abs(math.sqrt(tau) * base.psi - scaled.psi),
                       sup_abs(math.sqrt(tau) * base.phi - scaled.phi))
            rows.append({"tau": tau, "n": n, "h": grid.h, "sup_diff": diff})
            worst_by_tau[tau] = max(worst_by_tau.get(tau, 0.0), diff)
    C = spec.tolerances.get("symmetry_C", baselines()["symmetry_C"])
    h_max = 2.0 * spec.radius / (min(spec.ladder) - 1)
    bound = C * h_max * h_max
    verdict = {f"tau_{tau}": {"value": worst, "bound": bound,
                              "pass": bool(worst <= bound)}
               for tau, worst in worst_by_tau.items()}
    return StudyResult("scaling", spec.to_manifest(), rows, verdict)


def reversal_study(spec: StudySpec) -> StudyResult:
    """Time reversal: solving (f, g) with (m, lam) then swapping
    psi'(t, x) = phi(-t, x), phi'(t, x) = psi(-t, x) must reproduce the
    solve from (g, f) with (-m, -lam).  In null coordinates the swap is the
    transpose, so the comparison is node-exact."""
    rows = []
    worst = 0.0
    for n in spec.ladder:
        grid = NullGrid(spec.radius, n)
        data = _data_for(spec, spec.radius, n)
        fwd = _solve_for(spec, data, grid).fields
        swapped = InitialData(data.x0, data.h, data.g.copy(), data.f.copy(),
                              {"kind": "swapped"})
        back_params = ModelParams(-spec.params.m, -spec.params.lam)
        back = solve(swapped, back_params, grid, SolverConfig(scheme=spec.scheme)).fields
        diff = max(sup_abs(back.psi - fwd.phi.T), sup_abs(back.phi - fwd.psi.T))
        rows.append({"n": n, "h": grid.h, "sup_diff": diff})
        worst = max(worst, diff)
    C = spec.tolerances.get("symmetry_C", baselines()["symmetry_C"])
    h_max = 2.0 * spec.radius / (min(spec.ladder) - 1)
    bound = C * h_max * h_max
    verdict = {"reversal": {"value": worst, "bound": bound,
                            "pass": bool(worst <= bound)}}
    return StudyResult("reversal", spec.to_manifest(), rows, verdict)


def lipschitz_study(spec: StudySpec) -> StudyResult:
    """Measured Lipschitz constants of the data-to-solution map.

    For relative perturbation sizes delta in {1e-2, 1e-3, 1e-4} of the data's
    L2 size, reports ||solution difference||_{Linf_t L2_x} / ||data
    difference||_{L2}; PASS iff the ratios vary by < 2x across the ladder.
    """
    deltas = spec.extra.get("deltas", (1e-2, 1e-3, 1e-4))
    n = max(spec.ladder)
    grid = NullGrid(spec.radius, n)
    data = _data_for(spec, spec.radius, n)
    base = _solve_for(spec, data, grid)
    rng = np.random.default_rng(spec.seed + 7)
    x = data.x
    bump_f = np.exp(-((x - 0.1 * spec.radius) / (0.3 * spec.radius)) ** 2) * \
        np.exp(1j * rng.uniform(0, 2 * np.pi))
    bump_g = np.exp(-((x + 0.2 * spec.radius) / (0.25 * spec.radius)) ** 2) * \
        np.exp(1j * rng.uniform(0, 2 * np.pi))
    unit = InitialData(data.x0, data.h, bump_f, bump_g, {"kind": "perturbation"})
    unit = unit.rescaled(1.0)
    scale = data.total_l2()
    rows = []
    ratios = []
    for delta in deltas:
        d_abs = delta * scale
        pert = InitialData(data.x0, data.h, data.f + d_abs * unit.f,
                           data.g + d_abs * unit.g, {"kind": "perturbed"})
        sol = solve(pert, spec.params, grid, SolverConfig(scheme=spec.scheme))
        worst = 0.0
        for d in range(-(n - 1), n):
            _, ps0, ph0 = base.time_slice(d * grid.h / 2.0)
            _, ps1, ph1 = sol.time_slice(d * grid.h / 2.0)
            dq = float(np.trapezoid(np.abs(ps1 - ps0) ** 2 + np.abs(ph1 - ph0) ** 2,
                                    dx=grid.h))
            worst = max(worst, math.sqrt(dq))
        dd = math.hypot(
            math.sqrt(np.trapezoid(np.abs(d_abs * unit.f) ** 2, dx=data.h)),
            math.sqrt(np.trapezoid(np.abs(d_abs * unit.g) ** 2, dx=data.h)))
        ratios.append(worst / dd)
        rows.append({"delta_rel": delta, "delta_abs": d_abs, "ratio": worst / dd})
    spread = max(ratios) / min(ratios)
    verdict = {"lipschitz_stable": {"ratios": ratios, "spread": spread,
                                    "pass": bool(spread < 2.0)}}
    return StudyResult("lipschitz", spec.to_manifest(), rows, verdict)


def rough_longtime_study(spec: StudySpec) -> StudyResult:
    """Long-time continuation of rough data with an H^s trace.

    Runs continue_globally to T_target (10x the data width by default),
    recording step radii, charge, and the H^s norm of snapshot slices
    restricted to a fixed observation window.  PASS iff the run completes
    (no CONCENTRATION-SUSPECTED abort), the minimum step radius stays above
    4h, and the H^s trace is bounded (max/min < 100).
    """
    h = spec.extra.get("h", 1.0 / 128.0)
    T = spec.extra.get("T_target", 10.0)
    s = spec.extra.get("s", 0.1)
    eps = spec.extra.get("eps", 0.25)
    support = spec.extra.get("support", 0.5)
    pad = spec.extra.get("pad", 1.0)
    L = support + 2.0 * T + pad
    n = int(round(2.0 * L / h)) + 1
    data = generate_data(spec.data_kind, dict(spec.data_params), spec.seed,
                         interval=(-L, L), n=n)
    cfg = SolverConfig(epsilon_small=eps)
    n_checks = spec.extra.get("checkpoints", 10)
    checks = np.linspace(T / n_checks, T, n_checks)
    win = support + T + pad / 2.0
    rows = []
    verdict = {}
    try:
        log, final = continue_globally(data, spec.params, T, cfg,
                                       checkpoint_times=checks)
    except ConcentrationSuspected as exc:
        for r in (exc.log.rows() if exc.log else []):
            rows.append(r)
        verdict["completed"] = {"pass": False, "reason": str(exc)}
        return StudyResult("rough_longtime", spec.to_manifest(), rows, verdict)
    trace = []
    snaps = [(0.0, data)] + log.snapshots
    for t, state in snaps:
        piece = state.restrict(-win, win)
        hf = hs_norm(FunctionSample(piece.f, *piece.interval), s)
        hg = hs_norm(FunctionSample(piece.g, *piece.interval), s)
        val = math.hypot(hf, hg)
        trace.append(val)
        rows.append({"t": t, "hs": val, "charge": state.charge()})
    ratio = max(trace) / min(trace)
    verdict["completed"] = {"pass": True, "steps": len(log.steps)}
    verdict["min_radius"] = {"value": log.min_radius, "bound": 4.0 * h,
                             "pass": bool(log.min_radius > 4.0 * h)}
    verdict["hs_trace"] = {"max_over_min": ratio, "pass": bool(ratio < 100.0)}
    return StudyResult("rough_longtime", spec.to_manifest(), rows, verdict)


# ---------------------------------------------------------------------------
# artifacts

def write_study(result: StudyResult, outdir):
    """One CSV (the table) and one JSON verdict file, deterministic bytes."""
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{result.name}.csv")
    if result.table:
        keys = list(result.table[0].keys())
        with open(csv_path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for row in result.table:
                fh.write(",".join(
                    fmt17(row[k]) if isinstance(row[k], float) else str(row[k])
                    for k in keys) + "\n")
    payload = {"study": result.name, "spec": result.spec,
               "verdict": result.verdict, "pass": result.passed}
    write_manifest(os.path.join(outdir, "verdict.json"), payload)
    return csv_path


def _default_specs():
    return {
        "convergence": StudySpec(
            "convergence", "gaussian",
            {"amplitude": 0.8, "width": 0.4, "g_amplitude": 0.6, "g_width": 0.5},
            ModelParams(0.0, 1.0), radius=1.0, ladder=(129, 257, 513)),
        "convergence_massive": StudySpec(
            "convergence_massive", "gaussian",
            {"amplitude": 0.6, "width": 0.25, "g_amplitude": 0.5, "g_width": 0.3},
            ModelParams(1.0, 1.0), radius=0.5, ladder=(65, 129, 257, 513)),
        "conservation": StudySpec(
            "conservation", "gaussian",
            {"amplitude": 0.3, "width": 0.35, "g_amplitude": 0.3},
            ModelParams(1.0, 1.0), radius=3.0, ladder=(129, 257, 513),
            extra={"T": 1.0}),
        "scaling": StudySpec(
            "scaling", "gaussian",
            {"amplitude": 0.5, "width": 0.3, "g_amplitude": 0.4, "g_width": 0.25},
            ModelParams(1.0, 1.0), radius=1.0, ladder=(65, 129, 257)),
        "reversal": StudySpec(
            "reversal", "gaussian",
            {"amplitude": 0.5, "width": 0.3, "g_amplitude": 0.4, "g_width": 0.25},
            ModelParams(0.5, 1.0), radius=1.0, ladder=(65, 129, 257)),
        "lipschitz": StudySpec(
            "lipschitz", "gaussian",
            {"amplitude": 0.3, "width": 0.25, "g_amplitude": 0.3},
            ModelParams(0.1, 1.0), radius=0.5, ladder=(65, 129, 257)),
        "rough_longtime": StudySpec(
            "rough_longtime", "box", {"height": 1.0, "a": -0.5, "b": 0.5},
            ModelParams(1.0, 1.0), extra={"eps": 0.3, "h": 1.0 / 128.0,
                                          "T_target": 10.0, "support": 0.5}),
    }


STUDIES = {
    "convergence": convergence_study,
    "convergence_massive": convergence_study,
    "conservation": conservation_study,
    "scaling": scaling_study,
    "reversal": reversal_study,
    "lipschitz": lipschitz_study,
    "rough_longtime": rough_longtime_study,
}


def run_study(name, spec: StudySpec = None, outdir=None) -> StudyResult:
    """Run a named study with its default spec (or an override) and
    optionally write its artifacts."""
    if name not in STUDIES:
        raise KeyError(f"unknown study {name!r}; available: {sorted(STUDIES)}")
    spec = spec or _default_specs()[name]
    result = STUDIES[name](spec)
    if outdir is not None:
        write_study(result, outdir)
    return result
