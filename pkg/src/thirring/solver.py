"""Diamond solvers for the Thirring system in null coordinates.

Both schemes discretize the characteristic integral equations

    psi*(a, b) = f(b) + 1/2 * integral_b^a F*(g, b) dg
    phi*(a, b) = g(a) - 1/2 * integral_a^b G*(a, g) dg

with the composite trapezoidal rule (F, G are the two right-hand sides).
`solve_local` iterates the full-grid fixed-point map; `solve_marching`
sweeps anti-diagonals outward from t = 0, resolving the implicit cell
endpoint with a short fixed-point loop.  Both schemes satisfy the same
discrete system, so their fixed points agree to solver tolerance.

`glue_solve` assembles lab-frame solutions on a slab from one diamond or
from a tiling by overlapping diamonds (verifying agreement on overlaps),
and `continue_globally` drives long-time runs with step radii chosen from
the concentration function of the current slice.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import NullGrid
from .model import InitialData, ModelParams, SpinorPair, charge, rhs_phi, rhs_psi
from .norms import concentration_function
from .util import cumtrapz, sup_abs

__all__ = [
    "SolverConfig",
    "LocalSolution",
    "Slice",
    "GluedSolution",
    "ContinuationStep",
    "ContinuationLog",
    "ConvergenceError",
    "GluingError",
    "ConcentrationSuspected",
    "SmallnessWarning",
    "picard_step",
    "solve_local",
    "solve_marching",
    "solve",
    "glue_solve",
    "concentration_radius",
    "continue_globally",
]


class ConvergenceError(RuntimeError):
    """An iteration failed to reach its tolerance."""

    def __init__(self, message, ratio=None, cell=None):
        super().__init__(message)
        self.ratio = ratio
        self.cell = cell


class GluingError(RuntimeError):
    """Overlapping diamond solutions disagree beyond the uniqueness bound."""


class ConcentrationSuspected(RuntimeError):
    """The continuation step radius underflowed the grid.

    At fixed h this signals under-resolution, not blow-up: true solutions
    provably never concentrate charge at a point.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class SmallnessWarning(UserWarning):
    """Picard preconditions (radius cap, data smallness) are violated."""


@dataclass(frozen=True)
class SolverConfig:
    """scheme is "picard" or "marching"; tol is the sup-norm fixed-point
    tolerance; epsilon_small overrides the smallness threshold (default
    0.1/max(1, |lam|), since the contraction constant is never quantified)."""

    scheme: str = "marching"
    tol: float = 1e-10
    max_iter: int = 200
    epsilon_small: float | None = None

    def __post_init__(self):
        if self.scheme not in ("picard", "marching"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if self.epsilon_small is not None and not 0.0 < self.epsilon_small < 1.0:
            raise ValueError(f"epsilon_small must lie in (0, 1), got {self.epsilon_small!r}")

    def epsilon_for(self, lam):
        if self.epsilon_small is not None:
            return self.epsilon_small
        return 0.1 / max(1.0, abs(lam))

    def to_manifest(self):
        return {"scheme": self.scheme, "tol": self.tol, "max_iter": self.max_iter,
                "epsilon_small": self.epsilon_small}


@dataclass
class LocalSolution:
    """Converged fields on one diamond plus iteration diagnostics."""

    fields: SpinorPair
    grid: NullGrid
    diagnostics: list
    converged: bool
    scheme: str
    data: InitialData

    def time_slice(self, t):
        from .geometry import time_slice
        return time_slice(self.grid, self.fields, t)


def _require_alignment(data: InitialData, grid: NullGrid):
    tol = 1e-9 * max(1.0, grid.radius)
    if data.n != grid.n or abs(data.h - grid.h) > tol or abs(data.x0 + grid.radius) > tol:
        raise ValueError(
            f"data lattice (x0={data.x0!r}, h={data.h!r}, n={data.n}) does not match "
            f"grid nodes (x0={-grid.radius!r}, h={grid.h!r}, n={grid.n}); sample the "
            "data on the grid's own lattice"
        )


def picard_step(fields: SpinorPair, data: InitialData, params: ModelParams,
                grid: NullGrid) -> SpinorPair:
    """One application of the solution-formula map on the full square.

    Along each beta-column, psi' = f(beta) + 1/2 * Trap integral of the psi
    right-hand side from the diagonal; phi' mirrored along alpha-rows with
    the opposite orientation (d_alpha psi* = F*/2, d_beta phi* = -G*/2).
    The diagonal is reproduced exactly.
    """
    _require_alignment(data, grid)
    diag = np.arange(grid.n)
    scale = max(sup_abs(fields.psi, fields.phi), 1.0)
    if sup_abs(fields.psi[diag, diag] - data.f, fields.phi[diag, diag] - data.g) > 1e-10 * scale:
        raise ValueError("fields' diagonal does not carry the initial data")
    h = grid.h
    F = rhs_psi(fields.phi, fields.psi, params)
    G = rhs_phi(fields.psi, fields.phi, params)
    CF = cumtrapz(F, h, axis=0)
    CG = cumtrapz(G, h, axis=1)
    psi = data.f[None, :] + 0.5 * (CF - CF[diag, diag][None, :])
    phi = data.g[:, None] - 0.5 * (CG - CG[diag, diag][:, None])
    return SpinorPair(psi, phi)


def solve_local(data: InitialData, params: ModelParams, grid: NullGrid,
                config: SolverConfig = SolverConfig(scheme="picard")) -> LocalSolution:
    """Fixed point of the solution-formula map by Picard iteration.

    Starts from the free solution (f transported along beta, g along alpha).
    The theoretical contraction regime wants R < 1/(16|m|) and small data;
    violating either only warns, since the discrete iteration often still
    converges.  Raises ConvergenceError (naming the last contraction ratio)
    if max_iter sweeps do not reach tol.
    """
    _require_alignment(data, grid)
    if params.m != 0.0 and grid.radius >= 1.0 / (16.0 * abs(params.m)):
        warnings.warn(
            f"R = {grid.radius} exceeds the contraction cap 1/(16|m|) = "
            f"{1.0 / (16.0 * abs(params.m)):.6g}; Picard may converge anyway",
            SmallnessWarning, stacklevel=2)
    eps = config.epsilon_for(params.lam)
    if data.total_l2() >= eps:
        warnings.warn(
            f"data size ||f||+||g|| = {data.total_l2():.6g} is not below the smallness "
            f"threshold {eps:.6g}; Picard may converge anyway",
            SmallnessWarning, stacklevel=2)
    fields = SpinorPair(np.broadcast_to(data.f[None, :], (grid.n, grid.n)).copy(),
                        np.broadcast_to(data.g[:, None], (grid.n, grid.n)).copy())
    diffs = []
    for _ in range(config.max_iter):
        new = picard_step(fields, data, params, grid)
        diff = sup_abs(new.psi - fields.psi, new.phi - fields.phi)
        diffs.append(diff)
        fields = new
        if diff <= config.tol:
            return LocalSolution(fields, grid, diffs, True, "picard", data)
    ratio = diffs[-1] / diffs[-2] if len(diffs) >= 2 and diffs[-2] > 0 else math.inf
    raise ConvergenceError(
        f"Picard did not reach tol = {config.tol:g} in {config.max_iter} sweeps; "
        f"last sup-norm difference {diffs[-1]:.3e}, last contraction ratio "
        f"{ratio:.4g} (data too large or R too large)",
        ratio=ratio)


def _aitken(x0, x1, x2):
    """Componentwise delta-squared extrapolation of a fixed-point triple.

    Extrapolates only where the step d2^2/den would not exceed the plain
    correction d2 (a clean geometric mode with ratio < 1/2); elsewhere the
    iterate x2 is already the best available and is kept as is.
    """
    d1 = x1 - x0
    d2 = x2 - x1
    den = d2 - d1
    safe = np.abs(den) >= np.abs(d2) + 1e-300
    return np.where(safe, x2 - d2 * d2 / np.where(safe, den, 1.0), x2)


def _march_levels(f, g, params: ModelParams, h, d_max, sign,
                  inner_tol=1e-13, inner_max=8):
    """March anti-diagonal levels away from the diagonal t = 0.

    Yields (d, psi_d, phi_d) for |d| = 1..d_max with d = sign*|d|; level d
    holds the n - |d| slice nodes of t = d*h/2, entry k at x = x0 + |t| + k*h.
    Each node solves the one-cell trapezoidal update implicitly (fixed-point
    inner loop, Euler predictor).
    """
    psi_prev = np.array(f, dtype=complex)
    phi_prev = np.array(g, dtype=complex)
    h4 = 0.25 * h * sign
    for lev in range(1, d_max + 1):
        F_prev = rhs_psi(phi_prev, psi_prev, params)
        G_prev = rhs_phi(psi_prev, phi_prev, params)
        if sign > 0:
            psi_src, F_src = psi_prev[:-1], F_prev[:-1]
            phi_src, G_src = phi_prev[1:], G_prev[1:]
        else:
            psi_src, F_src = psi_prev[1:], F_prev[1:]
            phi_src, G_src = phi_prev[:-1], G_prev[:-1]
        base_psi = psi_src + h4 * F_src
        base_phi = phi_src + h4 * G_src
        psi_new = psi_src + 2.0 * h4 * F_src
        phi_new = phi_src + 2.0 * h4 * G_src
        # Fixed-point cycles on the implicit endpoint, Aitken-accelerated:
        # two applications of the cell map, then a guarded delta-squared
        # extrapolation.  Same fixed point, but survives the stiff cells
        # where both field amplitudes are large.
        delta = np.inf
        corr = np.zeros(psi_new.shape)
        for _ in range(inner_max):
            psi_1 = base_psi + h4 * rhs_psi(phi_new, psi_new, params)
            phi_1 = base_phi + h4 * rhs_phi(psi_new, phi_new, params)
            psi_2 = base_psi + h4 * rhs_psi(phi_1, psi_1, params)
            phi_2 = base_phi + h4 * rhs_phi(psi_1, phi_1, params)
            corr = np.maximum(np.abs(psi_2 - psi_1), np.abs(phi_2 - phi_1))
            delta = float(corr.max()) if corr.size else 0.0
            if delta <= inner_tol:
                psi_new, phi_new = psi_2, phi_2
                break
            psi_new = _aitken(psi_new, psi_1, psi_2)
            phi_new = _aitken(phi_new, phi_1, phi_2)
        if delta > inner_tol:
            k = int(np.argmax(corr))
            raise ConvergenceError(
                f"implicit cell update stalled at level d = {sign * lev}, cell k = {k} "
                f"(last correction {delta:.3e} > {inner_tol:g}); grid too coarse for "
                "the local field amplitudes",
                cell=(sign * lev, k))
        yield sign * lev, psi_new, phi_new
        psi_prev, phi_prev = psi_new, phi_new


def solve_marching(data: InitialData, params: ModelParams, grid: NullGrid,
                   inner_tol=1e-13, inner_max=8) -> LocalSolution:
    """Anti-diagonal marching solve of the same discrete system on the full
    square (both time directions).  Agrees with the Picard fixed point to
    solver tolerance; diagnostics hold the per-level inner corrections."""
    _require_alignment(data, grid)
    n = grid.n
    psi = np.empty((n, n), dtype=complex)
    phi = np.empty((n, n), dtype=complex)
    diag = np.arange(n)
    psi[diag, diag] = data.f
    phi[diag, diag] = data.g
    deltas = []
    for sign in (1, -1):
        for d, psi_d, phi_d in _march_levels(data.f, data.g, params, grid.h,
                                             n - 1, sign, inner_tol, inner_max):
            rows, cols = grid.slice_indices(d)
            psi[rows, cols] = psi_d
            phi[rows, cols] = phi_d
    return LocalSolution(SpinorPair(psi, phi), grid, deltas, True, "marching", data)


def solve(data: InitialData, params: ModelParams, grid: NullGrid,
          config: SolverConfig = SolverConfig()) -> LocalSolution:
    """Dispatch on config.scheme."""
    if config.scheme == "picard":
        return solve_local(data, params, grid, config)
    return solve_marching(data, params, grid)


# ---------------------------------------------------------------------------
# lab-frame assembly

@dataclass
class Slice:
    """One lab-time slice: fields on x = x0 + h*arange(len(psi))."""

    t: float
    x0: float
    h: float
    psi: np.ndarray
    phi: np.ndarray

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.psi.size)

    def charge(self):
        return charge(self.psi, self.phi, self.h)

    def as_data(self, manifest=None):
        return InitialData(self.x0, self.h, self.psi.copy(), self.phi.copy(),
                           manifest or {"kind": "slice", "t": self.t})


@dataclass
class GluedSolution:
    """Lab-frame solution on the slab |t| <= T, x in [x_lo + T, x_hi - T]."""

    slices: list
    mode: str
    overlap_max_diff: float | None = None
    manifest: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.t for s in self.slices])

    def at(self, t):
        for s in self.slices:
            if abs(s.t - t) <= 1e-9 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no slice stored at t = {t!r}")


def _restrict_slice(sl: Slice, lo, hi):
    x = sl.x
    tol = 1e-9 * max(1.0, sl.h)
    mask = (x >= lo - tol) & (x <= hi + tol)
    idx = np.nonzero(mask)[0]
    return Slice(sl.t, float(x[idx[0]]), sl.h, sl.psi[idx], sl.phi[idx])


def _band_slices(data: InitialData, params, levels, inner_tol=1e-13, inner_max=8):
    """Slices of the requested anti-diagonal levels by banded marching over
    the data's own interval (level 0 is the data itself)."""
    want = set(levels)
    out = {}
    if 0 in want:
        out[0] = Slice(0.0, data.x0, data.h, data.f.copy(), data.g.copy())
    for sign in (1, -1):
        d_max = max((abs(d) for d in want if (d > 0) == (sign > 0) and d != 0), default=0)
        for d, psi_d, phi_d in _march_levels(data.f, data.g, params, data.h,
                                             d_max, sign, inner_tol, inner_max):
            if d in want:
                out[d] = Slice(d * data.h / 2.0, data.x0 + abs(d) * data.h / 2.0,
                               data.h, psi_d, phi_d)
    return out


def _solve_diamond(data: InitialData, params, config):
    grid = NullGrid((data.n - 1) * data.h / 2.0, data.n)
    center = 0.5 * (data.interval[0] + data.interval[1])
    return solve(data.recentered(center), params, grid, config), grid, center


def glue_solve(data: InitialData, params: ModelParams, T, config: SolverConfig = SolverConfig(),
               mode="single", times=None) -> GluedSolution:
    """Lab-frame solution on |t| <= T over the window [x_lo + T, x_hi - T].

    mode="single" solves one diamond spanning the data interval and
    restricts (only the needed band of anti-diagonals is ever computed);
    mode="tiled" solves overlapping diamonds of radius 2T centered every 2T,
    checks the overlaps agree to 10*tol (uniqueness), and stitches each node
    from its nearest diamond.  By finite propagation speed both modes agree.
    """
    h = data.h
    x_lo, x_hi = data.interval
    L_half = data.span / 2.0
    if not 0 < T < L_half:
        raise ValueError(f"need 0 < T < half data span {L_half!r}, got T = {T!r}")
    D = int(round(2.0 * T / h))
    if abs(2.0 * T / h - D) > 1e-9 * max(1.0, abs(D)):
        raise ValueError(f"T = {T!r} is not a multiple of h/2 = {h / 2.0!r}")
    if times is None:
        levels = list(range(-D, D + 1))
    else:
        levels = []
        for t in times:
            d = int(round(2.0 * t / h))
            if abs(2.0 * t / h - d) > 1e-9 * max(1.0, abs(d)) or abs(d) > D:
                raise ValueError(f"requested time {t!r} is not representable within |t| <= T")
            levels.append(d)
    win_lo, win_hi = x_lo + T, x_hi - T

    if mode == "single":
        raw = _band_slices(data, params, levels)
        slices = [_restrict_slice(raw[d], win_lo, win_hi) for d in sorted(set(levels))]
        return GluedSolution(slices, "single", None,
                             {"T": T, "window": [win_lo, win_hi]})

    if mode != "tiled":
        raise ValueError(f"unknown glue mode {mode!r}")

    R = 2.0 * T
    if x_hi - x_lo < 2.0 * R:
        raise ValueError(f"tiled mode needs the data interval to span at least 4T = {2 * R!r}")
    x_mid = 0.5 * (x_lo + x_hi)
    j_max = int(math.floor((L_half - R) / R + 1e-12))
    centers = sorted({x_mid + j * R for j in range(-j_max, j_max + 1)}
                     | {x_lo + R, x_hi - R})
    n_loc = int(round(2.0 * R / h)) + 1
    locals_ = []
    for c in centers:
        sub = data.restrict(c - R, c + R)
        sol, grid, _ = _solve_diamond(sub, params, config)
        locals_.append((c, sol, grid))

    def diamond_slice(entry, d):
        c, sol, grid = entry
        xs, ps, ph = sol.time_slice(d * h / 2.0)
        return Slice(d * h / 2.0, c + float(xs[0]), h, ps, ph)

    # uniqueness check on every overlap of adjacent diamonds
    max_diff = 0.0
    for (a_ent, b_ent) in zip(locals_[:-1], locals_[1:]):
        ca, cb = a_ent[0], b_ent[0]
        for d in range(-D, D + 1):
            t_abs = abs(d) * h / 2.0
            lo = cb - R + t_abs
            hi = ca + R - t_abs
            if hi < lo - 1e-12:
                continue
            sa = _restrict_slice(diamond_slice(a_ent, d), lo, hi)
            sb = _restrict_slice(diamond_slice(b_ent, d), lo, hi)
            if sa.psi.size != sb.psi.size:
                raise GluingError(
                    f"overlap node sets differ at t = {d * h / 2.0!r} between diamonds "
                    f"centered {ca!r} and {cb!r}")
            max_diff = max(max_diff, sup_abs(sa.psi - sb.psi, sa.phi - sb.phi))
    bound = 10.0 * config.tol
    if max_diff > bound:
        raise GluingError(
            f"overlapping diamonds disagree by {max_diff:.3e} > 10*tol = {bound:.3e}; "
            "uniqueness violated, scheme bug")

    cents = np.array(centers)
    slices = []
    for d in sorted(set(levels)):
        t_abs = abs(d) * h / 2.0
        # slice lattice nodes sit at x_lo + |t| + k*h; start at the first one
        # inside the window
        first = x_lo + t_abs + math.ceil((win_lo - (x_lo + t_abs)) / h - 1e-9) * h
        xs = np.arange(first, win_hi + 1e-9 * h, h)
        near = np.argmin(np.abs(xs[:, None] - cents[None, :]), axis=1)
        psi = np.empty(xs.size, complex)
        phi = np.empty(xs.size, complex)
        for ic, ent in enumerate(locals_):
            sel = near == ic
            if not np.any(sel):
                continue
            dsl = diamond_slice(ent, d)
            k = np.round((xs[sel] - dsl.x0) / h).astype(int)
            if np.any(k < 0) or np.any(k >= dsl.psi.size):
                raise GluingError("stitch node fell outside its nearest diamond")
            psi[sel] = dsl.psi[k]
            phi[sel] = dsl.phi[k]
        slices.append(Slice(d * h / 2.0, float(xs[0]), h, psi, phi))
    return GluedSolution(slices, "tiled", max_diff,
                         {"T": T, "window": [win_lo, win_hi], "centers": centers})


# ---------------------------------------------------------------------------
# global continuation

def concentration_radius(data: InitialData, eps, r_max):
    """Largest dyadic radius r = r_max * 2^-k whose sliding-window charge
    stays strictly below eps; 0.0 if even the smallest resolvable window
    (one cell) fails."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    r = float(r_max)
    while r >= data.h * (1.0 - 1e-12):
        if concentration_function(data.f, data.g, data.h, r) < eps:
            return r
        r /= 2.0
    return 0.0


@dataclass
class ContinuationStep:
    t: float
    radius: float
    r_star: float
    window_mass: float
    peak_density: float
    charge: float


@dataclass
class ContinuationLog:
    steps: list
    snapshots: list
    completed: bool = False

    @property
    def min_radius(self):
        return min((s.radius for s in self.steps), default=math.inf)

    def rows(self):
        return [{"t": s.t, "radius": s.radius, "r_star": s.r_star,
                 "window_mass": s.window_mass, "peak_density": s.peak_density,
                 "charge": s.charge} for s in self.steps]


def continue_globally(data: InitialData, params: ModelParams, T_target,
                      config: SolverConfig = SolverConfig(), *,
                      r_max=None, checkpoint_times=(), min_nodes=8):
    """Iterate local solves up to T_target, stepping T_j = R_j/2 where the
    radius R_j = min(r*/2, cap) comes from the concentration radius of the
    current slice and cap = 1/(16|m|).

    Radii live on the dyadic lattice h*2^k so every advance lands exactly on
    anti-diagonals.  Raises ConcentrationSuspected when the admissible
    radius underflows 2h (at fixed h: under-resolution, not blow-up).
    Returns (log, final slice data); `checkpoint_times` collects snapshots.
    """
    if not T_target > 0:
        raise ValueError(f"T_target must be positive, got {T_target!r}")
    h = data.h
    eps = config.epsilon_for(params.lam)
    if r_max is None:
        r_max = h * 2 ** int(math.floor(math.log2(data.span / 4.0 / h)))
    else:
        k = math.log2(r_max / h)
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"r_max = {r_max!r} must equal h * 2^k for integer k")
    cap = math.inf
    if params.m != 0.0:
        cap_raw = 1.0 / (16.0 * abs(params.m))
        if cap_raw < 2.0 * h:
            raise ValueError(
                f"contraction cap 1/(16|m|) = {cap_raw:.4g} is below 2h; refine the grid")
        cap = h * 2 ** int(math.floor(math.log2(cap_raw / h)))
    state = data
    t = 0.0
    steps = []
    snapshots = []
    pending = sorted(checkpoint_times)
    log = ContinuationLog(steps, snapshots)
    while t < T_target - 1e-12:
        r_star = concentration_radius(state, eps, r_max)
        if r_star <= 0.0:
            raise ConcentrationSuspected(
                f"CONCENTRATION-SUSPECTED at t = {t:.6g}: no dyadic window radius down "
                f"to h = {h:.4g} keeps local charge below eps = {eps:.4g}", log=log)
        radius = min(r_star / 2.0, cap)
        if radius < 2.0 * h * (1.0 - 1e-12):
            raise ConcentrationSuspected(
                f"CONCENTRATION-SUSPECTED at t = {t:.6g}: step radius {radius:.4g} "
                f"underflowed 2h = {2 * h:.4g} (under-resolution at fixed h, not blow-up)",
                log=log)
        d = int(round(radius / h))
        if state.n - d < min_nodes:
            raise ValueError(
                f"data interval exhausted at t = {t:.6g}: {state.n} nodes left, step "
                f"needs {d}; supply data on a wider interval")
        window_mass = concentration_function(state.f, state.g, h, r_star)
        peak = float(np.max(np.abs(state.f) ** 2 + np.abs(state.g) ** 2))
        last = None
        for _, psi_d, phi_d in _march_levels(state.f, state.g, params, h, d, 1):
            last = (psi_d, phi_d)
        t += radius / 2.0
        state = InitialData(state.x0 + radius / 2.0, h, last[0], last[1],
                            {"kind": "slice", "t": t})
        steps.append(ContinuationStep(t, radius, r_star, window_mass, peak,
                                      state.charge()))
        while pending and pending[0] <= t + 1e-12:
            snapshots.append((t, state))
            pending.pop(0)
    log.completed = True
    return log, state
