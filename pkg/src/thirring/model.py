"""The Thirring system's right-hand sides, charge, data generators, and the
exact massless solution used as a convergence oracle.

The system for the spinor components (psi, phi) with data (f, g) is

    d_t psi + d_x psi = -i*m*phi - 2i*lam*|phi|^2*psi
    d_t phi - d_x phi = -i*m*psi - 2i*lam*|psi|^2*phi

Its charge  integral(|psi|^2 + |phi|^2) dx  is conserved: the pointwise
engine is Re(conj(psi)*rhs_psi) + Re(conj(phi)*rhs_phi) = 0 for all inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

from .util import cumtrapz

__all__ = [
    "ModelParams",
    "SpinorPair",
    "InitialData",
    "rhs_psi",
    "rhs_phi",
    "charge",
    "generate_data",
    "massless_exact",
    "massless_exact_star",
]

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Mass m and coupling lam of the system."""

    m: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and np.isfinite(self.lam)):
            raise ValueError(f"parameters must be finite, got m={self.m}, lam={self.lam}")

    def to_manifest(self):
        return {"m": self.m, "lambda": self.lam}


@dataclass
class SpinorPair:
    """Complex samples of psi*, phi* on the nodes of a square null grid."""

    psi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        self.phi = np.asarray(self.phi, dtype=complex)
        if self.psi.shape != self.phi.shape:
            raise ValueError(f"psi/phi shape mismatch: {self.psi.shape} vs {self.phi.shape}")

    def copy(self):
        return SpinorPair(self.psi.copy(), self.phi.copy())


def rhs_psi(phi_val, psi_val, params: ModelParams):
    """-i*m*phi - 2i*lam*|phi|^2*psi (the psi equation's right-hand side)."""
    return -1j * params.m * phi_val - 2j * params.lam * np.abs(phi_val) ** 2 * psi_val


def rhs_phi(psi_val, phi_val, params: ModelParams):
    """-i*m*psi - 2i*lam*|psi|^2*phi (the phi equation's right-hand side)."""
    return -1j * params.m * psi_val - 2j * params.lam * np.abs(psi_val) ** 2 * phi_val


def charge(psi_slice, phi_slice, dx):
    """Trapezoidal approximation of integral(|psi|^2 + |phi|^2) dx."""
    dens = np.abs(np.asarray(psi_slice)) ** 2 + np.abs(np.asarray(phi_slice)) ** 2
    return float(np.trapezoid(dens, dx=dx))


@dataclass
class InitialData:
    """Sampled data (f, g) on the uniform lattice x0 + h*arange(n).

    `manifest` records the generator tag, resolved parameters, and seed so a
    run can be reproduced exactly.
    """

    x0: float
    h: float
    f: np.ndarray
    g: np.ndarray
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=complex)
        self.g = np.asarray(self.g, dtype=complex)
        if self.f.shape != self.g.shape or self.f.ndim != 1:
            raise ValueError("f and g must be 1-d arrays of equal length")
        if not self.h > 0:
            raise ValueError(f"sample spacing must be positive, got {self.h!r}")

    @property
    def n(self):
        return self.f.size

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.n)

    @property
    def interval(self):
        return (self.x0, self.x0 + self.h * (self.n - 1))

    @property
    def span(self):
        return self.h * (self.n - 1)

    def charge(self):
        return charge(self.f, self.g, self.h)

    def total_l2(self):
        """||f||_2 + ||g||_2 (trapezoidal)."""
        nf = np.sqrt(np.trapezoid(np.abs(self.f) ** 2, dx=self.h))
        ng = np.sqrt(np.trapezoid(np.abs(self.g) ** 2, dx=self.h))
        return float(nf + ng)

    def recentered(self, center):
        """Same samples with x0 shifted so `center` becomes the origin."""
        return InitialData(self.x0 - center, self.h, self.f.copy(), self.g.copy(),
                           dict(self.manifest, recentered_by=center))

    def restrict(self, a, b):
        """Node-aligned restriction to [a, b] (endpoints must be lattice points)."""
        ia = (a - self.x0) / self.h
        ib = (b - self.x0) / self.h
        i0, i1 = int(round(ia)), int(round(ib))
        if abs(ia - i0) > 1e-8 or abs(ib - i1) > 1e-8:
            raise ValueError(f"window [{a}, {b}] is not aligned with the sample lattice")
        if i0 < 0 or i1 >= self.n or i1 <= i0:
            raise ValueError(f"window [{a}, {b}] falls outside the sampled interval")
        return InitialData(self.x0 + i0 * self.h, self.h,
                           self.f[i0:i1 + 1].copy(), self.g[i0:i1 + 1].copy(),
                           dict(self.manifest, restricted_to=[a, b]))

    def rescaled(self, total_l2):
        """Scale both components so ||f||_2 + ||g||_2 equals `total_l2`."""
        cur = self.total_l2()
        if cur == 0.0:
            raise ValueError("cannot rescale identically-zero data")
        c = total_l2 / cur
        return InitialData(self.x0, self.h, c * self.f, c * self.g,
                           dict(self.manifest, rescaled_total_l2=total_l2))


# ---------------------------------------------------------------------------
# generators

def _box_samples(x, height, a, b):
    # Half-open convention [a, b): with lattice-aligned edges the trapezoidal
    # mass is exactly height^2*(b - a), independent of h.
    scale = max(1.0, abs(a), abs(b))
    return np.where((x >= a - _EDGE_TOL * scale) & (x < b - _EDGE_TOL * scale),
                    height + 0.0j, 0.0j)


def _gaussian_samples(x, amplitude, width, center, velocity):
    return amplitude * np.exp(-(((x - center) / width) ** 2)) * np.exp(1j * velocity * x)


def _rough_series(x, a, b, s, delta, modes, rng, amplitude):
    """Truncated trigonometric series with coefficients k^-(s + 1/2 + delta)
    and random phases: lies in H^s but, for small s and delta, in nothing
    much smoother.  Supported on [a, b)."""
    scale = max(1.0, abs(a), abs(b))
    inside = (x >= a - _EDGE_TOL * scale) & (x < b - _EDGE_TOL * scale)
    u = (x - a) / (b - a)
    k = np.arange(1, modes + 1)
    coef = k ** (-(s + 0.5 + delta))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)
    vals = (coef[None, :] * np.exp(1j * (2.0 * np.pi * np.outer(u, k) + phases[None, :]))).sum(axis=1)
    return amplitude * np.where(inside, vals, 0.0j)


def generate_data(kind, params=None, seed=0, *, interval, n):
    """Deterministic initial data for a solver run.

    kind is one of:
      gaussian      amplitude, width, center, velocity, plus optional
                    g_amplitude/g_center/g_velocity (g defaults to zero)
      box           height, a, b, plus optional g_height/g_a/g_b (g zero)
      sobolev_random  s, delta, a, b, modes, amplitude; seeded random phases,
                    both components drawn independently
      box_family    width w: box of height w^(-1/2) on [-w/2, w/2), fixed L2
                    norm but diverging sup norm as w -> 0
      zero          identically-zero pair

    The same (kind, params, seed) always yields the same samples.
    """
    params = dict(params or {})
    a_int, b_int = interval
    if not b_int > a_int:
        raise ValueError(f"empty interval {interval!r}")
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    h = (b_int - a_int) / (n - 1)
    x = a_int + h * np.arange(n)

    def take(name, default=None, required=False):
        if required and name not in params:
            raise ValueError(f"generator {kind!r} requires parameter {name!r}")
        return params.pop(name, default)

    if kind == "gaussian":
        amp = float(take("amplitude", 1.0))
        width = float(take("width", 1.0))
        if width <= 0:
            raise ValueError(f"gaussian width must be positive, got {width}")
        center = float(take("center", 0.0))
        vel = float(take("velocity", 0.0))
        g_amp = take("g_amplitude", 0.0)
        g_center = take("g_center", -center)
        g_vel = take("g_velocity", -vel)
        g_width = float(take("g_width", width))
        if g_width <= 0:
            raise ValueError(f"gaussian g_width must be positive, got {g_width}")
        f = _gaussian_samples(x, amp, width, center, vel)
        g = _gaussian_samples(x, float(g_amp), g_width, float(g_center), float(g_vel))
        resolved = dict(amplitude=amp, width=width, center=center, velocity=vel,
                        g_amplitude=float(g_amp), g_width=g_width,
                        g_center=float(g_center), g_velocity=float(g_vel))
    elif kind == "box":
        height = float(take("height", 1.0))
        a = float(take("a", required=True))
        b = float(take("b", required=True))
        if not b > a:
            raise ValueError(f"box needs a < b, got [{a}, {b}]")
        g_height = float(take("g_height", 0.0))
        g_a = float(take("g_a", a))
        g_b = float(take("g_b", b))
        f = _box_samples(x, height, a, b)
        g = _box_samples(x, g_height, g_a, g_b) if g_height != 0.0 else np.zeros(n, complex)
        resolved = dict(height=height, a=a, b=b, g_height=g_height, g_a=g_a, g_b=g_b)
    elif kind == "sobolev_random":
        s = float(take("s", 0.1))
        delta = float(take("delta", 0.05))
        a = float(take("a", -0.5))
        b = float(take("b", 0.5))
        modes = int(take("modes", 128))
        amp = float(take("amplitude", 1.0))
        if not b > a:
            raise ValueError(f"support needs a < b, got [{a}, {b}]")
        rng = np.random.default_rng(seed)
        f = _rough_series(x, a, b, s, delta, modes, rng, amp)
        g = _rough_series(x, a, b, s, delta, modes, rng, amp)
        resolved = dict(s=s, delta=delta, a=a, b=b, modes=modes, amplitude=amp)
    elif kind == "box_family":
        w = float(take("width", required=True))
        if w <= 0:
            raise ValueError(f"box_family width must be positive, got {w}")
        g_height = float(take("g_height", 1.5))
        g_halfwidth = float(take("g_halfwidth", 0.25))
        height = w ** -0.5
        # f is the shrinking box (fixed L2, diverging sup); g is a fixed
        # companion box so the N-part is driven at a w-independent rate and
        # its uniform bound is what the family actually measures
        f = _box_samples(x, height, -w / 2.0, w / 2.0)
        g = _box_samples(x, g_height, -g_halfwidth, g_halfwidth)
        resolved = dict(width=w, height=height, g_height=g_height,
                        g_halfwidth=g_halfwidth)
    elif kind == "zero":
        f = np.zeros(n, complex)
        g = np.zeros(n, complex)
        resolved = {}
    else:
        raise ValueError(f"unknown data kind {kind!r}")

    if params:
        raise ValueError(f"unknown parameters for kind {kind!r}: {sorted(params)}")
    manifest = {"kind": kind, "params": resolved, "seed": seed,
                "interval": [a_int, b_int], "n": n}
    return InitialData(a_int, h, f, g, manifest)


# ---------------------------------------------------------------------------
# exact massless solution

def _profiles(data: InitialData):
    """Evaluators f, g and exact cumulative integrals of |f|^2, |g|^2.

    Closed forms are used for the analytic generators (gaussian via erf,
    boxes piecewise linearly); anything else falls back to piecewise-linear
    interpolation of the samples, which degrades the oracle to the data's
    own resolution.
    """
    kind = data.manifest.get("kind")
    p = data.manifest.get("params", {})

    def gaussian_eval(amp, width, center, vel):
        return lambda x: _gaussian_samples(np.asarray(x, float), amp, width, center, vel)

    def gaussian_cum(amp, width, center):
        # integral_-inf^x amp^2 exp(-2((s-c)/w)^2) ds
        c0 = amp * amp * width * np.sqrt(np.pi / 2.0) / 2.0
        return lambda x: c0 * (1.0 + erf(np.sqrt(2.0) * (np.asarray(x, float) - center) / width))

    def box_eval(height, a, b):
        return lambda x: _box_samples(np.asarray(x, float), height, a, b)

    def box_cum(height, a, b):
        return lambda x: height * height * np.clip(np.asarray(x, float) - a, 0.0, b - a)

    if kind == "gaussian":
        f_eval = gaussian_eval(p["amplitude"], p["width"], p["center"], p["velocity"])
        g_eval = gaussian_eval(p["g_amplitude"], p["g_width"], p["g_center"], p["g_velocity"])
        f2 = gaussian_cum(p["amplitude"], p["width"], p["center"])
        g2 = gaussian_cum(p["g_amplitude"], p["g_width"], p["g_center"])
        return f_eval, g_eval, f2, g2
    if kind in ("box", "box_family"):
        if kind == "box_family":
            height, a, b = p["height"], -p["width"] / 2.0, p["width"] / 2.0
            gh, ga, gb = p["g_height"], -p["g_halfwidth"], p["g_halfwidth"]
        else:
            height, a, b = p["height"], p["a"], p["b"]
            gh, ga, gb = p["g_height"], p["g_a"], p["g_b"]
        return (box_eval(height, a, b), box_eval(gh, ga, gb),
                box_cum(height, a, b), box_cum(gh, ga, gb))

    # sampled fallback
    xs = data.x

    def interp_eval(vals):
        re = np.interp
        return lambda x: re(x, xs, vals.real) + 1j * re(x, xs, vals.imag)

    def interp_cum(vals):
        cum = cumtrapz(np.abs(vals) ** 2, data.h)
        return lambda x: np.interp(x, xs, cum)

    return (interp_eval(data.f), interp_eval(data.g),
            interp_cum(data.f), interp_cum(data.g))


def massless_exact(data: InitialData, params: ModelParams, t, x):
    """Exact solution of the m = 0 system at lab points (t, x):

        psi(t, x) = f(x - t) * exp(-i*lam * integral_{x-t}^{x+t} |g|^2)
        phi(t, x) = g(x + t) * exp(-i*lam * integral_{x-t}^{x+t} |f|^2)

    The moduli are exactly transported data and only the phases see the
    coupling.  Rejects m != 0 and points outside the domain of dependence.
    """
    if params.m != 0.0:
        raise ValueError(f"massless_exact requires m = 0, got m = {params.m!r}")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    beta = x - t
    alpha = x + t
    lo, hi = data.interval
    tol = 1e-9 * max(1.0, data.span)
    if np.any(beta < lo - tol) or np.any(alpha > hi + tol) or \
       np.any(alpha < lo - tol) or np.any(beta > hi + tol):
        raise ValueError("(t, x) leaves the domain of dependence of the data interval")
    f_eval, g_eval, f2cum, g2cum = _profiles(data)
    phase_psi = np.exp(-1j * params.lam * (g2cum(alpha) - g2cum(beta)))
    phase_phi = np.exp(-1j * params.lam * (f2cum(alpha) - f2cum(beta)))
    return f_eval(beta) * phase_psi, g_eval(alpha) * phase_phi


def massless_exact_star(data: InitialData, params: ModelParams, grid):
    """Exact massless solution on every node of a square null grid.

    psi*(alpha_i, beta_j) = f(beta_j) exp(-i lam (G(alpha_i) - G(beta_j)))
    with G the cumulative integral of |g|^2, and symmetrically for phi*.
    """
    if params.m != 0.0:
        raise ValueError(f"massless_exact requires m = 0, got m = {params.m!r}")
    f_eval, g_eval, f2cum, g2cum = _profiles(data)
    nodes = grid.nodes
    g2 = g2cum(nodes)
    f2 = f2cum(nodes)
    psi = f_eval(nodes)[None, :] * np.exp(-1j * params.lam * (g2[:, None] - g2[None, :]))
    phi = g_eval(nodes)[:, None] * np.exp(-1j * params.lam * (f2[:, None] - f2[None, :]))
    return SpinorPair(psi, phi)
