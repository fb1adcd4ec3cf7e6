"""Function-space quantities: L^p, Gagliardo H^s, W^{1,q}, the mixed
null-direction Y_R/X_R norms, the concentration function, the reflection
extension operator, and numerical checkers for the interval inequalities.

H^s on an interval is computed from the Gagliardo characterization

    ||f||_{H^s}^2  ~  ||f||_{L^2}^2
                      + int int |f(x) - f(y)|^2 / |x - y|^{1+2s} dx dy,

valid for 0 < s < 1/2.  Near-diagonal cell pairs (|i - j| <= 1) use the
exact seminorm contribution of the piecewise-linear interpolant (naive cell
exclusion systematically underestimates rough f); well-separated pairs use
a midpoint-rule double sum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .util import cumtrapz, thread_count

__all__ = [
    "FunctionSample",
    "NormSpec",
    "ExtensionSpec",
    "lp_norm",
    "gagliardo_seminorm",
    "hs_norm",
    "w1q_norm",
    "yr_norm",
    "xr_norm",
    "mixed_l2_sup_norm",
    "concentration_function",
    "extend",
    "InequalityReport",
    "check_inequalities",
]


@dataclass
class FunctionSample:
    """Complex samples of one function on a uniform lattice over [a, b]."""

    values: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 1 or self.values.size < 4:
            raise ValueError("need a 1-d array of at least 4 samples")
        if not self.b > self.a:
            raise ValueError(f"empty interval [{self.a}, {self.b}]")

    @property
    def n(self):
        return self.values.size

    @property
    def spacing(self):
        return (self.b - self.a) / (self.n - 1)

    @property
    def x(self):
        return self.a + self.spacing * np.arange(self.n)

    @classmethod
    def from_callable(cls, func, a, b, n):
        x = np.linspace(a, b, n)
        return cls(np.asarray(func(x), dtype=complex), a, b)

    def restrict(self, a, b):
        h = self.spacing
        i0 = int(round((a - self.a) / h))
        i1 = int(round((b - self.a) / h))
        if abs(self.a + i0 * h - a) > 1e-9 or abs(self.a + i1 * h - b) > 1e-9:
            raise ValueError(f"window [{a}, {b}] is not lattice-aligned")
        if i0 < 0 or i1 >= self.n:
            raise ValueError(f"window [{a}, {b}] exceeds [{self.a}, {self.b}]")
        return FunctionSample(self.values[i0:i1 + 1].copy(), a, b)


@dataclass(frozen=True)
class NormSpec:
    """Regularity s with the paired exponents 1/2 = 1/p + s and 1/q = 1 - 2s."""

    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 0.5:
            raise ValueError(f"s must lie in (0, 1/2), got {self.s!r}")

    @property
    def p(self):
        return 1.0 / (0.5 - self.s)

    @property
    def q(self):
        return 1.0 / (1.0 - 2.0 * self.s)


@dataclass(frozen=True)
class ExtensionSpec:
    """Reflection-extension setup: taper rho is 1 on |x| <= R, the quintic
    smoothstep ramp 1 - S((|x|-R)/R) with S(u) = 6u^5 - 15u^4 + 10u^3 on
    R <= |x| <= 2R (C^2 at both ends), and 0 beyond; |rho| <= 1."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R!r}")

    def rho(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        u = np.clip((x - self.R) / self.R, 0.0, 1.0)
        return 1.0 - (6.0 * u ** 5 - 15.0 * u ** 4 + 10.0 * u ** 3)


def lp_norm(f: FunctionSample, p):
    """Trapezoidal L^p norm (max of |values| for p = inf)."""
    if p != np.inf and p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    av = np.abs(f.values)
    if p == np.inf:
        return float(av.max())
    return float(np.trapezoid(av ** p, dx=f.spacing) ** (1.0 / p))


def _pl_cell_constants(s):
    """Exact unit-cell seminorm integrals of a piecewise-linear function.

    same = int_0^1 int_0^1 |u - v|^{1-2s} du dv            (same cell)
    A    = int_0^1 int_0^1 u^2 (u+v)^{-1-2s} du dv         (adjacent cells)
    B    = int_0^1 int_0^1 u v (u+v)^{-1-2s} du dv
    """
    sig = 1.0 + 2.0 * s

    def seg(a):
        # int_1^2 w^a dw
        return (2.0 ** (a + 1.0) - 1.0) / (a + 1.0)

    same = 1.0 / ((1.0 - s) * (3.0 - 2.0 * s))
    i_uu = seg(3.0 - sig) - 2.0 * seg(2.0 - sig) + seg(1.0 - sig)
    i_u = seg(3.0 - sig) - seg(2.0 - sig)
    quart = 1.0 / (4.0 - sig)
    A = (i_uu - quart) / (1.0 - sig)
    B = (i_u - quart) / (2.0 - sig) - (i_uu - quart) / (1.0 - sig)
    return same, A, B


def _far_field_sum(fbar, h, sig):
    """Midpoint-rule double sum over cell pairs with |i - j| >= 2."""
    cells = fbar.size
    if cells < 3:
        return 0.0
    idx = np.arange(cells, dtype=float)
    rows_per_chunk = max(1, 4_000_000 // cells)

    def block(r0):
        r1 = min(cells, r0 + rows_per_chunk)
        dist = np.abs(idx[r0:r1, None] - idx[None, :])
        dist[dist < 1.5] = np.inf
        diff2 = np.abs(fbar[r0:r1, None] - fbar[None, :]) ** 2
        return float((diff2 / (dist * h) ** sig).sum())

    starts = range(0, cells, rows_per_chunk)
    workers = thread_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            total = sum(pool.map(block, starts))
    else:
        total = sum(block(r0) for r0 in starts)
    return total * h * h


def gagliardo_seminorm(f: FunctionSample, s):
    """Square root of the double integral |f(x)-f(y)|^2 / |x-y|^{1+2s}."""
    if not 0.0 < s < 0.5:
        raise ValueError(f"s must lie in (0, 1/2), got {s!r}")
    h = f.spacing
    v = f.values
    slopes = np.diff(v) / h
    fbar = 0.5 * (v[:-1] + v[1:])
    same, A, B = _pl_cell_constants(s)
    hpow = h ** (3.0 - 2.0 * s)
    total = hpow * same * float(np.sum(np.abs(slopes) ** 2))
    if slopes.size >= 2:
        sl, sr = slopes[:-1], slopes[1:]
        adj = A * (np.abs(sl) ** 2 + np.abs(sr) ** 2) + 2.0 * B * np.real(sl * np.conj(sr))
        total += 2.0 * hpow * float(np.sum(adj))
    total += _far_field_sum(fbar, h, 1.0 + 2.0 * s)
    return math.sqrt(total)


def hs_norm(f: FunctionSample, s):
    """Gagliardo H^s norm: sqrt(L2^2 + seminorm^2); equals the L2 norm
    exactly for constants."""
    l2 = lp_norm(f, 2)
    semi = gagliardo_seminorm(f, s)
    return math.sqrt(l2 * l2 + semi * semi)


def w1q_norm(f: FunctionSample, q):
    """||f||_{L^q} + ||f'||_{L^q} with central finite differences
    (second-order one-sided at the ends)."""
    if not 1.0 < q < np.inf:
        raise ValueError(f"q must lie in (1, inf), got {q!r}")
    df = np.gradient(f.values, f.spacing)
    dsamp = FunctionSample(df, f.a, f.b)
    return lp_norm(f, q) + lp_norm(dsamp, q)


def yr_norm(psi_star, h):
    """sup_alpha L2_beta + L1_alpha L2_beta of the alpha-derivative.

    `psi_star` is a square array indexed [alpha, beta].  A free solution
    (alpha-independent field) scores exactly its data's L2 norm.
    """
    psi_star = np.asarray(psi_star)
    l2_beta = np.sqrt(np.trapezoid(np.abs(psi_star) ** 2, dx=h, axis=1))
    term1 = float(l2_beta.max())
    dpsi = np.gradient(psi_star, h, axis=0)
    l2_beta_d = np.sqrt(np.trapezoid(np.abs(dpsi) ** 2, dx=h, axis=1))
    term2 = float(np.trapezoid(l2_beta_d, dx=h))
    return term1 + term2


def xr_norm(phi_star, h):
    """Mirror of yr_norm with the roles of alpha and beta swapped."""
    return yr_norm(np.asarray(phi_star).T, h)


def mixed_l2_sup_norm(field, h, sup_axis=0):
    """L2 of the per-line sup: ||sup_axis |field|||_{L2 of the other axis}."""
    m = np.max(np.abs(np.asarray(field)), axis=sup_axis)
    return float(np.sqrt(np.trapezoid(m ** 2, dx=h)))


def concentration_function(f, g, dx, r):
    """sup over sample-node centers of the charge in a window of half-width r."""
    if not r > 0:
        raise ValueError(f"window radius must be positive, got {r!r}")
    f = np.asarray(f)
    g = np.asarray(g)
    dens = np.abs(f) ** 2 + np.abs(g) ** 2
    cum = cumtrapz(dens, dx)
    x = dx * np.arange(dens.size)
    hi = np.interp(x + r, x, cum)
    lo = np.interp(x - r, x, cum)
    return float(np.max(hi - lo))


def extend(f: FunctionSample, spec: ExtensionSpec) -> FunctionSample:
    """Reflect f across +-R and taper: E(f)(x) = rho(x) f(+-2R - x) outside
    I_R, f itself inside.  Requires f sampled on [-R, R] with an odd node
    count; the reflected positions then land on lattice nodes, so no
    interpolation happens."""
    R = spec.R
    if abs(f.a + R) > 1e-9 * max(1.0, R) or abs(f.b - R) > 1e-9 * max(1.0, R):
        raise ValueError(f"sample interval [{f.a}, {f.b}] is not [-R, R] with R = {R!r}")
    n = f.n
    if n % 2 == 0:
        raise ValueError("extend needs an odd sample count so [-2R, 2R] shares the lattice")
    m = (n - 1) // 2
    vals = np.empty(n + 2 * m, dtype=complex)
    x_out = -2.0 * R + f.spacing * np.arange(vals.size)
    vals[m:m + n] = f.values
    # node at -R - k*h reflects to -R + k*h, node at R + k*h to R - k*h
    vals[:m] = f.values[1:m + 1][::-1]
    vals[m + n:] = f.values[n - 1 - m:n - 1][::-1]
    rho = spec.rho(x_out)
    vals[:m] *= rho[:m]
    vals[m + n:] *= rho[m + n:]
    return FunctionSample(vals, -2.0 * R, 2.0 * R)


# ---------------------------------------------------------------------------
# inequality checkers

@dataclass
class InequalityReport:
    name: str
    cases: int
    max_ratio: float
    mean_ratio: float
    n: int

    def row(self):
        return {"inequality": self.name, "cases": self.cases,
                "max_ratio": self.max_ratio, "mean_ratio": self.mean_ratio,
                "resolution": self.n}


def _checker_family(rng, n, a, b, count):
    """Seeded mix of Gaussians, boxes, and rough random series on [a, b]."""
    x = np.linspace(a, b, n)
    out = []
    span = b - a
    h = span / (n - 1)
    for i in range(count):
        pick = i % 3
        if pick == 0:
            amp = rng.uniform(0.2, 2.0)
            width = rng.uniform(0.05, 0.4) * span
            center = rng.uniform(a + 0.25 * span, b - 0.25 * span)
            vals = amp * np.exp(-(((x - center) / width) ** 2)) * np.exp(1j * rng.uniform(0, 3) * x)
        elif pick == 1:
            lo = rng.uniform(a + 0.2 * span, a + 0.5 * span)
            wid = rng.uniform(0.1, 0.35) * span
            lo = a + round((lo - a) / h) * h
            wid = max(h, round(wid / h) * h)
            vals = np.where((x >= lo - 1e-12) & (x < lo + wid - 1e-12),
                            rng.uniform(0.3, 1.5) + 0.0j, 0.0j)
        else:
            k = np.arange(1, 33)
            coef = k ** (-0.8) * rng.standard_normal(32)
            phases = rng.uniform(0, 2 * np.pi, 32)
            u = (x - a) / span
            vals = (coef[None, :] * np.exp(1j * (2 * np.pi * np.outer(u, k) + phases))).sum(axis=1)
        out.append(FunctionSample(vals, a, b))
    return out


def _ratio_stats(pairs):
    ratios = [lhs / rhs for lhs, rhs in pairs if rhs > 1e-13]
    if not ratios:
        return 0, 0.0, 0.0
    return len(ratios), float(max(ratios)), float(np.mean(ratios))


def check_inequalities(s=0.25, family_size=50, n=257, seed=1234, which=None):
    """Max LHS/RHS ratios over a seeded family for the interval inequalities:

      hardy      ||f/|x-y|^s||_{L2} vs the Gagliardo seminorm (y mid-interval;
                 constants are excluded since their seminorm vanishes)
      product    || |g|^2 f ||_{H^s} vs ||g||_inf^2 ||f||_{H^s}
                 + ||g||_inf ||g||_{W^{1,q}} ||f||_{L^p}   (needs s < 1/3)
      tiling     ||f||_{H^s(full)}^2 vs sum_j ||f||_{H^s([j-1, j+1])}^2
      sobolev    ||f||_{L^p} vs ||f||_{H^s} with 1/2 = 1/p + s
      embed_yr   ||psi*||_{L2_beta Linf_alpha} vs the Y_R norm on random
                 smooth fields (the analytic constant is 1)

    The constants of the analytic statements are never asserted, only
    reported; stability under doubling (family_size, n) is the test.
    """
    spec = NormSpec(s)
    rng = np.random.default_rng(seed)
    reports = []
    wanted = set(which) if which else {"hardy", "product", "tiling", "sobolev", "embed_yr"}

    if "hardy" in wanted:
        fam = _checker_family(rng, n, -1.0, 1.0, family_size)
        pairs = []
        for f in fam:
            semi = gagliardo_seminorm(f, s)
            if semi < 1e-10:
                continue
            h = f.spacing
            xm = f.a + h * (np.arange(f.n - 1) + 0.5)
            vm = 0.5 * (f.values[:-1] + f.values[1:])
            y = 0.5 * (f.a + f.b)
            lhs = math.sqrt(float(np.sum(np.abs(vm) ** 2 / np.abs(xm - y) ** (2 * s)) * h))
            pairs.append((lhs, semi))
        cases, mx, mean = _ratio_stats(pairs)
        reports.append(InequalityReport("hardy", cases, mx, mean, n))

    if "product" in wanted:
        if not s < 1.0 / 3.0:
            raise ValueError(f"product checker needs s < 1/q with q = 1/(1-2s): s = {s!r}")
        fam = _checker_family(rng, n, -2.0, 2.0, 2 * family_size)
        pairs = []
        for f, g in zip(fam[::2], fam[1::2]):
            prod = FunctionSample(np.abs(g.values) ** 2 * f.values, f.a, f.b)
            lhs = hs_norm(prod, s)
            ginf = lp_norm(g, np.inf)
            rhs = (ginf ** 2 * hs_norm(f, s)
                   + ginf * w1q_norm(g, spec.q) * lp_norm(f, spec.p))
            pairs.append((lhs, rhs))
        cases, mx, mean = _ratio_stats(pairs)
        reports.append(InequalityReport("product", cases, mx, mean, n))

    if "tiling" in wanted:
        width = 8.0
        n_wide = int(round((n - 1) * width / 2.0)) + 1
        fam = _checker_family(rng, n_wide, -4.0, 4.0, family_size)
        pairs = []
        for f in fam:
            lhs = hs_norm(f, s) ** 2
            rhs = sum(hs_norm(f.restrict(j - 1.0, j + 1.0), s) ** 2 for j in range(-3, 4))
            pairs.append((lhs, rhs))
        cases, mx, mean = _ratio_stats(pairs)
        reports.append(InequalityReport("tiling", cases, mx, mean, n))

    if "sobolev" in wanted:
        fam = _checker_family(rng, n, -1.0, 1.0, family_size)
        pairs = [(lp_norm(f, spec.p), hs_norm(f, s)) for f in fam]
        cases, mx, mean = _ratio_stats(pairs)
        reports.append(InequalityReport("sobolev", cases, mx, mean, n))

    if "embed_yr" in wanted:
        m = max(33, (n - 1) // 4 + 1)
        h = 2.0 / (m - 1)
        xs = np.linspace(-1.0, 1.0, m)
        pairs = []
        for _ in range(family_size):
            k = np.arange(1, 7)
            ca = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            ca /= k[:, None] * k[None, :]
            field = np.einsum("ab,ia,jb->ij",
                              ca,
                              np.exp(1j * np.pi * np.outer(xs, k) / 2.0),
                              np.exp(1j * np.pi * np.outer(xs, k) / 2.0))
            pairs.append((mixed_l2_sup_norm(field, h, sup_axis=0), yr_norm(field, h)))
        cases, mx, mean = _ratio_stats(pairs)
        reports.append(InequalityReport("embed_yr", cases, mx, mean, n))

    return reports
