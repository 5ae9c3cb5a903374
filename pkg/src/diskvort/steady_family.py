"""Exact steady vortex states a J_0(l r) + b J_n(l r) cos(n theta + beta).

With l = j_{n,k} (the k-th positive zero of J_n), every such field is a
steady solution of the vorticity equation: the cos part is a Laplacian
eigenfunction with eigenvalue l^2, and the radial part satisfies
G[a J_0(l r)] = a (J_0(l r) - J_0(l)) / l^2, so the whole field is an affine
function of its own stream function.

The default family (n, k) = (1, 1) is the one whose rotation orbits the rest
of the package studies; ``j_11()`` returns its root.  The module also carries
the moment machinery that identifies an orbit inside a rearrangement class:
the quadratic and cubic power integrals of a family element reduce to
r1 = 2a^2 + b^2 and r2 = 4a^3 + 3ab^2, and that algebraic system has at most
one solution with b >= 0, recovered here by bisection of a monotone cubic.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bessel import bessel_j, bessel_zero
from .disk_spectral import (
    DiskBasis,
    DiskGrid,
    GridField,
    SpectralField,
    lp_norm,
    single_mode,
    to_grid,
)
from .quadrature import integrate


def j_11():
    return bessel_zero(1, 1)


@dataclass(frozen=True)
class VElement:
    """Parameters (a, b, beta) of a steady state; normal form keeps b >= 0.

    family selects (n, k); the root is j_{n,k} and the angular part is
    cos(n theta + beta).
    """

    a: float
    b: float
    beta: float = 0.0
    family: tuple = (1, 1)

    def __post_init__(self):
        a, b, beta = float(self.a), float(self.b), float(self.beta)
        if b < 0:
            b, beta = -b, beta + math.pi
        beta = beta % (2.0 * math.pi)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "beta", beta)

    @property
    def root(self):
        n, k = self.family
        return bessel_zero(n, k)

    def rotated(self, angle):
        return VElement(self.a, self.b, self.beta + angle, self.family)


def v_element_grid(ve: VElement, grid: DiskGrid) -> GridField:
    """Exact closed-form evaluation at the collocation nodes."""
    n, _ = ve.family
    lam = ve.root
    radial_a = ve.a * bessel_j(0, lam * grid.r)
    radial_b = ve.b * bessel_j(n, lam * grid.r)
    ang = np.cos(n * grid.theta + ve.beta)
    return GridField(grid, radial_a[:, None] + radial_b[:, None] * ang[None, :])


def radial_projection_coeffs(amplitude, lam, basis: DiskBasis):
    """Coefficients of amplitude * J_0(lam r) over the n = 0 radial modes.

    Uses the closed-form cross product integral; exact when lam coincides
    with a J_0 zero, otherwise a slowly converging projection (the target has
    a nonzero boundary value the zero-trace basis cannot reproduce).
    """
    zeros = basis.roots[0]
    c = np.zeros(basis.k_radial)
    hit = np.isclose(zeros, lam, rtol=0, atol=1e-9)
    if hit.any():
        c[np.argmax(hit)] = amplitude
        return c
    j0lam = bessel_j(0, lam)
    for k, z in enumerate(zeros):
        c[k] = 2.0 * amplitude * z * j0lam / ((z * z - lam * lam) * bessel_j(1, z))
    return c


def make_v_element(ve: VElement, basis: DiskBasis) -> SpectralField:
    """Spectral representation: exact (+-n, k) dipole modes plus the radial
    part projected onto the n = 0 modes.

    For a != 0 the projection carries a truncation (Gibbs) error near the
    boundary; grid-space comparisons that need exactness should use
    v_element_grid instead.
    """
    n, k = ve.family
    if n > basis.n_modes or k > basis.k_radial:
        raise ValueError(f"family {ve.family} outside basis ({basis.n_modes},{basis.k_radial})")
    f = single_mode(basis, n, k, amplitude=ve.b, phase=ve.beta) if ve.b else None
    coeffs = f.coeffs if f is not None else np.zeros(
        (2 * basis.n_modes + 1, basis.k_radial), complex
    )
    coeffs = coeffs.copy()
    if ve.a:
        coeffs[basis.mode_row(0)] += radial_projection_coeffs(ve.a, ve.root, basis)
    return SpectralField(basis, coeffs)


def dipole_part(ve: VElement, basis: DiskBasis) -> SpectralField:
    """Only the exactly representable cos component of the element."""
    n, k = ve.family
    return single_mode(basis, n, k, amplitude=ve.b, phase=ve.beta)


# ---------------------------------------------------------------------------
# Orbital distance


_ORBIT_CACHE = {}


def _orbit_tables(ve: VElement, grid: DiskGrid):
    # grid nodes are a deterministic function of the resolution
    key = (ve.a, ve.b, ve.family, grid.n_r, grid.n_theta)
    tab = _ORBIT_CACHE.get(key)
    if tab is None:
        n, _ = ve.family
        lam = ve.root
        base = ve.a * bessel_j(0, lam * grid.r)[:, None]
        rad = ve.b * bessel_j(n, lam * grid.r)
        gc = rad[:, None] * np.cos(n * grid.theta)[None, :]
        gs = rad[:, None] * np.sin(n * grid.theta)[None, :]
        if len(_ORBIT_CACHE) > 64:
            _ORBIT_CACHE.clear()
        tab = _ORBIT_CACHE[key] = (base, gc, gs)
    return tab


def _orbit_distance_curve(g: GridField, ve: VElement, p: float, betas):
    """L^p distance from g to the rotations ve.rotated(beta) for many betas."""
    grid = g.grid
    base, gc, gs = _orbit_tables(ve, grid)
    resid0 = g.values - base
    mu = grid.measures
    betas = np.atleast_1d(betas)
    out = np.empty(betas.size)
    for i, beta in enumerate(betas):
        phi = ve.beta + beta
        diff = resid0 - (math.cos(phi) * gc - math.sin(phi) * gs)
        out[i] = (np.abs(diff) ** p * mu).sum()
    return out ** (1.0 / p)


def orbital_distance(field, ve: VElement, p: float, n_coarse=256, beta_tol=1e-8):
    """min over rotations of ||field - ve(., . + beta)||_p and the minimizer.

    Coarse scan over n_coarse angles followed by golden-section refinement.
    For b = 0 the orbit is a single radial field and the search is skipped.
    """
    if not (1.0 < p < math.inf):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    g = to_grid(field) if isinstance(field, SpectralField) else field
    if ve.b == 0.0:
        return float(_orbit_distance_curve(g, ve, p, [0.0])[0]), 0.0
    betas = 2.0 * math.pi * np.arange(n_coarse) / n_coarse
    vals = _orbit_distance_curve(g, ve, p, betas)
    i = int(np.argmin(vals))
    span = 2.0 * math.pi / n_coarse
    lo, hi = betas[i] - span, betas[i] + span
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = _orbit_distance_curve(g, ve, p, [x1])[0]
    f2 = _orbit_distance_curve(g, ve, p, [x2])[0]
    while hi - lo > beta_tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = _orbit_distance_curve(g, ve, p, [x1])[0]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = _orbit_distance_curve(g, ve, p, [x2])[0]
    beta_star = 0.5 * (lo + hi) % (2.0 * math.pi)
    return float(_orbit_distance_curve(g, ve, p, [beta_star])[0]), float(beta_star)


def distance_to_grid_orbit(g: GridField, ref: GridField, p: float):
    """min over grid-multiple rotations of ||g - roll(ref)||_p.

    Orbit scan for references that are not family elements; resolution is one
    azimuthal cell.
    """
    mu = g.grid.measures
    best, best_s = math.inf, 0
    for s in range(g.grid.n_theta):
        d = (np.abs(g.values - np.roll(ref.values, -s, axis=1)) ** p * mu).sum()
        if d < best:
            best, best_s = d, s
    return float(best ** (1.0 / p)), 2.0 * math.pi * best_s / g.grid.n_theta


def plain_distance(g: GridField, ref: GridField, p: float) -> float:
    return float(
        ((np.abs(g.values - ref.values) ** p) * g.grid.measures).sum() ** (1.0 / p)
    )


# ---------------------------------------------------------------------------
# Moment machinery (family (1,1) only: the coefficients depend on j = j_{1,1})


@dataclass(frozen=True)
class MomentPair:
    r1: float
    r2: float


@lru_cache(maxsize=1)
def moment_coefficients():
    """(p1, p2, q1, q2) by quadrature of the radial power integrals."""
    j = j_11()
    p1 = (2.0 * math.pi / j**2) * integrate(
        lambda t: bessel_j(0, t) ** 2 * t, 0.0, j, abs_tol=1e-12
    )
    p2 = (math.pi / j**2) * integrate(
        lambda t: bessel_j(1, t) ** 2 * t, 0.0, j, abs_tol=1e-12
    )
    q1 = (2.0 * math.pi / j**2) * integrate(
        lambda t: bessel_j(0, t) ** 3 * t, 0.0, j, abs_tol=1e-12
    )
    q2 = (3.0 * math.pi / j**2) * integrate(
        lambda t: bessel_j(0, t) * bessel_j(1, t) ** 2 * t, 0.0, j, abs_tol=1e-12
    )
    return p1, p2, q1, q2


def moments(g: GridField) -> MomentPair:
    """Normalized quadratic/cubic moments: for a family element these equal
    (2a^2 + b^2, 4a^3 + 3ab^2)."""
    _, p2, _, q2 = moment_coefficients()
    mu = g.grid.measures
    m2 = float((g.values**2 * mu).sum())
    m3 = float((g.values**3 * mu).sum())
    return MomentPair(r1=m2 / p2, r2=3.0 * m3 / q2)


def solve_moment_system(m: MomentPair, tol=1e-6):
    """Unique (a, b >= 0) with 2a^2 + b^2 = r1 and 4a^3 + 3ab^2 = r2.

    Substituting the first equation into the second leaves the cubic
    -2x^3 + 3 r1 x = r2, strictly increasing on 2x^2 <= r1; bisection finds
    the only admissible root.  Returns None when the system is inconsistent
    beyond ``tol``.
    """
    r1, r2 = m.r1, m.r2
    scale = max(1.0, abs(r1)) ** 1.5
    if r1 < -tol:
        return None
    if r1 <= tol:
        return (0.0, 0.0) if abs(r2) <= tol * scale else None
    xmax = math.sqrt(r1 / 2.0)
    f = lambda x: -2.0 * x**3 + 3.0 * r1 * x
    if abs(r2) > f(xmax) + tol * scale:
        return None
    lo, hi = -xmax, xmax
    target = min(max(r2, f(lo)), f(hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    y2 = r1 - 2.0 * x * x
    y = math.sqrt(max(y2, 0.0))
    resid = max(abs(2 * x * x + y * y - r1), abs(4 * x**3 + 3 * x * y * y - r2))
    if resid > tol * scale:
        return None
    return (x, y)


def verify_moment_coefficients():
    """Quadrature values of p1, p2, q1, q2 against the closed forms and the
    internal ratios p1 = 2 p2, q1 = (4/3) q2."""
    j = j_11()
    p1, p2, q1, q2 = moment_coefficients()
    p1_closed = math.pi * bessel_j(0, j) ** 2
    cube = integrate(lambda t: bessel_j(1, t) ** 3, 0.0, j, abs_tol=1e-12)
    q1_closed = (8.0 * math.pi / (3.0 * j**2)) * cube
    q2_closed = (2.0 * math.pi / j**2) * cube
    return {
        "p1": p1,
        "p2": p2,
        "q1": q1,
        "q2": q2,
        "p1_vs_closed": abs(p1 - p1_closed),
        "p2_vs_half_closed": abs(p2 - 0.5 * p1_closed),
        "p_ratio_residual": abs(p1 - 2.0 * p2),
        "q_ratio_residual": abs(q1 - (4.0 / 3.0) * q2),
        "q1_vs_closed": abs(q1 - q1_closed),
        "q2_vs_closed": abs(q2 - q2_closed),
    }


# ---------------------------------------------------------------------------
# Steadiness report


@dataclass(frozen=True)
class SteadyReport:
    functional_residual: float
    tendency_rel: float


def verify_steady(ve: VElement, basis: DiskBasis) -> SteadyReport:
    """Check the affine stream-function relationship and the Euler tendency.

    The relationship omega = l^2 G omega + a J_0(l) is evaluated on the grid
    with the spectral G on the cos component and the closed-form stream
    function of the radial component; the tendency uses the solver's
    right-hand side with the radial part carried in closed form.
    """
    from .euler_sim import RadialBackground, tendency

    lam = ve.root
    grid = basis.grid
    omega = v_element_grid(ve, grid)
    w = dipole_part(ve, basis)
    psi_w = SpectralField(basis, w.coeffs * basis.green_mult_pm)
    psi_vals = to_grid(psi_w).values
    if ve.a:
        bg = RadialBackground(ve.a, lam)
        psi_vals = psi_vals + bg.stream_values(grid)
    lhs = omega.values
    rhs = lam**2 * psi_vals + ve.a * bessel_j(0, lam)
    functional = float(np.max(np.abs(lhs - rhs)))

    bg = RadialBackground(ve.a, lam) if ve.a else None
    t = tendency(w, background=bg)
    tnorm = lp_norm(to_grid(t), 2)
    onorm = lp_norm(omega, 2)
    return SteadyReport(functional, tnorm / max(onorm, 1e-300))
