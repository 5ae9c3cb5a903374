import math

import numpy as np
import pytest

from diskvort import disk_spectral as ds
from diskvort import green_energy as ge
from diskvort.bessel import bessel_j, bessel_zero


def test_multipliers_positive_nonincreasing(basis):
    op = ge.GreenOperator(basis)
    assert (op.multipliers > 0).all()
    assert (np.diff(op.multipliers, axis=1) <= 0).all()


def test_eigenmode_division(basis):
    j = bessel_zero(1, 1)
    eta = ds.single_mode(basis, 1, 1)
    psi = ge.apply_green(eta)
    assert np.abs(psi.coeffs - eta.coeffs / j**2).max() == 0.0


def test_zero_field(basis):
    z = ds.zero_field(basis)
    assert np.abs(ge.apply_green(z).coeffs).max() == 0.0
    assert ge.energy(z) == 0.0


def test_energy_of_unit_dipole(basis):
    j = bessel_zero(1, 1)
    eta = ds.single_mode(basis, 1, 1)
    unit = ds.SpectralField(basis, eta.coeffs / math.sqrt(ds.spectral_norm2(eta)))
    assert abs(ge.energy(unit) - 1.0 / (2 * j**2)) < 1e-14
    assert abs(ge.energy(unit) - 0.034055) < 1e-6


def test_positivity(basis, rng):
    f = ds.random_in_span(basis, rng, scale=1e-6)
    assert ge.energy(f) > 0.0


def test_symmetry(basis, rng):
    f1 = ds.random_in_span(basis, rng)
    f2 = ds.random_in_span(basis, rng)
    g1, g2 = ds.to_grid(f1), ds.to_grid(f2)
    gf1 = ds.to_grid(ge.apply_green(f1))
    gf2 = ds.to_grid(ge.apply_green(f2))
    a = ge.inner_product_grid(g1, gf2)
    b = ge.inner_product_grid(g2, gf1)
    assert abs(a - b) < 1e-10


def test_inverse_property(basis, rng):
    f = ds.random_in_span(basis, rng)
    back = ge.GreenOperator(basis).inverse_apply(ge.apply_green(f))
    assert np.abs(back.coeffs - f.coeffs).max() < 1e-9


def test_rotation_commutes(basis, rng):
    f = ds.random_in_span(basis, rng)
    beta = 0.77
    a = ge.apply_green(ds.rotate(f, beta))
    b = ds.rotate(ge.apply_green(f), beta)
    assert np.abs(a.coeffs - b.coeffs).max() < 1e-15


def test_radial_affine_relation_on_grid(basis, grid):
    # J_0(j r) - j^2 G J_0(j r) realizes the constant J_0(j) through the
    # basis expansion of that constant, checked on grid values
    j = bessel_zero(1, 1)
    xi_vals = np.tile(bessel_j(0, j * grid.r)[:, None], (1, grid.n_theta))
    xi = ds.from_grid(ds.GridField(grid, xi_vals), basis)
    lhs = ds.SpectralField(basis, xi.coeffs - j**2 * ge.apply_green(xi).coeffs)
    const = ds.from_grid(
        ds.GridField(grid, np.full((grid.n_r, grid.n_theta), bessel_j(0, j))), basis
    )
    diff = ds.to_grid(lhs).values - ds.to_grid(const).values
    assert np.abs(diff).max() < 1e-8


def test_kernel_zero_field(grid):
    z = ds.GridField(grid, np.zeros((grid.n_r, grid.n_theta)))
    assert np.abs(ge.apply_green_kernel(z).values).max() == 0.0


def test_kernel_constant_closed_form():
    grid = ds.DiskGrid(48, 96)
    one = ds.GridField(grid, np.ones((48, 96)))
    psi = ge.apply_green_kernel(one)
    exact = ge.green_of_constant(grid)
    rel = ds.lp_norm(ds.GridField(grid, psi.values - exact.values), 2) / ds.lp_norm(exact, 2)
    assert rel < 5e-3


def test_kernel_cross_validates_spectral():
    basis = ds.DiskBasis(8, 12, ds.DiskGrid(48, 96))
    grid = basis.grid
    eta = ds.single_mode(basis, 1, 1)
    spec = ds.to_grid(ge.apply_green(eta))
    kern = ge.apply_green_kernel(ds.to_grid(eta))
    rel = ds.lp_norm(ds.GridField(grid, spec.values - kern.values), 2) / ds.lp_norm(spec, 2)
    assert rel < 5e-3
    mask = (grid.r >= 0.1) & (grid.r <= 0.9)
    interior = np.abs(spec.values - kern.values)[mask].max()
    assert interior < 5e-3 * np.abs(spec.values).max()
