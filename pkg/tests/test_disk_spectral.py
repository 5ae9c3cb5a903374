import json
import math

import numpy as np
import pytest

from diskvort import disk_spectral as ds
from diskvort.bessel import bessel_j, bessel_zero
from diskvort.errors import ResolutionError


def test_cell_measures(grid):
    assert abs(grid.n_theta * grid.measure_r.sum() - math.pi) < 1e-12
    assert (grid.measure_r > 0).all()


def test_resolution_preconditions():
    with pytest.raises(ResolutionError):
        ds.DiskBasis(16, 32, ds.DiskGrid(80, 30))   # too few angles
    with pytest.raises(ResolutionError):
        ds.DiskBasis(16, 32, ds.DiskGrid(20, 128))  # too few radii


def test_to_grid_zero_field(basis):
    g = ds.to_grid(ds.zero_field(basis))
    assert np.all(g.values == 0.0)


def test_to_grid_single_mode_oracle(basis, grid):
    j = bessel_zero(1, 1)
    g = ds.to_grid(ds.single_mode(basis, 1, 1))
    i = int(np.argmin(np.abs(grid.r - 0.5)))
    expect = bessel_j(1, j * grid.r[i]) * np.cos(grid.theta)
    assert np.abs(g.values[i] - expect).max() < 1e-12


def test_round_trip_identity(basis, rng):
    f = ds.random_in_span(basis, rng)
    f2 = ds.from_grid(ds.to_grid(f), basis)
    assert np.abs(f.coeffs - f2.coeffs).max() < 1e-10


def test_from_grid_constant_is_radial(basis, grid):
    g = ds.GridField(grid, np.ones((grid.n_r, grid.n_theta)))
    f = ds.from_grid(g, basis)
    row0 = basis.mode_row(0)
    others = np.delete(f.coeffs, row0, axis=0)
    assert np.abs(others).max() < 1e-12


def test_from_grid_pure_radial_mode(basis, grid):
    z = bessel_zero(0, 2)
    vals = np.tile(bessel_j(0, z * grid.r)[:, None], (1, grid.n_theta))
    f = ds.from_grid(ds.GridField(grid, vals), basis)
    c = f.coeffs.copy()
    assert abs(c[basis.mode_row(0), 1] - 1.0) < 1e-9
    c[basis.mode_row(0), 1] = 0.0
    assert np.abs(c).max() < 1e-9


def test_from_grid_rejects_other_grid(basis):
    other = ds.DiskGrid(40, 64)
    g = ds.GridField(other, np.zeros((40, 64)))
    with pytest.raises(ResolutionError):
        ds.from_grid(g, basis)


def test_lp_norms(basis, grid):
    zero = ds.GridField(grid, np.zeros((grid.n_r, grid.n_theta)))
    assert ds.lp_norm(zero, 2) == 0.0
    one = ds.GridField(grid, np.ones((grid.n_r, grid.n_theta)))
    assert abs(ds.lp_norm(one, 2) - math.sqrt(math.pi)) < 1e-12
    j = bessel_zero(1, 1)
    g = ds.to_grid(ds.single_mode(basis, 1, 1))
    expect = math.sqrt(math.pi * bessel_j(0, j) ** 2 / 2)
    assert abs(ds.lp_norm(g, 2) - expect) < 1e-12
    with pytest.raises(ValueError):
        ds.lp_norm(one, 0.5)


def test_mean_values(basis, grid):
    one = ds.GridField(grid, np.ones((grid.n_r, grid.n_theta)))
    assert abs(ds.mean_value(one) - 1.0) < 1e-14
    dip = ds.to_grid(ds.single_mode(basis, 1, 1))
    assert abs(ds.mean_value(dip)) < 1e-12
    # J_0(j r) with j the first J_1 zero has zero disk mean: its radial
    # integral telescopes to J_1(j)/j = 0
    j = bessel_zero(1, 1)
    rad = ds.GridField(grid, np.tile(bessel_j(0, j * grid.r)[:, None], (1, grid.n_theta)))
    assert abs(ds.mean_value(rad)) < 1e-9


def test_parseval(basis, rng):
    f = ds.random_in_span(basis, rng)
    g = ds.to_grid(f)
    assert abs(ds.lp_norm(g, 2) ** 2 - ds.spectral_norm2(f)) < 1e-9


def test_rotation_equivariance(basis, rng):
    f = ds.random_in_span(basis, rng)
    shift = 9
    beta = 2 * math.pi * shift / basis.grid.n_theta
    a = ds.to_grid(ds.rotate(f, beta))
    b = ds.azimuthal_shift(ds.to_grid(f), shift)
    assert np.abs(a.values - b.values).max() < 1e-10


def test_profile_constant_field(grid):
    g = ds.GridField(grid, np.full((grid.n_r, grid.n_theta), 3.25))
    p = ds.distribution_profile(g)
    assert np.all(p.values == 3.25)
    assert abs(p.cum_measure[-1] - math.pi) < 1e-12
    pts = np.linspace(0.01, math.pi - 0.01, 50)
    assert np.all(p.resample(pts) == 3.25)


def test_profile_rotation_invariance(basis, rng):
    g = ds.to_grid(ds.random_in_span(basis, rng))
    p1 = ds.distribution_profile(g)
    p2 = ds.distribution_profile(ds.azimuthal_shift(g, 17))
    ok, gap = ds.profiles_close(p1, p2)
    assert ok and gap == 0.0


def test_ring_shuffle_preserves_profile(basis, rng):
    g = ds.to_grid(ds.random_in_span(basis, rng))
    p1 = ds.distribution_profile(g)
    p2 = ds.distribution_profile(ds.ring_shuffle(g, rng))
    ok, gap = ds.profiles_close(p1, p2)
    assert ok and gap == 0.0


def test_transplant_onto_own_levels_is_identity(grid):
    # strictly monotone radial field: sorting by itself reassigns each cell
    # its own value
    vals = np.tile(np.linspace(2.0, 1.0, grid.n_r)[:, None], (1, grid.n_theta))
    vals += 1e-3 * np.cos(grid.theta)[None, :]
    g = ds.GridField(grid, vals)
    p = ds.distribution_profile(g)
    t = ds.transplant(p, g)
    assert np.abs(t.values - g.values).max() < 1e-14


def test_serialization_round_trip(basis, grid, rng, tmp_path):
    f = ds.random_in_span(basis, rng)
    doc = ds.field_to_dict(f)
    assert set(doc) == {"kind", "shape", "data"}
    f2 = ds.field_from_dict(doc, basis=basis)
    assert np.abs(f.coeffs - f2.coeffs).max() == 0.0

    g = ds.to_grid(f)
    path = tmp_path / "field.json"
    ds.save_field(path, g, extra={"config_hash": "abc"})
    with open(path) as fh:
        raw = json.load(fh)
    assert raw["kind"] == "grid" and raw["config_hash"] == "abc"
    g2 = ds.load_field(path, grid=grid)
    assert np.abs(g.values - g2.values).max() == 0.0


def test_reality_enforced(basis):
    c = np.zeros((2 * basis.n_modes + 1, basis.k_radial), complex)
    c[basis.mode_row(2), 0] = 1.0 + 0.5j      # no conjugate partner supplied
    f = ds.SpectralField(basis, c)
    assert np.abs(f.coeffs[basis.mode_row(-2)] - np.conj(f.coeffs[basis.mode_row(2)])).max() == 0.0
    g = ds.to_grid(f)
    assert np.isrealobj(g.values)
