import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab.grid2d import Grid2D, Kernel, build_grid, load_field, save_field


def test_build_examples():
    g = build_grid(8, 256)
    assert g.h == 0.0625
    assert build_grid(8, 128).zeros().size == 16384
    assert np.count_nonzero(g.k == 0) == 1
    np.testing.assert_allclose(g.x, -8 + 0.0625 * np.arange(256))
    np.testing.assert_allclose(g.k[1], math.pi / 8)


@pytest.mark.parametrize("n", [32, 100, 0, 127])
def test_invalid_n(n):
    with pytest.raises(ValueError):
        build_grid(8, n)


def test_invalid_L():
    with pytest.raises(ValueError):
        Grid2D(0.0, 64)


def test_kinetic_constant_is_zero(grid8):
    assert grid8.kinetic_energy(np.full((128, 128), 3.0)) == pytest.approx(0.0, abs=1e-20)


def test_kinetic_of_gaussian(grid8, gaussian):
    u = gaussian(grid8) / math.sqrt(math.pi)
    assert grid8.kinetic_energy(u) == pytest.approx(1.0, abs=1e-6)


def test_kinetic_fourier_mode(grid8):
    X, _ = grid8.mesh()
    u = np.sin(math.pi * X / grid8.L)
    assert grid8.kinetic_energy(u) == pytest.approx((math.pi / grid8.L) ** 2 * grid8.mass(u), rel=1e-12)


def test_gaussian_convolution(grid8):
    X, Y = grid8.mesh()
    s2, t2 = 0.25, 0.49
    rho = np.exp(-(X**2 + Y**2) / (2 * s2)) / (2 * math.pi * s2)
    out = grid8.convolve_density(rho, Kernel(0.7))
    exact = np.exp(-(X**2 + Y**2) / (2 * (s2 + t2))) / (2 * math.pi * (s2 + t2))
    assert np.max(np.abs(out - exact)) < 1e-8


def test_convolution_of_constant(grid8):
    out = grid8.convolve_density(np.full((128, 128), 2.5), Kernel(1.3))
    np.testing.assert_allclose(out, 2.5, rtol=1e-12)


def test_delta_limit(grid8, gaussian):
    rho = gaussian(grid8, width=1.0)
    out = grid8.convolve_density(rho, Kernel(grid8.h / 8))
    assert np.max(np.abs(out - rho)) < 1e-10


def test_unresolved_scaled_kernel(grid8):
    kern = Kernel(1.0, beta=0.5, N=1e4)  # width 0.01 < 2h
    with pytest.raises(ValueError, match="kernel narrower than grid"):
        grid8.convolve_density(grid8.zeros(), kern)


@pytest.mark.parametrize("kw", [dict(width=0.0), dict(width=1.0, beta=0.2), dict(width=1.0, beta=1.2, N=10)])
def test_kernel_validation(kw):
    with pytest.raises(ValueError):
        Kernel(**kw)


def test_kernel_scaling():
    k = Kernel(0.5, beta=0.2, N=2.0**10)
    assert k.effective_width == pytest.approx(0.5 * 2.0**-2)
    assert k.dilated(3.0).effective_width == pytest.approx(3 * 0.5 * 2.0**-2)
    assert k(0.0, 0.0) == pytest.approx(1 / (2 * math.pi * k.effective_width**2))


def test_trap_examples(grid8):
    h = grid8.h
    V = grid8.trap_potential(2.0)
    assert V[65, 65] == pytest.approx(2 * h * h)
    V1 = grid8.trap_potential(2.0, (1.0, 0.0))
    i, j = np.unravel_index(np.argmin(V1), V1.shape)
    assert (grid8.x[i], grid8.x[j]) == (1.0, 0.0)
    np.testing.assert_allclose(grid8.trap_potential(4.0), V**2, rtol=1e-12)
    with pytest.raises(ValueError):
        grid8.trap_potential(0.0)


def test_normalize_examples(grid8, gaussian):
    u = gaussian(grid8, (0.5, -1.0), 0.8)
    np.testing.assert_allclose(grid8.normalize(2 * u), grid8.normalize(u), rtol=1e-14)
    assert grid8.mass(grid8.normalize(u)) == pytest.approx(1.0, abs=1e-14)
    assert grid8.l2_distance(u, u) == 0.0
    with pytest.raises(ValueError, match="cannot normalize"):
        grid8.normalize(grid8.zeros())


def _random_field(grid, seed):
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    u = grid.zeros()
    for _ in range(4):
        cx, cy = rng.uniform(-3, 3, 2)
        u += rng.uniform(0.1, 1) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / rng.uniform(0.5, 4))
    return u


@given(seed=st.integers(0, 10_000))
def test_parseval(grid8, seed):
    u = _random_field(grid8, seed)
    assert grid8.spectral_mass(u) == pytest.approx(grid8.mass(u), rel=1e-12)


@given(seed=st.integers(0, 10_000))
def test_kinetic_nonnegative(grid8, seed):
    u = _random_field(grid8, seed) - 0.3
    assert grid8.kinetic_energy(u) >= 0.0


@given(seed=st.integers(0, 10_000), width=st.floats(0.2, 3.0))
def test_convolution_preserves_mass(grid8, seed, width):
    rho = _random_field(grid8, seed) ** 2
    out = grid8.convolve_density(rho, Kernel(width))
    assert grid8.integrate(out) == pytest.approx(grid8.integrate(rho), rel=1e-12)


@given(lam=st.floats(0.6, 1.6))
def test_dilate_gaussian(lam):
    g = build_grid(10.0, 128)
    X, Y = g.mesh()
    u = np.exp(-(X**2 + Y**2) / 2)
    exact = lam * np.exp(-(lam**2) * (X**2 + Y**2) / 2)
    assert np.max(np.abs(g.dilate(u, lam) - exact)) < 1e-10


def test_laplacian_matches_kinetic(grid8, gaussian):
    u = gaussian(grid8, (0.3, 0.1), 1.2)
    assert -grid8.inner(u, grid8.laplacian(u)) == pytest.approx(grid8.kinetic_energy(u), rel=1e-12)


def test_field_round_trip(tmp_path, grid8, gaussian):
    u = gaussian(grid8, (0.2, 0.0), 0.9)
    save_field(tmp_path / "f", grid8, u)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,y,value"
    g2, back = load_field(tmp_path / "f")
    assert g2 == grid8
    np.testing.assert_array_equal(back, u)
