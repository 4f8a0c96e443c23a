import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab import gn_core
from collapse_lab.grid2d import Kernel, build_grid
from collapse_lab.inequality_checks import (
    GN_REL_TOL,
    ONSAGER_REL_TOL,
    CheckReport,
    GaussianPotential,
    ParticleConfig,
    check_gn,
    check_interaction_bound,
    check_onsager,
    direct_gn_constant,
    gn_quotient,
    gn_suite,
    interaction_suite,
    onsager_suite,
    random_config,
    random_smooth_field,
)


@pytest.fixture(scope="module")
def onsager_grid():
    return build_grid(4.0, 64)


def test_gn_near_equality_at_q0(big_grid):
    q = gn_core.q0_on_grid(big_grid)
    scale = big_grid.kinetic_energy(q) * big_grid.mass(q)
    assert abs(check_gn(q, big_grid)) / scale < 1e-3


def test_gn_gaussian_strictly_positive(big_grid, gaussian, a_star):
    u = gaussian(big_grid, width=2.0)
    assert check_gn(u, big_grid) > 0
    # analytic quotient of any Gaussian is 4 pi > a*
    assert gn_quotient(u, big_grid) == pytest.approx(4 * np.pi, rel=1e-8)


def test_gn_homogeneity(big_grid, gaussian):
    u = gaussian(big_grid, (0.5, 0.0), 1.3)
    assert check_gn(5 * u, big_grid) == pytest.approx(5**4 * check_gn(u, big_grid), rel=1e-12)


@given(seed=st.integers(0, 10_000))
def test_gn_random_fields(big_grid, seed):
    u = random_smooth_field(big_grid, np.random.default_rng(seed))
    assert check_gn(u, big_grid) >= -GN_REL_TOL * big_grid.kinetic_energy(u) * big_grid.mass(u)


@pytest.mark.parametrize("width", [0.3, 1.0, 3.0])
def test_interaction_equal_fields(grid8, gaussian, width):
    u = grid8.normalize(gaussian(grid8))
    assert check_interaction_bound(u, u, grid8, Kernel(width), 1.0) >= 0


def test_interaction_delta_equality(grid8, gaussian):
    u = grid8.normalize(gaussian(grid8))
    s = check_interaction_bound(u, u, grid8, Kernel(grid8.h / 8), 1.0)
    assert abs(s) < 1e-10


def test_interaction_large_kappa(grid8, gaussian):
    ui = grid8.normalize(gaussian(grid8, width=0.8))
    uj = grid8.normalize(gaussian(grid8, (1.0, 0.0)))
    kern = Kernel(0.5)
    q = grid8.integrate(ui**4)
    s = [check_interaction_bound(ui, uj, grid8, kern, k) for k in (1e2, 1e4, 1e6)]
    assert s[0] < s[1] < s[2]
    assert s[2] / (0.5 * 1e6 * q) == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(ValueError):
        check_interaction_bound(ui, uj, grid8, kern, 0.0)


@given(seed=st.integers(0, 10_000), log_kappa=st.floats(-2, 2), width=st.floats(0.2, 2.0))
def test_interaction_random(grid8, seed, log_kappa, width):
    rng = np.random.default_rng(seed)
    ui = random_smooth_field(grid8, rng)
    uj = random_smooth_field(grid8, rng)
    assert check_interaction_bound(ui, uj, grid8, Kernel(width), 10.0**log_kappa) >= -1e-10


def test_particle_config_validation(onsager_grid):
    with pytest.raises(ValueError):
        ParticleConfig(np.zeros((1, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ParticleConfig(np.zeros((3, 3)), np.zeros((3, 2)))
    cfg = ParticleConfig(np.full((2, 2), 5.0), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="inside"):
        cfg.check_inside(onsager_grid)


def _smooth_densities(grid, rng, n1=8, n2=8):
    u = grid.normalize(random_smooth_field(grid, rng, spread=1.0))
    v = grid.normalize(random_smooth_field(grid, rng, spread=1.0))
    return n1 * u * u, n2 * v * v


@given(seed=st.integers(0, 10_000), width=st.sampled_from([0.5, 1.0, 2.0]))
def test_onsager_random(onsager_grid, seed, width):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    chi, zeta = _smooth_densities(onsager_grid, rng)
    slacks, scales = check_onsager(cfg, onsager_grid, GaussianPotential(width), chi, zeta, return_scales=True)
    assert all(s >= -ONSAGER_REL_TOL * sc for s, sc in zip(slacks, scales))


def test_onsager_point_mass_background():
    """A background made of narrow bumps at the particles nearly cancels them."""
    grid = build_grid(4.0, 256)
    rng = np.random.default_rng(1)
    # particles on grid nodes so the bumps are centered exactly
    idx = rng.choice(np.arange(128, 160), size=(8, 2))
    x = grid.x[idx]
    cfg = ParticleConfig(x, rng.uniform(0, 1, (8, 2)))
    X, Y = grid.mesh()
    s = 2.5 * grid.h
    chi = sum(np.exp(-((X - a) ** 2 + (Y - b) ** 2) / (2 * s * s)) for a, b in x) / (2 * np.pi * s * s)
    V = GaussianPotential(1.0)
    (s1, _, _), (sc1, _, _) = check_onsager(cfg, grid, V, chi, chi, return_scales=True)
    assert 0 <= s1 < 1e-2 * sc1


@given(lam=st.floats(0.1, 10.0), seed=st.integers(0, 1000))
def test_onsager_homogeneous_in_potential(onsager_grid, lam, seed):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    chi, zeta = _smooth_densities(onsager_grid, rng)
    base = check_onsager(cfg, onsager_grid, GaussianPotential(1.0), chi, zeta)
    scaled = check_onsager(cfg, onsager_grid, GaussianPotential(1.0, lam), chi, zeta)
    np.testing.assert_allclose(scaled, lam * np.asarray(base), rtol=1e-9, atol=1e-12)


def test_gn_suite(big_grid):
    rep = gn_suite(big_grid, trials=40, seed=3)
    assert rep.violations == 0 and rep.trials == 40 and rep.worst_slack > 0


def test_interaction_suite(grid8):
    rep = interaction_suite(grid8, trials=40, seed=3)
    assert rep.violations == 0


def test_onsager_suite_reproducible(onsager_grid):
    a = onsager_suite(onsager_grid, 1.0, trials=50, seed=9)
    b = onsager_suite(onsager_grid, 1.0, trials=50, seed=9, threads=2)
    assert a == b and a.violations == 0


def test_report_json():
    rep = CheckReport("gn", 10, 0, 0.25, 7)
    assert json.loads(rep.to_json()) == {"check_name": "gn", "trials": 10, "violations": 0,
                                         "worst_slack": 0.25, "seed": 7}


def test_direct_gn_from_q0(big_grid, a_star):
    q = gn_core.q0_on_grid(big_grid)
    assert direct_gn_constant(big_grid, q, max_steps=200) == pytest.approx(a_star, rel=1e-4)


def test_direct_gn_from_random_start(a_star):
    grid = build_grid(12.0, 128)
    u = random_smooth_field(grid, np.random.default_rng(4), spread=2.0)
    assert direct_gn_constant(grid, u) == pytest.approx(a_star, rel=1e-4)


def test_direct_gn_refinement():
    coarse = direct_gn_constant(build_grid(16.0, 256))
    fine = direct_gn_constant(build_grid(16.0, 512))
    assert abs(coarse - fine) / fine < 2e-3
