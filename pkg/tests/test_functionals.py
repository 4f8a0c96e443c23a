import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab import gn_core
from collapse_lab.functionals import (
    BlowUpFrame,
    EnergyBreakdown,
    Hartree,
    ModelParams,
    ModifiedHartree,
    Trap,
    TwoComponentState,
    el_residual,
    energy,
    gradient,
)
from collapse_lab.grid2d import build_grid

MODES = {
    "nls": None,
    "hartree": Hartree(0.3, 50.0, 1.0, 1.2, 1.1),
    "modified": ModifiedHartree(0.3, 50.0, 0.9),
}


def _unit_gaussians(grid, gaussian):
    u = grid.normalize(gaussian(grid))
    return TwoComponentState(u, u.copy())


def _fd_mismatch(state, params, grid, rng, frame=BlowUpFrame(), directions=20, eps=1e-5):
    X, Y = grid.mesh()
    env = np.exp(-(X**2 + Y**2) / 4)
    g = gradient(state, params, grid, frame)
    worst = 0.0
    for _ in range(directions):
        d = [rng.standard_normal(X.shape) * env for _ in range(2)]
        plus = energy((state[0] + eps * d[0], state[1] + eps * d[1]), params, grid, frame).total
        minus = energy((state[0] - eps * d[0], state[1] - eps * d[1]), params, grid, frame).total
        fd = (plus - minus) / (2 * eps)
        an = grid.inner(g[0], d[0]) + grid.inner(g[1], d[1])
        worst = max(worst, abs(fd - an) / abs(an))
    return worst


def test_harmonic_gaussians(grid8, gaussian):
    br = energy(_unit_gaussians(grid8, gaussian), ModelParams(), grid8)
    assert br.total == pytest.approx(2.0, abs=1e-5)
    assert br.kin1 == pytest.approx(1.0, abs=1e-6) and br.trap2 == pytest.approx(1.0, abs=1e-6)


def test_cross_term_example(grid8, gaussian):
    br = energy(_unit_gaussians(grid8, gaussian), ModelParams(a12=1.0), grid8)
    assert br.inter == pytest.approx(0.25 / (2 * math.pi), rel=1e-8)
    assert br.total == pytest.approx(2.0 - 1.0 / (8 * math.pi), abs=1e-5)


def test_modified_hartree_delta_limit(gaussian):
    fine = build_grid(4.0, 512)
    state = _unit_gaussians(fine, gaussian)
    base = ModelParams(a1=2.0, a2=3.0, a12=1.5)
    nls = energy(state, base, fine).total
    # smeared cross kernel of width 2.2h
    narrow = energy(state, base.replace(mode=ModifiedHartree(0.5, 1e2, 22 * fine.h)), fine).total
    assert narrow == pytest.approx(nls, abs=1e-4)


def test_breakdown_total_consistent(grid8, gaussian):
    p = ModelParams(0.3, 2.0, 1.0, -0.7, Trap(2.0, (0.5, 0.0)), Trap(4.0))
    u1 = grid8.normalize(gaussian(grid8, (0.4, 0.0)))
    u2 = grid8.normalize(gaussian(grid8, (-0.2, 0.3), 1.3))
    br = energy((u1, u2), p, grid8)
    recomputed = 0.3 * (br.kin1 + br.trap1 - br.intra1) + 0.7 * (br.kin2 + br.trap2 - br.intra2) - br.inter
    assert abs(recomputed - br.total) <= 1e-12 * abs(br.total)
    d = br.to_dict()
    assert list(d) == ["kin1", "trap1", "intra1", "kin2", "trap2", "intra2", "inter", "total"]


@pytest.mark.parametrize("mode", list(MODES))
def test_gradient_finite_differences(mode, grid8, gaussian, rng):
    p = ModelParams(0.4, 3.0, 4.0, 1.5, Trap(2.0, (0.2, 0.1)), Trap(1.5), MODES[mode])
    state = (grid8.normalize(gaussian(grid8, (0.3, 0.0))), grid8.normalize(gaussian(grid8, (0.0, -0.2), 0.9)))
    assert _fd_mismatch(state, p, grid8, rng) < 1e-6


def test_gradient_in_separate_frames(grid8, gaussian, rng):
    p = ModelParams(0.5, 3.0, 4.0, -0.7, Trap(2.0, (-1.5, 0.0)), Trap(2.0, (1.5, 0.0)))
    frame = BlowUpFrame((2.0, 3.0), ((-1.5, 0.0), (1.5, 0.0)))
    state = (grid8.normalize(gaussian(grid8, (0.2, 0.0))), grid8.normalize(gaussian(grid8, (-0.1, 0.1))))
    assert _fd_mismatch(state, p, grid8, rng, frame, directions=5) < 1e-6


def test_gradient_of_fourier_mode(grid8):
    X, Y = grid8.mesh()
    k = math.pi / grid8.L
    u = np.cos(k * X) * np.cos(2 * k * Y)
    p = ModelParams(c1=0.25, trap1=None, trap2=None)
    g1, g2 = gradient((u, u), p, grid8)
    np.testing.assert_allclose(g1, 2 * 0.25 * 5 * k * k * u, atol=1e-12)
    np.testing.assert_allclose(g2, 2 * 0.75 * 5 * k * k * u, atol=1e-12)


def test_symmetric_gradient(grid8, gaussian):
    u = grid8.normalize(gaussian(grid8, (0.3, -0.2)))
    g1, g2 = gradient((u, u), ModelParams(0.5, 3.0, 3.0, 2.0), grid8)
    np.testing.assert_array_equal(g1, g2)


def test_residual_vanishes_at_q0():
    a = gn_core.a_star()
    p = ModelParams(a1=a * (1 - 1e-15), a2=a * (1 - 1e-15), trap1=None, trap2=None)
    residuals = []
    for n in (64, 128, 256):
        g = build_grid(16.0, n)
        q = gn_core.q0_on_grid(g)
        residuals.append(el_residual((q, q), p, g))
    assert residuals[0] > residuals[1] > residuals[2]
    # floor set by interpolating the radial profile
    assert residuals[2] < 5e-6


def test_residual_positive_on_random_state(grid8, rng):
    u = grid8.normalize(np.abs(rng.standard_normal((128, 128))) + 0.1)
    assert el_residual((u, u), ModelParams(a1=1.0), grid8) > 0


def test_frame_energy_is_change_of_variables(gaussian):
    """Energy of a rescaled state equals the energy of the original-variable state."""
    ell = 2.0
    small = build_grid(8.0 / ell, 128)
    big = build_grid(8.0, 128)
    p = ModelParams(0.4, 3.0, 5.0, 1.0)
    v = big.normalize(gaussian(big, width=1.5))
    w = big.normalize(gaussian(big, width=1.1))
    rescaled = energy((v, w), p, big, BlowUpFrame((ell, ell)))
    # same nodal values interpreted on the smaller box, times ell
    original = energy((ell * v, ell * w), p, small)
    assert rescaled.total == pytest.approx(original.total, rel=1e-10)


@given(seed=st.integers(0, 1000), a12=st.floats(0.1, 5.0))
def test_sign_of_cross_term(grid8, gaussian, seed, a12):
    rng = np.random.default_rng(seed)
    u1 = grid8.normalize(gaussian(grid8, tuple(rng.uniform(-1, 1, 2)), rng.uniform(0.6, 1.5)))
    u2 = grid8.normalize(gaussian(grid8, tuple(rng.uniform(-1, 1, 2)), rng.uniform(0.6, 1.5)))
    base = ModelParams(0.5, 2.0, 2.0, 0.0)
    e0 = energy((u1, u2), base, grid8).total
    assert energy((u1, u2), base.replace(a12=-a12), grid8).total > e0
    assert energy((u1, u2), base.replace(a12=a12), grid8).total < e0


@given(seed=st.integers(0, 1000), frac1=st.floats(0.0, 0.999), frac2=st.floats(0.0, 0.999))
def test_energy_nonnegative_in_existence_region(grid8, gaussian, seed, frac1, frac2):
    a = gn_core.a_star()
    rng = np.random.default_rng(seed)
    u1 = grid8.normalize(gaussian(grid8, (0.0, 0.0), rng.uniform(0.3, 2.0)))
    u2 = grid8.normalize(gaussian(grid8, tuple(rng.uniform(-2, 2, 2)), rng.uniform(0.3, 2.0)))
    p = ModelParams(0.5, frac1 * a, frac2 * a, -rng.uniform(0, 5), trap1=None, trap2=None)
    assert energy((u1, u2), p, grid8).total >= -1e-6


def test_existence_violation_messages(a_star):
    assert ModelParams(a1=1.0, a2=1.0, a12=1.0).existence_violation(a_star) is None
    assert "a1" in ModelParams(a1=a_star).existence_violation(a_star)
    msg = ModelParams(a1=0.9 * a_star, a2=0.9 * a_star, a12=0.5 * a_star).existence_violation(a_star)
    assert "a12" in msg
    with pytest.raises(ValueError):
        ModelParams(c1=1.0)


def test_a_N():
    p = ModelParams(0.3, 2.0, 4.0, 1.0)
    assert p.a_N == pytest.approx(0.3 * 2 + 0.7 * 4 + 2 * 0.21 * 1.0)
    assert p.c2 == pytest.approx(0.7)


def test_breakdown_serializes_flat():
    br = EnergyBreakdown.assemble(0.5, 1, 2, 3, 4, 5, 6, 7)
    assert set(br.to_dict()) == {f.name for f in dataclasses.fields(EnergyBreakdown)}
    assert br.component(1) == 0 and br.component(2) == 3
