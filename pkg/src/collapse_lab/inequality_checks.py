"""Randomized checks of the inequalities behind the collapse analysis.

* the sharp Gagliardo-Nirenberg inequality ``||grad u||^2 ||u||^2 >= a*/2 ||u||_4^4``,
* the Cauchy-Schwarz bound on smeared interactions,
* the Onsager-type lower bound of pair sums by one-body terms, for Gaussian
  pair potentials (positive Fourier transform).

Each check returns a slack that must be non-negative up to round-off.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import gn_core
from .grid2d import Grid2D, Kernel

__all__ = [
    "ParticleConfig",
    "GaussianPotential",
    "CheckReport",
    "check_gn",
    "check_interaction_bound",
    "check_onsager",
    "direct_gn_constant",
    "gn_quotient",
    "random_smooth_field",
    "random_config",
    "gn_suite",
    "interaction_suite",
    "onsager_suite",
]

GN_REL_TOL = 1e-6
INTERACTION_TOL = 1e-10
ONSAGER_REL_TOL = 1e-8
RECENTER_EVERY = 50


@dataclass(frozen=True)
class ParticleConfig:
    """Positions ``x_i`` (first species) and ``y_r`` (second species), shape ``(N, 2)``."""

    x_points: np.ndarray
    y_points: np.ndarray

    def __post_init__(self):
        for name in ("x_points", "y_points"):
            pts = np.asarray(getattr(self, name), dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise ValueError(f"{name} must be an (N, 2) array with N >= 2")
            object.__setattr__(self, name, pts)

    def check_inside(self, grid: Grid2D) -> None:
        for pts in (self.x_points, self.y_points):
            if np.any(np.abs(pts) >= grid.L):
                raise ValueError("particle positions must lie inside the grid domain")


@dataclass(frozen=True)
class GaussianPotential:
    """``V(x) = strength * exp(-|x|^2 / (2 width^2))``; its Fourier transform is positive."""

    width: float
    strength: float = 1.0

    def __call__(self, dx, dy):
        return self.strength * np.exp(-(dx * dx + dy * dy) / (2.0 * self.width**2))

    def axis(self, a, b):
        """Separable factor ``exp(-(a_i - b_j)^2 / 2 width^2)`` (strength not included)."""
        d = np.subtract.outer(np.asarray(a, float), np.asarray(b, float))
        return np.exp(-d * d / (2.0 * self.width**2))


@dataclass
class CheckReport:
    check_name: str
    trials: int
    violations: int
    worst_slack: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- single checks --------------------------------------------------------------

def check_gn(u: np.ndarray, grid: Grid2D, a_star: float | None = None) -> float:
    """``||grad u||^2 ||u||^2 - (a*/2) ||u||_4^4``; admissible down to ``-1e-6 ||grad u||^2 ||u||^2``."""
    a_star = gn_core.a_star() if a_star is None else a_star
    return grid.kinetic_energy(u) * grid.mass(u) - 0.5 * a_star * grid.integrate(u**4)


def gn_quotient(u: np.ndarray, grid: Grid2D) -> float:
    """``2 ||grad u||^2 ||u||^2 / ||u||_4^4``, minimized by ``Q`` with value ``a*``."""
    return 2.0 * grid.kinetic_energy(u) * grid.mass(u) / grid.integrate(u**4)


def check_interaction_bound(ui: np.ndarray, uj: np.ndarray, grid: Grid2D, kernel: Kernel,
                            kappa: float) -> float:
    """``(k/2) int ui^4 + (1/2k) int uj^4 - int ui^2 (w * uj^2)``; must be >= -1e-10."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    rho_i, rho_j = ui * ui, uj * uj
    cross = grid.integrate(rho_i * grid.convolve_density(rho_j, kernel))
    return 0.5 * kappa * grid.integrate(rho_i**2) + 0.5 / kappa * grid.integrate(rho_j**2) - cross


def onsager_terms(config: ParticleConfig, grid: Grid2D, V: GaussianPotential, chi, zeta) -> dict:
    """All pieces entering the three Onsager-type bounds.

    Pair sums are exact; integrals against ``chi`` and ``zeta`` use the grid rule with the
    unperiodized potential.
    """
    x, y, h2 = config.x_points, config.y_points, grid.cell
    s = V.strength
    G = V.axis(grid.x, grid.x)

    def pair_sum(p):
        d = p[:, None, :] - p[None, :, :]
        m = V(d[..., 0], d[..., 1])
        return 0.5 * (m.sum() - np.trace(m))

    def field_at(f, p):
        gx, gy = V.axis(p[:, 0], grid.x), V.axis(p[:, 1], grid.x)
        return s * h2 * np.einsum("pj,jl,pl->p", gx, f, gy)

    def field_field(f, g):
        return s * h2 * h2 * float(np.sum((G @ g @ G) * f))

    dxy = x[:, None, :] - y[None, :, :]
    return {
        "xx": pair_sum(x),
        "yy": pair_sum(y),
        "xy": float(V(dxy[..., 0], dxy[..., 1]).sum()),
        "chi_at_x": float(field_at(chi, x).sum()),
        "zeta_at_y": float(field_at(zeta, y).sum()),
        "both_at_x": float(field_at(chi + zeta, x).sum()),
        "both_at_y": float(field_at(chi + zeta, y).sum()),
        "chi_chi": field_field(chi, chi),
        "zeta_zeta": field_field(zeta, zeta),
        "chi_zeta": field_field(chi, zeta),
        "V0": s,
        "N1": len(x),
        "N2": len(y),
    }


def check_onsager(config: ParticleConfig, grid: Grid2D, V: GaussianPotential, chi, zeta,
                  return_scales: bool = False):
    """Slack (LHS - RHS) of the three Onsager-type bounds.

    Each slack equals half the self-interaction of a signed measure (point masses
    minus the background), hence is non-negative for positive-definite ``V``.
    """
    config.check_inside(grid)
    t = onsager_terms(config, grid, V, chi, zeta)
    N1, N2, V0 = t["N1"], t["N2"], t["V0"]
    rhs1 = -0.5 * t["chi_chi"] + t["chi_at_x"] - 0.5 * N1 * V0
    rhs2 = -0.5 * t["zeta_zeta"] + t["zeta_at_y"] - 0.5 * N2 * V0
    rhs3 = (-t["xx"] + t["both_at_x"] - t["yy"] + t["both_at_y"]
            - 0.5 * (t["chi_chi"] + t["zeta_zeta"]) - t["chi_zeta"] - 0.5 * (N1 + N2) * V0)
    slacks = (t["xx"] - rhs1, t["yy"] - rhs2, t["xy"] - rhs3)
    if not return_scales:
        return slacks
    scales = (
        abs(t["xx"]) + 0.5 * abs(t["chi_chi"]) + abs(t["chi_at_x"]) + 0.5 * N1 * V0,
        abs(t["yy"]) + 0.5 * abs(t["zeta_zeta"]) + abs(t["zeta_at_y"]) + 0.5 * N2 * V0,
        abs(t["xy"]) + abs(t["xx"]) + abs(t["yy"]) + abs(t["both_at_x"]) + abs(t["both_at_y"])
        + abs(t["chi_chi"]) + abs(t["zeta_zeta"]) + abs(t["chi_zeta"]) + 0.5 * (N1 + N2) * V0,
    )
    return slacks, scales


# -- direct GN minimization -------------------------------------------------------

def _gn_descent(grid: Grid2D, u0: np.ndarray, dt: float = 0.05, max_steps: int = 20_000,
                tol: float = 1e-13):
    """Semi-implicit descent of the GN quotient at unit mass.

    The flow direction is ``2(-Lap u) - 4 (K/P) u^3`` with ``K = ||grad u||^2``,
    ``P = ||u||_4^4``, i.e. ``K`` times the gradient of ``log K - log P``.
    The quotient is invariant under translations and dilations, so every
    ``RECENTER_EVERY`` steps the field is moved back to the origin with unit
    kinetic energy; this keeps it away from the periodic boundary.
    """
    u = _recenter(grid, grid.normalize(np.clip(u0, 0.0, None)))
    value = gn_quotient(u, grid)
    steps, converged = 0, False
    while steps < max_steps:
        if steps % RECENTER_EVERY == 0:
            u = _recenter(grid, u)
            value = gn_quotient(u, grid)
        uh = np.fft.rfft2(u)
        K, P = grid.kinetic_energy(u, uh), grid.integrate(u**4)
        pot = -4.0 * (K / P) * u**3
        two_mu = 2.0 * K + grid.inner(u, pot)
        v = np.fft.irfft2((uh - dt * np.fft.rfft2(pot - two_mu * u)) / (1.0 + 2.0 * dt * grid.k2_half),
                          s=u.shape)
        v = grid.normalize(np.clip(v, 0.0, None))
        new = gn_quotient(v, grid)
        if new > value:
            dt *= 0.5
            if dt < 1e-8:
                break
            continue
        steps += 1
        change = (value - new) / new
        u, value = v, new
        if change < tol:
            converged = True
            break
    return value, u, steps, converged


def _recenter(grid: Grid2D, u: np.ndarray) -> np.ndarray:
    """Shift the center of mass of ``u^2`` to the origin and dilate to ``||grad u|| = 1``."""
    X, Y = grid.mesh()
    rho = u * u
    m = rho.sum()
    shift = (float((X * rho).sum() / m), float((Y * rho).sum() / m))
    phase = np.exp(1j * (grid.k[:, None] * shift[0] + grid.k[None, :] * shift[1]))
    u = np.fft.ifft2(np.fft.fft2(u) * phase).real
    u = grid.dilate(u, 1.0 / math.sqrt(grid.kinetic_energy(u)))
    return grid.normalize(np.clip(u, 0.0, None))


def direct_gn_constant(grid: Grid2D, initial: np.ndarray | None = None, dt: float = 0.05,
                       max_steps: int = 20_000, tol: float = 1e-13) -> float:
    """Independent estimate of ``a*`` as the minimal GN quotient on ``grid``.

    Starts from a unit Gaussian unless ``initial`` is given.
    """
    if initial is None:
        X, Y = grid.mesh()
        initial = np.exp(-(X**2 + Y**2) / 2.0)
    return _gn_descent(grid, initial, dt, max_steps, tol)[0]


# -- random inputs ---------------------------------------------------------------

def random_smooth_field(grid: Grid2D, rng: np.random.Generator, spread: float | None = None) -> np.ndarray:
    """Sum of 3 to 6 positive Gaussians with random widths, centers and weights."""
    spread = grid.L / 3.0 if spread is None else spread
    X, Y = grid.mesh()
    u = grid.zeros()
    for _ in range(int(rng.integers(3, 7))):
        cx, cy = rng.uniform(-spread, spread, size=2)
        w = rng.uniform(0.5, 2.0)
        u += rng.uniform(0.2, 1.0) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * w * w))
    return np.clip(u, 0.0, None)


def random_config(rng: np.random.Generator, n1: int = 8, n2: int = 8, box: float = 1.0) -> ParticleConfig:
    """Positions drawn uniformly from ``[0, box]^2``."""
    return ParticleConfig(rng.uniform(0.0, box, size=(n1, 2)), rng.uniform(0.0, box, size=(n2, 2)))


# -- suites ---------------------------------------------------------------------

def _trials(fn, trials, seed, threads):
    rngs = [np.random.default_rng([seed, k]) for k in range(trials)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, rngs))
    return [fn(r) for r in rngs]


def gn_suite(grid: Grid2D, trials: int = 200, seed: int = 0, threads: int = 1) -> CheckReport:
    """Relative GN slack on random smooth fields."""
    def one(rng):
        u = random_smooth_field(grid, rng)
        scale = grid.kinetic_energy(u) * grid.mass(u)
        return check_gn(u, grid) / scale

    rel = np.array(_trials(one, trials, seed, threads))
    return CheckReport("gn", trials, int(np.sum(rel < -GN_REL_TOL)), float(rel.min()), seed)


def interaction_suite(grid: Grid2D, trials: int = 200, seed: int = 0, threads: int = 1) -> CheckReport:
    """Interaction bound on random field pairs, ``kappa`` log-uniform in [1e-2, 1e2]."""
    def one(rng):
        ui = grid.normalize(random_smooth_field(grid, rng))
        uj = grid.normalize(random_smooth_field(grid, rng))
        kappa = 10.0 ** rng.uniform(-2.0, 2.0)
        kernel = Kernel(rng.uniform(2.0 * grid.h, 2.0))
        return check_interaction_bound(ui, uj, grid, kernel, kappa)

    slack = np.array(_trials(one, trials, seed, threads))
    return CheckReport("interaction", trials, int(np.sum(slack < -INTERACTION_TOL)), float(slack.min()), seed)


def onsager_suite(grid: Grid2D, width: float, trials: int = 1000, seed: int = 0, n1: int = 8,
                  n2: int = 8, threads: int = 1) -> CheckReport:
    """Onsager-type bounds on random unit-box configurations.

    ``chi = n1 |u|^2`` and ``zeta = n2 |v|^2`` for fresh random smooth unit-mass ``u, v``.
    ``worst_slack`` is the smallest slack relative to the size of its terms.
    """
    V = GaussianPotential(width)

    def one(rng):
        config = random_config(rng, n1, n2)
        u = grid.normalize(random_smooth_field(grid, rng, spread=1.0))
        v = grid.normalize(random_smooth_field(grid, rng, spread=1.0))
        slacks, scales = check_onsager(config, grid, V, n1 * u * u, n2 * v * v, return_scales=True)
        return min(s / sc for s, sc in zip(slacks, scales))

    rel = np.array(_trials(one, trials, seed, threads))
    return CheckReport(f"onsager(width={width:g})", trials, int(np.sum(rel < -ONSAGER_REL_TOL)),
                       float(rel.min()), seed)
