"""Two-component NLS / Hartree / modified-Hartree energies and their gradients.

All three functionals share the form

    c1 [K(u1) + V1(u1) - a1/2 D11] + c2 [K(u2) + V2(u2) - a2/2 D22] - c1 c2 a12 D12

where ``Dij`` is either the local overlap ``int ui^2 uj^2`` or the smeared
overlap ``int ui^2 (w_N * uj^2)``.  States may also be given in blow-up
coordinates (see :class:`BlowUpFrame`); energies are always reported in the
original variables.
"""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .grid2d import Grid2D, Kernel

__all__ = [
    "Trap",
    "Hartree",
    "ModifiedHartree",
    "ModelParams",
    "BlowUpFrame",
    "TwoComponentState",
    "EnergyBreakdown",
    "energy",
    "gradient",
    "el_residual",
]


@dataclass(frozen=True)
class Trap:
    """External potential ``|x - center|^p``."""

    p: float
    center: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Hartree:
    beta: float
    N: float
    s1: float = 1.0
    s2: float = 1.0
    s12: float = 1.0

    def kernels(self):
        return tuple(Kernel(s, self.beta, self.N) for s in (self.s1, self.s2, self.s12))


@dataclass(frozen=True)
class ModifiedHartree:
    """Local intra-species terms, smeared cross term."""

    beta: float
    N: float
    s12: float = 1.0

    def kernels(self):
        return None, None, Kernel(self.s12, self.beta, self.N)


@dataclass(frozen=True)
class ModelParams:
    c1: float = 0.5
    a1: float = 0.0
    a2: float = 0.0
    a12: float = 0.0
    trap1: Trap | None = Trap(2.0)
    trap2: Trap | None = Trap(2.0)
    mode: Hartree | ModifiedHartree | None = None

    def __post_init__(self):
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")

    @property
    def c2(self) -> float:
        return 1.0 - self.c1

    @property
    def a_N(self) -> float:
        """Total strength ``c1 a1 + c2 a2 + 2 c1 c2 a12``."""
        return self.c1 * self.a1 + self.c2 * self.a2 + 2.0 * self.c1 * self.c2 * self.a12

    @property
    def traps(self):
        return self.trap1, self.trap2

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def existence_violation(self, a_star: float) -> str | None:
        """Reason the parameters leave the ground-state existence region, else None."""
        for name, a in (("a1", self.a1), ("a2", self.a2)):
            if not 0 <= a < a_star:
                return f"{name} = {a!r} violates 0 <= {name} < a* = {a_star!r}"
        if self.a12 > 0:
            bound = math.sqrt((a_star - self.a1) * (a_star - self.a2) / (self.c1 * self.c2))
            if not self.a12 < bound:
                return (
                    f"a12 = {self.a12!r} violates a12 < sqrt((a*-a1)(a*-a2)/(c1 c2)) = {bound!r}"
                )
        return None


@dataclass(frozen=True)
class BlowUpFrame:
    """Per-component coordinates ``x = center_i + y / scale_i``.

    A state in this frame stores ``u~_i(y) = scale_i^{-1} u_i(center_i + y/scale_i)``,
    which keeps unit mass.  The identity frame is ``scales=(1, 1)``, centers at 0.
    """

    scales: tuple[float, float] = (1.0, 1.0)
    centers: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 0.0), (0.0, 0.0))

    @property
    def shared(self) -> bool:
        return self.scales[0] == self.scales[1] and tuple(self.centers[0]) == tuple(self.centers[1])


IDENTITY = BlowUpFrame()


class TwoComponentState(NamedTuple):
    u1: np.ndarray
    u2: np.ndarray


@dataclass(frozen=True)
class EnergyBreakdown:
    kin1: float
    trap1: float
    intra1: float
    kin2: float
    trap2: float
    intra2: float
    inter: float
    total: float

    @staticmethod
    def assemble(c1, kin1, trap1, intra1, kin2, trap2, intra2, inter) -> "EnergyBreakdown":
        c2 = 1.0 - c1
        total = c1 * (kin1 + trap1 - intra1) + c2 * (kin2 + trap2 - intra2) - inter
        return EnergyBreakdown(kin1, trap1, intra1, kin2, trap2, intra2, inter, total)

    def component(self, i: int) -> float:
        """Single-component energy ``kin + trap - intra`` of component ``i``."""
        if i == 1:
            return self.kin1 + self.trap1 - self.intra1
        return self.kin2 + self.trap2 - self.intra2

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class _Model:
    """Precomputed coefficients and operators for one (params, grid, frame)."""

    def __init__(self, params: ModelParams, grid: Grid2D, frame: BlowUpFrame):
        self.params, self.grid, self.frame = params, grid, frame
        self.c = (params.c1, params.c2)
        self.a = (params.a1, params.a2)
        self.scales = tuple(float(s) for s in frame.scales)
        self.kin_coef = tuple(s * s for s in self.scales)

        self.traps = []
        for trap, scale, center in zip(params.traps, self.scales, frame.centers):
            if trap is None:
                self.traps.append(None)
                continue
            offset = (scale * (trap.center[0] - center[0]), scale * (trap.center[1] - center[1]))
            self.traps.append(grid.trap_potential(trap.p, offset) * scale ** (-trap.p))

        kernels = params.mode.kernels() if params.mode is not None else (None, None, None)
        self.intra_hat = []
        for kern, scale in zip(kernels[:2], self.scales):
            self.intra_hat.append(None if kern is None else self._kernel_hat(kern, scale))

        self.cross_hat = None
        self.resample = None
        if frame.shared:
            self.cross_coef = self.kin_coef[0]
            if kernels[2] is not None:
                self.cross_hat = self._kernel_hat(kernels[2], self.scales[0])
        else:
            if kernels[2] is not None or any(k is not None for k in kernels[:2]):
                raise ValueError("smeared interactions need a shared blow-up frame")
            self.cross_coef = self.kin_coef[1]
            self.resample = _resample_matrix(grid, frame)

    def _kernel_hat(self, kern: Kernel, scale: float) -> np.ndarray:
        width = kern.effective_width * scale
        if width < 2.0 * self.grid.h:
            raise ValueError(
                f"kernel narrower than grid: width {width:.4g} < 2h = {2 * self.grid.h:.4g}"
            )
        return self.grid.kernel_hat(Kernel(width))

    def _smear(self, hat, rho):
        if hat is None:
            return rho
        return np.fft.irfft2(hat * np.fft.rfft2(rho), s=rho.shape)

    def evaluate(self, u1, u2, hats=None):
        """Energy breakdown plus the fields the gradient needs."""
        g = self.grid
        u = (u1, u2)
        if hats is None:
            hats = (np.fft.rfft2(u1), np.fft.rfft2(u2))
        rho = (u1 * u1, u2 * u2)
        kin, trap, intra, smeared = [], [], [], []
        for i in range(2):
            kin.append(self.kin_coef[i] * g.kinetic_energy(u[i], hats[i]))
            trap.append(0.0 if self.traps[i] is None else g.integrate(self.traps[i] * rho[i]))
            sm = self._smear(self.intra_hat[i], rho[i])
            smeared.append(sm)
            intra.append(0.5 * self.a[i] * self.kin_coef[i] * g.integrate(rho[i] * sm))
        if self.resample is None:
            x1 = self._smear(self.cross_hat, rho[1])
            x2 = self._smear(self.cross_hat, rho[0])
        else:
            n = g.n
            x1 = (self.resample @ rho[1].ravel()).reshape(n, n)
            x2 = (self.resample.T @ rho[0].ravel()).reshape(n, n)
        c1, c2 = self.c
        inter = c1 * c2 * self.params.a12 * self.cross_coef * g.integrate(rho[0] * x1)
        br = EnergyBreakdown.assemble(c1, kin[0], trap[0], intra[0], kin[1], trap[1], intra[1], inter)
        return br, (smeared, (x1, x2))

    def potential_part(self, i, u_i, aux):
        """Gradient of everything except the kinetic term, for component ``i``."""
        smeared, cross = aux
        c1, c2 = self.c
        ci = self.c[i]
        out = -ci * self.a[i] * self.kin_coef[i] * smeared[i]
        if self.traps[i] is not None:
            out = out + ci * self.traps[i]
        out = out - c1 * c2 * self.params.a12 * self.cross_coef * cross[i]
        return 2.0 * out * u_i

    def full_gradient(self, state, aux):
        g = []
        for i, u_i in enumerate(state):
            kin = -self.grid.laplacian(u_i) * 2.0 * self.c[i] * self.kin_coef[i]
            g.append(kin + self.potential_part(i, u_i, aux))
        return tuple(g)

    def weights(self):
        return tuple(c * k for c, k in zip(self.c, self.kin_coef))


@functools.lru_cache(maxsize=64)
def _model(params: ModelParams, grid: Grid2D, frame: BlowUpFrame) -> _Model:
    return _Model(params, grid, frame)


def _resample_matrix(grid: Grid2D, frame: BlowUpFrame) -> sp.csr_matrix:
    """Bilinear map taking a component-2 field to component-1 frame nodes (zero outside)."""
    (l1, l2), (z1, z2) = frame.scales, frame.centers
    n, h, L = grid.n, grid.h, grid.L
    X, Y = grid.mesh()
    qx = l2 * (z1[0] - z2[0]) + (l2 / l1) * X
    qy = l2 * (z1[1] - z2[1]) + (l2 / l1) * Y
    fx, fy = ((qx + L) / h).ravel(), ((qy + L) / h).ravel()
    ix, iy = np.floor(fx).astype(int), np.floor(fy).astype(int)
    tx, ty = fx - ix, fy - iy
    rows, cols, vals = [], [], []
    target = np.arange(n * n)
    for dx, wx in ((0, 1.0 - tx), (1, tx)):
        for dy, wy in ((0, 1.0 - ty), (1, ty)):
            jx, jy = ix + dx, iy + dy
            ok = (jx >= 0) & (jx < n) & (jy >= 0) & (jy < n)
            rows.append(target[ok])
            cols.append((jx * n + jy)[ok])
            vals.append((wx * wy)[ok])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * n, n * n)
    )


def energy(state, params: ModelParams, grid: Grid2D, frame: BlowUpFrame = IDENTITY) -> EnergyBreakdown:
    return _model(params, grid, frame).evaluate(*state)[0]


def gradient(state, params: ModelParams, grid: Grid2D, frame: BlowUpFrame = IDENTITY):
    """L2 gradient ``(g1, g2)`` of :func:`energy` w.r.t. the grid inner product."""
    model = _model(params, grid, frame)
    _, aux = model.evaluate(*state)
    return model.full_gradient(state, aux)


def el_residual(state, params: ModelParams, grid: Grid2D, frame: BlowUpFrame = IDENTITY) -> float:
    """Norm of the gradient projected off each mass constraint.

    In a blow-up frame the residual of component ``i`` is divided by ``scale_i^2``
    so that it measures stationarity of the rescaled problem.
    """
    model = _model(params, grid, frame)
    _, aux = model.evaluate(*state)
    grads = model.full_gradient(state, aux)
    return _projected_norm(grid, state, grads, model)


def _projected_norm(grid, state, grads, model) -> float:
    worst = 0.0
    for i, (u, g) in enumerate(zip(state, grads)):
        w = model.weights()[i]
        mu = grid.inner(u, g) / (2.0 * grid.mass(u) * w)
        r = grid.l2_distance(g, 2.0 * w * mu * u) / model.kin_coef[i]
        worst = max(worst, r)
    return worst
