"""Periodic square spectral grid: derivatives, convolution, traps and L2 helpers.

Fields are plain ``(n, n)`` float arrays indexed ``[ix, iy]``; the grid object
carries the geometry and all spectral operators.
"""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Grid2D", "Kernel", "build_grid", "save_field", "load_field"]


@dataclass(frozen=True)
class Kernel:
    """Normalized Gaussian ``(2 pi s^2)^-1 exp(-|x|^2 / 2 s^2)``.

    With ``beta`` and ``N`` set the kernel is the mean-field rescaling
    ``N^{2 beta} w(N^beta x)``, i.e. a Gaussian of width ``s N^{-beta}``.
    """

    width: float
    beta: float | None = None
    N: float | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("kernel width must be positive")
        if (self.beta is None) != (self.N is None):
            raise ValueError("scaled kernel needs both beta and N")
        if self.beta is not None and not (0 < self.beta < 1 and self.N >= 1):
            raise ValueError("need 0 < beta < 1 and N >= 1")

    @property
    def scaled(self) -> bool:
        return self.beta is not None

    @property
    def effective_width(self) -> float:
        if self.scaled:
            return self.width * self.N ** (-self.beta)
        return self.width

    def dilated(self, factor: float) -> "Kernel":
        """Same kernel seen in coordinates stretched by ``factor``."""
        return Kernel(self.effective_width * factor)

    def __call__(self, x, y):
        s2 = self.effective_width**2
        return np.exp(-(x * x + y * y) / (2.0 * s2)) / (2.0 * math.pi * s2)


@dataclass(frozen=True)
class Grid2D:
    """Square box ``[-L, L)^2`` with ``n`` nodes per axis, ``x_j = -L + j h``."""

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        n = self.n
        if not (isinstance(n, (int, np.integer)) and n >= 64 and n & (n - 1) == 0):
            raise ValueError(f"n must be a power of two >= 64, got {n!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell(self) -> float:
        return self.h * self.h

    @functools.cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @functools.cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order (multiples of pi/L)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @functools.cached_property
    def k2_half(self) -> np.ndarray:
        """``|k|^2`` on the ``rfft2`` half-plane layout."""
        kx = self.k[:, None]
        ky = np.abs(self.k[: self.n // 2 + 1])[None, :]
        return kx * kx + ky * ky

    @functools.cached_property
    def _half_weights(self) -> np.ndarray:
        # multiplicity of each rfft2 column in the full spectrum
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        return w[None, :]

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros((self.n, self.n))

    # -- L2 helpers ---------------------------------------------------------

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f)) * self.cell

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.vdot(u, v).real) * self.cell

    def mass(self, u: np.ndarray) -> float:
        return self.inner(u, u)

    def normalize(self, u: np.ndarray) -> np.ndarray:
        m = self.mass(u)
        if not m > 0:
            raise ValueError("cannot normalize a zero field")
        if not math.isfinite(m):
            raise ValueError("cannot normalize a non-finite field")
        return u / math.sqrt(m)

    def l2_distance(self, u: np.ndarray, v: np.ndarray) -> float:
        return math.sqrt(self.mass(u - v))

    def spectral_mass(self, u: np.ndarray) -> float:
        uh = np.fft.rfft2(u)
        return float(np.sum(self._half_weights * np.abs(uh) ** 2)) * self.cell / self.n**2

    # -- spectral operators -------------------------------------------------

    def kinetic_energy(self, u: np.ndarray, u_hat: np.ndarray | None = None) -> float:
        """``int |grad u|^2`` evaluated spectrally."""
        if u_hat is None:
            u_hat = np.fft.rfft2(u)
        s = np.sum(self._half_weights * self.k2_half * (u_hat.real**2 + u_hat.imag**2))
        return float(s) * self.cell / self.n**2

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(-self.k2_half * np.fft.rfft2(u), s=u.shape)

    def kernel_hat(self, kernel: Kernel) -> np.ndarray:
        return _kernel_hat(self, kernel.effective_width)

    def check_resolved(self, kernel: Kernel) -> None:
        if kernel.scaled and kernel.effective_width < 2.0 * self.h:
            raise ValueError(
                f"kernel narrower than grid: width {kernel.effective_width:.4g} < 2h = {2 * self.h:.4g}"
            )

    def convolve_density(self, rho: np.ndarray, kernel: Kernel) -> np.ndarray:
        """Periodic ``w * rho`` with the kernel sampled and renormalized to unit mass."""
        self.check_resolved(kernel)
        return np.fft.irfft2(self.kernel_hat(kernel) * np.fft.rfft2(rho), s=rho.shape)

    # -- potentials ---------------------------------------------------------

    def trap_potential(self, p: float, z=(0.0, 0.0)) -> np.ndarray:
        """``|x - z|^p`` on the nodes (no periodization)."""
        if not p > 0:
            raise ValueError("trap exponent must be positive")
        X, Y = self.mesh()
        r2 = (X - z[0]) ** 2 + (Y - z[1]) ** 2
        return r2 ** (0.5 * p)

    def dilate(self, u: np.ndarray, lam: float) -> np.ndarray:
        """Band-limited resampling ``v(x) = lam * u(lam x)`` about the origin.

        Nodes whose image ``lam x`` leaves the box are set to zero instead of
        wrapping around.
        """
        n, L = self.n, self.L
        uh = np.fft.fft2(u)
        y = lam * self.x
        B = np.exp(1j * np.outer(y + L, self.k)) / n
        B[np.abs(y) >= L] = 0.0
        v = (B @ uh @ B.T).real
        return lam * v


def build_grid(L: float, n: int) -> Grid2D:
    return Grid2D(float(L), int(n))


@functools.lru_cache(maxsize=32)
def _kernel_hat(grid: Grid2D, width: float) -> np.ndarray:
    # sample at periodic displacements, origin moved to index 0
    d = np.fft.ifftshift(grid.x)
    X, Y = np.meshgrid(d, d, indexing="ij")
    w = np.exp(-(X * X + Y * Y) / (2.0 * width * width))
    w /= np.sum(w) * grid.cell
    return np.fft.rfft2(w) * grid.cell


def save_field(path, grid: Grid2D, u: np.ndarray) -> None:
    """Write ``<path>.csv`` (x,y,value row-major) and ``<path>.json`` header."""
    path = Path(path)
    with open(path.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for i, xv in enumerate(grid.x):
            for j, yv in enumerate(grid.x):
                w.writerow([f"{xv:.17g}", f"{yv:.17g}", f"{u[i, j]:.17g}"])
    path.with_suffix(".json").write_text(json.dumps({"L": grid.L, "n": grid.n}) + "\n")


def load_field(path) -> tuple[Grid2D, np.ndarray]:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    grid = build_grid(header["L"], header["n"])
    data = np.loadtxt(path.with_suffix(".csv"), delimiter=",", skiprows=1)
    if data.shape != (grid.n * grid.n, 3):
        raise ValueError("field CSV does not match its header")
    return grid, data[:, 2].reshape(grid.n, grid.n)
