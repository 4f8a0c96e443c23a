"""
From Hartree to NLS
===================

Replace the contact interactions by Gaussians of width s N^{-beta} and compare
the two energies on one fixed state. The gap is bounded by a multiple of
N^{-beta}; for even kernels the linear term cancels and the observed decay is
close to N^{-2 beta}.
"""

# %%
import numpy as np

from collapse_lab import ModelParams, build_grid, init_gaussian
from collapse_lab.sweeps import hartree_vs_nls_gap

grid = build_grid(6.0, 512)
state = init_gaussian(grid, (0.3, 0.0), (-0.3, 0.1), 1.0)
params = ModelParams(0.5, 3.0, 4.0, 2.0)
Ns = 2.0 ** np.arange(6, 15)

# %%
for s in (0.5, 1.0):
    fit, used, gaps = hartree_vs_nls_gap(params, state, Ns, grid, beta=0.2, width=s)
    print(f"s = {s}: exponent {fit.exponent:.4f} (bound -0.2, twice the bound -0.4), r^2 {fit.r_squared:.6f}")
    print("   gaps:", " ".join(f"{g:.2e}" for g in gaps))
