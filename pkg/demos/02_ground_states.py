"""
Two-component ground states
===========================

Normalized gradient flow for a trapped mixture: first the harmonic check with no
interactions, then an attractive and a repulsive coupling.
"""

# %%
import numpy as np

from collapse_lab import ModelParams, Trap, build_grid, ground_state, init_gaussian

grid = build_grid(8.0, 128)

# %%
# No interactions: each component is the oscillator Gaussian with energy 2
state, rep = ground_state(init_gaussian(grid, width=0.7), ModelParams(), grid)
print(f"harmonic: E = {rep.energy.total:.8f} in {rep.steps} steps, residual {rep.residual:.1e}")

# %%
# Attractive coupling pulls the components together and lowers the energy
attract = ModelParams(0.5, 4.0, 4.0, 3.0)
state, rep = ground_state(init_gaussian(grid), attract, grid)
print(f"attractive: E = {rep.energy.total:.6f}, peak {state.u1.max():.4f}, "
      f"u1 == u2 to {np.max(np.abs(state.u1 - state.u2)):.1e}")

# %%
# Repulsion with displaced traps separates them
repel = ModelParams(0.5, 4.0, 4.0, -3.0, Trap(2.0, (-1.0, 0.0)), Trap(2.0, (1.0, 0.0)))
state, rep = ground_state(init_gaussian(grid, (-1.0, 0.0), (1.0, 0.0)), repel, grid)
X, _ = grid.mesh()
centers = [grid.integrate(X * u * u) for u in state]
print(f"repulsive: E = {rep.energy.total:.6f}, x-centers {centers[0]:+.3f} {centers[1]:+.3f}")
print("energy breakdown:", {k: round(v, 5) for k, v in rep.energy.to_dict().items()})
