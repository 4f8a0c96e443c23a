"""
The Gagliardo-Nirenberg profile
===============================

Solve the radial ground-state equation by shooting, read off the critical
strength a* and the blow-up constants, then sample the normalized profile on a
periodic grid.
"""

# %%
# Shooting on [0, 20] with an 1e-8 tail tolerance
from collapse_lab import gn_core
from collapse_lab.grid2d import build_grid

profile = gn_core.solve_gn_radial(20.0, 1e-8)
consts = gn_core.compute_gn_constants(profile, (2.0, 4.0))
print(f"Q(0) = {profile.q_peak:.10f}  after {profile.shoot_iterations} bisection steps")
print(f"a*   = {consts.a_star:.10f}")

# %%
# The three norms coincide for the exact profile
a = consts.a_star
print(f"|grad Q|^2 / a*     = {consts.grad_sq / a:.8f}")
print(f"(1/2)|Q|_4^4 / a*   = {0.5 * consts.quartic / a:.8f}")

# %%
# Blow-up constants for harmonic (p=2) and quartic (p=4) traps
for p in (2.0, 4.0):
    print(f"p={p:g}: Lambda(nu=1) = {gn_core.lambda_coefficient(p, 1.0, consts):.6f}"
          f"  Lambda_i = {gn_core.lambda_i(p, consts):.6f}"
          f"  Theta(c=1/2) = {gn_core.theta_coefficient(p, 1.0, 0.5, 0.5, consts):.6f}")

# %%
# Q0 = Q / sqrt(a*) on a grid has unit mass
grid = build_grid(16.0, 256)
q0 = gn_core.q0_on_grid(grid)
print(f"mass of Q0 on the grid: {grid.mass(q0):.15f}")
