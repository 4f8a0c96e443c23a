"""
Inequality toolbox on random inputs
===================================

Randomized checks of the sharp interpolation inequality, the Cauchy-Schwarz
bound for smeared interactions and the Onsager-type lower bounds for point
configurations, plus an independent estimate of a* by direct minimization.
"""

# %%
from collapse_lab import build_grid, gn_core
from collapse_lab.inequality_checks import direct_gn_constant, gn_suite, interaction_suite, onsager_suite

grid = build_grid(8.0, 128)
for rep in (gn_suite(grid, 200), interaction_suite(grid, 200)):
    print(rep.to_json())

# %%
small = build_grid(4.0, 64)
for w in (0.5, 1.0, 2.0):
    print(onsager_suite(small, w, 1000).to_json())

# %%
estimate = direct_gn_constant(build_grid(16.0, 256))
a = gn_core.a_star()
print(f"direct minimization {estimate:.10f} vs shooting {a:.10f} (rel {abs(estimate - a) / a:.1e})")
