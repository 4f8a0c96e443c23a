"""
Collapse at the total threshold
===============================

Push a_N = c1 a1 + c2 a2 + 2 c1 c2 a12 towards a* with a fixed attractive a12.
Each point is solved in blow-up coordinates, where the minimizer stays O(1)
and approaches (Q0, Q0). The energy should follow C eps^{1/2}.
"""

# %%
from collapse_lab import ModelParams, build_grid, gn_core
from collapse_lab.sweeps import geometric_epsilons, predicted_law, scan_regime_A, summarize

grid = build_grid(16.0, 128)
base = ModelParams(0.5, a12=0.1 * gn_core.a_star())
points = scan_regime_A(base, geometric_epsilons(0.1), grid)

# %%
print(f"{'eps':>10} {'energy':>12} {'ell':>8} {'dist':>10} {'sym_gap':>10}")
for p in points:
    print(f"{p.epsilon:10.5f} {p.energy:12.8f} {p.ell1:8.4f} {max(p.dist1, p.dist2):10.2e} {p.sym_gap:10.1e}")

# %%
# Fit on the four smallest eps against the predicted law
summary = summarize(points, base, "A")
pred = predicted_law(base, "A")
fit = summary["fit_energy"]
print(f"exponent {fit['exponent']:.5f} (predicted {pred['exponent']})")
print(f"prefactor {fit['prefactor']:.5f} (predicted {pred['prefactor']:.5f})")
print("criteria:", summary["criteria"])
