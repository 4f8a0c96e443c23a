"""Ground states and collapse asymptotics of two-component focusing NLS/Hartree functionals in 2D."""
from .functionals import (
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
from .gn_core import (
    GNConstants,
    RadialProfile,
    a_star,
    compute_gn_constants,
    lambda_coefficient,
    lambda_i,
    q0_on_grid,
    solve_gn_radial,
    theta_coefficient,
)
from .grid2d import Grid2D, Kernel, build_grid, load_field, save_field
from .minimizer import FlowReport, FlowSettings, ground_state, ground_state_rescaled, init_gaussian
from .sweeps import (
    PowerLawFit,
    ScanPoint,
    decay_fit,
    fit_power_law,
    hartree_vs_nls_gap,
    profile_distance,
    scan_regime_A,
    scan_regime_B,
    scan_regime_C,
)

__version__ = "0.1.0"
