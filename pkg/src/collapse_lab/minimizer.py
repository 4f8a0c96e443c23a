"""Normalized gradient flow for two-component ground states.

The step is semi-implicit: the Laplacian is inverted in Fourier space while
traps and interactions are explicit.  Each step is followed by clamping to
non-negative values and exact renormalization of both masses.

Near-critical problems are solved in blow-up coordinates
(:func:`ground_state_rescaled`), where the minimizer stays O(1) in size.
There the only slow direction left is a global dilation, so the flow is
interleaved with an exact line search over dilations.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import gn_core
from .functionals import (
    IDENTITY,
    BlowUpFrame,
    EnergyBreakdown,
    ModelParams,
    TwoComponentState,
    _model,
    _projected_norm,
)
from .grid2d import Grid2D

__all__ = [
    "FlowSettings",
    "FlowReport",
    "FlowDiverged",
    "init_gaussian",
    "ground_state",
    "ground_state_rescaled",
    "regime_frame",
    "trap_nu",
    "save_trace_csv",
]

DT_FLOOR = 1e-5
CHECK_EVERY = 10
MAX_TRACE_ROWS = 10_000


class FlowDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class FlowSettings:
    """Stopping rules and step control for the flow.

    Parameters
    ----------
    dt : float
        Initial step; halved on every rejected step down to ``1e-5``.
    dilation_every : int
        Steps between dilation line searches; 0 disables them.
    """

    dt: float = 1e-2
    max_steps: int = 200_000
    energy_tol: float = 1e-10
    residual_tol: float = 1e-6
    seed: int = 0
    dilation_every: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.energy_tol > 0 and self.residual_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class FlowReport:
    steps: int
    energy: EnergyBreakdown
    residual: float
    converged: bool
    dt: float
    rejected: int = 0
    dilations: int = 0
    trace: list = field(default_factory=list, repr=False)

    def trace_array(self) -> np.ndarray:
        """Trace as an ``(m, 3)`` array of (step, energy, residual), m <= 10^4."""
        arr = np.asarray(self.trace, dtype=float).reshape(-1, 3)
        if len(arr) > MAX_TRACE_ROWS:
            idx = np.unique(np.linspace(0, len(arr) - 1, MAX_TRACE_ROWS).round().astype(int))
            arr = arr[idx]
        return arr


def save_trace_csv(path, report: FlowReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "energy", "residual"])
        for step, e, r in report.trace_array():
            w.writerow([int(step), f"{e:.17g}", f"{r:.17g}"])


def init_gaussian(
    grid: Grid2D,
    center1=(0.0, 0.0),
    center2=(0.0, 0.0),
    width: float = 1.0,
    seed: int | None = None,
    jitter: float = 0.0,
) -> TwoComponentState:
    """Two normalized Gaussians ``exp(-|x - c|^2 / 2 width^2)``.

    With ``jitter > 0`` each component gets a multiplicative perturbation
    ``1 + jitter * noise`` drawn from ``default_rng(seed)``.
    """
    if width < 2.0 * grid.h:
        raise ValueError("Gaussian width not resolved by the grid")
    X, Y = grid.mesh()
    rng = np.random.default_rng(seed)
    out = []
    for c in (center1, center2):
        u = np.exp(-((X - c[0]) ** 2 + (Y - c[1]) ** 2) / (2.0 * width * width))
        if jitter > 0:
            u = np.clip(u * (1.0 + jitter * rng.standard_normal(u.shape)), 0.0, None)
        out.append(grid.normalize(u))
    return TwoComponentState(*out)


class _Flow:
    def __init__(self, params, grid, frame, settings):
        self.model = _model(params, grid, frame)
        self.grid, self.settings = grid, settings
        self.weights = self.model.weights()
        self.evals = 0

    def evaluate(self, state):
        self.evals += 1
        hats = tuple(np.fft.rfft2(u) for u in state)
        br, aux = self.model.evaluate(*state, hats=hats)
        return br, aux, hats

    def step(self, state, aux, hats, dt):
        g = self.grid
        new = []
        for i, u in enumerate(state):
            pot = self.model.potential_part(i, u, aux) / self.weights[i]
            # explicit multiplier term makes every fixed point an exact critical point
            two_mu = 2.0 * g.kinetic_energy(u, hats[i]) + g.inner(u, pot)
            rhs = hats[i] - dt * np.fft.rfft2(pot - two_mu * u)
            v = np.fft.irfft2(rhs / (1.0 + 2.0 * dt * g.k2_half), s=u.shape)
            np.clip(v, 0.0, None, out=v)
            new.append(g.normalize(v))
        return TwoComponentState(*new)

    def residual(self, state, aux):
        grads = self.model.full_gradient(state, aux)
        return _projected_norm(self.grid, state, grads, self.model)

    def dilate(self, state, lams):
        g = self.grid
        return TwoComponentState(*(g.normalize(np.clip(g.dilate(u, lam), 0.0, None)) for u, lam in zip(state, lams)))

    def dilation_search(self, state, energy):
        """Best joint, then per-component, dilation; returns improved (state, energy) or None.

        Shared frames use the joint dilation only, which keeps symmetric pairs symmetric.
        """
        improved = None
        modes = ((0, 1),) if self.model.frame.shared else ((0, 1), (0,), (1,))
        for which in modes:
            mask = np.array([i in which for i in range(2)])

            def f(log_lam, base=state, mask=mask):
                return self.evaluate(self.dilate(base, np.where(mask, math.exp(log_lam), 1.0)))[0].total

            res = minimize_scalar(f, bounds=(-0.5, 0.5), method="bounded", options={"xatol": 1e-6})
            if res.fun < energy - 1e-15 * abs(energy):
                state = self.dilate(state, np.where(mask, math.exp(res.x), 1.0))
                energy = res.fun
                improved = (state, energy)
        return improved


def ground_state(
    initial,
    params: ModelParams,
    grid: Grid2D,
    settings: FlowSettings | None = None,
    frame: BlowUpFrame = IDENTITY,
):
    """Minimize the energy over unit-mass non-negative pairs.

    Parameters
    ----------
    initial : TwoComponentState
        Starting pair; renormalized before use.
    frame : BlowUpFrame, optional
        Coordinates in which ``initial`` and the result are expressed.

    Returns
    -------
    (TwoComponentState, FlowReport)
    """
    violation = params.existence_violation(gn_core.a_star())
    if violation is not None:
        raise ValueError(f"parameters outside the existence region: {violation}")
    settings = settings or FlowSettings()
    flow = _Flow(params, grid, frame, settings)
    state = TwoComponentState(*(grid.normalize(np.clip(u, 0.0, None)) for u in initial))
    br, aux, hats = flow.evaluate(state)
    dt = settings.dt
    residual = flow.residual(state, aux)
    trace = [(0, br.total, residual)]
    rejected = dilations = 0
    bad_streak = 0
    converged = False
    last_rel = math.inf
    step = 0
    while step < settings.max_steps:
        new = flow.step(state, aux, hats, dt)
        nbr, naux, nhats = flow.evaluate(new)
        if not math.isfinite(nbr.total):
            raise FlowDiverged("flow diverged: reduce dt (non-finite energy)")
        if nbr.total > br.total + 1e-14 * abs(br.total):
            rejected += 1
            if dt > DT_FLOOR:
                dt = max(0.5 * dt, DT_FLOOR)
                continue
            # already at the floor: accept and count towards divergence
            bad_streak += 1
            if bad_streak >= 100:
                raise FlowDiverged("flow diverged: reduce dt")
        else:
            bad_streak = 0
        step += 1
        last_rel = (br.total - nbr.total) / max(abs(nbr.total), 1e-300)
        state, br, aux, hats = new, nbr, naux, nhats

        if settings.dilation_every and step % settings.dilation_every == 0:
            found = flow.dilation_search(state, br.total)
            if found is not None:
                dilations += 1
                state = found[0]
                br, aux, hats = flow.evaluate(state)

        if step % CHECK_EVERY == 0 or step == settings.max_steps:
            residual = flow.residual(state, aux)
            trace.append((step, br.total, residual))
            if 0 <= last_rel < settings.energy_tol and residual < settings.residual_tol:
                converged = True
                break

    residual = flow.residual(state, aux)
    if trace[-1][0] != step:
        trace.append((step, br.total, residual))
    report = FlowReport(step, br, residual, converged, dt, rejected, dilations, trace)
    return state, report


def trap_nu(params: ModelParams) -> tuple[float, float]:
    """Smallest trap exponent ``p0`` and the limit ``nu`` of ``(c1V1 + c2V2)/|x|^p0``."""
    traps = [t for t in params.traps if t is not None]
    if not traps:
        raise ValueError("blow-up scales need at least one trap")
    p0 = min(t.p for t in traps)
    nu = sum(c for c, t in zip((params.c1, params.c2), params.traps) if t is not None and t.p == p0)
    return p0, nu


def regime_frame(params: ModelParams, regime: str) -> tuple[BlowUpFrame, tuple[float, ...]]:
    """Blow-up frame and distance(s) to threshold for ``regime`` in {'A', 'B', 'C'}."""
    a_star = gn_core.a_star()
    regime = regime.upper()
    if regime in ("A", "B"):
        p0, nu = trap_nu(params)
        consts = gn_core.constants_for((p0,))
        if regime == "A":
            eps = a_star - params.a_N
            coef = gn_core.lambda_coefficient(p0, nu, consts)
        else:
            alpha_star = (a_star - params.a1) / params.c2
            eps = alpha_star - params.a12
            coef = gn_core.theta_coefficient(p0, nu, params.c1, params.c2, consts)
        if not eps > 0:
            raise ValueError(f"regime {regime} needs a positive distance to threshold, got {eps!r}")
        ell = coef * eps ** (-1.0 / (p0 + 2.0))
        center = next(t.center for t in params.traps if t is not None and t.p == p0)
        center = (float(center[0]), float(center[1]))
        return BlowUpFrame((ell, ell), (center, center)), (eps,)
    if regime == "C":
        if params.trap1 is None or params.trap2 is None:
            raise ValueError("regime C needs both traps")
        scales, centers, eps = [], [], []
        for a_i, trap in ((params.a1, params.trap1), (params.a2, params.trap2)):
            e = a_star - a_i
            if not e > 0:
                raise ValueError("regime C needs a_i < a*")
            consts = gn_core.constants_for((trap.p,))
            scales.append(gn_core.lambda_i(trap.p, consts) * e ** (-1.0 / (trap.p + 2.0)))
            centers.append((float(trap.center[0]), float(trap.center[1])))
            eps.append(e)
        return BlowUpFrame(tuple(scales), tuple(centers)), tuple(eps)
    raise ValueError(f"unknown regime {regime!r}")


def ground_state_rescaled(
    params: ModelParams,
    grid: Grid2D,
    settings: FlowSettings | None = None,
    regime: str = "A",
    initial=None,
):
    """Ground state in blow-up coordinates.

    Returns
    -------
    state : TwoComponentState
        Minimizer in rescaled coordinates; close to ``(Q0, Q0)`` near threshold.
    frame : BlowUpFrame
        The scales ``ell`` and centers used.
    report : FlowReport
        Energies are in the original variables.
    """
    frame, _ = regime_frame(params, regime)
    if initial is None:
        initial = init_gaussian(grid, width=1.0, seed=(settings or FlowSettings()).seed)
    state, report = ground_state(initial, params, grid, settings, frame)
    return state, frame, report
