"""Parameter sweeps toward the collapse thresholds and checks of the scaling laws.

Three regimes are covered:

* ``A``: total strength ``a_N = c1 a1 + c2 a2 + 2 c1 c2 a12`` approaches ``a*``
  with an attractive cross term,
* ``B``: the cross strength approaches ``alpha* = (a* - a1)/c2`` at fixed
  intra-species strengths,
* ``C``: each ``a_i`` approaches ``a*`` with a repulsive cross term and
  separated traps.

Each sweep point is solved from scratch in blow-up coordinates, so results
do not depend on the order in which points are run.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.ndimage import map_coordinates

from . import gn_core
from .functionals import Hartree, ModelParams, ModifiedHartree, energy
from .grid2d import Grid2D
from .minimizer import (
    FlowDiverged,
    FlowSettings,
    ground_state_rescaled,
    trap_nu,
)

__all__ = [
    "ScanPoint",
    "PowerLawFit",
    "DecayFit",
    "fit_power_law",
    "geometric_epsilons",
    "scan_regime_A",
    "scan_regime_B",
    "scan_regime_C",
    "profile_distance",
    "decay_fit",
    "hartree_vs_nls_gap",
    "summarize",
    "write_scan_csv",
    "worker_count",
]

DIST_TARGET = 0.05
RATE_TOL = 0.05
SANDWICH_SLACK = 1e-6
MONOTONE_SLACK = 1e-9
# r^2 below this marks a tail as not exponential
DECAY_R2_FLAG = 0.995


@dataclass
class ScanPoint:
    """One sweep sample; energies are in the original variables."""

    epsilon: float
    epsilon2: float = math.nan
    energy: float = math.nan
    ell1: float = math.nan
    ell2: float = math.nan
    dist1: float = math.nan
    dist2: float = math.nan
    sym_gap: float = math.nan
    comp1: float = math.nan
    comp2: float = math.nan
    reference: float = math.nan
    gap: float = math.nan
    steps: int = 0
    residual: float = math.nan
    converged: bool = False
    error: str = ""
    state: object = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return not self.error and math.isfinite(self.energy)


CSV_FIELDS = [f.name for f in fields(ScanPoint) if f.name != "state"]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    points_used: int

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "r2": self.r_squared, "points_used": self.points_used}


@dataclass(frozen=True)
class DecayFit:
    mu: float
    r_squared: float
    r_window: tuple[float, float]

    @property
    def flagged(self) -> bool:
        """True when the tail is not well described by ``exp(-mu r)``."""
        return self.r_squared < DECAY_R2_FLAG


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("COLLAPSE_LAB_THREADS", "1") or 1)
    return max(1, int(threads))


def geometric_epsilons(largest: float, count: int = 6, ratio: float = 0.5) -> list[float]:
    return [largest * ratio**k for k in range(count)]


# -- fitting ------------------------------------------------------------------

def fit_power_law(x, y) -> PowerLawFit:
    """Least-squares fit of ``log y = log C + k log x``.

    Non-positive samples are dropped with a warning; at least four must remain.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if not keep.all():
        warnings.warn(f"fit_power_law: dropped {int((~keep).sum())} non-positive samples", stacklevel=2)
    x, y = x[keep], y[keep]
    if len(x) < 4:
        raise ValueError(f"power-law fit needs at least 4 positive points, got {len(x)}")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = intercept + slope * lx
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum((ly - pred) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return PowerLawFit(float(slope), float(math.exp(intercept)), r2, int(len(x)))


# -- profile diagnostics ----------------------------------------------------------

def profile_distance(state, grid: Grid2D, centers=((0.0, 0.0), (0.0, 0.0))) -> tuple[float, float]:
    """L2 distances of the (already rescaled) components to ``Q0`` at ``centers``."""
    return tuple(
        grid.l2_distance(u, gn_core.q0_on_grid(grid, 1.0, c)) for u, c in zip(state, centers)
    )


def sym_gap(state, grid: Grid2D) -> float:
    return grid.l2_distance(state[0] ** 2, state[1] ** 2)


def decay_fit(field, grid: Grid2D, center=(0.0, 0.0), r_window=None, n_rays: int = 16,
              floor: float = 1e-12) -> DecayFit:
    """Exponential rate of a radial tail, ``field ~ exp(-mu r)``.

    Samples ``n_rays`` rays from ``center``; by default the window starts where the
    angular mean drops below 10% of the peak and stops at the noise ``floor`` or
    the box edge.
    """
    field = np.asarray(field, dtype=float)
    reach = grid.L - max(abs(center[0]), abs(center[1])) - grid.h
    r = np.arange(0.0, reach, grid.h / 2)
    theta = 2.0 * np.pi * np.arange(n_rays) / n_rays
    px = center[0] + np.outer(np.cos(theta), r)
    py = center[1] + np.outer(np.sin(theta), r)
    coords = np.stack([(px + grid.L) / grid.h, (py + grid.L) / grid.h])
    samples = map_coordinates(field, coords.reshape(2, -1), order=1, mode="grid-wrap").reshape(px.shape)
    mean = samples.mean(axis=0)
    peak = float(field.max())
    if r_window is None:
        inside = np.nonzero(mean < 0.1 * peak)[0]
        if len(inside) == 0:
            raise ValueError("field never drops below 10% of its peak")
        lo = r[inside[0]]
        above = np.nonzero((r >= lo) & (samples.min(axis=0) > floor))[0]
        hi = r[above[-1]] if len(above) else lo
        # stop before the first sample under the floor
        under = np.nonzero((r >= lo) & (samples.min(axis=0) <= floor))[0]
        if len(under):
            hi = min(hi, r[under[0]] - grid.h)
    else:
        lo, hi = r_window
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 5 or np.any(samples[:, sel] <= floor):
        raise ValueError("tail under floor: window too short above the noise floor")
    rr = np.tile(r[sel], n_rays)
    ly = np.log(samples[:, sel]).ravel()
    slope, intercept = np.polyfit(rr, ly, 1)
    pred = intercept + slope * rr
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), r2, (float(lo), float(hi)))


# -- sweeps -------------------------------------------------------------------

def _run_points(jobs, threads):
    n = worker_count(threads)
    if n == 1 or len(jobs) == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda job: job(), jobs))


def _solve_point(point: ScanPoint, params, grid, settings, regime, keep_state):
    try:
        state, frame, report = ground_state_rescaled(params, grid, settings, regime)
    except (FlowDiverged, ValueError, FloatingPointError) as exc:
        point.error = str(exc)
        return point, None
    br = report.energy
    point.energy = br.total
    point.ell1, point.ell2 = frame.scales
    point.dist1, point.dist2 = profile_distance(state, grid)
    point.sym_gap = sym_gap(state, grid)
    point.comp1, point.comp2 = br.component(1), br.component(2)
    point.steps, point.residual, point.converged = report.steps, report.residual, report.converged
    if not report.converged:
        point.error = "not converged"
    if keep_state:
        point.state = state
    return point, report


def symmetric_split(c1: float, a12: float, eps: float) -> tuple[float, float]:
    """``(a1, a2)`` with ``a_N = a* - eps`` and equal distances ``c_i (a* - c_j a12 - a_i)``."""
    a_star = gn_core.a_star()
    c2 = 1.0 - c1
    return a_star - c2 * a12 - eps / (2.0 * c1), a_star - c1 * a12 - eps / (2.0 * c2)


def scan_regime_A(base: ModelParams, epsilons, grid: Grid2D, settings: FlowSettings | None = None,
                  threads: int | None = None, keep_states: bool = False) -> list[ScanPoint]:
    """Sweep ``a_N -> a*`` at fixed attractive ``a12`` (symmetric split of a1, a2)."""
    a_star = gn_core.a_star()
    if not 0 < base.a12 < a_star * min(1.0 / base.c1, 1.0 / base.c2):
        raise ValueError("regime A needs 0 < a12 < a* min(1/c1, 1/c2)")
    jobs = []
    for eps in epsilons:
        if not 0 < eps < 0.3 * a_star:
            raise ValueError(f"epsilon {eps!r} outside (0, 0.3 a*)")
        a1, a2 = symmetric_split(base.c1, base.a12, eps)
        params = base.replace(a1=a1, a2=a2)
        jobs.append(lambda e=eps, p=params: _solve_point(ScanPoint(e), p, grid, settings, "A", keep_states)[0])
    return _run_points(jobs, threads)


def alpha_star(base: ModelParams) -> float:
    a_star = gn_core.a_star()
    lhs, rhs = base.c1 * (a_star - base.a1), base.c2 * (a_star - base.a2)
    if not math.isclose(lhs, rhs, rel_tol=1e-9):
        raise ValueError("regime B needs c1 (a* - a1) = c2 (a* - a2)")
    return (a_star - base.a1) / base.c2


def scan_regime_B(base: ModelParams, epsilons, grid: Grid2D, settings: FlowSettings | None = None,
                  threads: int | None = None, keep_states: bool = False) -> list[ScanPoint]:
    """Sweep ``a12 -> alpha*`` at fixed ``a1, a2``."""
    astar_12 = alpha_star(base)
    jobs = []
    for eps in epsilons:
        if not 0 < eps < astar_12:
            raise ValueError(f"epsilon {eps!r} outside (0, alpha*)")
        params = base.replace(a12=astar_12 - eps)
        jobs.append(lambda e=eps, p=params: _solve_point(ScanPoint(e), p, grid, settings, "B", keep_states)[0])
    return _run_points(jobs, threads)


def _regime_c_point(pair, base, grid, settings, keep_state):
    a_star = gn_core.a_star()
    e1, e2 = pair
    params = base.replace(a1=a_star - e1, a2=a_star - e2)
    point, _ = _solve_point(ScanPoint(e1, epsilon2=e2), params, grid, settings, "C", keep_state)
    if point.error:
        return point
    # with a12 = 0 the functional splits, so one flow yields both single-component minima
    ref = ScanPoint(e1, epsilon2=e2)
    ref, _ = _solve_point(ref, params.replace(a12=0.0), grid, settings, "C", False)
    if ref.error:
        point.error = f"reference: {ref.error}"
        return point
    point.reference = params.c1 * ref.comp1 + params.c2 * ref.comp2
    point.gap = point.energy - point.reference
    return point


def scan_regime_C(base: ModelParams, epsilon_pairs, grid: Grid2D, settings: FlowSettings | None = None,
                  threads: int | None = None, keep_states: bool = False) -> list[ScanPoint]:
    """Sweep ``a_i -> a*`` per component with repulsive ``a12`` and separated traps."""
    if not base.a12 < 0:
        raise ValueError("regime C needs a12 < 0")
    if base.trap1 is None or base.trap2 is None or tuple(base.trap1.center) == tuple(base.trap2.center):
        raise ValueError("regime C needs two traps with distinct centers")
    jobs = [lambda pr=tuple(pair): _regime_c_point(pr, base, grid, settings, keep_states)
            for pair in epsilon_pairs]
    return _run_points(jobs, threads)


# -- Hartree versus NLS ----------------------------------------------------------

def hartree_vs_nls_gap(params: ModelParams, state, N_list, grid: Grid2D, beta: float = 0.2,
                       width: float = 1.0, modified: bool = False):
    """``|E_Hartree - E_NLS|`` on one fixed state for each ``N``, with a power-law fit.

    Returns
    -------
    fit : PowerLawFit
    Ns, gaps : ndarray
        The particle numbers actually used and the corresponding gaps.
    """
    nls = energy(state, params.replace(mode=None), grid).total
    Ns, gaps = [], []
    for N in N_list:
        mode = ModifiedHartree(beta, N, width) if modified else Hartree(beta, N, width, width, width)
        try:
            e = energy(state, params.replace(mode=mode), grid).total
        except ValueError as exc:
            warnings.warn(f"hartree_vs_nls_gap: N list truncated at N={N}: {exc}", stacklevel=2)
            break
        Ns.append(float(N))
        gaps.append(abs(e - nls))
    fit = fit_power_law(Ns, gaps)
    return fit, np.asarray(Ns), np.asarray(gaps)


# -- summaries ---------------------------------------------------------------

def _within(value, target, tol=RATE_TOL):
    return bool(abs(value - target) <= tol * abs(target))


def _non_increasing(values, slack):
    v = list(values)
    return all(b <= a + slack for a, b in zip(v, v[1:]))


def _strictly_decreasing(values):
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def predicted_law(base: ModelParams, regime: str) -> dict:
    """Predicted exponent and prefactor of ``E ~ C eps^k``."""
    a_star = gn_core.a_star()
    regime = regime.upper()
    if regime == "C":
        out = {}
        for i, trap in ((1, base.trap1), (2, base.trap2)):
            lam = gn_core.lambda_i(trap.p, gn_core.constants_for((trap.p,)))
            out[f"component{i}"] = {"exponent": trap.p / (trap.p + 2.0),
                                    "prefactor": (trap.p + 2.0) / trap.p * lam**2 / a_star}
        return out
    p0, nu = trap_nu(base)
    consts = gn_core.constants_for((p0,))
    if regime == "A":
        pref = (p0 + 2.0) / p0 * gn_core.lambda_coefficient(p0, nu, consts) ** 2 / a_star
    else:
        theta = gn_core.theta_coefficient(p0, nu, base.c1, base.c2, consts)
        pref = 2.0 * base.c1 * base.c2 * (p0 + 2.0) / p0 * theta**2 / a_star
    return {"exponent": p0 / (p0 + 2.0), "prefactor": pref}


def summarize(points: list[ScanPoint], base: ModelParams, regime: str, grid: Grid2D | None = None,
              skip: int = 2) -> dict:
    """Fits and pass/fail criteria for a finished sweep.

    The ``skip`` largest epsilons are treated as pre-asymptotic and left out of fits.
    """
    regime = regime.upper()
    pred = predicted_law(base, regime)
    good = [p for p in points if p.ok]
    summary: dict = {"regime": regime, "predicted": pred, "points": len(points),
                     "failed_points": len(points) - len(good)}
    criteria: dict = {"all_points_converged": len(good) == len(points)}
    fit_pts = sorted(good, key=lambda p: -p.epsilon)[skip:]
    dists = [max(p.dist1, p.dist2) for p in good]
    try:
        if regime in ("A", "B"):
            fit = fit_power_law([p.epsilon for p in fit_pts], [p.energy for p in fit_pts])
            summary["fit_energy"] = fit.to_dict()
            criteria["energy_exponent"] = _within(fit.exponent, pred["exponent"])
            criteria["energy_prefactor"] = _within(fit.prefactor, pred["prefactor"])
            criteria["sym_gap_decreasing"] = _non_increasing([p.sym_gap for p in good], MONOTONE_SLACK)
            resid = [abs(p.energy / p.epsilon ** pred["exponent"] - pred["prefactor"]) for p in good]
            summary["prefactor_residuals"] = resid
        else:
            for i in (1, 2):
                key = f"component{i}"
                eps = [p.epsilon if i == 1 else p.epsilon2 for p in fit_pts]
                fit = fit_power_law(eps, [p.comp1 if i == 1 else p.comp2 for p in fit_pts])
                summary[f"fit_{key}"] = fit.to_dict()
                criteria[f"{key}_exponent"] = _within(fit.exponent, pred[key]["exponent"])
            gaps = [p.gap for p in good]
            summary["gaps"] = gaps
            criteria["gap_lower_sandwich"] = all(g >= -SANDWICH_SLACK for g in gaps)
            criteria["gap_bounded_by_first"] = bool(gaps) and all(g <= gaps[0] + MONOTONE_SLACK for g in gaps)
            criteria["gap_decreasing"] = _non_increasing(gaps, MONOTONE_SLACK)
            if grid is not None and good and good[-1].state is not None:
                fits = [decay_fit(u, grid) for u in good[-1].state]
                summary["decay"] = [{"mu": f.mu, "r2": f.r_squared} for f in fits]
                criteria["decay_exponential"] = all(f.mu > 0 and f.r_squared > 0.95 for f in fits)
        summary["fit_error"] = ""
    except ValueError as exc:
        summary["fit_error"] = str(exc)
        criteria["fit_possible"] = False
    criteria["energy_positive"] = all(p.energy > 0 for p in good)
    criteria["dist_small_at_smallest_eps"] = bool(dists) and dists[-1] < DIST_TARGET
    criteria["dist_decreasing"] = _strictly_decreasing(dists)
    summary["criteria"] = criteria
    summary["pass"] = all(criteria.values())
    return summary


def write_scan_csv(path, points: list[ScanPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for p in points:
            row = []
            for name in CSV_FIELDS:
                v = getattr(p, name)
                if isinstance(v, bool):
                    row.append(str(v).lower())
                elif isinstance(v, float):
                    row.append(f"{v:.17g}")
                else:
                    row.append(v)
            w.writerow(row)


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
