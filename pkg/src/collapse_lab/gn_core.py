"""Radial Gagliardo-Nirenberg ground state and the blow-up constants built on it.

The profile ``Q`` is the positive radial solution of ``-Q'' - Q'/r + Q - Q**3 = 0``
decaying at infinity.  It is found by shooting on ``Q(0)`` with a fixed-step RK4
integrator; the exponentially small tail past the point where double precision
stops tracking the separatrix is replaced by the linear asymptote ``C K0(r)``.
"""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import k0, k1

__all__ = [
    "RadialProfile",
    "GNConstants",
    "ShootingError",
    "solve_gn_radial",
    "compute_gn_constants",
    "lambda_coefficient",
    "theta_coefficient",
    "lambda_i",
    "q0_on_grid",
    "reference",
    "save_profile_csv",
    "save_constants_json",
]

N_STEPS = 40000
BRACKET = (0.1, 10.0)
# relative disagreement between the two bracketing trajectories that still counts as "same"
MATCH_RTOL = 1e-8


class ShootingError(RuntimeError):
    """Raised when the shooting method cannot bracket or converge."""


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial GN profile on a uniform grid ``0 = r_0 < ... < r_M = r_max``."""

    r_nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    q_peak: float
    r_max: float
    shoot_iterations: int
    tail_coef: float
    match_radius: float
    max_residual: float

    def __call__(self, r):
        """Evaluate Q at arbitrary radii (PCHIP inside, K0 tail beyond ``r_max``)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r <= self.r_max
        out[inside] = self._interp(r[inside])
        if np.any(~inside):
            out[~inside] = self.tail_coef * k0(r[~inside])
        return out

    @functools.cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.r_nodes, self.values)


@dataclass(frozen=True)
class GNConstants:
    a_star: float
    grad_sq: float
    quartic: float
    moments: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "grad_sq": self.grad_sq,
            "quartic": self.quartic,
            "moments": {_pkey(p): v for p, v in sorted(self.moments.items())},
        }

    def moment(self, p: float) -> float:
        try:
            return self.moments[float(p)]
        except KeyError:
            raise KeyError(f"moment not computed: p={p}") from None


def _pkey(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def _shoot(q0: float, h: float, n_steps: int, full: bool):
    """Integrate from r=0.  Returns (verdict, r_stop, Q, P).

    verdict is +1 if Q crosses zero (q0 too large), -1 if Q turns upward
    (q0 too small), 0 if the whole interval was traversed without either.
    """
    q, p = q0, 0.0
    qs = [q] if full else None
    ps = [p] if full else None
    for j in range(n_steps):
        r = j * h
        # RK4 on (Q, P=Q'); the r=0 stage uses P/r -> Q''(0) = (Q - Q^3)/2
        if j == 0:
            a_p = (q - q * q * q) * 0.5
        else:
            a_p = q - q * q * q - p / r
        a_q = p
        rh = r + 0.5 * h
        q2 = q + 0.5 * h * a_q
        p2 = p + 0.5 * h * a_p
        b_q = p2
        b_p = q2 - q2 * q2 * q2 - p2 / rh
        q3 = q + 0.5 * h * b_q
        p3 = p + 0.5 * h * b_p
        c_q = p3
        c_p = q3 - q3 * q3 * q3 - p3 / rh
        r4 = r + h
        q4 = q + h * c_q
        p4 = p + h * c_p
        d_q = p4
        d_p = q4 - q4 * q4 * q4 - p4 / r4
        q += h * (a_q + 2.0 * b_q + 2.0 * c_q + d_q) / 6.0
        p += h * (a_p + 2.0 * b_p + 2.0 * c_p + d_p) / 6.0
        if full:
            qs.append(q)
            ps.append(p)
        if q < 0.0:
            return 1, r4, qs, ps
        if p > 0.0:
            return -1, r4, qs, ps
    return 0, n_steps * h, qs, ps


def _residual(r: np.ndarray, q: np.ndarray, p: np.ndarray, h: float) -> np.ndarray:
    """Pointwise ODE residual, Q'' from 4th-order central differences of Q'."""
    # odd extension of Q' about r=0
    pe = np.concatenate([-p[2:0:-1], p, [np.nan, np.nan]])
    d2 = (-pe[4:] + 8.0 * pe[3:-1] - 8.0 * pe[1:-3] + pe[:-4]) / (12.0 * h)
    safe_r = np.where(r > 0, r, 1.0)
    drift = np.where(r > 0, p / safe_r, d2)
    return -d2 - drift + q - q**3


@functools.lru_cache(maxsize=8)
def solve_gn_radial(r_max: float = 20.0, tol: float = 1e-8) -> RadialProfile:
    """Solve the radial GN equation by bisection shooting on ``Q(0)``.

    The bracket is refined until it can no longer be split in double precision;
    ``tol`` bounds the accepted discrete residual (``< 100 * tol``).
    """
    if r_max < 15:
        raise ValueError("r_max must be >= 15")
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    h = r_max / N_STEPS
    lo, hi = BRACKET
    v_lo = _shoot(lo, h, N_STEPS, False)[0]
    v_hi = _shoot(hi, h, N_STEPS, False)[0]
    if not (v_lo == -1 and v_hi == 1):
        raise ShootingError(f"no bracket in [{lo}, {hi}]")

    iterations = 0
    while iterations < 200:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        iterations += 1
        verdict = _shoot(mid, h, N_STEPS, False)[0]
        if verdict == 1:
            hi = mid
        elif verdict == -1:
            lo = mid
        else:  # traversed the full interval: as good as it gets
            lo = hi = mid
            break

    _, _, q_lo, p_lo = _shoot(lo, h, N_STEPS, True)
    _, _, q_hi, p_hi = _shoot(hi, h, N_STEPS, True)
    m = min(len(q_lo), len(q_hi))
    q_lo, q_hi = np.asarray(q_lo[:m]), np.asarray(q_hi[:m])
    p_lo, p_hi = np.asarray(p_lo[:m]), np.asarray(p_hi[:m])
    q_avg = 0.5 * (q_lo + q_hi)
    p_avg = 0.5 * (p_lo + p_hi)
    apart = np.abs(q_hi - q_lo) > MATCH_RTOL * np.abs(q_avg)
    first_bad = int(np.argmax(apart)) if apart.any() else m - 1
    # stay a few nodes clear of the split, and keep the 4th-order stencil valid
    j_m = max(first_bad - 4, 8)

    r = np.linspace(0.0, r_max, N_STEPS + 1)
    values = np.empty_like(r)
    derivs = np.empty_like(r)
    values[: j_m + 1] = q_avg[: j_m + 1]
    derivs[: j_m + 1] = p_avg[: j_m + 1]
    r_m = r[j_m]
    coef = values[j_m] / k0(r_m)
    tail = r[j_m + 1 :]
    values[j_m + 1 :] = coef * k0(tail)
    derivs[j_m + 1 :] = -coef * k1(tail)

    res = _residual(r, values, derivs, h)
    max_res = float(np.nanmax(np.abs(res)))
    if not max_res < 100.0 * tol:
        raise ShootingError(f"non-converged: residual {max_res:.3e} exceeds {100 * tol:.1e}")

    return RadialProfile(
        r_nodes=r,
        values=values,
        derivs=derivs,
        q_peak=float(values[0]),
        r_max=float(r_max),
        shoot_iterations=iterations,
        tail_coef=float(coef),
        match_radius=float(r_m),
        max_residual=max_res,
    )


def _trapz(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def compute_gn_constants(profile: RadialProfile, p_list=(2,)) -> GNConstants:
    """Radial trapezoid quadrature of the GN norms and the moments ``int |x|^p Q^2``."""
    r, q, dq = profile.r_nodes, profile.values, profile.derivs
    two_pi = 2.0 * math.pi
    moments = {}
    for p in p_list:
        if not p > 0:
            raise ValueError(f"moment exponent must be positive, got {p}")
        moments[float(p)] = two_pi * _trapz(r ** (p + 1) * q * q, r)
    return GNConstants(
        a_star=two_pi * _trapz(q * q * r, r),
        grad_sq=two_pi * _trapz(dq * dq * r, r),
        quartic=two_pi * _trapz(q**4 * r, r),
        moments=moments,
    )


def lambda_coefficient(p0: float, nu: float, constants: GNConstants) -> float:
    """Blow-up length constant ``(p0 nu / 2 * int |x|^p0 Q^2)^(1/(p0+2))``."""
    if not (p0 > 0 and nu > 0):
        raise ValueError("p0 and nu must be positive")
    m = constants.moment(p0)
    return (p0 * nu / 2.0 * m) ** (1.0 / (p0 + 2.0))


def theta_coefficient(p0: float, nu: float, c1: float, c2: float, constants: GNConstants) -> float:
    """Blow-up length constant for the cross-coupling collapse."""
    if not (0 < c1 < 1 and 0 < c2 < 1 and abs(c1 + c2 - 1.0) < 1e-12):
        raise ValueError("need c1, c2 in (0, 1) with c1 + c2 = 1")
    if not (p0 > 0 and nu > 0):
        raise ValueError("p0 and nu must be positive")
    m = constants.moment(p0)
    return (p0 * nu / (4.0 * c1 * c2) * m) ** (1.0 / (p0 + 2.0))


def lambda_i(p_i: float, constants: GNConstants) -> float:
    """Single-component blow-up constant ``(p/2 * int |x|^p Q^2)^(1/(p+2))``."""
    return lambda_coefficient(p_i, 1.0, constants)


@functools.lru_cache(maxsize=1)
def reference() -> tuple[RadialProfile, GNConstants]:
    """Default profile (r_max=20, tol=1e-8) and constants with moments for p=1..6."""
    prof = solve_gn_radial(20.0, 1e-8)
    return prof, compute_gn_constants(prof, (1, 2, 3, 4, 5, 6))


def a_star() -> float:
    return reference()[1].a_star


def constants_for(p_values) -> GNConstants:
    """Reference constants, extended with any extra moment exponents needed."""
    prof, consts = reference()
    missing = [p for p in p_values if float(p) not in consts.moments]
    if not missing:
        return consts
    extra = compute_gn_constants(prof, missing).moments
    return GNConstants(consts.a_star, consts.grad_sq, consts.quartic, {**consts.moments, **extra})


def q0_on_grid(grid, scale: float = 1.0, center=(0.0, 0.0), profile: RadialProfile | None = None):
    """Sample ``a*^{-1/2} l Q(l |x - center|)`` on ``grid``, renormalized to unit mass."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    if profile is None:
        profile = reference()[0]
    X, Y = grid.mesh()
    rad = scale * np.hypot(X - center[0], Y - center[1])
    if rad.max() > profile.r_max and not profile.values[-1] < 1e-8:
        raise ValueError("profile does not cover grid")
    field = scale * profile(rad)
    return grid.normalize(field)


def save_profile_csv(profile: RadialProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "Q"])
        for r, q in zip(profile.r_nodes, profile.values):
            w.writerow([f"{r:.17g}", f"{q:.17g}"])


def save_constants_json(constants: GNConstants, path) -> None:
    Path(path).write_text(json.dumps(constants.to_dict(), indent=2) + "\n")
