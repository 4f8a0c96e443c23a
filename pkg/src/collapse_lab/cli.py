"""Command-line driver: ``collapse-lab <command> [--config FILE] [--key value ...]``.

Configuration is a flat ``key = value`` file with ``#`` comments; command-line
flags override file values.  Every run writes ``resolved.config`` and
``summary.json`` into ``--out``.

Exit codes: 0 all criteria pass, 1 some criterion fails, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import gn_core
from .functionals import ModelParams, Trap, energy
from .grid2d import build_grid, save_field
from .inequality_checks import gn_suite, interaction_suite, onsager_suite
from .minimizer import (
    FlowDiverged,
    FlowSettings,
    ground_state,
    init_gaussian,
    save_trace_csv,
)
from .sweeps import (
    alpha_star,
    geometric_epsilons,
    hartree_vs_nls_gap,
    scan_regime_A,
    scan_regime_B,
    scan_regime_C,
    summarize,
    symmetric_split,
    write_scan_csv,
    write_summary_json,
)

COMMANDS = ("gn", "minimize", "scan-a", "scan-b", "scan-c", "check", "hartree-gap")


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


# key -> (parser, default); a default of None means "derived from the command"
KEYS = {
    "command": (str, None),
    "L": (float, 16.0),
    "n": (int, 256),
    "c1": (float, 0.5),
    "a1": (float, None),
    "a2": (float, None),
    "a12": (float, None),
    "p1": (float, 2.0),
    "p2": (float, 2.0),
    "z1x": (float, None),
    "z1y": (float, 0.0),
    "z2x": (float, None),
    "z2y": (float, 0.0),
    "dt": (float, 1e-2),
    "max_steps": (int, 200_000),
    "energy_tol": (float, 1e-10),
    "residual_tol": (float, 1e-6),
    "dilation_every": (int, 50),
    "seed": (int, 0),
    "eps_max": (float, None),
    "eps_count": (int, 6),
    "eps_ratio": (float, 0.5),
    "epsilons": (_float_list, None),
    "fit_skip": (int, 2),
    "r_max": (float, 20.0),
    "gn_tol": (float, 1e-8),
    "moments": (_float_list, [1.0, 2.0, 3.0, 4.0]),
    "trials": (int, 200),
    "onsager_trials": (int, 1000),
    "onsager_widths": (_float_list, [0.5, 1.0, 2.0]),
    "beta": (float, 0.2),
    "widths": (_float_list, [0.5, 1.0]),
    "log2_n_min": (int, 6),
    "log2_n_max": (int, 14),
    "threads": (int, None),
}

# per-command grid defaults where the generic (16, 256) is not appropriate
GRID_DEFAULTS = {"check": (8.0, 128), "hartree-gap": (6.0, 512), "minimize": (8.0, 128)}


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def _convert(key: str, value):
    if key not in KEYS:
        raise ConfigError(f"unknown key: {key}")
    if not isinstance(value, str):
        return value
    parser = KEYS[key][0]
    try:
        out = parser(value)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {value!r}") from None
    if isinstance(out, float) and not math.isfinite(out):
        raise ConfigError(f"invalid value for {key}: {value!r}")
    return out


def resolve(raw: dict) -> dict:
    """Typed configuration with command-dependent defaults filled in."""
    cfg = {k: _convert(k, v) for k, v in raw.items()}
    cmd = cfg.get("command")
    if cmd is None:
        raise ConfigError("missing command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command: {cmd}")
    for key, (_, default) in KEYS.items():
        cfg.setdefault(key, default)
    if cmd in GRID_DEFAULTS:
        L, n = GRID_DEFAULTS[cmd]
        cfg["L"] = cfg["L"] if "L" in raw else L
        cfg["n"] = cfg["n"] if "n" in raw else n
    a_star = gn_core.a_star()
    derived = {
        "scan-a": {"a12": 0.1 * a_star, "z1x": 0.0, "z2x": 0.0, "eps_max": 0.1},
        "scan-b": {"a1": 0.8 * a_star, "a2": 0.8 * a_star, "z1x": 0.0, "z2x": 0.0},
        "scan-c": {"a12": -0.5, "z1x": -1.5, "z2x": 1.5, "eps_max": 0.1 * a_star},
        "hartree-gap": {"a1": 3.0, "a2": 4.0, "a12": 2.0},
    }.get(cmd, {})
    for key, value in derived.items():
        if cfg.get(key) is None:
            cfg[key] = value
    for key in ("a1", "a2", "a12"):
        if cfg[key] is None:
            cfg[key] = 0.0
    for key in ("z1x", "z2x"):
        if cfg[key] is None:
            cfg[key] = 0.0
    if cmd == "scan-b" and cfg["eps_max"] is None:
        cfg["eps_max"] = 0.1 * (a_star - cfg["a1"]) / (1.0 - cfg["c1"])
    if cfg["threads"] is None:
        cfg["threads"] = int(os.environ.get("COLLAPSE_LAB_THREADS", "1") or 1)
    return cfg


def model_params(cfg: dict) -> ModelParams:
    try:
        return ModelParams(
            cfg["c1"], cfg["a1"], cfg["a2"], cfg["a12"],
            Trap(cfg["p1"], (cfg["z1x"], cfg["z1y"])), Trap(cfg["p2"], (cfg["z2x"], cfg["z2y"])),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def flow_settings(cfg: dict) -> FlowSettings:
    try:
        return FlowSettings(cfg["dt"], cfg["max_steps"], cfg["energy_tol"], cfg["residual_tol"],
                            cfg["seed"], cfg["dilation_every"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _grid(cfg):
    try:
        return build_grid(cfg["L"], cfg["n"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _epsilons(cfg):
    if cfg["epsilons"]:
        return list(cfg["epsilons"])
    return geometric_epsilons(cfg["eps_max"], cfg["eps_count"], cfg["eps_ratio"])


def _format_value(v) -> str:
    if isinstance(v, list):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_resolved(out: Path, cfg: dict) -> None:
    lines = [f"{k} = {_format_value(cfg[k])}" for k in KEYS if cfg.get(k) is not None]
    (out / "resolved.config").write_text("\n".join(lines) + "\n")


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class NumericFailure(RuntimeError):
    pass


# -- commands -------------------------------------------------------------------

def run_gn(cfg, out):
    try:
        profile = gn_core.solve_gn_radial(cfg["r_max"], cfg["gn_tol"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    except gn_core.ShootingError as exc:
        raise NumericFailure(str(exc)) from None
    consts = gn_core.compute_gn_constants(profile, tuple(cfg["moments"]))
    gn_core.save_profile_csv(profile, out / "gn_profile.csv")
    gn_core.save_constants_json(consts, out / "gn_constants.json")
    a = consts.a_star
    return {
        "gradient_identity": abs(consts.grad_sq - a) / a < 1e-3,
        "quartic_identity": abs(0.5 * consts.quartic - a) / a < 1e-3,
        "tail_below_1e-8": bool(profile.values[-1] < 1e-8),
    }, {"a_star": a, "q_peak": profile.q_peak}


def run_minimize(cfg, out):
    params = model_params(cfg)
    violation = params.existence_violation(gn_core.a_star())
    if violation:
        raise ConfigError(f"existence condition violated: {violation}")
    grid = _grid(cfg)
    settings = flow_settings(cfg)
    init = init_gaussian(grid, (cfg["z1x"], cfg["z1y"]), (cfg["z2x"], cfg["z2y"]), 1.0)
    try:
        state, report = ground_state(init, params, grid, settings)
    except FlowDiverged as exc:
        raise NumericFailure(str(exc)) from None
    save_field(out / "u1", grid, state.u1)
    save_field(out / "u2", grid, state.u2)
    save_trace_csv(out / "trace.csv", report)
    _dump(out / "energy.json", report.energy.to_dict())
    return {"converged": report.converged}, {
        "energy": report.energy.total, "residual": report.residual, "steps": report.steps}


def _scan(cfg, out, regime):
    base = model_params(cfg)
    grid = _grid(cfg)
    settings = flow_settings(cfg)
    eps = _epsilons(cfg)
    a_star = gn_core.a_star()
    try:
        if regime == "A":
            for e in eps:
                a1, a2 = symmetric_split(base.c1, base.a12, e)
                _require(base.replace(a1=a1, a2=a2), a_star)
            run = lambda: scan_regime_A(base, eps, grid, settings, cfg["threads"])
        elif regime == "B":
            astar_12 = alpha_star(base)
            for e in eps:
                _require(base.replace(a12=astar_12 - e), a_star)
            run = lambda: scan_regime_B(base, eps, grid, settings, cfg["threads"])
        else:
            pairs = [(e, e) for e in eps]
            for e in eps:
                _require(base.replace(a1=a_star - e, a2=a_star - e), a_star)
            run = lambda: scan_regime_C(base, pairs, grid, settings, cfg["threads"], keep_states=True)
        points = run()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_scan_csv(out / "scan.csv", points)
    summary = summarize(points, base, regime, grid, skip=cfg["fit_skip"])
    write_summary_json(out / "fit.json", summary)
    failures = [p.error for p in points if p.error and p.error != "not converged"]
    if failures:
        raise NumericFailure(failures[0])
    return summary["criteria"], {"fit_error": summary.get("fit_error", "")}


def _require(params, a_star):
    violation = params.existence_violation(a_star)
    if violation:
        raise ValueError(f"existence condition violated: {violation}")


def run_check(cfg, out):
    grid = _grid(cfg)
    seed, threads = cfg["seed"], cfg["threads"]
    reports = [gn_suite(grid, cfg["trials"], seed, threads),
               interaction_suite(grid, cfg["trials"], seed, threads)]
    onsager_grid = build_grid(4.0, 64)
    reports += [onsager_suite(onsager_grid, w, cfg["onsager_trials"], seed, threads=threads)
                for w in cfg["onsager_widths"]]
    _dump(out / "checks.json", [r.to_dict() for r in reports])
    return {r.check_name: r.violations == 0 for r in reports}, {}


def run_hartree_gap(cfg, out):
    params = model_params(cfg)
    grid = _grid(cfg)
    state = init_gaussian(grid, (0.3, 0.0), (-0.3, 0.1), 1.0)
    Ns = [2.0**k for k in range(cfg["log2_n_min"], cfg["log2_n_max"] + 1)]
    beta = cfg["beta"]
    if not 0 < beta < 1:
        raise ConfigError("beta must lie in (0, 1)")
    fits, rows = {}, []
    for s in cfg["widths"]:
        fit, used, gaps = hartree_vs_nls_gap(params, state, Ns, grid, beta=beta, width=s)
        fits[repr(float(s))] = fit.to_dict()
        rows += [(s, N, g) for N, g in zip(used, gaps)]
    with open(out / "gap.csv", "w") as fh:
        fh.write("width,N,gap\n")
        for s, N, g in rows:
            fh.write(f"{s:.17g},{N:.17g},{g:.17g}\n")
    _dump(out / "fit.json", {"beta": beta, "predicted_exponent": -beta, "fits": fits})
    exps = [f["exponent"] for f in fits.values()]
    criteria = {"exponent_within_15pct": all(abs(e + beta) <= 0.15 * beta for e in exps)}
    if len(exps) > 1:
        criteria["width_insensitive_10pct"] = (max(exps) - min(exps)) <= 0.1 * max(abs(e) for e in exps)
    return criteria, {"exponents": exps}


RUNNERS = {
    "gn": run_gn,
    "minimize": run_minimize,
    "scan-a": lambda c, o: _scan(c, o, "A"),
    "scan-b": lambda c, o: _scan(c, o, "B"),
    "scan-c": lambda c, o: _scan(c, o, "C"),
    "check": run_check,
    "hartree-gap": run_hartree_gap,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="collapse-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    for key in KEYS:
        if key != "command":
            ap.add_argument(f"--{key}", dest=f"opt_{key}", metavar="VALUE")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        raw = {}
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            raw.update(parse_config_text(path.read_text()))
        if args.command:
            raw["command"] = args.command
        for key in KEYS:
            value = getattr(args, f"opt_{key}", None)
            if value is not None:
                raw[key] = value
        if "command" not in raw:
            ap.print_usage(sys.stderr)
            print("collapse-lab: error: missing command", file=sys.stderr)
            return 2
        cfg = resolve(raw)
    except ConfigError as exc:
        print(f"collapse-lab: config error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(out, cfg)
    summary = {"command": cfg["command"]}
    try:
        criteria, info = RUNNERS[cfg["command"]](cfg, out)
    except ConfigError as exc:
        print(f"collapse-lab: config error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        summary.update({"error": str(exc), "pass": False})
        _dump(out / "summary.json", summary)
        print(f"collapse-lab: numerical failure: {exc}", file=sys.stderr)
        return 3
    criteria = {k: bool(v) for k, v in criteria.items()}
    summary.update({"criteria": criteria, "pass": all(criteria.values())})
    summary.update({k: v for k, v in info.items() if not isinstance(v, np.ndarray)})
    _dump(out / "summary.json", summary)
    for name, ok in criteria.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if summary["pass"] else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
