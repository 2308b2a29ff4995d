"""Command-line front end.

Subcommands: ``price``, ``parity``, ``simulate``, ``fpe`` and ``maxent``.
Time is measured in years; rates and volatilities are annualized.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 output not
writable. Every record written to stdout is one line of JSON.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import dynamics, fokker_planck, maxent_core, pricing
from .errors import (
    BoundaryTruncationError,
    CoefficientError,
    ConvergenceError,
    InfeasibleConstraintsError,
    SupportError,
    TruncationError,
)
from .params import MarketParams

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_OUTPUT = 4

_METHODS = {"closed": "closed_form", "quadrature": "quadrature", "pde": "pde",
            "mc": "monte_carlo"}
_NUMERIC_ERRORS = (ConvergenceError, BoundaryTruncationError, TruncationError,
                   InfeasibleConstraintsError, CoefficientError, SupportError,
                   FloatingPointError, OverflowError)

# (flag dest, config path) pairs; flags win over config values
_FLAG_PATHS = {
    "mu": ("market", "mu"),
    "vol": ("market", "sigma"),
    "rate": ("market", "risk_free_rate"),
    "style": ("option", "style"),
    "strike": ("option", "strike"),
    "expiry": ("option", "expiry"),
    "spot": ("spot",),
    "method": ("method",),
    "paths": ("numerics", "paths"),
    "seed": ("numerics", "seed"),
    "grid": ("numerics", "grid"),
    "steps": ("numerics", "steps"),
    "horizon": ("numerics", "horizon"),
    "t_final": ("numerics", "t_final"),
    "snapshots": ("numerics", "snapshots"),
    "dt": ("numerics", "dt"),
    "numeric": ("numerics", "numeric"),
    "out": ("output_path",),
}

_DEFAULTS = {
    "market": {"mu": 0.0, "risk_free_rate": 0.0},
    "method": "closed",
    "numerics": {"paths": 100_000, "seed": 0, "grid": 400, "steps": 400,
                 "snapshots": 0, "numeric": False},
}


class ValidationError(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = problems


def _get(cfg, path, default=None):
    node = cfg
    for key in path:
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _set(cfg, path, value):
    node = cfg
    for key in path[:-1]:
        node = node.setdefault(key, {})
    node[path[-1]] = value


def _merge(base, override):
    out = json.loads(json.dumps(base))
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(args):
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = json.loads(json.dumps(_DEFAULTS))
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ValidationError([f"--config: cannot read {args.config}: {exc}"])
        if not isinstance(file_cfg, dict):
            raise ValidationError(["--config: top level must be a JSON object"])
        cfg = _merge(cfg, file_cfg)
    for dest, path in _FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is not None and not (dest == "numeric" and value is False):
            _set(cfg, path, value)
    return cfg


class _Checker:
    """Collects every validation problem before reporting."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.problems = []

    def number(self, flag, path, positive=False, nonneg=False, integer=False, minimum=None):
        value = _get(self.cfg, path)
        if value is None:
            self.problems.append(f"{flag}: required")
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.problems.append(f"{flag}: must be a number, got {value!r}")
            return None
        if not math.isfinite(value):
            self.problems.append(f"{flag}: must be finite")
            return None
        if integer and int(value) != value:
            self.problems.append(f"{flag}: must be an integer, got {value!r}")
            return None
        if positive and value <= 0:
            self.problems.append(f"{flag}: must be > 0, got {value!r}")
            return None
        if nonneg and value < 0:
            self.problems.append(f"{flag}: must be >= 0, got {value!r}")
            return None
        if minimum is not None and value < minimum:
            self.problems.append(f"{flag}: must be >= {minimum}, got {value!r}")
            return None
        return int(value) if integer else float(value)

    def choice(self, flag, path, choices):
        value = _get(self.cfg, path)
        if value not in choices:
            self.problems.append(f"{flag}: must be one of {', '.join(choices)}, got {value!r}")
            return None
        return value

    def text(self, flag, path):
        value = _get(self.cfg, path)
        if not isinstance(value, str) or not value:
            self.problems.append(f"{flag}: required")
            return None
        return value

    def done(self):
        if self.problems:
            raise ValidationError(self.problems)


def _emit(record):
    sys.stdout.write(json.dumps(record) + "\n")


def _market(chk):
    mu = chk.number("--mu", ("market", "mu"))
    vol = chk.number("--vol", ("market", "sigma"), positive=True)
    rate = chk.number("--rate", ("market", "risk_free_rate"))
    return mu, vol, rate


def _price_inputs(cfg, with_style=True):
    chk = _Checker(cfg)
    style = chk.choice("--style", ("option", "style"), ("call", "put")) if with_style else "call"
    spot = chk.number("--spot", ("spot",), positive=True)
    strike = chk.number("--strike", ("option", "strike"), nonneg=True)
    expiry = chk.number("--expiry", ("option", "expiry"), positive=True)
    mu, vol, rate = _market(chk)
    method = chk.choice("--method", ("method",), tuple(_METHODS))
    paths = chk.number("--paths", ("numerics", "paths"), integer=True, minimum=100)
    seed = chk.number("--seed", ("numerics", "seed"), integer=True, nonneg=True)
    grid = chk.number("--grid", ("numerics", "grid"), integer=True, minimum=16)
    steps = chk.number("--steps", ("numerics", "steps"), integer=True, positive=True)
    chk.done()
    params = MarketParams(mu, vol, rate)
    spec = pricing.OptionSpec(style, strike, expiry)
    return spot, spec, params, _METHODS[method], paths, seed, grid, steps


def _run_pricer(spot, spec, params, method, paths, seed, grid, steps):
    grid_spec = pricing.PDEGrid(n_points=grid, n_steps=steps) if method == "pde" else None
    return pricing.price(spot, spec, params, method, grid_spec, paths, seed)


def cmd_price(cfg):
    spot, spec, params, method, paths, seed, grid, steps = _price_inputs(cfg)
    result = _run_pricer(spot, spec, params, method, paths, seed, grid, steps)
    _emit(result.to_record())
    return EXIT_OK


def cmd_parity(cfg):
    spot, spec, params, method, paths, seed, grid, steps = _price_inputs(cfg, with_style=False)
    call = _run_pricer(spot, spec.with_style("call"), params, method, paths, seed, grid, steps)
    put = _run_pricer(spot, spec.with_style("put"), params, method, paths, seed, grid, steps)
    gap = pricing.parity_gap(call.premium, put.premium, spot, spec, params)
    record = {"method": call.method, "call": call.premium, "put": put.premium, "gap": gap}
    if method == "monte_carlo":
        record["pathwise_gap"] = pricing.parity_gap(call.premium, put.premium, spot, spec,
                                                    params, forward=call.sample_forward)
    record["params"] = call.to_record()["params"]
    _emit(record)
    return EXIT_OK


def cmd_simulate(cfg):
    chk = _Checker(cfg)
    spot = chk.number("--spot", ("spot",), positive=True)
    mu = chk.number("--mu", ("market", "mu"))
    vol = chk.number("--vol", ("market", "sigma"), positive=True)
    horizon = chk.number("--horizon", ("numerics", "horizon"), positive=True)
    steps = chk.number("--steps", ("numerics", "steps"), integer=True, positive=True)
    paths = chk.number("--paths", ("numerics", "paths"), integer=True, positive=True)
    seed = chk.number("--seed", ("numerics", "seed"), integer=True, nonneg=True)
    out = chk.text("--out", ("output_path",))
    chk.done()
    ens = dynamics.sample_paths(MarketParams(mu, vol), spot, horizon, steps, paths, seed)
    try:
        with open(out, "w", newline="") as fh:
            ens.to_csv(fh)
    except OSError as exc:
        sys.stderr.write(f"error: cannot write {out}: {exc}\n")
        return EXIT_OUTPUT
    _emit({"output": out, "paths": paths, "steps": steps, "seed": seed})
    return EXIT_OK


def cmd_fpe(cfg):
    chk = _Checker(cfg)
    mu = chk.number("--mu", ("market", "mu"))
    vol = chk.number("--vol", ("market", "sigma"), positive=True)
    spot = chk.number("--spot", ("spot",), positive=True)
    t_final = chk.number("--t-final", ("numerics", "t_final"), positive=True)
    grid = chk.number("--grid", ("numerics", "grid"), integer=True, minimum=16)
    steps = chk.number("--steps", ("numerics", "steps"), integer=True, positive=True)
    snaps = chk.number("--snapshots", ("numerics", "snapshots"), integer=True, nonneg=True)
    out = chk.text("--out", ("output_path",))
    if snaps is not None and steps is not None and snaps > steps:
        chk.problems.append("--snapshots: cannot exceed --steps")
    chk.done()

    x0 = math.log(spot)
    half = 8.0 * vol * math.sqrt(t_final)
    density = fokker_planck.DensityGrid.near_delta(x0, x0 - half, x0 + half, grid)
    coeffs = fokker_planck.CoefficientField.constant_coefficients(mu, vol)
    snapshots = [density] if snaps else []
    segments = max(snaps, 1)
    done = 0
    for j in range(1, segments + 1):
        target = round(steps * j / segments)
        density = fokker_planck.evolve_forward(density, coeffs, t_final * j / segments,
                                               target - done)
        done = target
        if snaps:
            snapshots.append(density)
    if not snaps:
        snapshots = [density]

    law = dynamics.terminal_distribution(MarketParams(mu, vol), spot, t_final)
    final = snapshots[-1]
    l1 = float(np.trapezoid(np.abs(final.values - law.log_pdf(final.x)), dx=final.dx))
    try:
        os.makedirs(out, exist_ok=True)
        files = []
        for j, snap in enumerate(snapshots):
            path = os.path.join(out, f"density_{j:04d}.csv")
            with open(path, "w", newline="") as fh:
                snap.to_csv(fh)
            files.append(path)
    except OSError as exc:
        sys.stderr.write(f"error: cannot write to {out}: {exc}\n")
        return EXIT_OUTPUT
    _emit({"files": files, "final_time": final.time, "mass": final.mass(),
           "l1_vs_lognormal": l1})
    return EXIT_OK


def cmd_maxent(cfg):
    chk = _Checker(cfg)
    mu = chk.number("--mu", ("market", "mu"))
    vol = chk.number("--vol", ("market", "sigma"), positive=True)
    dt = chk.number("--dt", ("numerics", "dt"), positive=True)
    grid = chk.number("--grid", ("numerics", "grid"), integer=True, minimum=16)
    numeric = bool(_get(cfg, ("numerics", "numeric"), False))
    chk.done()
    params = MarketParams(mu, vol)
    if not numeric:
        sol = maxent_core.multipliers_from_market(params, dt)
        _emit({"alpha": sol.alpha, "beta": sol.beta, "mean_shift": sol.mean_shift,
               "variance": sol.variance, "method": "closed_form"})
        return EXIT_OK
    kernel = dynamics.transition_kernel(params, dt)
    constraints = maxent_core.ConstraintSpec.from_kernel(kernel)
    if not constraints.variance > 0.0:
        raise InfeasibleConstraintsError(
            f"target variance underflows to {constraints.variance!r}; residual "
            f"K - K'^2 = {constraints.variance!r} must be positive")
    half = 10.0 * kernel.std
    base = maxent_core.DiscretizedDensity.uniform(kernel.mean_shift - half,
                                                  kernel.mean_shift + half, max(grid, 2001))
    sol = maxent_core.solve_dual(constraints, base)
    _emit({"alpha": sol.alpha, "beta": sol.beta, "mean_shift": sol.mean_shift,
           "variance": sol.variance, "method": "dual_newton", "residual": sol.residual,
           "iterations": sol.iterations})
    return EXIT_OK


_COMMANDS = {"price": cmd_price, "parity": cmd_parity, "simulate": cmd_simulate,
             "fpe": cmd_fpe, "maxent": cmd_maxent}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="entropic-pricing",
        description="Entropic GBM dynamics and European option pricing. "
                    "Time is in years; rates and volatilities are annualized.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--verbose", action="store_true",
                       help="echo the fully resolved config to stderr")

    def pricing_flags(p, style=True):
        if style:
            p.add_argument("--style", choices=("call", "put"))
        p.add_argument("--spot", type=float, help="current price")
        p.add_argument("--strike", type=float)
        p.add_argument("--rate", type=float, help="annual risk-free rate")
        p.add_argument("--vol", type=float, help="annual volatility")
        p.add_argument("--mu", type=float, help="physical drift (does not affect premiums)")
        p.add_argument("--expiry", type=float, help="years to expiry")
        p.add_argument("--method", choices=tuple(_METHODS))
        p.add_argument("--paths", type=int, help="Monte Carlo paths")
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--grid", type=int, help="PDE grid points")
        p.add_argument("--steps", type=int, help="PDE time steps")
        common(p)

    pricing_flags(sub.add_parser("price", help="price a European option"))
    pricing_flags(sub.add_parser("parity", help="price both legs and report the parity gap"),
                  style=False)

    p = sub.add_parser("simulate", help="sample GBM log-price paths to CSV")
    p.add_argument("--spot", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--vol", type=float)
    p.add_argument("--horizon", type=float, help="years")
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV file")
    common(p)

    p = sub.add_parser("fpe", help="evolve the log-price density; write CSV snapshots")
    p.add_argument("--mu", type=float)
    p.add_argument("--vol", type=float)
    p.add_argument("--spot", type=float)
    p.add_argument("--t-final", dest="t_final", type=float, help="years")
    p.add_argument("--grid", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--snapshots", type=int,
                   help="k > 0 writes k+1 equally spaced snapshots; 0 writes only the last")
    p.add_argument("--out", help="output directory")
    common(p)

    p = sub.add_parser("maxent", help="Lagrange multipliers of the transition kernel")
    p.add_argument("--mu", type=float)
    p.add_argument("--vol", type=float)
    p.add_argument("--dt", type=float, help="clock interval in years")
    p.add_argument("--grid", type=int, help="grid points for --numeric")
    p.add_argument("--numeric", action="store_true", default=None,
                   help="solve the dual numerically instead of the closed form")
    common(p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.verbose:
            sys.stderr.write(json.dumps({"resolved_config": cfg}, sort_keys=True) + "\n")
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        for problem in exc.problems:
            sys.stderr.write(f"error: {problem}\n")
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining domain errors surface as invalid input
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
