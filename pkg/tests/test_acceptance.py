"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test is named ``test_acNN_*``; ``conftest.py`` prints one PASS/FAIL line
per criterion at the end of the run.
"""

import math
import subprocess
import sys
import time

import numpy as np

from entropic_pricing.dynamics import MarketParams, transition_kernel
from entropic_pricing.fokker_planck import (
    CoefficientField,
    DensityGrid,
    ValueGrid,
    adjoint_consistency_check,
    evolve_forward,
)
from entropic_pricing.maxent_core import ConstraintSpec, DiscretizedDensity, solve_dual
from entropic_pricing.pricing import (
    OptionSpec,
    bs_call,
    mc_price,
    parity_gap,
    pde_price,
    pde_value_grids,
    price,
    quadrature_price,
)

S0, K, R, SIGMA, T = 100.0, 100.0, 0.05, 0.2, 1.0
MARKET = MarketParams(R, SIGMA, R)
CALL = OptionSpec("call", K, T)
X0 = math.log(S0)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_ac01_maxent_recovery():
    dt = 1.0 / 252.0
    kernel = transition_kernel(MarketParams(0.05, 0.2), dt)
    start = time.perf_counter()
    half = 10.0 * kernel.std
    base = DiscretizedDensity.uniform(kernel.mean_shift - half, kernel.mean_shift + half, 4001)
    sol = solve_dual(ConstraintSpec.from_kernel(kernel), base)
    elapsed = time.perf_counter() - start
    assert rel(sol.alpha, 6300.0) < 1e-6
    assert rel(sol.beta, 0.75) < 1e-6
    assert elapsed < 1.0


def test_ac02_forward_matches_lognormal():
    start = time.perf_counter()
    p0 = DensityGrid.near_delta(X0, X0 - 8 * SIGMA, X0 + 8 * SIGMA, 400)
    out = evolve_forward(p0, CoefficientField.constant_coefficients(0.05, SIGMA), 1.0, 2000)
    elapsed = time.perf_counter() - start
    m, sd = X0 + (0.05 - SIGMA**2 / 2), SIGMA
    exact = np.exp(-0.5 * ((out.x - m) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    l1 = np.trapezoid(np.abs(out.values - exact), dx=out.dx)
    assert l1 < 1e-3
    assert elapsed < 5.0


def test_ac03_four_way_agreement():
    start = time.perf_counter()
    closed = bs_call(S0, CALL, MARKET).premium
    quad = quadrature_price(S0, CALL, MARKET).premium
    pde = pde_price(S0, CALL, MARKET).premium
    mc = mc_price(S0, CALL, MARKET, n_paths=10**6, seed=42)
    elapsed = time.perf_counter() - start
    assert rel(quad, closed) < 1e-6
    assert rel(pde, closed) < 1e-3
    assert abs(mc.premium - closed) < 3 * mc.std_error
    assert elapsed < 30.0


def random_parameter_sets(n=20, seed=20240601):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield (rng.uniform(50, 200), rng.uniform(50, 200), rng.uniform(0.0, 0.1),
               rng.uniform(0.1, 0.5), rng.uniform(0.25, 2.0), rng.uniform(-0.1, 0.3))


def test_ac04_put_call_parity_sweep():
    worst = dict(closed_form=0.0, quadrature=0.0, pde=0.0, monte_carlo=0.0)
    for s0, k, r, sigma, t, mu in random_parameter_sets():
        params = MarketParams(mu, sigma, r)
        spec = OptionSpec("call", k, t)
        for method in worst:
            c = price(s0, spec, params, method, n_paths=10**4, seed=5)
            p = price(s0, spec.with_style("put"), params, method, n_paths=10**4, seed=5)
            # common random numbers: parity holds pathwise against the sample forward
            fwd = c.sample_forward if method == "monte_carlo" else None
            gap = abs(parity_gap(c.premium, p.premium, s0, spec, params, forward=fwd))
            worst[method] = max(worst[method], gap)
    assert worst["closed_form"] < 1e-12, worst
    assert worst["quadrature"] < 1e-6, worst
    assert worst["pde"] < 5e-3, worst
    assert worst["monte_carlo"] < 1e-10, worst


def test_ac05_scale_invariance():
    tolerances = {"closed_form": 1e-13, "quadrature": 1e-6, "pde": 1e-3, "monte_carlo": 1e-12}
    for style in ("call", "put"):
        for method, tol in tolerances.items():
            ref = price(S0, OptionSpec(style, K, T), MARKET, method, n_paths=10**4, seed=8)
            for scale in (0.01, 1.0, 137.0):
                got = price(scale * S0, OptionSpec(style, scale * K, T), MARKET, method,
                            n_paths=10**4, seed=8)
                assert rel(got.premium, scale * ref.premium) < tol, (style, method, scale)

    # kernel invariance; the only error left is rounding of ln(l S) in the inputs
    kernel = transition_kernel(MARKET, T)
    rng = np.random.default_rng(1)
    s_from = rng.uniform(50, 200, 1000)
    s_to = s_from * np.exp(rng.normal(0, 0.3, 1000))
    ref = kernel.log_density(np.log(s_to), np.log(s_from))
    for scale in (0.01, 1.0, 137.0):
        got = kernel.log_density(np.log(scale * s_to), np.log(scale * s_from))
        assert np.max(np.abs(got - ref) / ref) < 1e-12


def test_ac06_drift_independence():
    for method in ("closed_form", "quadrature", "pde", "monte_carlo"):
        for style in ("call", "put"):
            premiums = {price(S0, OptionSpec(style, K, T), MarketParams(mu, SIGMA, R), method,
                              n_paths=10**5, seed=13).premium for mu in (-0.1, 0.0, 0.3)}
            assert len(premiums) == 1, (method, style, premiums)


def test_ac07_martingale():
    forward_claim = OptionSpec("call", 0.0, T)
    quad = quadrature_price(S0, forward_claim, MARKET)
    assert abs(quad.premium - S0) < 1e-8
    mc = mc_price(S0, forward_claim, MARKET, n_paths=10**6, seed=42)
    assert abs(mc.premium - S0) < 3 * mc.std_error


def test_ac08_backward_consistency():
    _, initial = pde_value_grids(S0, CALL, MARKET)
    v = initial.interpolate(X0)
    assert rel(v, math.exp(R * T) * bs_call(S0, CALL, MARKET).premium) < 5e-3

    p = DensityGrid.near_delta(X0, X0 - 8 * SIGMA, X0 + 8 * SIGMA, 400)
    value = ValueGrid(p.x_lo, p.x_hi, np.maximum(np.exp(p.x) - K, 0.0), 0.0)
    coeffs = CoefficientField.constant_coefficients(R, SIGMA)
    assert adjoint_consistency_check(p, value, coeffs, dt=1e-3) < 1e-6


def test_ac09_moment_transport():
    mu = 0.05
    t0 = 0.05
    x = np.linspace(X0 - 1.6, X0 + 1.6, 800)
    sd0 = SIGMA * math.sqrt(t0)
    p0 = DensityGrid.normalized(x[0], x[-1], np.exp(-0.5 * ((x - X0) / sd0) ** 2), t0)
    out = evolve_forward(p0, CoefficientField.constant_coefficients(mu, SIGMA), t0 + 1.0, 1000)
    (m0, v0), (m1, v1) = p0.moments(), out.moments()
    assert abs((m1 - m0) - (mu - SIGMA**2 / 2)) < 1e-4
    assert abs((v1 - v0) - SIGMA**2) < 1e-4


def _cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "entropic_pricing", *args], cwd=cwd,
                          capture_output=True)
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def test_ac10_determinism(tmp_path):
    market = ["--spot", "100", "--strike", "100", "--rate", "0.05", "--vol", "0.2",
              "--expiry", "1"]
    commands = {
        "price": (["price", "--style", "call", *market, "--method", "mc", "--paths", "20000",
                   "--seed", "9"], None),
        "parity": (["parity", *market, "--method", "mc", "--paths", "20000", "--seed", "9"],
                   None),
        "simulate": (["simulate", "--spot", "100", "--mu", "0.05", "--vol", "0.2",
                      "--horizon", "1", "--steps", "50", "--paths", "500", "--seed", "9",
                      "--out", "paths.csv"], "paths.csv"),
        "fpe": (["fpe", "--mu", "0.05", "--vol", "0.2", "--spot", "100", "--t-final", "1",
                 "--grid", "200", "--steps", "200", "--snapshots", "2", "--out", "fpe"],
                "fpe/density_0002.csv"),
        "maxent": (["maxent", "--mu", "0.05", "--vol", "0.2", "--dt", "0.01", "--numeric"],
                   None),
    }
    for name, (args, artifact) in commands.items():
        outputs = []
        for run in ("a", "b"):
            cwd = tmp_path / f"{name}_{run}"
            cwd.mkdir()
            stdout = _cli(args, cwd)
            blob = (cwd / artifact).read_bytes() if artifact else b""
            # stdout names the output path, which is relative and so identical
            outputs.append((stdout, blob))
        assert outputs[0] == outputs[1], name
