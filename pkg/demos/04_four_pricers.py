# One option, four pricers
#
# The Black-Scholes formula, Gauss-Legendre quadrature of the payoff, the
# backward PDE and Monte Carlo all price under the risk-neutral measure.

import math

from entropic_pricing import MarketParams, OptionSpec, parity_gap, price

market = MarketParams(mu=0.12, sigma=0.2, risk_free_rate=0.05)
call = OptionSpec("call", strike=100.0, expiry=1.0)
put = call.with_style("put")

for method in ("closed_form", "quadrature", "pde", "monte_carlo"):
    c = price(100.0, call, market, method, n_paths=10**6, seed=42)
    p = price(100.0, put, market, method, n_paths=10**6, seed=42)
    fwd = c.sample_forward if method == "monte_carlo" else None
    gap = parity_gap(c.premium, p.premium, 100.0, call, market, forward=fwd)
    se = f"  +- {c.std_error:.4f}" if c.std_error else ""
    print(f"{method:12s} call {c.premium:.8f}{se}  put {p.premium:.8f}  parity gap {gap:+.1e}")

# The physical drift mu never enters: only the risk-free rate does.

for mu in (-0.1, 0.0, 0.3):
    print(f"mu = {mu:+.1f}  call = {price(100.0, call, market.with_drift(mu)).premium!r}")

# Prices are homogeneous of degree one in (spot, strike).

big = price(137 * 100.0, OptionSpec("call", 137 * 100.0, 1.0), market).premium
print(f"137 * C(100, 100) = {137 * price(100.0, call, market).premium:.10f}")
print(f"C(13700, 13700)   = {big:.10f}")

# One JSON record per result.

print(price(100.0, call, market).to_json())
print("forward check: C - P =", round(math.exp(-0.05) * (100 * math.exp(0.05) - 100), 10))
