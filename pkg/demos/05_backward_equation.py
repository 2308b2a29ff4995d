# The backward equation and its pairing with the forward density
#
# Running the call payoff backward from expiry gives the undiscounted value
# V(x, 0); discounting yields the premium.  The forward density and the
# backward value are adjoint: their inner product does not move in time.

import math

import numpy as np

from entropic_pricing import (
    CoefficientField,
    DensityGrid,
    MarketParams,
    OptionSpec,
    ValueGrid,
    adjoint_consistency_check,
    bs_call,
    evolve_backward_value,
    evolve_forward,
    pairing,
    pde_value_grids,
)

r, sigma = 0.05, 0.2
market = MarketParams(r, sigma, r)
spec = OptionSpec("call", 100.0, 1.0)
terminal, initial = pde_value_grids(100.0, spec, market)
v0 = initial.interpolate(math.log(100.0))
c = bs_call(100.0, spec, market).premium
print(f"V(ln 100, 0) = {v0:.6f}   e^rT C = {math.exp(r) * c:.6f}")

# Values at a few spots, discounted, next to the closed form.

for s in (80.0, 100.0, 120.0):
    pde = math.exp(-r) * initial.interpolate(math.log(s))
    print(f"S = {s:5.1f}  pde {pde:.5f}  closed {bs_call(s, spec, market).premium:.5f}")

# <p(t), V(t)> is conserved: evolve a density forward and a value backward.

x0 = math.log(100.0)
coeffs = CoefficientField.constant_coefficients(r, sigma)
p0 = DensityGrid.near_delta(x0, x0 - 1.6, x0 + 1.6, 400)
vT = ValueGrid(p0.x_lo, p0.x_hi, np.cos(np.linspace(0, 8, 400)), 1.0)
pT = evolve_forward(p0, coeffs, 1.0, 200)
v0_grid = evolve_backward_value(vT, coeffs, 0.0, 200)
print(f"<p(0), V(0)> = {pairing(p0, v0_grid):.15f}")
print(f"<p(T), V(T)> = {pairing(pT, vT):.15f}")
print("one-step drift:", adjoint_consistency_check(p0, vT, coeffs, dt=1e-3))
