# Evolving a log-price density with the Fokker-Planck equation
#
# A narrow spike at ln 100 spreads into the Gaussian that GBM predicts.  The
# flux-form Crank-Nicolson scheme keeps the total probability at 1.

import math

import numpy as np

from entropic_pricing import CoefficientField, DensityGrid, evolve_forward

mu, sigma = 0.05, 0.2
x0 = math.log(100.0)
p = DensityGrid.near_delta(x0, x0 - 8 * sigma, x0 + 8 * sigma, 400)
coeffs = CoefficientField.constant_coefficients(mu, sigma)

print(" t     mass            mean-x0     var")
for t in (0.25, 0.5, 0.75, 1.0):
    p = evolve_forward(p, coeffs, t, 500)
    m, v = p.moments()
    print(f"{t:4.2f}  {p.mass():.12f}  {m - x0:+.6f}  {v:.6f}")
print(f"expected at t=1: mean {mu - sigma**2 / 2:+.6f}, var {sigma**2:.6f}")

exact = np.exp(-0.5 * ((p.x - x0 - (mu - sigma**2 / 2)) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
print("L1 error vs lognormal:", np.trapezoid(np.abs(p.values - exact), dx=p.dx))

# Coefficients may depend on the state.  A drift pulling toward ln 100
# settles into a stationary spread of sigma^2 / (2 * kappa).

kappa = 2.0
pull = CoefficientField(lambda x, t: kappa * (x0 - x), lambda x, t: sigma + 0 * x)
q = DensityGrid.near_delta(x0 + 0.5, x0 - 1.5, x0 + 1.5, 301)
q = evolve_forward(q, pull, 4.0, 800, rannacher_steps=2)
print(f"mean-reverting variance {q.moments()[1]:.5f} vs {sigma**2 / (2 * kappa):.5f}")
