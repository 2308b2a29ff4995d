"""European option pricing along four independent routes.

* ``closed_form`` -- the Black-Scholes formulas.
* ``quadrature`` -- Gauss-Legendre integration of the payoff against the
  risk-neutral lognormal terminal law.
* ``pde`` -- Crank-Nicolson solution of the backward equation for the
  undiscounted value V, discounted at the end.
* ``monte_carlo`` -- average payoff over counter-based GBM samples.

Every route prices under the risk-neutral measure, so the physical drift of
the input :class:`MarketParams` never affects a premium.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .dynamics import sample_paths, terminal_distribution
from .errors import DomainError, TruncationError
from .fokker_planck import CoefficientField, ValueGrid, evolve_backward_value
from .params import MarketParams

__all__ = [
    "OptionSpec",
    "PricingResult",
    "QuadratureGrid",
    "PDEGrid",
    "risk_neutralize",
    "std_normal_cdf",
    "d1_d2",
    "bs_call",
    "bs_put",
    "bs_price",
    "quadrature_price",
    "pde_price",
    "pde_value_grids",
    "mc_price",
    "parity_gap",
    "price",
]

METHODS = ("closed_form", "quadrature", "pde", "monte_carlo")


@dataclass(frozen=True)
class OptionSpec:
    """European contract: ``style`` is 'call' or 'put'; expiry in years."""

    style: str
    strike: float
    expiry: float

    def __post_init__(self):
        if self.style not in ("call", "put"):
            raise DomainError(f"style must be 'call' or 'put', got {self.style!r}")
        if not (math.isfinite(self.strike) and self.strike >= 0.0):
            raise DomainError(f"strike must be finite and >= 0, got {self.strike!r}")
        if not (math.isfinite(self.expiry) and self.expiry > 0.0):
            raise DomainError(f"expiry must be finite and > 0, got {self.expiry!r}")

    def payoff(self, s):
        s = np.asarray(s, dtype=float)
        if self.style == "call":
            return np.maximum(s - self.strike, 0.0)
        return np.maximum(self.strike - s, 0.0)

    def with_style(self, style):
        return replace(self, style=style)


@dataclass(frozen=True)
class PricingResult:
    premium: float
    method: str
    style: str
    undiscounted_payoff: float
    d1: float = None
    d2: float = None
    std_error: float = None
    params: MarketParams = None
    spot: float = None
    strike: float = None
    expiry: float = None
    # mean simulated S_T, kept so parity can be checked pathwise
    sample_forward: float = None

    def to_record(self):
        params = {}
        if self.params is not None:
            params.update(self.params.as_dict())
        params.update(spot=self.spot, strike=self.strike, expiry=self.expiry)
        return {
            "method": self.method,
            "style": self.style,
            "premium": self.premium,
            "d1": self.d1,
            "d2": self.d2,
            "std_error": self.std_error,
            "params": params,
        }

    def to_json(self):
        """One-line JSON record; floats use their shortest round-trip repr."""
        return json.dumps(_round_trip(self.to_record()))


def _round_trip(obj):
    # json already writes shortest round-trip reprs; normalize numpy scalars
    if isinstance(obj, dict):
        return {k: _round_trip(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite Gauss-Legendre rule: ``panels`` panels of ``order`` nodes.

    The integration window reaches ``n_std`` log-standard deviations past the
    bulk of the relevant density.
    """

    panels: int = 64
    order: int = 16
    n_std: float = 12.0


@dataclass(frozen=True)
class PDEGrid:
    """Log-price grid of ``n_points`` nodes spanning ``n_std`` terminal log-stds
    either side of ln s0, with ``n_steps`` Crank-Nicolson steps."""

    n_points: int = 400
    n_steps: int = 400
    n_std: float = 8.0
    rannacher_steps: int = 2


def _check_spot(s0):
    if not (math.isfinite(s0) and s0 > 0.0):
        raise DomainError(f"spot must be positive and finite, got {s0!r}")


def risk_neutralize(params):
    """Replace the physical drift by the risk-free rate."""
    return params.with_drift(params.risk_free_rate)


def std_normal_cdf(x):
    """Standard normal CDF, evaluated through the complementary error function.

    Works on scalars and arrays; accurate to a few ulps over the real line.
    """
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def d1_d2(s0, spec, params):
    _check_spot(s0)
    if spec.strike <= 0.0:
        raise DomainError("d1/d2 are undefined for a zero strike")
    vol_t = params.sigma * math.sqrt(spec.expiry)
    d1 = (math.log(s0 / spec.strike) + (params.risk_free_rate + 0.5 * params.sigma**2)
          * spec.expiry) / vol_t
    return d1, d1 - vol_t


def _check_finite(value, method):
    if not math.isfinite(value):
        raise FloatingPointError(f"{method} produced a non-finite premium; the inputs "
                                 "exceed the floating-point range")


def _result(premium, method, s0, spec, params, **extra):
    _check_finite(premium, method)
    growth = math.exp(params.risk_free_rate * spec.expiry)
    return PricingResult(
        premium=float(premium), method=method, style=spec.style,
        undiscounted_payoff=float(premium) * growth, params=params, spot=float(s0),
        strike=float(spec.strike), expiry=float(spec.expiry), **extra)


def _from_undiscounted(value, method, s0, spec, params, **extra):
    _check_finite(value, method)
    disc = math.exp(-params.risk_free_rate * spec.expiry)
    return PricingResult(
        premium=float(value) * disc, method=method, style=spec.style,
        undiscounted_payoff=float(value), params=params, spot=float(s0),
        strike=float(spec.strike), expiry=float(spec.expiry), **extra)


def bs_call(s0, spec, params):
    """Black-Scholes call premium s0 N(d1) - K exp(-rT) N(d2)."""
    _check_spot(s0)
    if spec.style != "call":
        raise DomainError("bs_call needs a call OptionSpec")
    if spec.strike == 0.0:
        return _result(s0, "closed_form", s0, spec, params)
    d1, d2 = d1_d2(s0, spec, params)
    disc = math.exp(-params.risk_free_rate * spec.expiry)
    premium = s0 * std_normal_cdf(d1) - disc * spec.strike * std_normal_cdf(d2)
    return _result(max(premium, 0.0), "closed_form", s0, spec, params, d1=d1, d2=d2)


def bs_put(s0, spec, params):
    """Black-Scholes put premium K exp(-rT) N(-d2) - s0 N(-d1)."""
    _check_spot(s0)
    if spec.style != "put":
        raise DomainError("bs_put needs a put OptionSpec")
    if spec.strike == 0.0:
        return _result(0.0, "closed_form", s0, spec, params)
    d1, d2 = d1_d2(s0, spec, params)
    disc = math.exp(-params.risk_free_rate * spec.expiry)
    premium = disc * spec.strike * std_normal_cdf(-d2) - s0 * std_normal_cdf(-d1)
    return _result(max(premium, 0.0), "closed_form", s0, spec, params, d1=d1, d2=d2)


def bs_price(s0, spec, params):
    return bs_call(s0, spec, params) if spec.style == "call" else bs_put(s0, spec, params)


def _gauss_legendre(a, b, panels, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def quadrature_price(s0, spec, params, grid_spec=None):
    """Integrate the payoff against the risk-neutral lognormal law of S_T.

    Calls are integrated over [K, upper) and puts over (lower, K] in log
    price. For a call the window extends ``n_std`` log-stds past the mean of
    the share-weighted law S_T * p(S_T), whose log-mean sits sigma^2 T above
    that of p; this keeps the sale leg converged at high volatility.

    Raises
    ------
    TruncationError
        if more than 1e-10 of either leg's mass lies outside the window.
    """
    _check_spot(s0)
    g = grid_spec or QuadratureGrid()
    law = terminal_distribution(params, s0, spec.expiry, risk_neutral=True)
    m, sd = law.log_mean, law.log_std
    v = sd * sd
    if spec.style == "call":
        upper = m + v + g.n_std * sd
        lower = m - g.n_std * sd
        if spec.strike > 0.0:
            lower = max(lower, math.log(spec.strike))
        tail = max(float(ndtr(-(upper - m) / sd)), float(ndtr(-(upper - m - v) / sd)))
    else:
        lower = m - g.n_std * sd
        upper = math.log(spec.strike) if spec.strike > 0.0 else -math.inf
        tail = float(ndtr((lower - m) / sd))
    if tail > 1e-10:
        raise TruncationError(f"{tail:.3e} of the terminal mass lies outside the "
                              "integration window; raise n_std")
    if not upper > lower:
        return _from_undiscounted(0.0, "quadrature", s0, spec, params)

    x, w = _gauss_legendre(lower, upper, g.panels, g.order)
    with np.errstate(over="ignore", invalid="ignore"):
        integrand = spec.payoff(np.exp(x)) * law.log_pdf(x)
        value = float(np.dot(w, integrand))
    return _from_undiscounted(value, "quadrature", s0, spec, params)


def _pde_grid_bounds(s0, spec, params, g):
    """Grid bounds around ln s0, shifted so that ln K falls on a node."""
    x0 = math.log(s0)
    half = g.n_std * params.sigma * math.sqrt(spec.expiry)
    dx = 2.0 * half / (g.n_points - 1)
    lo = x0 - half
    if spec.strike > 0.0:
        xk = math.log(spec.strike)
        lo = xk - math.ceil((xk - lo) / dx) * dx
    hi = lo + (g.n_points - 1) * dx
    if not lo < x0 < hi:
        raise DomainError("spot lies outside the PDE grid interior")
    return lo, hi


def pde_value_grids(s0, spec, params, grid_spec=None):
    """Terminal and time-zero undiscounted value grids of the backward equation."""
    _check_spot(s0)
    g = grid_spec or PDEGrid()
    rn = risk_neutralize(params)
    lo, hi = _pde_grid_bounds(s0, spec, params, g)
    terminal = ValueGrid.from_payoff(spec.style, spec.strike, lo, hi, g.n_points, spec.expiry)
    coeffs = CoefficientField.constant_coefficients(rn.mu, rn.sigma)
    initial = evolve_backward_value(terminal, coeffs, 0.0, g.n_steps,
                                    rannacher_steps=g.rannacher_steps)
    return terminal, initial


def pde_price(s0, spec, params, grid_spec=None):
    """Premium from the backward equation, read at ln s0 by cubic interpolation."""
    _, initial = pde_value_grids(s0, spec, params, grid_spec)
    value = initial.interpolate(math.log(s0))
    return _from_undiscounted(value, "pde", s0, spec, params)


def mc_price(s0, spec, params, n_paths=100_000, seed=0):
    """Monte Carlo premium with its standard error.

    Terminal prices come from single-step risk-neutral GBM sampling, so two
    calls with the same seed share their random numbers exactly.
    """
    _check_spot(s0)
    if int(n_paths) != n_paths or n_paths < 100:
        raise DomainError("n_paths must be an integer >= 100")
    rn = risk_neutralize(params)
    ens = sample_paths(rn, s0, spec.expiry, 1, int(n_paths), seed)
    s_t = np.exp(ens.terminal_log_prices())
    disc = math.exp(-params.risk_free_rate * spec.expiry)
    payoff = spec.payoff(s_t)
    value = float(payoff.mean())
    std_error = disc * float(payoff.std(ddof=1)) / math.sqrt(n_paths)
    return _from_undiscounted(value, "monte_carlo", s0, spec, params,
                              std_error=std_error, sample_forward=float(s_t.mean()))


def parity_gap(call_premium, put_premium, s0, spec, params, forward=None):
    """(C - P) - exp(-rT) (F - K), with F = s0 exp(rT) unless given.

    Passing the sample mean of S_T as ``forward`` checks parity pathwise for
    Monte Carlo prices that share their random numbers.
    """
    disc = math.exp(-params.risk_free_rate * spec.expiry)
    if forward is None:
        return (call_premium - put_premium) - (s0 - spec.strike * disc)
    return (call_premium - put_premium) - disc * (forward - spec.strike)


def price(s0, spec, params, method="closed_form", grid_spec=None, n_paths=100_000, seed=0):
    """Dispatch to one of the four pricing routes by name."""
    if method == "closed_form":
        return bs_price(s0, spec, params)
    if method == "quadrature":
        return quadrature_price(s0, spec, params, grid_spec)
    if method == "pde":
        return pde_price(s0, spec, params, grid_spec)
    if method == "monte_carlo":
        return mc_price(s0, spec, params, n_paths, seed)
    raise DomainError(f"unknown pricing method {method!r}; expected one of {METHODS}")
