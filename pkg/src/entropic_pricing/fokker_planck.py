"""Crank-Nicolson evolution of log-price densities and value functions.

Forward (density) equation on x = ln S:

    dp/dt = -d/dx[(mu - sigma^2/2) p] + 1/2 d^2/dx^2 [sigma^2 p]

Backward (undiscounted value) equation:

    dV/dt = -(mu - sigma^2/2) dV/dx - sigma^2/2 d^2V/dx^2

The forward operator is assembled in flux form on a uniform grid, with
half-width cells at the two ends and zero flux through the outer faces, so
the trapezoid integral of p is conserved to rounding. Face advection is
central unless the cell Peclet number exceeds 2, in which case it is upwinded.
The backward operator is the transpose of the forward one under the
trapezoid inner product, which makes <p(t), V(t)> invariant step by step.
"""

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    BoundaryTruncationError,
    CoefficientError,
    DomainError,
    GridMismatchError,
)

__all__ = [
    "DensityGrid",
    "ValueGrid",
    "CoefficientField",
    "evolve_forward",
    "evolve_backward_value",
    "adjoint_consistency_check",
    "solve_tridiagonal",
    "pairing",
]

MIN_POINTS = 16
MASS_TOL = 1e-6
LEAK_TOL = 1e-4
PECLET_LIMIT = 2.0


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[i] = A[i+1, i]``, ``upper[i] = A[i, i+1]``."""
    n = diag.size
    ab = np.empty((3, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)


def _matvec(lower, diag, upper, v):
    y = diag * v
    y[:-1] += upper * v[1:]
    y[1:] += lower * v[:-1]
    return y


def _trapezoid_weights(n):
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


class _GridMixin:
    @property
    def n_points(self):
        return self.values.size

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / (self.n_points - 1)

    @property
    def x(self):
        return np.linspace(self.x_lo, self.x_hi, self.n_points)

    def same_grid(self, other):
        return (self.n_points == other.n_points and self.x_lo == other.x_lo
                and self.x_hi == other.x_hi)

    def _check_grid(self):
        if not (math.isfinite(self.x_lo) and math.isfinite(self.x_hi) and self.x_hi > self.x_lo):
            raise DomainError("grid bounds must be finite with x_lo < x_hi")
        if self.values.ndim != 1 or self.values.size < MIN_POINTS:
            raise DomainError(f"grid needs at least {MIN_POINTS} points")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite")

    def to_csv(self, fh=None):
        """CSV with a ``# time= x_lo= x_hi= n=`` comment line and ``x,value`` columns."""
        out = io.StringIO() if fh is None else fh
        out.write(f"# time={self.time:.17g} x_lo={self.x_lo:.17g} "
                  f"x_hi={self.x_hi:.17g} n={self.n_points}\n")
        out.write("x,value\n")
        for xi, vi in zip(self.x, self.values):
            out.write(f"{xi:.17g},{vi:.17g}\n")
        return out.getvalue() if fh is None else None

    @classmethod
    def _read_csv(cls, fh):
        meta_line = fh.readline()
        if not meta_line.startswith("#"):
            raise ValueError("missing grid metadata line")
        meta = dict(item.split("=", 1) for item in meta_line[1:].split())
        if fh.readline().strip() != "x,value":
            raise ValueError("expected an 'x,value' header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[0] != int(meta["n"]):
            raise ValueError("row count does not match n")
        return float(meta["x_lo"]), float(meta["x_hi"]), data[:, 1], float(meta["time"])


@dataclass(frozen=True, eq=False)
class DensityGrid(_GridMixin):
    """Density of the log price on a uniform grid at a given time."""

    x_lo: float
    x_hi: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        self._check_grid()
        mass = self.mass()
        if abs(mass - 1.0) > MASS_TOL:
            raise DomainError(f"density integrates to {mass!r}, not 1")

    def mass(self):
        return float(np.trapezoid(self.values, dx=self.dx))

    def moments(self):
        """Mean and variance of x under the density."""
        x = self.x
        mean = float(np.trapezoid(x * self.values, dx=self.dx))
        var = float(np.trapezoid((x - mean) ** 2 * self.values, dx=self.dx))
        return mean, var

    @classmethod
    def normalized(cls, x_lo, x_hi, values, time=0.0):
        v = np.asarray(values, dtype=float)
        mass = np.trapezoid(v, dx=(x_hi - x_lo) / (v.size - 1))
        return cls(x_lo, x_hi, v / mass, time)

    @classmethod
    def near_delta(cls, x0, x_lo, x_hi, n_points, time=0.0):
        """Gaussian spike of one grid spacing standard deviation centred at ``x0``."""
        x = np.linspace(x_lo, x_hi, n_points)
        dx = x[1] - x[0]
        return cls.normalized(x_lo, x_hi, np.exp(-0.5 * ((x - x0) / dx) ** 2), time)

    @classmethod
    def from_csv(cls, fh):
        return cls(*cls._read_csv(fh))


@dataclass(frozen=True, eq=False)
class ValueGrid(_GridMixin):
    """Undiscounted expected payoff V(x, t) on a uniform log-price grid.

    ``payoff`` ('call' or 'put') and ``strike`` are optional declarations used
    for boundary data and monotonicity diagnostics.
    """

    x_lo: float
    x_hi: float
    values: np.ndarray
    time: float = 0.0
    payoff: str = None
    strike: float = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        self._check_grid()
        if self.payoff not in (None, "call", "put"):
            raise DomainError(f"unknown payoff type {self.payoff!r}")

    @classmethod
    def from_payoff(cls, style, strike, x_lo, x_hi, n_points, time):
        """Terminal data (S - K)^+ or (K - S)^+ sampled at the nodes."""
        s = np.exp(np.linspace(x_lo, x_hi, n_points))
        if style == "call":
            v = np.maximum(s - strike, 0.0)
        elif style == "put":
            v = np.maximum(strike - s, 0.0)
        else:
            raise DomainError(f"unknown payoff type {style!r}")
        return cls(x_lo, x_hi, v, time, style, float(strike))

    def interpolate(self, x0):
        """Cubic interpolation of the values at log price ``x0``."""
        from scipy.interpolate import CubicSpline

        if not self.x_lo < x0 < self.x_hi:
            raise DomainError("interpolation point lies outside the grid interior")
        return float(CubicSpline(self.x, self.values)(x0))

    def monotonicity_violation(self):
        """Largest step against the expected direction (0 when consistent)."""
        d = np.diff(self.values)
        if self.payoff == "call":
            return float(max(0.0, -d.min()))
        if self.payoff == "put":
            return float(max(0.0, d.max()))
        return 0.0

    @classmethod
    def from_csv(cls, fh):
        return cls(*cls._read_csv(fh))


class CoefficientField:
    """Drift and volatility as functions of (x, t).

    Both callables receive an array of log prices and a scalar time and must
    return arrays (or scalars) broadcastable to the grid.
    """

    def __init__(self, drift_of, vol_of, constant=False):
        self.drift_of = drift_of
        self.vol_of = vol_of
        self.constant = constant

    @classmethod
    def constant_coefficients(cls, mu, sigma):
        mu, sigma = float(mu), float(sigma)
        return cls(lambda x, t: mu, lambda x, t: sigma, constant=True)

    def sample(self, x, t, allow_zero_vol=False):
        drift = np.broadcast_to(np.asarray(self.drift_of(x, t), dtype=float), x.shape)
        vol = np.broadcast_to(np.asarray(self.vol_of(x, t), dtype=float), x.shape)
        if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(vol))):
            raise CoefficientError("drift and volatility must be finite on the grid")
        if allow_zero_vol:
            if np.any(vol < 0.0):
                raise CoefficientError("volatility must be non-negative on the grid")
        elif np.any(vol <= 0.0):
            raise CoefficientError("volatility must be positive everywhere on the grid")
        return drift, vol


def _forward_operator(drift, vol, dx):
    """Tridiagonal (lower, diag, upper) of the flux-form Fokker-Planck operator."""
    n = drift.size
    a = drift - 0.5 * vol * vol
    d = 0.5 * vol * vol
    a_face = 0.5 * (a[:-1] + a[1:])
    d_face = 0.5 * (d[:-1] + d[1:])
    upwind = np.abs(a_face) * dx > PECLET_LIMIT * d_face
    # face flux F = cl * p_left + cr * p_right
    cl = 0.5 * a[:-1] + d[:-1] / dx
    cr = 0.5 * a[1:] - d[1:] / dx
    pos = upwind & (a_face > 0.0)
    neg = upwind & (a_face <= 0.0)
    cl[pos] = a[:-1][pos] + d[:-1][pos] / dx
    cr[pos] = -d[1:][pos] / dx
    cl[neg] = d[:-1][neg] / dx
    cr[neg] = a[1:][neg] - d[1:][neg] / dx

    cell = _trapezoid_weights(n) * dx
    diag = np.zeros(n)
    diag[:-1] -= cl / cell[:-1]
    diag[1:] += cr / cell[1:]
    upper = -cr / cell[:-1]
    lower = cl / cell[1:]
    return lower, diag, upper


def _backward_operator(drift, vol, dx):
    """Transpose of the forward operator under the trapezoid inner product."""
    lower_f, diag, upper_f = _forward_operator(drift, vol, dx)
    w = _trapezoid_weights(drift.size)
    # M[i, j] = M*[j, i] * w_j / w_i
    lower = upper_f * w[:-1] / w[1:]
    upper = lower_f * w[1:] / w[:-1]
    return lower, diag, upper


def _cn_step(op, v, h, dirichlet=None):
    lower, diag, upper = op
    rhs = v + h * _matvec(lower, diag, upper, v)
    lo, di, up = -h * lower, 1.0 - h * diag, -h * upper
    if dirichlet is not None:
        di = di.copy()
        up = up.copy()
        lo = lo.copy()
        di[0], up[0], rhs[0] = 1.0, 0.0, dirichlet[0]
        di[-1], lo[-1], rhs[-1] = 1.0, 0.0, dirichlet[1]
    return solve_tridiagonal(lo, di, up, rhs)


def _euler_step(op, v, h, dirichlet=None):
    # fully implicit step of length h
    lower, diag, upper = op
    rhs = v.copy()
    lo, di, up = -h * lower, 1.0 - h * diag, -h * upper
    if dirichlet is not None:
        di, up, lo = di.copy(), up.copy(), lo.copy()
        di[0], up[0], rhs[0] = 1.0, 0.0, dirichlet[0]
        di[-1], lo[-1], rhs[-1] = 1.0, 0.0, dirichlet[1]
    return solve_tridiagonal(lo, di, up, rhs)


def _check_steps(n_steps):
    if int(n_steps) != n_steps or n_steps < 1:
        raise DomainError(f"n_steps must be a positive integer, got {n_steps!r}")
    return int(n_steps)


def evolve_forward(density, coeffs, t_final, n_steps, rannacher_steps=0):
    """Evolve a log-price density from ``density.time`` to ``t_final``.

    Crank-Nicolson in time with coefficients sampled at each step midpoint.
    ``rannacher_steps`` leading steps are replaced by pairs of implicit Euler
    half steps, which damps the high-frequency content of spiky initial data.

    Negative values are reported through a ``RuntimeWarning`` and left in
    place. The scheme stays non-negative while ``dt * max(sigma^2) <= dx^2``
    holds approximately; larger steps remain stable but may oscillate.

    Raises
    ------
    CoefficientError
        if the volatility is not positive somewhere on the grid.
    BoundaryTruncationError
        if more than 1e-4 of the probability ends up in the edge cells.
    """
    n_steps = _check_steps(n_steps)
    if not t_final > density.time:
        raise DomainError("t_final must be later than the density's time")
    x, dx = density.x, density.dx
    dt = (t_final - density.time) / n_steps
    p = np.array(density.values)
    op = None
    min_seen = 0.0
    for k in range(n_steps):
        t_mid = density.time + (k + 0.5) * dt
        if op is None or not coeffs.constant:
            drift, vol = coeffs.sample(x, t_mid)
            op = _forward_operator(drift, vol, dx)
        if k < rannacher_steps:
            p = _euler_step(op, p, 0.5 * dt)
            p = _euler_step(op, p, 0.5 * dt)
        else:
            p = _cn_step(op, p, 0.5 * dt)
        min_seen = min(min_seen, float(p.min()))

    peak = float(np.max(np.abs(p)))
    if min_seen < -1e-12 * peak:
        warnings.warn(f"forward density went negative (min {min_seen:.3e}); "
                      "reduce dt or refine the grid", RuntimeWarning, stacklevel=2)

    edge = max(2, p.size // 50)
    edge_mass = (np.trapezoid(np.abs(p[:edge]), dx=dx) + np.trapezoid(np.abs(p[-edge:]), dx=dx))
    if edge_mass > LEAK_TOL:
        raise BoundaryTruncationError(
            f"{edge_mass:.3e} of the probability sits in the edge cells; widen the grid")
    mass = float(np.trapezoid(p, dx=dx))
    if abs(mass - 1.0) > MASS_TOL * max(1.0, t_final - density.time):
        raise BoundaryTruncationError(f"probability mass drifted to {mass!r}")
    return DensityGrid(density.x_lo, density.x_hi, p, float(t_final))


def _payoff_boundary(value, x_lo, x_hi):
    """Asymptotic edge values for declared call/put payoffs.

    Returns a function of (growth_lo, growth_hi) where growth is the
    accumulated factor exp(int drift dt) at each edge.
    """
    k = value.strike
    s_lo, s_hi = math.exp(x_lo), math.exp(x_hi)
    if value.payoff == "call":
        return lambda g_lo, g_hi: (max(s_lo * g_lo - k, 0.0), max(s_hi * g_hi - k, 0.0))
    return lambda g_lo, g_hi: (max(k - s_lo * g_lo, 0.0), max(k - s_hi * g_hi, 0.0))


def _warn_payoff_mismatch(value):
    if value.payoff is None or value.strike is None:
        return
    scale = max(1.0, float(np.max(np.abs(value.values))))
    expected = _payoff_boundary(value, value.x_lo, value.x_hi)(1.0, 1.0)
    got = (value.values[0], value.values[-1])
    for side, want, have in zip(("x_lo", "x_hi"), expected, got):
        if abs(want - have) > 1e-8 * scale:
            warnings.warn(f"{value.payoff} payoff declared but the value at {side} is "
                          f"{have!r}, expected {want!r}", RuntimeWarning, stacklevel=3)
    if value.monotonicity_violation() > 1e-12 * scale:
        warnings.warn(f"{value.payoff} values are not monotone in x",
                      RuntimeWarning, stacklevel=3)


def evolve_backward_value(value_at_T, coeffs, t_start, n_steps, boundary=None,
                          rannacher_steps=0):
    """Evolve an undiscounted value function backward from ``value_at_T.time``.

    Parameters
    ----------
    value_at_T : ValueGrid
        Terminal data at expiry.
    coeffs : CoefficientField
        Drift (the risk-free rate when pricing) and volatility.
    t_start : float
        Earlier time to stop at.
    n_steps : int
    boundary : callable, optional
        ``boundary(t) -> (v_lo, v_hi)`` Dirichlet data at the grid edges. By
        default a declared call/put payoff uses its large/small-S
        asymptotes; otherwise the edges are reflecting (the exact adjoint of
        the zero-flux forward problem).
    rannacher_steps : int
        Leading steps taken as two implicit Euler half steps each.
    """
    n_steps = _check_steps(n_steps)
    t_end = value_at_T.time
    if not t_start < t_end:
        raise DomainError("t_start must precede the value grid's time")
    _warn_payoff_mismatch(value_at_T)

    x, dx = value_at_T.x, value_at_T.dx
    dt = (t_end - t_start) / n_steps
    v = np.array(value_at_T.values)
    edge_values = None
    if boundary is None and value_at_T.payoff is not None and value_at_T.strike is not None:
        edge_values = _payoff_boundary(value_at_T, value_at_T.x_lo, value_at_T.x_hi)
    log_g_lo = log_g_hi = 0.0
    edges = np.array([x[0], x[-1]])

    op = None
    for k in range(n_steps):
        t_mid = t_end - (k + 0.5) * dt
        t_new = t_end - (k + 1) * dt
        if op is None or not coeffs.constant:
            drift, vol = coeffs.sample(x, t_mid)
            op = _backward_operator(drift, vol, dx)
        if boundary is not None:
            dirichlet = boundary(t_new)
        elif edge_values is not None:
            edge_drift, _ = coeffs.sample(edges, t_mid)
            log_g_lo += edge_drift[0] * dt
            log_g_hi += edge_drift[1] * dt
            dirichlet = edge_values(math.exp(log_g_lo), math.exp(log_g_hi))
        else:
            dirichlet = None
        if k < rannacher_steps:
            v = _euler_step(op, v, 0.5 * dt, dirichlet)
            v = _euler_step(op, v, 0.5 * dt, dirichlet)
        else:
            v = _cn_step(op, v, 0.5 * dt, dirichlet)

    return ValueGrid(value_at_T.x_lo, value_at_T.x_hi, v, float(t_start),
                     value_at_T.payoff, value_at_T.strike)


def pairing(density, value):
    """Trapezoid inner product of a density and a value function on a shared grid."""
    if not density.same_grid(value):
        raise GridMismatchError("density and value grids differ")
    return float(np.trapezoid(density.values * value.values, dx=density.dx))


def adjoint_consistency_check(density, value, coeffs, dt=1e-3):
    """Drift of the pairing <p, V> over one forward/backward step pair.

    ``density`` is advanced from t to t + dt, ``value`` (taken at t + dt) is
    carried back to t, and the function returns
    ``|<p(t), V(t)> - <p(t+dt), V(t+dt)>|``. Zero volatility is accepted here.
    """
    if not density.same_grid(value):
        raise GridMismatchError("density and value grids differ")
    x, dx = density.x, density.dx
    drift, vol = coeffs.sample(x, density.time + 0.5 * dt, allow_zero_vol=True)
    p0 = np.array(density.values)
    v1 = np.array(value.values)
    p1 = _cn_step(_forward_operator(drift, vol, dx), p0, 0.5 * dt)
    v0 = _cn_step(_backward_operator(drift, vol, dx), v1, 0.5 * dt)
    w = _trapezoid_weights(x.size) * dx
    return abs(float(np.sum(w * p0 * v0)) - float(np.sum(w * p1 * v1)))
