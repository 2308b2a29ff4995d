"""Maximum-entropy machinery for log-price transition kernels.

The log price is the coordinate in which a rescaling of the price, S -> l*S,
acts as a pure translation. Updating a prior over log-price increments under
a second-moment (continuity) constraint and a first-moment (directionality)
constraint gives an exponential family

    p(x) = base(x) * exp(-alpha/2 * x**2 + beta * x) / Z(alpha, beta)

whose multipliers are either read off in closed form from market parameters,
or recovered numerically from moment targets by Newton's method on the dual.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    GridMismatchError,
    InfeasibleConstraintsError,
    SupportError,
)
from .params import GaussianKernel, MarketParams

__all__ = [
    "LogPrice",
    "ConstraintSpec",
    "MaxEntSolution",
    "DiscretizedDensity",
    "log_transform",
    "scale_shift",
    "relative_entropy",
    "closed_form_posterior",
    "solve_dual",
    "tilted_density",
    "multipliers_from_market",
]

LogPrice = float

NORMALIZATION_TOL = 1e-6
DEFAULT_TOL = 1e-10
MAX_NEWTON_ITER = 100
BACKTRACK = 0.5
# grid half-width required beyond the target mean, in target standard deviations
MIN_GRID_STDS = 8.0


def _positive_finite(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def log_transform(price):
    """Natural log of a strictly positive, finite price."""
    return math.log(_positive_finite(price, "price"))


def scale_shift(scale_factor):
    """Translation of the log price induced by rescaling the price by ``scale_factor``.

    ``scale_shift(a) + scale_shift(b) == scale_shift(a * b)`` up to rounding.
    """
    return math.log(_positive_finite(scale_factor, "scale_factor"))


@dataclass(frozen=True)
class ConstraintSpec:
    """Moment targets for a log-price increment.

    second_moment_k : target for <(ln S'/S)**2>
    first_moment_kprime : target for <ln S'/S>
    """

    second_moment_k: float
    first_moment_kprime: float

    @property
    def variance(self):
        return self.second_moment_k - self.first_moment_kprime**2

    @classmethod
    def from_kernel(cls, kernel):
        return cls(kernel.variance + kernel.mean_shift**2, kernel.mean_shift)


@dataclass(frozen=True)
class MaxEntSolution:
    """Lagrange multipliers of the two-moment maxent problem.

    ``log_normalizer`` is ln of the integral of base * exp(-alpha/2 x^2 + beta x);
    for the closed form the base is Lebesgue measure on the real line.
    """

    alpha: float
    beta: float
    log_normalizer: float
    iterations: int = 0
    residual: float = 0.0

    @property
    def mean_shift(self):
        if self.alpha <= 0.0:
            raise DomainError("implied Gaussian requires alpha > 0")
        return self.beta / self.alpha

    @property
    def variance(self):
        if self.alpha <= 0.0:
            raise DomainError("implied Gaussian requires alpha > 0")
        return 1.0 / self.alpha


@dataclass(frozen=True, eq=False)
class DiscretizedDensity:
    """Probability density sampled on a uniform grid over [grid_lo, grid_hi].

    Weights whose trapezoid integral is off from one by more than 1e-6 are
    rejected; smaller discrepancies are removed by renormalization. Use
    :meth:`normalized` to build a density from unnormalized weights.
    """

    grid_lo: float
    grid_hi: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 3:
            raise DomainError("a density needs a 1-D array of at least 3 weights")
        if not (math.isfinite(self.grid_lo) and math.isfinite(self.grid_hi)
                and self.grid_hi > self.grid_lo):
            raise DomainError("grid bounds must be finite with grid_lo < grid_hi")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise DomainError("density weights must be finite and non-negative")
        dx = (self.grid_hi - self.grid_lo) / (w.size - 1)
        mass = np.trapezoid(w, dx=dx)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"density integrates to {mass!r}, not 1")
        w /= mass
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, grid_lo, grid_hi, weights):
        w = np.asarray(weights, dtype=float)
        dx = (grid_hi - grid_lo) / (w.size - 1)
        mass = np.trapezoid(w, dx=dx)
        if not mass > 0.0:
            raise DomainError("weights have no mass to normalize")
        return cls(grid_lo, grid_hi, w / mass)

    @classmethod
    def from_function(cls, fn, grid_lo, grid_hi, n_points):
        x = np.linspace(grid_lo, grid_hi, n_points)
        return cls.normalized(grid_lo, grid_hi, fn(x))

    @classmethod
    def uniform(cls, grid_lo, grid_hi, n_points):
        return cls.normalized(grid_lo, grid_hi, np.ones(n_points))

    @property
    def n_points(self):
        return self.weights.size

    @property
    def dx(self):
        return (self.grid_hi - self.grid_lo) / (self.n_points - 1)

    @property
    def x(self):
        return np.linspace(self.grid_lo, self.grid_hi, self.n_points)

    def integrate(self, values):
        return float(np.trapezoid(self.weights * values, dx=self.dx))

    def moments(self):
        """First and second raw moments, by trapezoid quadrature."""
        x = self.x
        return self.integrate(x), self.integrate(x * x)

    def same_grid(self, other):
        return (self.n_points == other.n_points and self.grid_lo == other.grid_lo
                and self.grid_hi == other.grid_hi)


def relative_entropy(p, q):
    """Relative entropy -int p ln(p/q) of ``p`` with respect to ``q``.

    Never positive; zero only when the densities coincide.
    """
    if not p.same_grid(q):
        raise GridMismatchError("relative entropy needs densities on an identical grid")
    pw, qw = p.weights, q.weights
    support = pw > 0.0
    if np.any(support & (qw <= 0.0)):
        raise SupportError("p has mass where q vanishes")
    integrand = np.zeros_like(pw)
    integrand[support] = pw[support] * np.log(pw[support] / qw[support])
    return -float(np.trapezoid(integrand, dx=p.dx))


def closed_form_posterior(alpha, beta, dt=1.0):
    """Posterior of the two-moment problem against a flat prior.

    Completing the square gives a Gaussian with mean beta/alpha and variance
    1/alpha. ``dt`` is only carried onto the returned kernel.

    Returns
    -------
    (MaxEntSolution, GaussianKernel)
    """
    alpha = float(alpha)
    beta = float(beta)
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")
    log_z = 0.5 * math.log(2.0 * math.pi / alpha) + 0.5 * beta * beta / alpha
    solution = MaxEntSolution(alpha, beta, log_z)
    return solution, GaussianKernel(beta / alpha, 1.0 / alpha, float(dt))


def multipliers_from_market(params, dt):
    """Closed-form multipliers: alpha = 1/(sigma^2 dt), beta = mu/sigma^2 - 1/2."""
    if not isinstance(params, MarketParams):
        raise TypeError("params must be a MarketParams")
    dt = _positive_finite(dt, "dt")
    s2 = params.sigma * params.sigma
    alpha = 1.0 / (s2 * dt)
    beta = params.mu / s2 - 0.5
    solution, _ = closed_form_posterior(alpha, beta, dt)
    return solution


def _log_partition(base_log, x, a, b, dx):
    # log of trapezoid integral of exp(base_log - a/2 x^2 + b x), shifted for stability
    expo = base_log - 0.5 * a * x * x + b * x
    shift = np.max(expo)
    w = np.exp(expo - shift)
    return math.log(np.trapezoid(w, dx=dx)) + shift, w


def solve_dual(constraints, base, tol=DEFAULT_TOL):
    """Recover (alpha, beta) from moment targets by damped Newton on the dual.

    The tilted density base * exp(-alpha/2 x^2 + beta x) / Z is made to
    reproduce both target moments to within ``tol`` (absolute). Internally the
    variable is standardized with the target mean and standard deviation, so
    the 2x2 Newton system stays well conditioned for any clock interval.

    Raises
    ------
    InfeasibleConstraintsError
        if the targets imply a non-positive variance.
    DomainError
        if the grid does not reach 8 target standard deviations either side
        of the target mean.
    ConvergenceError
        if the residual is still above ``tol`` after 100 iterations.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    k, kp = float(constraints.second_moment_k), float(constraints.first_moment_kprime)
    var_t = k - kp * kp
    if not var_t > 0.0 or not math.isfinite(var_t):
        raise InfeasibleConstraintsError(
            f"second moment {k!r} must exceed the squared first moment {kp * kp!r}")
    std_t = math.sqrt(var_t)
    if kp - MIN_GRID_STDS * std_t < base.grid_lo or kp + MIN_GRID_STDS * std_t > base.grid_hi:
        raise DomainError("grid must extend at least 8 target standard deviations "
                          "beyond the target mean")
    if np.any(base.weights <= 0.0):
        raise SupportError("base density must be strictly positive on the grid")

    x = base.x
    dx = base.dx
    u = (x - kp) / std_t
    base_log = np.log(base.weights)

    def dual(a, b):
        # dual objective for standardized targets E[u] = 0, E[u^2] = 1
        log_z, _ = _log_partition(base_log, u, a, b, dx)
        return log_z + 0.5 * a

    def moments(a, b):
        _, w = _log_partition(base_log, u, a, b, dx)
        w = w / np.trapezoid(w, dx=dx)
        m1 = np.trapezoid(w * u, dx=dx)
        m2 = np.trapezoid(w * u * u, dx=dx)
        m3 = np.trapezoid(w * u**3, dx=dx)
        m4 = np.trapezoid(w * u**4, dx=dx)
        return m1, m2, m3, m4

    def raw_residual(m1, m2):
        # residuals on the original moments
        mean = kp + std_t * m1
        second = var_t * m2 + 2.0 * kp * std_t * m1 + kp * kp
        return max(abs(mean - kp), abs(second - k))

    # warm start: exact if the base were Gaussian
    m_b, s_b = base.moments()
    v_b = s_b - m_b * m_b
    mu_b, vb_u = (m_b - kp) / std_t, v_b / var_t
    a, b = 1.0 - 1.0 / vb_u, -mu_b / vb_u

    residual = math.inf
    for it in range(MAX_NEWTON_ITER + 1):
        m1, m2, m3, m4 = moments(a, b)
        residual = raw_residual(m1, m2)
        if residual <= tol:
            break
        if it == MAX_NEWTON_ITER:
            raise ConvergenceError(
                f"dual Newton did not converge in {MAX_NEWTON_ITER} iterations "
                f"(residual {residual:.3e})", residual=residual, iterations=it)
        # gradient and Hessian of the dual in (a, b); features are (-u^2/2, u)
        g = np.array([0.5 - 0.5 * m2, m1])
        h_aa = 0.25 * (m4 - m2 * m2)
        h_ab = -0.5 * (m3 - m1 * m2)
        h_bb = m2 - m1 * m1
        hess = np.array([[h_aa, h_ab], [h_ab, h_bb]])
        step = np.linalg.solve(hess, -g)
        f0 = dual(a, b)
        slope = float(g @ step)
        t = 1.0
        while True:
            f1 = dual(a + t * step[0], b + t * step[1])
            if f1 <= f0 + 1e-4 * t * slope or t < 1e-12:
                break
            t *= BACKTRACK
        a, b = a + t * step[0], b + t * step[1]

    # back to the original variable: -a/2 u^2 + b u with u = (x - kp)/std
    alpha = a / var_t
    beta = a * kp / var_t + b / std_t
    log_z, _ = _log_partition(base_log, x, alpha, beta, dx)
    return MaxEntSolution(float(alpha), float(beta), float(log_z), iterations=it,
                          residual=float(residual))


def tilted_density(solution, base):
    """The exponential-family density base * exp(-alpha/2 x^2 + beta x) / Z on base's grid."""
    x = base.x
    with np.errstate(divide="ignore"):
        base_log = np.log(base.weights)
    _, w = _log_partition(base_log, x, solution.alpha, solution.beta, base.dx)
    return DiscretizedDensity.normalized(base.grid_lo, base.grid_hi, w)
