"""Log-price dynamics: transition kernels, path sampling and terminal laws.

The log price x = ln S moves by Gaussian increments with mean (mu - sigma^2/2) dt
and variance sigma^2 dt. Kernels compose by adding means and variances, which
makes the finite-horizon law lognormal in price whenever mu and sigma are
constant.
"""

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import rng
from .errors import DomainError
from .params import GaussianKernel, MarketParams

__all__ = [
    "MarketParams",
    "GaussianKernel",
    "PathEnsemble",
    "LognormalSpec",
    "transition_kernel",
    "price_transition_density",
    "sample_paths",
    "compose_kernels",
    "terminal_distribution",
]

_DEFAULT_CHUNK = 1 << 18


def _check_positive(value, name):
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def transition_kernel(params, dt):
    """Kernel of ln(S'/S) over an interval ``dt``."""
    _check_positive(dt, "dt")
    s2 = params.sigma * params.sigma
    return GaussianKernel((params.mu - 0.5 * s2) * dt, s2 * dt, float(dt))


def compose_kernels(k1, k2):
    """Chapman-Kolmogorov composition of two Gaussian kernels."""
    return GaussianKernel(k1.mean_shift + k2.mean_shift, k1.variance + k2.variance,
                          k1.dt + k2.dt)


def price_transition_density(kernel, s_from, s_to):
    """Lognormal density of the price ``s_to`` reached from ``s_from``.

    The log-price density divided by the Jacobian factor ``s_to``.
    """
    s_from = np.asarray(s_from, dtype=float)
    s_to = np.asarray(s_to, dtype=float)
    if np.any(s_from <= 0.0) or np.any(s_to <= 0.0):
        raise DomainError("prices must be strictly positive")
    return kernel.log_density(np.log(s_to), np.log(s_from)) / s_to


@dataclass(frozen=True)
class LognormalSpec:
    """Law of S_T with ln S_T ~ N(log_mean, log_std**2)."""

    log_mean: float
    log_std: float

    def __post_init__(self):
        if not (math.isfinite(self.log_mean) and math.isfinite(self.log_std)):
            raise DomainError("lognormal parameters must be finite")
        if self.log_std <= 0.0:
            raise DomainError("log_std must be > 0")

    def mean(self):
        return math.exp(self.log_mean + 0.5 * self.log_std**2)

    def log_pdf(self, x):
        """Normal density of the log price."""
        z = (np.asarray(x, dtype=float) - self.log_mean) / self.log_std
        return np.exp(-0.5 * z * z) / (self.log_std * math.sqrt(2.0 * math.pi))

    def log_cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.log_mean) / self.log_std)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0.0
        out[pos] = self.log_pdf(np.log(s[pos])) / s[pos]
        return out


def terminal_distribution(params, s0, t_final, risk_neutral=False):
    """Lognormal law of S at ``t_final`` starting from ``s0``.

    The drift is ``params.mu`` under the physical measure and
    ``params.risk_free_rate`` when ``risk_neutral`` is set.
    """
    _check_positive(s0, "s0")
    _check_positive(t_final, "t_final")
    drift = params.risk_free_rate if risk_neutral else params.mu
    s2 = params.sigma * params.sigma
    return LognormalSpec(math.log(s0) + (drift - 0.5 * s2) * t_final,
                         params.sigma * math.sqrt(t_final))


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Sampled log-price paths; row i is path i, column j is time ``times[j]``."""

    initial_price: float
    times: np.ndarray
    log_prices: np.ndarray
    seed: int
    params: MarketParams = None

    @property
    def n_paths(self):
        return self.log_prices.shape[0]

    @property
    def prices(self):
        return np.exp(self.log_prices)

    def terminal_log_prices(self):
        return self.log_prices[:, -1]

    def to_csv(self, fh=None):
        """Write the ensemble as CSV; returns the text when ``fh`` is None.

        Layout: a ``# seed=... s0=... mu=... sigma=...`` metadata line, a
        header of the sample times, then one row of log prices per path.
        Numbers carry 17 significant digits.
        """
        out = io.StringIO() if fh is None else fh
        mu = self.params.mu if self.params is not None else float("nan")
        sigma = self.params.sigma if self.params is not None else float("nan")
        out.write(f"# seed={self.seed} s0={self.initial_price:.17g} "
                  f"mu={mu:.17g} sigma={sigma:.17g}\n")
        out.write(",".join(f"{t:.17g}" for t in self.times) + "\n")
        for row in self.log_prices:
            out.write(",".join(f"{v:.17g}" for v in row) + "\n")
        if fh is None:
            return out.getvalue()
        return None

    @classmethod
    def from_csv(cls, fh):
        meta_line = fh.readline()
        if not meta_line.startswith("#"):
            raise ValueError("missing metadata line")
        meta = dict(item.split("=", 1) for item in meta_line[1:].split())
        times = np.array([float(v) for v in fh.readline().strip().split(",")])
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        params = None
        if not (math.isnan(float(meta["mu"])) or math.isnan(float(meta["sigma"]))):
            params = MarketParams(float(meta["mu"]), float(meta["sigma"]))
        return cls(float(meta["s0"]), times, rows, int(meta["seed"]), params)


def sample_paths(params, s0, horizon, n_steps, n_paths, seed, chunk_size=None):
    """Simulate ``n_paths`` log-price paths on a uniform grid of ``n_steps`` steps.

    Gaussian increments are drawn from the counter-based generator keyed by
    (seed, path index, step index), so the ensemble is independent of
    ``chunk_size`` and of any path-level parallel split.
    """
    _check_positive(s0, "s0")
    _check_positive(horizon, "horizon")
    if int(n_steps) != n_steps or n_steps < 1:
        raise DomainError(f"n_steps must be a positive integer, got {n_steps!r}")
    if int(n_paths) != n_paths or n_paths < 1:
        raise DomainError(f"n_paths must be a positive integer, got {n_paths!r}")
    n_steps, n_paths = int(n_steps), int(n_paths)
    chunk = _DEFAULT_CHUNK if chunk_size is None else max(1, int(chunk_size))

    dt = horizon / n_steps
    kernel = transition_kernel(params, dt)
    sd = kernel.std
    x0 = math.log(s0)
    steps = np.arange(n_steps, dtype=np.uint64)

    log_prices = np.empty((n_paths, n_steps + 1))
    log_prices[:, 0] = x0
    for start in range(0, n_paths, chunk):
        stop = min(start + chunk, n_paths)
        paths = np.arange(start, stop, dtype=np.uint64)[:, None]
        z = rng.standard_normals(seed, paths, steps[None, :])
        increments = kernel.mean_shift + sd * z
        log_prices[start:stop, 1:] = x0 + np.cumsum(increments, axis=1)
    times = np.arange(n_steps + 1) * dt
    times[-1] = horizon
    return PathEnsemble(float(s0), times, log_prices, int(seed), params)
