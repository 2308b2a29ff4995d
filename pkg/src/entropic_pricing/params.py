"""Small immutable value types shared by the dynamics, maxent and pricing code."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

__all__ = ["MarketParams", "GaussianKernel"]


@dataclass(frozen=True)
class MarketParams:
    """Per-stock parameters: drift ``mu``, volatility ``sigma`` and the risk-free rate.

    All quantities are annualized (time measured in years).
    """

    mu: float
    sigma: float
    risk_free_rate: float = 0.0

    def __post_init__(self):
        for name in ("mu", "sigma", "risk_free_rate"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma!r}")

    def with_drift(self, mu):
        return replace(self, mu=float(mu))

    def as_dict(self):
        return {"mu": self.mu, "sigma": self.sigma, "risk_free_rate": self.risk_free_rate}


@dataclass(frozen=True)
class GaussianKernel:
    """Normal transition density of the log-price increment ln(S'/S).

    ``variance`` and ``dt`` may be zero only for the identity kernel, which
    is the neutral element of :func:`~entropic_pricing.dynamics.compose_kernels`.
    """

    mean_shift: float
    variance: float
    dt: float

    def __post_init__(self):
        if not (math.isfinite(self.mean_shift) and math.isfinite(self.variance)
                and math.isfinite(self.dt)):
            raise DomainError("kernel fields must be finite")
        if self.variance < 0.0 or self.dt < 0.0:
            raise DomainError("kernel variance and dt must be non-negative")

    @classmethod
    def identity(cls):
        return cls(0.0, 0.0, 0.0)

    @property
    def std(self):
        return math.sqrt(self.variance)

    def log_density(self, x_to, x_from):
        """Density of the log price ``x_to`` given the log price ``x_from``."""
        if self.variance <= 0.0:
            raise DomainError("density of a degenerate (zero-variance) kernel is undefined")
        z = np.asarray(x_to, dtype=float) - np.asarray(x_from, dtype=float) - self.mean_shift
        return np.exp(-0.5 * z * z / self.variance) / math.sqrt(2.0 * math.pi * self.variance)
