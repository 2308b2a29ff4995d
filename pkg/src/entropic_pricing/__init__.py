"""Maximum-entropy log-price dynamics and European option pricing."""

from .dynamics import (
    LognormalSpec,
    PathEnsemble,
    compose_kernels,
    price_transition_density,
    sample_paths,
    terminal_distribution,
    transition_kernel,
)
from .fokker_planck import (
    CoefficientField,
    DensityGrid,
    ValueGrid,
    adjoint_consistency_check,
    evolve_backward_value,
    evolve_forward,
    pairing,
)
from .maxent_core import (
    ConstraintSpec,
    DiscretizedDensity,
    MaxEntSolution,
    closed_form_posterior,
    log_transform,
    multipliers_from_market,
    relative_entropy,
    scale_shift,
    solve_dual,
    tilted_density,
)
from .params import GaussianKernel, MarketParams
from .pricing import (
    OptionSpec,
    PDEGrid,
    PricingResult,
    QuadratureGrid,
    bs_call,
    bs_price,
    bs_put,
    d1_d2,
    mc_price,
    parity_gap,
    pde_price,
    pde_value_grids,
    price,
    quadrature_price,
    risk_neutralize,
    std_normal_cdf,
)

__version__ = "0.1.0"
