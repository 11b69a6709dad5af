"""carpnet: cascading alternating renewal processes on interdependent risk networks.

The package models systemic risks as a network of coupled two-state renewal
processes: each risk switches between dormant and active under internal
pressure, contagion from active neighbors, and recovery. It provides
maximum-likelihood parameter fitting from observed activity panels,
mean-field steady-state analysis with a transition-type decomposition,
seeded Monte Carlo cascade simulation, and knockout-based influence
analysis, all exposed both as a library and through the ``carpnet`` CLI.
"""

__version__ = "0.1.0"

from .domain import (
    CATEGORIES,
    DEFAULT_EPSILON,
    Category,
    EventPanel,
    ModelParams,
    NormalizationScheme,
    Risk,
    RiskNetwork,
    load_network,
    load_panel,
    normalize_likelihoods,
    save_network,
    save_panel,
)
from .dynamics import (
    NetworkState,
    PoissonProbs,
    activation_prob,
    philox_stream,
    poisson_probs,
    prob_activate,
    step,
    survival_prob,
)
from .errors import CarpError, ConvergenceError, ValidationError
from .influence import (
    KNOCKOUT_FLOOR,
    CategoryInfluence,
    InfluenceMatrix,
    category_influence,
    influence_matrix,
    knockout,
)
from .meanfield import (
    InitMode,
    SteadyState,
    TransitionFractions,
    ext_int_ratio,
    fixed_point,
    stationarity_residual,
    transition_fractions,
)
from .mle import (
    FitConfig,
    FitResult,
    PanelStats,
    fit,
    log_likelihood,
    log_likelihood_gradient,
)
from .montecarlo import (
    FrequencyTrajectory,
    SimulationConfig,
    TemporalInfluence,
    simulate,
    temporal_influence,
)
from .synth import generate_synthetic

__all__ = [
    "CATEGORIES",
    "DEFAULT_EPSILON",
    "KNOCKOUT_FLOOR",
    "CarpError",
    "Category",
    "CategoryInfluence",
    "ConvergenceError",
    "EventPanel",
    "FitConfig",
    "FitResult",
    "FrequencyTrajectory",
    "InfluenceMatrix",
    "InitMode",
    "ModelParams",
    "NetworkState",
    "NormalizationScheme",
    "PanelStats",
    "PoissonProbs",
    "Risk",
    "RiskNetwork",
    "SimulationConfig",
    "SteadyState",
    "TemporalInfluence",
    "TransitionFractions",
    "ValidationError",
    "activation_prob",
    "category_influence",
    "ext_int_ratio",
    "fit",
    "fixed_point",
    "generate_synthetic",
    "influence_matrix",
    "knockout",
    "load_network",
    "load_panel",
    "log_likelihood",
    "log_likelihood_gradient",
    "normalize_likelihoods",
    "philox_stream",
    "poisson_probs",
    "prob_activate",
    "save_network",
    "save_panel",
    "simulate",
    "stationarity_residual",
    "step",
    "survival_prob",
    "temporal_influence",
    "transition_fractions",
]
