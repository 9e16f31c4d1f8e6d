"""Quadratic social selection functions in stochastic actor-oriented network models."""

from .effects import EffectSpec, ParameterVector, change_scores, quadratic_effects
from .estimation import (
    EstimationOptions,
    MoMResult,
    estimate,
    linear_combination_test,
    t_test,
    target_statistics,
    wald_test,
)
from .exceptions import (
    ConfigurationError,
    DegenerateTestError,
    DegenerateWeightsError,
    IngestionError,
    NonUnimodalError,
    SaomError,
    SingularDerivativeError,
    UndefinedNormError,
)
from .gof import GofReport, auxiliary_statistics, gof, gof_all
from .network import (
    ActorCovariate,
    CovariateRange,
    DirectedNetwork,
    NetworkPanel,
    degrees,
    shared_partners,
    toggle,
)
from .selection import (
    LegacySelection,
    QuadraticSelection,
    attraction_weights,
    classify_aspiration,
    classify_sociability,
    optimum_location,
    optimum_value,
    selection_table,
    social_norm,
)
from .simulation import RateParameters, SimOptions, simulate_panel, simulate_period

__version__ = "0.1.0"
