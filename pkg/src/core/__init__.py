"""Core systems: errors, random streams and claim laws, time quadrature."""

from .errors import (
    CollisionError, ConfigError, ContractViolationError, DegenerateConditioningError, DomainError,
    EngineError, GridError, InputError, ModelError, NumericError, ParameterDomainError, PayoffError,
    PrecisionLossError, TruncationError,
)
from .quadrature import QuadratureRule, time_nodes
from .random import (
    ClaimPairSpec, Clayton, Constant, ExplicitLink, Exponential, Gamma, Independent, MarginalSpec,
    Pareto, RandomStream, Weibull, clayton_cdf, clayton_density, sample_claim_pair, sample_marginal,
    weibull_link,
)

__all__ = [
    "EngineError", "ParameterDomainError", "DomainError", "GridError", "CollisionError",
    "PayoffError", "InputError", "TruncationError", "ModelError", "NumericError",
    "PrecisionLossError", "DegenerateConditioningError", "ContractViolationError", "ConfigError",
    "QuadratureRule", "time_nodes",
    "RandomStream", "MarginalSpec", "Constant", "Exponential", "Pareto", "Weibull", "Gamma",
    "Independent", "Clayton", "ExplicitLink", "weibull_link", "ClaimPairSpec",
    "sample_marginal", "sample_claim_pair", "clayton_cdf", "clayton_density",
]
