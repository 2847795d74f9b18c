"""Pricing: payoffs and contracts, the integration-by-parts engine, risk measures."""

from .engine import (
    NumericsConfig, cramer_lundberg_lattice, cramer_lundberg_price, jensen_bound,
    malliavin_expectation, stop_loss_price,
)
from .payoffs import Contract, CustomH, GeneralizedStopLoss, Payoff, StopLoss, make_payoff
from .results import CheckReport, Estimate, PricingResult
from .risk import DiscreteLaw, expected_shortfall, var_quantiles

__all__ = [
    "NumericsConfig", "malliavin_expectation", "stop_loss_price", "cramer_lundberg_price",
    "cramer_lundberg_lattice", "jensen_bound",
    "Contract", "StopLoss", "GeneralizedStopLoss", "CustomH", "Payoff", "make_payoff",
    "Estimate", "PricingResult", "CheckReport",
    "DiscreteLaw", "var_quantiles", "expected_shortfall",
]
