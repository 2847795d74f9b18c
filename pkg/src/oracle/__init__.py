"""Validation oracles for the pricing engine."""

from .checks import direct_mc_price, ipp_check, lemma_law_check, poisson_reference, pricing_check

__all__ = ["direct_mc_price", "ipp_check", "lemma_law_check", "poisson_reference", "pricing_check"]
