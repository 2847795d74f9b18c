"""
Cox Stop-Loss - price / bench Commands
======================================

price: premium of a stop-loss layer, or E[L_hat h(L)] for a named h.
bench: the same estimate on doubling prefixes of the outer paths.
"""

from __future__ import annotations

import logging

from ...pricing.engine import convergence_trace, malliavin_expectation, stop_loss_price
from ...pricing.payoffs import CustomH
from .base import BaseCommand, CommandResult, register_command, render_csv, render_json

logger = logging.getLogger(__name__)


@register_command
class PriceCommand(BaseCommand):
    name = "price"
    help_short = "Price the configured contract"
    formats = ("json", "csv")

    def execute(self) -> CommandResult:
        cfg = self.config
        model, claim_model, contract = cfg.intensity_model(), cfg.claim_model(), cfg.contract()
        numerics = cfg.numerics()
        if isinstance(contract.payoff, CustomH):
            result = malliavin_expectation(model, claim_model, contract, numerics)
        else:
            result = stop_loss_price(model, claim_model, contract, numerics)

        if self.output_format == "csv":
            lo, hi = result.ci95
            return CommandResult.ok(render_csv("estimate,std_error,ci95_low,ci95_high",
                                               [result.estimate, result.std_error, lo, hi]))
        return CommandResult.ok(render_json(self.document(result.to_dict())))


@register_command
class BenchCommand(BaseCommand):
    name = "bench"
    help_short = "Convergence trace over doubling numbers of outer paths"
    formats = ("csv", "json")

    def execute(self) -> CommandResult:
        cfg = self.config
        trace = convergence_trace(cfg.intensity_model(), cfg.claim_model(), cfg.contract(), cfg.numerics())
        logger.info("bench: %d trace points", len(trace))
        if self.output_format == "csv":
            rows = [(n, est.value, est.std_error) for n, est in trace]
            return CommandResult.ok(render_csv("n_outer_used,estimate,std_error", rows))
        points = [{"n_outer_used": n, **est.to_dict()} for n, est in trace]
        return CommandResult.ok(render_json(self.document({"trace": points})))
