"""
Cox Stop-Loss - es Command
==========================

Expected shortfall of the loss at level es.alpha.

simulated: es.n_samples unconditional losses.
analytic:  exact compound law for constant intensity, f = x and kappa = 0
           (a scaled Poisson law for constant claims, a Panjer lattice
           otherwise).
"""

from __future__ import annotations

import logging

from ...core.config import RunConfig
from ...core.errors import ConfigError
from ...core.random import Constant, RandomStream
from ...pricing.risk import DiscreteLaw, expected_shortfall, var_quantiles
from ...simulation.block import DiscretizedSeverity, panjer_compound_cdf
from ...simulation.intensity import ConstantIntensity
from ...simulation.loss import f_identity, simulate_unconditional
from .base import BaseCommand, CommandResult, register_command, render_csv, render_json

logger = logging.getLogger(__name__)

LATTICE_STEP = 0.01


def analytic_law(config: RunConfig) -> DiscreteLaw:
    model, claim_model = config.intensity_model(), config.claim_model()
    contract = config.contract()
    if not isinstance(model, ConstantIntensity) or claim_model.f is not f_identity or contract.kappa != 0:
        raise ConfigError("es.mode: analytic mode needs a constant intensity, claims.f = identity "
                          "and contract.kappa = 0", key="es.mode")
    mean_count = model.lambda0 * contract.T
    marginal = claim_model.pair_spec.marginal_eps
    if isinstance(marginal, Constant):
        return DiscreteLaw.poisson(mean_count, scale=marginal.value)
    severity = DiscretizedSeverity.from_marginal(marginal, LATTICE_STEP)
    return DiscreteLaw.from_compound(panjer_compound_cdf(mean_count, severity))


@register_command
class EsCommand(BaseCommand):
    name = "es"
    help_short = "Expected shortfall and V@R quantiles of the loss"
    formats = ("json", "csv")

    def execute(self) -> CommandResult:
        cfg = self.config
        alpha = cfg["es.alpha"]
        if not (0.0 < alpha < 1.0):
            raise ConfigError(f"es.alpha: must lie in (0, 1), got {alpha}", key="es.alpha")

        if cfg["es.mode"] == "analytic":
            data = analytic_law(cfg)
        else:
            contract = cfg.contract()
            batch = simulate_unconditional(cfg.intensity_model(), cfg.claim_model(), contract.kappa,
                                           contract.T, cfg["es.n_samples"], RandomStream(self.seed, 0),
                                           cfg["numerics.grid"])
            data = batch.loss
        quantiles = var_quantiles(data, alpha)
        shortfall = expected_shortfall(data, alpha, strict=cfg["es.strict"])
        logger.info("es: alpha=%g beta=%g es=%g", alpha, shortfall.beta, shortfall.value)

        if self.output_format == "csv":
            return CommandResult.ok(render_csv("alpha,beta,p_below,es,std_error",
                                               [alpha, shortfall.beta, shortfall.p_below,
                                                shortfall.value, shortfall.std_error]))
        body = {"alpha": alpha, "mode": cfg["es.mode"], **shortfall.to_dict(), **quantiles.to_dict()}
        return CommandResult.ok(render_json(self.document(body)))
