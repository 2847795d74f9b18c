"""
Cox Stop-Loss - validate Command
================================

Runs the check battery named in validate.checks and emits one JSON
document holding the reports and the overall verdict. The lemma check
always runs a negative control with broken mark indexing; the control
passes when that run is rejected. Under a constant intensity the pricing
check also compares against the Cramer-Lundberg closed form.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from ...core.errors import ConfigError
from ...core.random import RandomStream
from ...oracle.checks import cramer_lundberg_check, exp_minus_loss, ipp_check, lemma_law_check, pricing_check, \
    u_discount
from ...pricing.results import CheckReport
from ...simulation.intensity import ConstantIntensity
from .base import EXIT_VALIDATION, BaseCommand, CommandResult, register_command, render_json

logger = logging.getLogger(__name__)

IPP_KEY, LEMMA_KEY, CONTROL_KEY = 11, 12, 13


@register_command
class ValidateCommand(BaseCommand):
    name = "validate"
    help_short = "Run the validation battery (exit 1 if any check fails)"

    def _ipp(self) -> list[CheckReport]:
        cfg, contract = self.config, self.config.contract()
        stream = RandomStream(self.seed, 0).child(IPP_KEY)
        return [ipp_check(cfg.intensity_model(), cfg.claim_model(), exp_minus_loss(),
                          u_discount(contract.kappa, contract.T), cfg["validate.n"], stream,
                          contract.T, contract.kappa, cfg["numerics.nodes"], cfg["numerics.grid"])]

    def _lemma(self) -> list[CheckReport]:
        cfg, contract = self.config, self.config.contract()
        model, claim_model = cfg.intensity_model(), cfg.claim_model()
        t = 0.5 * contract.T

        def run(key: int, reindex: bool) -> CheckReport:
            return lemma_law_check(model, claim_model, contract.kappa, contract.T, t, cfg["validate.n"],
                                   RandomStream(self.seed, 0).child(key), cfg["numerics.grid"],
                                   reindex=reindex)

        report = run(LEMMA_KEY, not self.mutate_reindex)
        broken = run(CONTROL_KEY, False)
        control = replace(broken, name="lemma[negative control]", passed=not broken.passed)
        return [report, control]

    def _pricing(self) -> list[CheckReport]:
        cfg = self.config
        model, claim_model = cfg.intensity_model(), cfg.claim_model()
        contract, numerics = cfg.contract(), cfg.numerics()
        report = pricing_check(model, claim_model, contract, numerics, cfg["validate.n"])
        if not isinstance(model, ConstantIntensity):
            logger.info("no closed form for '%s' intensity, skipping the Cramer-Lundberg leg", model.kind)
            return [report]
        return [report, cramer_lundberg_check(model, claim_model, contract, numerics, lhs=report.lhs)]

    def execute(self) -> CommandResult:
        checks = self.config["validate.checks"]
        if not checks:
            raise ConfigError("validate.checks: at least one check is required", key="validate.checks")
        runners = {"ipp": self._ipp, "lemma": self._lemma, "pricing": self._pricing}
        reports: list[CheckReport] = []
        for name in checks:
            reports.extend(runners[name]())

        failed = [r.name for r in reports if not r.passed]
        document = self.document({"reports": [r.to_dict() for r in reports], "passed": not failed})
        if failed:
            logger.warning("validation failed: %s", ", ".join(failed))
            return CommandResult.fail(f"validation failed: {', '.join(failed)}", EXIT_VALIDATION,
                                      render_json(document))
        return CommandResult.ok(render_json(document))
