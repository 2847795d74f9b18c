"""
Cox Stop-Loss - block Command
=============================

Empirical CDF of L_T: conditional on one intensity path (block.mode =
conditional) or unconditional, from numerics.n_inner replicates.
"""

from __future__ import annotations

from ...core.random import RandomStream
from ...pricing.engine import BLOCK_KEY, PATH_KEY
from ...simulation.block import EmpiricalBlock, build_block
from ...simulation.intensity import make_grid, simulate_path
from ...simulation.loss import simulate_unconditional
from .base import BaseCommand, CommandResult, register_command, render_csv, render_json


@register_command
class BlockCommand(BaseCommand):
    name = "block"
    help_short = "Export the empirical CDF of the loss (x,cdf)"
    formats = ("csv", "json")

    def build(self) -> EmpiricalBlock:
        cfg = self.config
        model, claim_model, contract = cfg.intensity_model(), cfg.claim_model(), cfg.contract()
        n, root = cfg["numerics.n_inner"], RandomStream(self.seed, 0)
        if cfg["block.mode"] == "unconditional":
            batch = simulate_unconditional(model, claim_model, contract.kappa, contract.T, n, root,
                                           cfg["numerics.grid"])
            return EmpiricalBlock(batch.loss)
        path = simulate_path(model, make_grid(contract.T, cfg["numerics.grid"]), root.child(PATH_KEY))
        return build_block(path, claim_model, contract.kappa, n, root.child(BLOCK_KEY))

    def execute(self) -> CommandResult:
        values, cdf = self.build().cdf_table()
        if self.output_format == "csv":
            return CommandResult.ok(render_csv("x,cdf", list(zip(values, cdf))))
        body = {"mode": self.config["block.mode"], "x": values.tolist(), "cdf": cdf.tolist()}
        return CommandResult.ok(render_json(self.document(body)))
