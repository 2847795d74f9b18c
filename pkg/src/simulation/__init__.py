"""Simulation systems: intensity paths, Cox jumps and losses, building blocks."""

from .block import (
    CompoundDistribution, DiscretizedSeverity, EmpiricalBlock, build_block, panjer_compound_cdf,
    phi_general, phi_interval,
)
from .intensity import (
    ConstantIntensity, DeterministicIntensity, IntensityModel, IntensityPath, LogBrownianIntensity,
    cumulative_at, inverse_cumulative, logbm_joint_density, make_grid, simulate_path,
)
from .loss import (
    ClaimModel, LossScenario, add_jump, f_identity, f_scaled, g_from_f, g_identity_y,
    generalized_loss_at_T, loss_at_T, simulate_jumps,
)

__all__ = [
    "IntensityModel", "ConstantIntensity", "DeterministicIntensity", "LogBrownianIntensity",
    "IntensityPath", "make_grid", "simulate_path", "cumulative_at", "inverse_cumulative",
    "logbm_joint_density",
    "ClaimModel", "LossScenario", "f_identity", "f_scaled", "g_from_f", "g_identity_y",
    "simulate_jumps", "loss_at_T", "generalized_loss_at_T", "add_jump",
    "EmpiricalBlock", "DiscretizedSeverity", "CompoundDistribution", "build_block",
    "phi_interval", "phi_general", "panjer_compound_cdf",
]
