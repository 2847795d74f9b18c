"""
Cox Stop-Loss - Run Configuration
=================================

A run is described by one JSON object with flat dotted keys:

    {
        "model.kind": "constant",
        "model.lambda0": 1.0,
        "claims.eps.kind": "exponential",
        "contract.K": 1.0,
        "contract.M": 2.0
    }

Every optional key has a default in DEFAULTS; unknown keys are rejected
and every error names the offending key.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..pricing.engine import NumericsConfig
from ..pricing.payoffs import Contract, CustomH, GeneralizedStopLoss, Payoff, StopLoss, make_payoff
from ..simulation.intensity import ConstantIntensity, DeterministicIntensity, IntensityModel, \
    LogBrownianIntensity
from ..simulation.loss import ClaimModel
from .errors import ConfigError, ParameterDomainError, PayoffError
from .quadrature import QuadratureRule
from .random import (
    MARGINALS,
    ClaimPairSpec,
    Clayton,
    Constant,
    Dependence,
    Exponential,
    Gamma,
    Independent,
    MarginalSpec,
    Pareto,
    Weibull,
    weibull_link,
)

logger = logging.getLogger(__name__)

DEFAULTS: dict[str, Any] = {
    "model.kind": "constant",
    "model.lambda0": 1.0,
    "model.beta": 0.5,
    "model.table_t": None,
    "model.table_lambda": None,
    "claims.eps.kind": "exponential",
    "claims.eps.rate": 1.0,
    "claims.eps.scale": 1.0,
    "claims.eps.shape": 2.0,
    "claims.eps.value": 1.0,
    "claims.theta.kind": "exponential",
    "claims.theta.rate": 1.0,
    "claims.theta.scale": 1.0,
    "claims.theta.shape": 2.0,
    "claims.theta.value": 1.0,
    "claims.dependence": "independent",
    "claims.clayton_theta": 2.0,
    "claims.clayton_method": "conditional",
    "claims.link_shape": 1.5,
    "claims.link_scale": 1.0,
    "claims.f": "identity",
    "claims.g": "from_f",
    "contract.T": 1.0,
    "contract.kappa": 0.0,
    "contract.payoff": "stop_loss",
    "contract.K": 1.0,
    "contract.M": 2.0,
    "contract.h": "indicator",
    "contract.strike": 0.0,
    "contract.trigger": "interval",
    "numerics.n_outer": 2000,
    "numerics.n_inner": 1000,
    "numerics.n_mu": 64,
    "numerics.nodes": 64,
    "numerics.quadrature": "gauss_legendre",
    "numerics.grid": 1024,
    "numerics.seed": 20240601,
    "numerics.threads": 1,
    "es.alpha": 0.9,
    "es.mode": "simulated",
    "es.n_samples": 100000,
    "es.strict": True,
    "block.mode": "conditional",
    "validate.checks": ["ipp", "lemma", "pricing"],
    "validate.n": 20000,
    "output.format": "json",
    "output.path": None,
}

CHOICES: dict[str, tuple[str, ...]] = {
    "model.kind": ("constant", "deterministic", "logbrownian"),
    "claims.eps.kind": tuple(MARGINALS),
    "claims.theta.kind": tuple(MARGINALS),
    "claims.dependence": ("independent", "clayton", "weibull_link"),
    "claims.clayton_method": ("conditional", "frailty"),
    "claims.f": ("identity", "scaled"),
    "claims.g": ("from_f", "identity_y"),
    "contract.payoff": ("stop_loss", "generalized_stop_loss", "custom"),
    "contract.h": ("indicator", "exceedance", "call", "put", "square", "sqrt", "identity", "one", "zero"),
    "contract.trigger": ("interval", "exceedance"),
    "numerics.quadrature": tuple(rule.value for rule in QuadratureRule),
    "es.mode": ("simulated", "analytic"),
    "block.mode": ("conditional", "unconditional"),
    "output.format": ("json", "csv"),
}

INT_KEYS = {"numerics.n_outer", "numerics.n_inner", "numerics.n_mu", "numerics.nodes", "numerics.grid",
            "numerics.threads", "es.n_samples", "validate.n"}
CHECK_NAMES = ("ipp", "lemma", "pricing")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _validate_value(key: str, value: Any) -> Any:
    default = DEFAULTS[key]
    if key in CHOICES:
        if value not in CHOICES[key]:
            raise ConfigError(f"{key}: expected one of {', '.join(CHOICES[key])}, got {value!r}", key=key)
        return value
    if key == "contract.M" and (value in ("inf", "Infinity") or value == math.inf):
        return math.inf
    if key in INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(f"{key}: expected a positive integer, got {value!r}", key=key)
        return value
    if key == "numerics.seed":
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ConfigError(f"{key}: expected a nonnegative integer, got {value!r}", key=key)
        return value
    if key in ("model.table_t", "model.table_lambda"):
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"{key}: expected a list of numbers", key=key)
        return [float(v) for v in value]
    if key == "validate.checks":
        if not isinstance(value, list) or any(v not in CHECK_NAMES for v in value):
            raise ConfigError(f"{key}: expected a list drawn from {', '.join(CHECK_NAMES)}", key=key)
        return value
    if key == "output.path":
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{key}: expected a file path", key=key)
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}", key=key)
        return value
    if not _is_number(value) or not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {value!r}", key=key)
    return float(value)


def _validate_combination(values: dict[str, Any]) -> None:
    """Constraints that span several keys."""
    if values["numerics.quadrature"] == "trapezoid" and values["numerics.nodes"] < 2:
        raise ConfigError(f"numerics.nodes: trapezoid quadrature needs at least 2 nodes, "
                          f"got {values['numerics.nodes']}", key="numerics.nodes")


@dataclass
class RunConfig:
    """Effective flat configuration of one CLI run."""

    values: dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS))
    source: str | None = None

    @classmethod
    def from_mapping(cls, data: dict[str, Any], source: str | None = None) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object of dotted keys")
        values = dict(DEFAULTS)
        for key, value in data.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown configuration key '{key}'", key=key)
            values[key] = _validate_value(key, value)
        _validate_combination(values)
        return cls(values, source)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def override(self, flags: dict[str, Any]) -> RunConfig:
        """Apply command-line overrides keyed by dotted name (None leaves a key alone)."""
        values = dict(self.values)
        for key, value in flags.items():
            if value is None:
                continue
            if key not in DEFAULTS:
                raise ConfigError(f"unknown configuration key '{key}'", key=key)
            values[key] = _validate_value(key, value)
        _validate_combination(values)
        return RunConfig(values, self.source)

    def echo(self) -> dict[str, Any]:
        """JSON-safe copy of the effective configuration."""
        return {key: ("inf" if isinstance(value, float) and math.isinf(value) else value)
                for key, value in sorted(self.values.items())}

    # === Builders ===

    def _positive(self, key: str) -> float:
        value = self.values[key]
        if not value > 0:
            raise ConfigError(f"{key}: must be positive, got {value!r}", key=key)
        return value

    def marginal(self, which: str) -> MarginalSpec:
        prefix = f"claims.{which}"
        kind = self.values[f"{prefix}.kind"]

        def p(name: str) -> float:
            return self._positive(f"{prefix}.{name}")

        if kind == "constant":
            return Constant(p("value"))
        if kind == "exponential":
            return Exponential(p("rate"))
        if kind == "pareto":
            return Pareto(p("scale"), p("shape"))
        if kind == "weibull":
            return Weibull(p("shape"), p("scale"))
        if kind == "gamma":
            return Gamma(p("shape"), p("rate"))
        raise ConfigError(f"{prefix}.kind: unsupported marginal '{kind}'", key=f"{prefix}.kind")

    def dependence(self) -> Dependence:
        kind = self.values["claims.dependence"]
        if kind == "clayton":
            return Clayton(self._positive("claims.clayton_theta"), self.values["claims.clayton_method"])
        if kind == "weibull_link":
            return weibull_link(self._positive("claims.link_shape"), self._positive("claims.link_scale"))
        return Independent()

    def claim_pair_spec(self) -> ClaimPairSpec:
        return ClaimPairSpec(self.marginal("eps"), self.marginal("theta"), self.dependence())

    def intensity_model(self) -> IntensityModel:
        kind = self.values["model.kind"]
        try:
            if kind == "constant":
                return ConstantIntensity(self._positive("model.lambda0"))
            if kind == "logbrownian":
                if self.values["model.beta"] == 0:
                    raise ConfigError("model.beta: must be nonzero", key="model.beta")
                return LogBrownianIntensity(self._positive("model.lambda0"), self.values["model.beta"])
            times, values = self.values["model.table_t"], self.values["model.table_lambda"]
            if times is None or values is None:
                raise ConfigError("model.table_t: deterministic intensity needs model.table_t and "
                                  "model.table_lambda", key="model.table_t")
            return DeterministicIntensity(tuple(times), tuple(values))
        except ParameterDomainError as e:
            raise ConfigError(f"model: {e}", key="model.kind") from None

    def claim_model(self) -> ClaimModel:
        return ClaimModel.from_names(self.claim_pair_spec(), self.values["claims.f"], self.values["claims.g"])

    def payoff(self) -> Payoff:
        return make_payoff(self.values["contract.h"], K=self.values["contract.K"],
                           M=self.values["contract.M"], strike=self.values["contract.strike"])

    def contract(self) -> Contract:
        kind, K, M = self.values["contract.payoff"], self.values["contract.K"], self.values["contract.M"]
        try:
            if kind == "stop_loss":
                payoff = StopLoss(K, M)
            elif kind == "generalized_stop_loss":
                payoff = GeneralizedStopLoss(K, M, self.values["contract.trigger"])
            else:
                payoff = CustomH(self.payoff())
            return Contract(self._positive("contract.T"), self.values["contract.kappa"], payoff)
        except PayoffError as e:
            raise ConfigError(f"contract.K: {e}", key="contract.K") from None
        except ParameterDomainError as e:
            raise ConfigError(f"contract.kappa: {e}", key="contract.kappa") from None

    def numerics(self) -> NumericsConfig:
        v = self.values
        return NumericsConfig(
            n_outer=v["numerics.n_outer"],
            n_inner=v["numerics.n_inner"],
            n_mu=v["numerics.n_mu"],
            nodes=v["numerics.nodes"],
            quadrature=QuadratureRule.from_string(v["numerics.quadrature"]),
            grid_points=v["numerics.grid"],
            seed=v["numerics.seed"],
            threads=v["numerics.threads"],
        )


def load_config(path: str | Path | None) -> RunConfig:
    """Read a JSON configuration file; None gives the defaults. OSError propagates."""
    if path is None:
        return RunConfig()
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}", line=e.lineno) from None
    config = RunConfig.from_mapping(data, str(path))
    logger.info("configuration loaded from %s (%d keys set)", path, len(data))
    return config
