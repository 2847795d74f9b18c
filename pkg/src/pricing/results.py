"""
Cox Stop-Loss - Result Types
============================

Value types returned by the pricer and the validation checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import ParameterDomainError


def _json_float(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    std_error: float = 0.0

    @classmethod
    def from_samples(cls, samples) -> Estimate:
        """Sample mean and standard error of the mean (inf for a single sample)."""
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if samples.size == 0:
            raise ParameterDomainError("cannot estimate from an empty sample")
        if samples.size == 1:
            return cls(float(samples[0]), math.inf)
        return cls(float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(samples.size)))

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - 1.96 * self.std_error, self.value + 1.96 * self.std_error)

    def to_dict(self) -> dict:
        return {"value": _json_float(self.value), "std_error": _json_float(self.std_error)}


def discrepancy(a: Estimate, b: Estimate) -> float:
    """|a - b| in units of the combined standard error."""
    gap = abs(a.value - b.value)
    scale = math.hypot(a.std_error, b.std_error)
    if scale == 0.0:
        return 0.0 if gap == 0.0 else math.inf
    return gap / scale


@dataclass(frozen=True)
class Budget:
    n_outer: int
    n_inner: int
    n_mu: int
    nodes: int

    def to_dict(self) -> dict:
        return {"n_outer": self.n_outer, "n_inner": self.n_inner, "n_mu": self.n_mu, "nodes": self.nodes}


@dataclass(frozen=True)
class PricingResult:
    """
    Price (or bound) with its standard error over outer paths.

    components holds the separately estimated terms of a premium
    (expectation term, layer probabilities, ...).
    """

    estimate: float
    std_error: float
    budget: Budget
    seed: int
    label: str = "price"
    components: dict[str, Estimate] = field(default_factory=dict)

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.estimate - 1.96 * self.std_error, self.estimate + 1.96 * self.std_error)

    def as_estimate(self) -> Estimate:
        return Estimate(self.estimate, self.std_error)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "label": self.label,
            "estimate": _json_float(self.estimate),
            "std_error": _json_float(self.std_error),
            "ci95": [_json_float(lo), _json_float(hi)],
            "budget": self.budget.to_dict(),
            "seed": self.seed,
            "components": {name: est.to_dict() for name, est in self.components.items()},
        }


@dataclass(frozen=True)
class Comparison:
    """One two-sample test inside a law-equality check."""

    name: str
    statistic: float
    pvalue: float

    def to_dict(self) -> dict:
        return {"name": self.name, "statistic": self.statistic, "pvalue": self.pvalue}


@dataclass(frozen=True)
class CheckReport:
    """
    Outcome of one validation check.

    Estimate checks pass when the gap is within `threshold` combined
    standard errors plus an absolute `allowance`; law checks pass when
    every comparison has a p-value at or above `significance`.
    """

    name: str
    lhs: Estimate
    rhs: Estimate
    discrepancy: float
    passed: bool
    seed: int
    threshold: float = 3.0
    significance: float | None = None
    comparisons: tuple[Comparison, ...] = ()
    allowance: float = 0.0

    @classmethod
    def from_estimates(cls, name: str, lhs: Estimate, rhs: Estimate, seed: int,
                       threshold: float = 3.0, allowance: float = 0.0) -> CheckReport:
        gap = abs(lhs.value - rhs.value)
        scale = math.hypot(lhs.std_error, rhs.std_error)
        passed = gap <= threshold * scale + allowance
        return cls(name, lhs, rhs, discrepancy(lhs, rhs), passed, seed, threshold, allowance=allowance)

    @classmethod
    def from_comparisons(cls, name: str, lhs: Estimate, rhs: Estimate, comparisons: list[Comparison],
                         seed: int, significance: float = 0.01) -> CheckReport:
        passed = all(c.pvalue >= significance for c in comparisons)
        return cls(name, lhs, rhs, discrepancy(lhs, rhs), passed, seed,
                   significance=significance, comparisons=tuple(comparisons))

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "discrepancy": _json_float(self.discrepancy),
            "verdict": self.verdict,
            "threshold": self.threshold,
            "seed": self.seed,
        }
        if self.significance is not None:
            data["significance"] = self.significance
            data["comparisons"] = [c.to_dict() for c in self.comparisons]
        if self.allowance > 0:
            data["allowance"] = self.allowance
        return data
