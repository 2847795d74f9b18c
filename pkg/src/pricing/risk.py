"""
Cox Stop-Loss - Risk Measures
=============================

Value-at-risk quantiles and the expected shortfall of the loss, from a
sample or from an exact discrete law.

Conventions:
    q_plus(a)  = inf{x : P[L <= x] > a}
    q_minus(a) = inf{x : P[L <= x] >= a}
    VaR_a      = -q_plus(a)
    ES_a       = -E[L 1_{L < beta}] / P[L < beta],  beta = q_plus(a)

The strict inequality in ES can be relaxed to L <= beta.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..core.errors import DegenerateConditioningError, DomainError, ParameterDomainError
from ..simulation.block import CompoundDistribution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite discrete law: sorted distinct values with their probabilities."""

    values: np.ndarray
    pmf: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        pmf = np.asarray(self.pmf, dtype=float).reshape(-1)
        if values.size == 0 or values.shape != pmf.shape:
            raise ParameterDomainError("discrete law needs matching nonempty values and pmf")
        if np.any(np.diff(values) <= 0) or np.any(pmf < 0):
            raise ParameterDomainError("discrete law needs increasing values and nonnegative pmf")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def poisson(cls, mean: float, scale: float = 1.0, tail: float = 1e-16) -> DiscreteLaw:
        """Law of scale * N with N ~ Poisson(mean), truncated where the tail is below `tail`."""
        if not mean > 0:
            raise ParameterDomainError(f"Poisson mean must be positive, got {mean}")
        top = int(stats.poisson.isf(tail, mean)) + 1
        k = np.arange(top + 1)
        return cls(scale * k, stats.poisson.pmf(k, mean))

    @classmethod
    def from_compound(cls, compound: CompoundDistribution) -> DiscreteLaw:
        return cls(compound.atoms, compound.pmf)

    @property
    def cdf_values(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self) -> float:
        return float(math.fsum(self.values * self.pmf))


@dataclass(frozen=True)
class Quantiles:
    q_plus: float
    q_minus: float
    var: float

    def to_dict(self) -> dict:
        return {"q_plus": self.q_plus, "q_minus": self.q_minus, "var": self.var}


@dataclass(frozen=True)
class ShortfallResult:
    """ES with its threshold beta, P[L < beta] and (for samples) a delta-method SE."""

    value: float
    beta: float
    p_below: float
    std_error: float = 0.0

    def to_dict(self) -> dict:
        return {"es": self.value, "beta": self.beta, "p_below": self.p_below, "std_error": self.std_error}


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"level alpha must lie in (0, 1), got {alpha}")


def _as_table(data: np.ndarray | DiscreteLaw) -> tuple[np.ndarray, np.ndarray]:
    """Sorted support and CDF at each support point."""
    if isinstance(data, DiscreteLaw):
        return data.values, data.cdf_values
    x = np.sort(np.asarray(data, dtype=float).reshape(-1))
    if x.size == 0:
        raise ParameterDomainError("quantiles need a nonempty sample")
    return x, np.arange(1, x.size + 1) / x.size


def var_quantiles(data: np.ndarray | DiscreteLaw, alpha: float) -> Quantiles:
    """Upper and lower alpha-quantiles and VaR = -q_plus."""
    _check_alpha(alpha)
    x, cdf = _as_table(data)
    i_plus = min(int(np.searchsorted(cdf, alpha, side="right")), x.size - 1)
    i_minus = min(int(np.searchsorted(cdf, alpha, side="left")), x.size - 1)
    q_plus = float(x[i_plus])
    return Quantiles(q_plus=q_plus, q_minus=float(x[i_minus]), var=-q_plus)


def expected_shortfall(data: np.ndarray | DiscreteLaw, alpha: float, strict: bool = True) -> ShortfallResult:
    """
    ES_alpha(-L) = -E[L 1_{L < beta}] / P[L < beta] with beta = q_plus(alpha).

    Sums are exact for a DiscreteLaw. An empty conditioning event raises
    DegenerateConditioningError (a point-mass loss does so under the strict
    convention).
    """
    beta = var_quantiles(data, alpha).q_plus
    if isinstance(data, DiscreteLaw):
        mask = data.values < beta if strict else data.values <= beta
        p_below = math.fsum(data.pmf[mask])
        if p_below <= 0.0:
            raise DegenerateConditioningError(f"P[L < {beta}] = 0", {"beta": beta, "alpha": alpha})
        head = math.fsum(data.values[mask] * data.pmf[mask])
        return ShortfallResult(-head / p_below, beta, p_below)

    x = np.asarray(data, dtype=float).reshape(-1)
    inside = (x < beta) if strict else (x <= beta)
    p_below = float(np.mean(inside))
    if p_below == 0.0:
        raise DegenerateConditioningError(f"no sample below beta={beta}", {"beta": beta, "alpha": alpha})
    ratio = float(np.mean(x * inside)) / p_below
    # delta method for a ratio of means
    residual = inside * (x - ratio)
    se = float(np.std(residual, ddof=1) / (p_below * math.sqrt(x.size))) if x.size > 1 else math.inf
    logger.debug("ES alpha=%g beta=%g p_below=%g", alpha, beta, p_below)
    return ShortfallResult(-ratio, beta, p_below, se)
