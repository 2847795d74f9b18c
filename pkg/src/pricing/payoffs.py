"""
Cox Stop-Loss - Payoffs and Contracts
=====================================

Payoff maps h for the building block, a registry of named payoffs used
by the configuration layer, and the reinsurance contract types.

Usage:
    h = make_payoff("indicator", K=1.0, M=2.0)
    contract = Contract(T=1.0, kappa=0.0, payoff=StopLoss(K=1.0, M=2.0))
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core.errors import ParameterDomainError, PayoffError


class Payoff(ABC):
    """
    A nonnegative payoff map h evaluated elementwise on numpy arrays.

    shape is "convex", "concave", "affine" or None and drives the Jensen
    bound. `interval` and `above` expose indicator structure for the
    binary-search evaluation of the building block.
    """

    name: str = ""
    shape: str | None = None
    interval: tuple[float, float] | None = None
    above: float | None = None

    @abstractmethod
    def __call__(self, z: np.ndarray) -> np.ndarray:
        pass

    def describe(self) -> dict:
        return {"name": self.name}


class IndicatorPayoff(Payoff):
    """1 on the closed interval [K, M]."""

    name = "indicator"

    def __init__(self, K: float, M: float):
        if K > M:
            raise PayoffError(f"indicator needs K <= M, got K={K}, M={M}")
        self.interval = (float(K), float(M))

    def __call__(self, z):
        K, M = self.interval
        z = np.asarray(z, dtype=float)
        return ((z >= K) & (z <= M)).astype(float)

    def describe(self) -> dict:
        return {"name": self.name, "K": self.interval[0], "M": self.interval[1]}


class ExceedancePayoff(Payoff):
    """1 on the open half-line (K, inf)."""

    name = "exceedance"

    def __init__(self, K: float):
        self.above = float(K)

    def __call__(self, z):
        return (np.asarray(z, dtype=float) > self.above).astype(float)

    def describe(self) -> dict:
        return {"name": self.name, "K": self.above}


class FunctionPayoff(Payoff):
    """Payoff wrapping a vectorized function."""

    def __init__(self, name: str, fn: Callable[[np.ndarray], np.ndarray], shape: str | None = None,
                 **params: float):
        self.name = name
        self.fn = fn
        self.shape = shape
        self.params = params

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


# === Registry ===

PayoffFactory = Callable[..., Payoff]
_PAYOFFS: dict[str, PayoffFactory] = {}


def register_payoff(name: str):
    """Decorator registering a payoff factory under a name."""
    def wrap(factory: PayoffFactory) -> PayoffFactory:
        _PAYOFFS[name] = factory
        return factory
    return wrap


@register_payoff("indicator")
def _indicator(K: float = 1.0, M: float = 2.0, **_) -> Payoff:
    return IndicatorPayoff(K, M)


@register_payoff("exceedance")
def _exceedance(K: float = 1.0, **_) -> Payoff:
    return ExceedancePayoff(K)


@register_payoff("call")
def _call(strike: float = 0.0, **_) -> Payoff:
    return FunctionPayoff("call", lambda z: np.maximum(z - strike, 0.0), "convex", strike=strike)


@register_payoff("put")
def _put(strike: float = 0.0, **_) -> Payoff:
    return FunctionPayoff("put", lambda z: np.maximum(strike - z, 0.0), "convex", strike=strike)


@register_payoff("square")
def _square(**_) -> Payoff:
    return FunctionPayoff("square", np.square, "convex")


@register_payoff("sqrt")
def _sqrt(**_) -> Payoff:
    return FunctionPayoff("sqrt", lambda z: np.sqrt(np.maximum(z, 0.0)), "concave")


@register_payoff("identity")
def _identity(**_) -> Payoff:
    return FunctionPayoff("identity", lambda z: z.copy(), "affine")


@register_payoff("one")
def _one(**_) -> Payoff:
    return FunctionPayoff("one", np.ones_like, "affine")


@register_payoff("zero")
def _zero(**_) -> Payoff:
    return FunctionPayoff("zero", np.zeros_like, "affine")


def payoff_names() -> list[str]:
    return sorted(_PAYOFFS)


def make_payoff(name: str, **params: float) -> Payoff:
    """Build a registered payoff; unknown names raise ParameterDomainError."""
    try:
        factory = _PAYOFFS[name]
    except KeyError:
        raise ParameterDomainError(f"unknown payoff '{name}' (known: {', '.join(payoff_names())})") from None
    return factory(**params)


# === Contracts ===


@dataclass(frozen=True)
class StopLoss:
    """Layer [K, M] on the loss: pays min(max(L - K, 0), M - K)."""

    K: float
    M: float = math.inf

    def __post_init__(self):
        if self.K > self.M:
            raise PayoffError(f"stop-loss layer needs K <= M, got K={self.K}, M={self.M}")

    def payout(self, loss, generalized=None):
        loss = np.asarray(loss, dtype=float)
        return np.clip(loss - self.K, 0.0, self.M - self.K)

    def describe(self) -> dict:
        return {"kind": "stop_loss", "K": self.K, "M": self.M}


@dataclass(frozen=True)
class GeneralizedStopLoss:
    """
    Layer paying the generalized loss when the loss triggers.

    trigger "interval" pays L_hat 1_{L in [K, M]} - K 1_{L in [K, M]} + (M - K) 1_{L > M};
    "exceedance" replaces the first indicator by 1_{L > K}.
    """

    K: float
    M: float = math.inf
    trigger: str = "interval"

    def __post_init__(self):
        if self.K > self.M:
            raise PayoffError(f"stop-loss layer needs K <= M, got K={self.K}, M={self.M}")
        if self.trigger not in ("interval", "exceedance"):
            raise ParameterDomainError(f"unknown trigger '{self.trigger}'")

    def trigger_payoff(self) -> Payoff:
        if self.trigger == "interval":
            return IndicatorPayoff(self.K, self.M)
        return ExceedancePayoff(self.K)

    def payout(self, loss, generalized):
        loss = np.asarray(loss, dtype=float)
        trigger = self.trigger_payoff()(loss)
        in_layer = IndicatorPayoff(self.K, self.M)(loss)
        cap = 0.0 if math.isinf(self.M) else (self.M - self.K)
        return (np.asarray(generalized, dtype=float) * trigger - self.K * in_layer
                + cap * (loss > self.M))

    def describe(self) -> dict:
        return {"kind": "generalized_stop_loss", "K": self.K, "M": self.M, "trigger": self.trigger}


@dataclass(frozen=True)
class CustomH:
    """Plain expectation E[L_hat h(L)] for a user payoff."""

    h: Payoff

    def describe(self) -> dict:
        return {"kind": "custom", "h": self.h.describe()}


PayoffSpec = StopLoss | GeneralizedStopLoss | CustomH


@dataclass(frozen=True)
class Contract:
    """Horizon, discount rate and payoff of a reinsurance contract."""

    T: float
    kappa: float = 0.0
    payoff: PayoffSpec = StopLoss(1.0, 2.0)

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ParameterDomainError(f"horizon T must be positive, got {self.T}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ParameterDomainError(f"discount rate must be nonnegative, got {self.kappa}")

    def describe(self) -> dict:
        return {"T": self.T, "kappa": self.kappa, "payoff": self.payoff.describe()}
