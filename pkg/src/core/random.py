"""
Cox Stop-Loss - Random Streams and Claim Laws
=============================================

Seedable random streams, marginal claim laws and the claim-pair
dependence structures (independence, Clayton copula, explicit link).

Streams are split deterministically from (seed, stream_id, keys) so that
parallel replicates never share state and can be evaluated in any order.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np
from scipy import special

from .errors import DomainError, ParameterDomainError

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_OPEN_DENOM = float(2**52)


@dataclass
class RandomStream:
    """
    Deterministic random stream addressed by (seed, stream_id, keys).

    The stream_id is the replicate index; keys address sub-streams of a
    replicate (path, inner replicates, mark draws, ...). Identical
    addresses reproduce identical variate sequences.

    Usage:
        stream = RandomStream(seed=7, stream_id=12)
        path_stream = stream.child(0)
        u = path_stream.uniform(100)
    """

    seed: int
    stream_id: int = 0
    keys: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sequence = np.random.SeedSequence(
            entropy=[self.seed & _MASK64, self.stream_id & _MASK64],
            spawn_key=tuple(int(k) for k in self.keys),
        )
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def child(self, *keys: int) -> RandomStream:
        """Independent sub-stream; does not consume from this stream."""
        return RandomStream(self.seed, self.stream_id, self.keys + tuple(keys))

    def uniform(self, size: int | tuple[int, ...] | None = None):
        """Uniform variates on [0, 1)."""
        return self.generator.random(size)

    def open_uniform(self, size: int | tuple[int, ...] | None = None):
        """Uniform variates strictly inside (0, 1)."""
        draws = self.generator.integers(0, 2**52, size=size)
        return (draws + 0.5) / _OPEN_DENOM


def _require_positive(owner: str, **params) -> None:
    for name, value in params.items():
        arr = np.asarray(value, dtype=float)
        if arr.size == 0 or not np.all(np.isfinite(arr)) or not np.all(arr > 0):
            raise ParameterDomainError(f"{owner}: parameter '{name}' must be strictly positive, got {value!r}")


# === Marginal laws ===


class MarginalSpec(ABC):
    """
    Marginal law of a claim factor.

    Parameters may be numpy arrays (broadcast against the uniforms), which
    is how the explicit-link dependence builds one law per epsilon.
    """

    kind: ClassVar[str] = ""

    @abstractmethod
    def ppf(self, u):
        """Inverse CDF."""

    @abstractmethod
    def cdf(self, z):
        """Distribution function."""

    @abstractmethod
    def mean(self) -> float:
        """Expectation of the law."""

    def sample(self, stream: RandomStream, size: int | None = None):
        """Draw by inversion of a uniform."""
        return self.ppf(stream.uniform(size))

    def to_dict(self) -> dict:
        data = {"kind": self.kind}
        data.update({k: float(v) for k, v in self.__dict__.items()})
        return data


@dataclass(frozen=True)
class Constant(MarginalSpec):
    """Point mass at value."""

    value: float
    kind: ClassVar[str] = "constant"

    def __post_init__(self):
        _require_positive("Constant", value=self.value)

    def ppf(self, u):
        return np.zeros_like(np.asarray(u, dtype=float)) + self.value

    def cdf(self, z):
        return (np.asarray(z, dtype=float) >= self.value).astype(float)

    def mean(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Exponential(MarginalSpec):
    """Exponential law with rate theta."""

    rate: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        _require_positive("Exponential", rate=self.rate)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def cdf(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        return -np.expm1(-self.rate * z)

    def mean(self) -> float:
        return 1.0 / self.rate


@dataclass(frozen=True)
class Pareto(MarginalSpec):
    """Pareto law with density shape * scale**shape / z**(shape + 1) on z >= scale."""

    scale: float
    shape: float
    kind: ClassVar[str] = "pareto"

    def __post_init__(self):
        _require_positive("Pareto", scale=self.scale, shape=self.shape)

    def ppf(self, u):
        return self.scale * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.shape)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        safe = np.maximum(z, self.scale)
        return np.where(z >= self.scale, 1.0 - (self.scale / safe) ** self.shape, 0.0)

    def mean(self) -> float:
        if self.shape <= 1.0:
            return float("inf")
        return self.shape * self.scale / (self.shape - 1.0)


@dataclass(frozen=True)
class Weibull(MarginalSpec):
    """Weibull law with P[X > z] = exp(-(z / scale) ** shape)."""

    shape: float
    scale: float
    kind: ClassVar[str] = "weibull"

    def __post_init__(self):
        _require_positive("Weibull", shape=self.shape, scale=self.scale)

    def ppf(self, u):
        return self.scale * (-np.log1p(-np.asarray(u, dtype=float))) ** (1.0 / self.shape)

    def cdf(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        return -np.expm1(-((z / self.scale) ** self.shape))

    def mean(self) -> float:
        return float(np.mean(self.scale * special.gamma(1.0 + 1.0 / self.shape)))


@dataclass(frozen=True)
class Gamma(MarginalSpec):
    """
    Gamma law with shape and rate; integer shapes give Erlang laws.

    Direct sampling uses numpy's Marsaglia-Tsang generator; copula
    coordinates go through the regularized incomplete gamma inverse.
    """

    shape: float
    rate: float
    kind: ClassVar[str] = "gamma"

    def __post_init__(self):
        _require_positive("Gamma", shape=self.shape, rate=self.rate)

    def ppf(self, u):
        return special.gammaincinv(self.shape, np.asarray(u, dtype=float)) / self.rate

    def cdf(self, z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        return special.gammainc(self.shape, self.rate * z)

    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, stream: RandomStream, size: int | None = None):
        return stream.generator.gamma(self.shape, 1.0 / self.rate, size)


MARGINALS: dict[str, type[MarginalSpec]] = {
    cls.kind: cls for cls in (Constant, Exponential, Pareto, Weibull, Gamma)
}


def sample_marginal(spec: MarginalSpec, stream: RandomStream) -> float:
    """One variate of the marginal law."""
    return float(spec.sample(stream))


# === Claim-pair dependence ===


@dataclass(frozen=True)
class Independent:
    """Independent coordinates."""

    kind: ClassVar[str] = "independent"

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Clayton:
    """
    Clayton copula C(u, v) = (u**-theta + v**-theta - 1) ** (-1/theta).

    method "conditional" samples by conditional inversion; "frailty"
    mixes two exponentials through a Gamma(1/theta) frailty.
    """

    theta: float
    method: str = "conditional"
    kind: ClassVar[str] = "clayton"

    def __post_init__(self):
        _require_positive("Clayton", theta=self.theta)
        if self.method not in ("conditional", "frailty"):
            raise ParameterDomainError(f"Clayton: unknown sampling method '{self.method}'")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "theta": self.theta, "method": self.method}


@dataclass(frozen=True)
class ExplicitLink:
    """The theta-marginal is built from epsilon by link(eps)."""

    link: Callable[[np.ndarray], MarginalSpec]
    name: str = "custom"
    kind: ClassVar[str] = "link"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name}


def weibull_link(shape: float, scale: float) -> ExplicitLink:
    """theta | eps ~ Weibull(shape, scale * eps)."""
    _require_positive("weibull_link", shape=shape, scale=scale)
    return ExplicitLink(link=lambda eps: Weibull(shape, scale * eps), name=f"weibull_scale({shape},{scale})")


Dependence = Independent | Clayton | ExplicitLink


def clayton_conditional_inverse(u, w, theta: float):
    """
    Second copula coordinate from the first coordinate u and the
    conditional level w: v = ((w**(-theta/(1+theta)) - 1) * u**-theta + 1) ** (-1/theta).
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    a = theta / (1.0 + theta)
    inner = np.expm1(-a * np.log(w)) * np.exp(-theta * np.log(u))
    return np.exp(-np.log1p(inner) / theta)


def _clayton_frailty(stream: RandomStream, theta: float, size: int):
    frailty = stream.generator.gamma(1.0 / theta, 1.0, size)
    exps = stream.generator.exponential(1.0, (2, size))
    uv = np.exp(-np.log1p(exps / frailty) / theta)
    tiny = 1.0 / _OPEN_DENOM
    return np.clip(uv[0], tiny, 1.0 - tiny), np.clip(uv[1], tiny, 1.0 - tiny)


@dataclass(frozen=True)
class ClaimPairSpec:
    """Law mu of the mark pair (eps, theta)."""

    marginal_eps: MarginalSpec
    marginal_theta: MarginalSpec
    dependence: Dependence = field(default_factory=Independent)

    def sample(self, stream: RandomStream, size: int) -> np.ndarray:
        """Array of shape (size, 2) holding (eps, theta) rows."""
        dep = self.dependence
        if isinstance(dep, Independent):
            eps = self.marginal_eps.sample(stream, size)
            theta = self.marginal_theta.sample(stream, size)
        elif isinstance(dep, Clayton):
            if dep.method == "frailty":
                u, v = _clayton_frailty(stream, dep.theta, size)
            else:
                u = stream.open_uniform(size)
                v = clayton_conditional_inverse(u, stream.open_uniform(size), dep.theta)
            eps = self.marginal_eps.ppf(u)
            theta = self.marginal_theta.ppf(v)
        else:
            eps = self.marginal_eps.sample(stream, size)
            theta = dep.link(eps).ppf(stream.open_uniform(size))
        out = np.empty((size, 2))
        out[:, 0] = eps
        out[:, 1] = theta
        return out

    def to_dict(self) -> dict:
        return {
            "eps": self.marginal_eps.to_dict(),
            "theta": self.marginal_theta.to_dict(),
            "dependence": self.dependence.to_dict(),
        }


def sample_claim_pair(spec: ClaimPairSpec, stream: RandomStream) -> tuple[float, float]:
    """One (eps, theta) pair from the claim-pair law."""
    eps, theta = spec.sample(stream, 1)[0]
    return float(eps), float(theta)


# === Clayton copula functions ===


def _check_unit(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in (0, 1], got {value!r}")
    return arr


def clayton_cdf(u, v, theta: float):
    """Clayton copula C(u, v)."""
    _require_positive("clayton_cdf", theta=theta)
    u = _check_unit("u", u)
    v = _check_unit("v", v)
    return (u**-theta + v**-theta - 1.0) ** (-1.0 / theta)


def clayton_density(u, v, theta: float):
    """Clayton copula density (1+theta)(uv)^(-1-theta)(u^-theta + v^-theta - 1)^(-1/theta-2)."""
    _require_positive("clayton_density", theta=theta)
    u = _check_unit("u", u)
    v = _check_unit("v", v)
    value = (1.0 + theta) * (u * v) ** (-1.0 - theta) * (u**-theta + v**-theta - 1.0) ** (-1.0 / theta - 2.0)
    if np.ndim(value) == 0:
        return float(value)
    return value
