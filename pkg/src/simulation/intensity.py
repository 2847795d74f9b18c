"""
Cox Stop-Loss - Intensity Processes
===================================

Intensity models, path simulation on a time grid, the cumulated
intensity Lambda and its inverse, and the analytic joint density of
(Lambda_t, W_t) for the log-Brownian model.
"""

from __future__ import annotations

import logging
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import IO, Callable, ClassVar

import numpy as np
from scipy import integrate

from ..core.errors import DomainError, GridError, ParameterDomainError, PrecisionLossError
from ..core.random import RandomStream

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2**10


def make_grid(T: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform grid 0 = t_0 < ... < t_{n-1} = T."""
    if not T > 0:
        raise GridError(f"horizon must be positive, got {T}")
    if n_points < 2:
        raise GridError(f"grid needs at least two points, got {n_points}")
    return np.linspace(0.0, T, n_points)


def validate_grid(grid) -> np.ndarray:
    """Return the grid as a float array or raise GridError."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise GridError("grid must be a one-dimensional array with at least two points")
    if not np.all(np.isfinite(grid)):
        raise GridError("grid contains non-finite times")
    if grid[0] != 0.0:
        raise GridError(f"grid must start at 0, starts at {grid[0]}")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")
    return grid


# === Models ===


class IntensityModel(ABC):
    """An intensity process lambda on [0, T]."""

    kind: ClassVar[str] = ""
    deterministic: ClassVar[bool] = False

    @abstractmethod
    def lambda_on(self, grid: np.ndarray, stream: RandomStream) -> tuple[np.ndarray, np.ndarray | None]:
        """Intensity values on the grid, plus the driving Brownian values if any."""

    @abstractmethod
    def to_dict(self) -> dict:
        """Serializable description."""


@dataclass(frozen=True)
class ConstantIntensity(IntensityModel):
    """Homogeneous Poisson intensity lambda0."""

    lambda0: float
    kind: ClassVar[str] = "constant"
    deterministic: ClassVar[bool] = True

    def __post_init__(self):
        if not (math.isfinite(self.lambda0) and self.lambda0 > 0):
            raise ParameterDomainError(f"lambda0 must be positive, got {self.lambda0}")

    def lambda_on(self, grid, stream):
        return np.full(grid.shape, float(self.lambda0)), None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda0": self.lambda0}


@dataclass(frozen=True)
class DeterministicIntensity(IntensityModel):
    """Deterministic intensity given as a table, linearly interpolated."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    kind: ClassVar[str] = "deterministic"
    deterministic: ClassVar[bool] = True

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2 or times.shape != values.shape:
            raise ParameterDomainError("intensity table needs matching times and values (>= 2 rows)")
        if np.any(np.diff(times) <= 0):
            raise ParameterDomainError("intensity table times must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ParameterDomainError("intensity table values must be positive")

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], times) -> DeterministicIntensity:
        times = np.asarray(times, dtype=float)
        return cls(tuple(times.tolist()), tuple(np.asarray(fn(times), dtype=float).tolist()))

    def lambda_on(self, grid, stream):
        return np.interp(grid, self.times, self.values), None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}


@dataclass(frozen=True)
class LogBrownianIntensity(IntensityModel):
    """lambda_t = lambda0 * exp(2 * beta * W_t) for a standard Brownian motion W."""

    lambda0: float
    beta: float
    kind: ClassVar[str] = "logbrownian"

    def __post_init__(self):
        if not (math.isfinite(self.lambda0) and self.lambda0 > 0):
            raise ParameterDomainError(f"lambda0 must be positive, got {self.lambda0}")
        if not math.isfinite(self.beta) or self.beta == 0:
            raise ParameterDomainError("beta must be a nonzero real")

    def lambda_on(self, grid, stream):
        increments = stream.generator.standard_normal(grid.size - 1) * np.sqrt(np.diff(grid))
        w = np.concatenate(([0.0], np.cumsum(increments)))
        return self.lambda0 * np.exp(2.0 * self.beta * w), w

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda0": self.lambda0, "beta": self.beta}


# === Paths ===


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IntensityPath:
    """
    One sampled trajectory of lambda with its running integral Lambda.

    Arrays are read-only; the path is shared freely between threads.
    """

    grid: np.ndarray
    lambda_values: np.ndarray
    cum_values: np.ndarray
    w_values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "lambda_values", _frozen(self.lambda_values))
        object.__setattr__(self, "cum_values", _frozen(self.cum_values))
        if self.w_values is not None:
            object.__setattr__(self, "w_values", _frozen(self.w_values))

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def total(self) -> float:
        """Lambda_T."""
        return float(self.cum_values[-1])

    def lambda_at(self, t):
        """Intensity at t by linear interpolation."""
        t = self._check_times(t)
        return _scalar(np.interp(t, self.grid, self.lambda_values))

    def _check_times(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(~(t >= 0.0)) or np.any(t > self.T):
            raise DomainError(f"time outside [0, {self.T}]")
        return t

    def to_csv(self, target: str | IO[str]) -> None:
        """Write columns t, lambda, cum_lambda."""
        table = np.column_stack((self.grid, self.lambda_values, self.cum_values))
        np.savetxt(target, table, delimiter=",", header="t,lambda,cum_lambda", comments="", fmt="%.17g")


def _scalar(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


def simulate_path(model: IntensityModel, grid, stream: RandomStream) -> IntensityPath:
    """
    Sample lambda on the grid and integrate it by the trapezoid rule.

    Constant intensity is integrated exactly (lambda0 * t).
    """
    grid = validate_grid(grid)
    lam, w = model.lambda_on(grid, stream)
    if isinstance(model, ConstantIntensity):
        cum = model.lambda0 * grid
    else:
        cum = integrate.cumulative_trapezoid(lam, grid, initial=0.0)
    if not np.isfinite(cum[-1]):
        raise DomainError("cumulated intensity is not finite on this path")
    return IntensityPath(grid=grid, lambda_values=lam, cum_values=cum, w_values=w)


def cumulative_at(path: IntensityPath, t):
    """Lambda_t by linear interpolation of the cumulated values."""
    t = path._check_times(t)
    return _scalar(np.interp(t, path.grid, path.cum_values))


def inverse_cumulative(path: IntensityPath, s):
    """Smallest t with Lambda_t >= s, by piecewise-linear inversion."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= 0.0)) or np.any(s > path.total):
        raise DomainError(f"level outside [0, Lambda_T={path.total}]")
    cum, grid = path.cum_values, path.grid
    k = np.searchsorted(cum, s, side="left")
    hi = np.maximum(k, 1)
    lo = hi - 1
    span = cum[hi] - cum[lo]
    frac = np.divide(s - cum[lo], span, out=np.zeros_like(s), where=span > 0)
    t = grid[lo] + frac * (grid[hi] - grid[lo])
    t = np.where(k == 0, 0.0, t)
    t = np.where(cum[np.minimum(k, cum.size - 1)] == s, grid[np.minimum(k, cum.size - 1)], t)
    return _scalar(t)


# === Log-Brownian joint density of (Lambda_t, W_t) ===


@dataclass(frozen=True)
class DensityValue:
    """Density value with its estimated absolute quadrature error."""

    value: float
    abs_error: float


MAX_KERNEL_PIECES = 10_000
ENVELOPE_CUTOFF = 1e-16


def _kernel_integral(y: float, r: float) -> tuple[float, float, float, int]:
    """
    J = int_0^inf exp(-r (cosh x - 1) - x^2 / (4y)) sinh x sin(pi x / (2y)) dx.

    Integrated piecewise between consecutive zeros x = 2yk of the sine
    and summed with compensated accumulation. Returns (J, error estimate,
    sum of |pieces|, piece count).
    """
    def log_envelope(x: float) -> float:
        if x <= 0.0:
            return -math.inf
        return -r * (math.cosh(x) - 1.0) - x * x / (4.0 * y) + math.log(math.sinh(x))

    def integrand(x: float) -> float:
        return math.exp(-r * (math.cosh(x) - 1.0) - x * x / (4.0 * y)) * math.sinh(x) * math.sin(
            math.pi * x / (2.0 * y))

    half_period = 2.0 * y
    pieces: list[float] = []
    errors: list[float] = []
    peak = -math.inf
    k = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        while True:
            a, b = k * half_period, (k + 1) * half_period
            mid = log_envelope(0.5 * (a + b))
            peak = max(peak, mid, log_envelope(b))
            val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
            pieces.append(val)
            errors.append(err)
            k += 1
            past_peak = log_envelope(b) < mid
            if past_peak and log_envelope(b) < peak + math.log(ENVELOPE_CUTOFF):
                break
            if k >= MAX_KERNEL_PIECES:
                raise PrecisionLossError(
                    "oscillatory kernel did not decay within the piece budget",
                    {"y": y, "r": r, "pieces": k},
                )
    magnitude = math.fsum(abs(p) for p in pieces)
    error = math.fsum(errors) + k * np.finfo(float).eps * magnitude
    return math.fsum(pieces), error, magnitude, k


def logbm_joint_density(t: float, v: float, z: float, lambda0: float, beta: float,
                        rel_tol: float = 1e-3, negligible: float = 1e-14,
                        abs_tol: float = 1e-9) -> DensityValue:
    """
    Joint density of (Lambda_t, W_t) at (v, z) for lambda = lambda0 * exp(2 beta W).

    Uses the Hartman-Watson type kernel
    i_y(r) = r e^{pi^2/(4y)} / (pi sqrt(pi y)) * int exp(-r ch x - x^2/(4y)) sh x sin(pi x/(2y)) dx
    with y = beta^2 t / 2 and r = lambda0 e^{beta z} / (beta^2 v).

    Raises PrecisionLossError when the oscillatory integral cannot be
    resolved to rel_tol in double precision (small y). Points where an
    upper bound on the density is below `negligible` return 0 with that
    bound as the error. Where cancellation leaves only a value below
    abs_tol, the clipped value is returned with (|J| + error) scaled as
    its error.
    """
    if not (t > 0 and lambda0 > 0):
        raise DomainError("t and lambda0 must be positive")
    if not v > 0:
        raise DomainError(f"density support is v > 0, got v={v}")
    if beta == 0:
        raise DomainError("beta must be nonzero")

    y = beta * beta * t / 2.0
    b2v = beta * beta * v
    r = lambda0 * math.exp(beta * z) / b2v
    log_prefactor = (
        math.log(abs(beta)) - math.log(2.0 * v)
        - lambda0 * (1.0 + math.exp(2.0 * beta * z)) / (2.0 * b2v)
        + math.log(r) + math.pi**2 / (4.0 * y) - r
        - math.log(math.pi * math.sqrt(math.pi * y))
    )

    J, err, magnitude, n_pieces = _kernel_integral(y, r)
    logger.debug("kernel y=%g r=%g pieces=%d J=%g err=%g", y, r, n_pieces, J, err)

    if magnitude == 0.0:
        return DensityValue(0.0, 0.0)
    bound_log = log_prefactor + math.log(magnitude)
    if bound_log < math.log(negligible):
        return DensityValue(0.0, math.exp(bound_log))

    if not J > 0 or err > rel_tol * abs(J):
        uncertain_log = log_prefactor + math.log(abs(J) + err)
        if uncertain_log < math.log(abs_tol):
            logger.debug("density below abs_tol at v=%g z=%g: %.3g", v, z, math.exp(uncertain_log))
            return DensityValue(math.exp(log_prefactor + math.log(J)) if J > 0 else 0.0,
                                math.exp(uncertain_log))
        logger.warning("precision loss in joint density at t=%g v=%g z=%g (y=%g)", t, v, z, y)
        raise PrecisionLossError(
            f"oscillatory kernel lost precision (y={y:.3g}): |J|={abs(J):.3g}, error={err:.3g}",
            {"t": t, "v": v, "z": z, "y": y, "r": r, "J": J, "error": err},
        )
    abs_error = math.exp(log_prefactor + math.log(err)) if err > 0 else 0.0
    return DensityValue(math.exp(log_prefactor + math.log(J)), abs_error)
