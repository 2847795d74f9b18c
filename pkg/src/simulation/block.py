"""
Cox Stop-Loss - Building Block
==============================

The building block phi(x) = E[h(L_T + x) | lambda] estimated from a sorted
sample of conditional loss replicates, and the Panjer recursion for the
compound Poisson law under constant intensity.

A block is simulated once per intensity path; every later query is a
shift of h over the same sorted sample.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np

from ..core.errors import InputError, NumericError, ParameterDomainError, PayoffError, TruncationError
from ..core.random import MarginalSpec, RandomStream
from .intensity import IntensityPath
from .loss import ClaimModel, simulate_loss_batch

logger = logging.getLogger(__name__)

# Broadcast chunk for generic payoffs: shifts x samples evaluated per pass.
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class EmpiricalBlock:
    """Sorted conditional replicates of L_T given one path."""

    samples: np.ndarray
    path: IntensityPath | None = None

    def __post_init__(self):
        samples = np.sort(np.asarray(self.samples, dtype=float).reshape(-1))
        if samples.size < 1:
            raise ParameterDomainError("a block needs at least one replicate")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def n_inner(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def cdf(self, x):
        """Empirical P[L <= x]."""
        counts = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right")
        return counts / self.n_inner

    def cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct sample values and the empirical CDF at each of them."""
        values, counts = np.unique(self.samples, return_counts=True)
        return values, np.cumsum(counts) / self.n_inner

    def to_csv(self, target: str | IO[str]) -> None:
        values, cdf = self.cdf_table()
        np.savetxt(target, np.column_stack((values, cdf)), delimiter=",",
                   header="x,cdf", comments="", fmt="%.17g")


def build_block(path: IntensityPath, claim_model: ClaimModel, kappa: float, n_inner: int,
                stream: RandomStream) -> EmpiricalBlock:
    """Simulate n_inner losses conditional on the path and sort them."""
    batch = simulate_loss_batch(path, claim_model, kappa, n_inner, stream)
    return EmpiricalBlock(batch.loss, path)


def pooled_block(blocks: list[EmpiricalBlock]) -> EmpiricalBlock:
    """Merge conditional blocks into one unconditional sample."""
    return EmpiricalBlock(np.concatenate([b.samples for b in blocks]))


# === Queries ===


def _interval_counts(samples: np.ndarray, lo, hi) -> np.ndarray:
    return np.searchsorted(samples, hi, side="right") - np.searchsorted(samples, lo, side="left")


def phi_interval(block: EmpiricalBlock, K: float, M: float, x):
    """Empirical P[L_T in [K - x, M - x] | lambda], closed at both ends."""
    if K > M:
        raise PayoffError(f"interval needs K <= M, got K={K}, M={M}")
    x = np.asarray(x, dtype=float)
    counts = _interval_counts(block.samples, K - x, M - x)
    value = counts / block.n_inner
    return float(value) if value.ndim == 0 else value


def _checked(values: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise PayoffError("payoff returned a non-finite value")
    if np.any(values < 0):
        raise PayoffError("payoff returned a negative value")
    return values


def phi_general(block: EmpiricalBlock, h: Callable[[np.ndarray], np.ndarray], x):
    """Mean of h(sample + x) over the block, for one or many shifts x."""
    x = np.asarray(x, dtype=float)
    shifts = x.reshape(-1)
    out = np.empty(shifts.size)
    rows = max(1, _CHUNK_CELLS // block.n_inner)
    for start in range(0, shifts.size, rows):
        chunk = shifts[start:start + rows]
        values = _checked(np.asarray(h(block.samples[None, :] + chunk[:, None]), dtype=float))
        out[start:start + rows] = np.broadcast_to(values, (chunk.size, block.n_inner)).mean(axis=1)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def phi_values(block: EmpiricalBlock, h, shifts):
    """
    phi for many shifts; indicators (objects exposing `interval` or
    `above`) use binary search, everything else the generic mean.
    """
    interval = getattr(h, "interval", None)
    if interval is not None:
        return phi_interval(block, interval[0], interval[1], shifts)
    above = getattr(h, "above", None)
    if above is not None:
        shifts = np.asarray(shifts, dtype=float)
        counts = block.n_inner - np.searchsorted(block.samples, above - shifts, side="right")
        value = counts / block.n_inner
        return float(value) if value.ndim == 0 else value
    return phi_general(block, h, shifts)


# === Lattice severities and Panjer ===


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiscretizedSeverity:
    """Claim-size law on the lattice {0, step, 2 step, ...}."""

    step: float
    pmf: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise InputError(f"lattice step must be positive, got {self.step}")
        pmf = _frozen(np.asarray(self.pmf, dtype=float).reshape(-1))
        if pmf.size == 0 or not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise InputError("severity pmf must be a nonempty array of nonnegative numbers")
        if abs(math.fsum(pmf) - 1.0) > 1e-12:
            raise InputError(f"severity pmf sums to {math.fsum(pmf)!r}, not 1")
        object.__setattr__(self, "pmf", pmf)

    @property
    def atoms(self) -> np.ndarray:
        return self.step * np.arange(self.pmf.size)

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.pmf))

    @classmethod
    def point_mass(cls, value: float, step: float) -> DiscretizedSeverity:
        k = int(round(value / step))
        pmf = np.zeros(k + 1)
        pmf[k] = 1.0
        return cls(step, pmf)

    @classmethod
    def from_marginal(cls, spec: MarginalSpec, step: float, method: str = "rounding",
                      tail: float = 1e-14, max_points: int = 1 << 20) -> DiscretizedSeverity:
        """
        Lattice version of a claim law.

        "rounding" moves mass to the nearest atom, "lower" rounds every
        claim down and "upper" rounds it up; for continuous laws the lower
        and upper lattices bracket the compound CDF of the true law. Mass
        beyond the last atom is added to it.
        """
        if not step > 0:
            raise InputError(f"lattice step must be positive, got {step}")
        top = float(spec.ppf(1.0 - tail))
        n = int(math.ceil(top / step)) + 2
        if n > max_points:
            logger.warning("severity lattice capped at %d atoms (tail beyond %g lumped)", max_points,
                           max_points * step)
            n = max_points
        k = np.arange(n - 1, dtype=float)
        offsets = {"rounding": 0.5, "lower": 1.0, "upper": 0.0}
        if method not in offsets:
            raise InputError(f"unknown discretization method '{method}'")
        # atom k collects the mass between consecutive edges
        edges = np.asarray(spec.cdf((k + offsets[method]) * step), dtype=float)
        pmf = np.maximum(np.diff(np.concatenate(([0.0], edges, [1.0]))), 0.0)
        pmf = pmf / math.fsum(pmf)
        return cls(step, pmf)


@dataclass(frozen=True)
class CompoundDistribution:
    """Compound Poisson law on a lattice, from the Panjer recursion."""

    step: float
    pmf: np.ndarray

    def __post_init__(self):
        pmf = _frozen(self.pmf)
        object.__setattr__(self, "pmf", pmf)
        cum = np.cumsum(pmf)
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @property
    def atoms(self) -> np.ndarray:
        return self.step * np.arange(self.pmf.size)

    @property
    def mass(self) -> float:
        return float(self._cum[-1])

    def cdf(self, x):
        """P[S <= x]."""
        idx = np.floor(np.asarray(x, dtype=float) / self.step + 1e-9)
        return self._lookup(idx)

    def cdf_left(self, x):
        """P[S < x]."""
        idx = np.ceil(np.asarray(x, dtype=float) / self.step - 1e-9) - 1.0
        return self._lookup(idx)

    def _lookup(self, idx: np.ndarray):
        idx = np.asarray(idx)
        clipped = np.clip(idx, 0, self.pmf.size - 1).astype(np.int64)
        value = np.where(idx < 0, 0.0, self._cum[clipped])
        return float(value) if value.ndim == 0 else value

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.pmf))


def panjer_compound_cdf(mean_count: float, severity: DiscretizedSeverity, horizon: int = 1 << 16,
                        mass_target: float = 1.0 - 1e-10) -> CompoundDistribution:
    """
    Compound Poisson(mean_count) law of lattice claims.

    g_0 = exp(-mean_count (1 - p_0)),
    g_n = (mean_count / n) sum_{j=1..n} j p_j g_{n-j},
    run until the accumulated mass reaches mass_target.
    """
    if not (math.isfinite(mean_count) and mean_count > 0):
        raise ParameterDomainError(f"mean count must be positive, got {mean_count}")
    p = severity.pmf
    jp = np.arange(p.size) * p
    g = np.zeros(horizon + 1)
    g[0] = math.exp(-mean_count * (1.0 - p[0]))
    if g[0] == 0.0:
        raise NumericError("Panjer start value underflows; mean count too large",
                           {"mean_count": mean_count, "p0": float(p[0])})
    mass = g[0]
    n = 0
    while mass < mass_target:
        n += 1
        if n > horizon:
            logger.warning("Panjer recursion truncated at horizon %d (mass %.12f)", horizon, mass)
            raise TruncationError(
                f"Panjer horizon {horizon} exhausted with mass {mass:.12f}", achieved_mass=mass)
        upto = min(n, p.size - 1)
        if upto > 0:
            g[n] = mean_count / n * np.dot(jp[1:upto + 1], g[n - 1::-1][:upto])
        mass += g[n]
    logger.debug("Panjer recursion: %d lattice points, mass %.15f", n + 1, mass)
    return CompoundDistribution(severity.step, g[:n + 1])


def compound_sample(mean_count: float, spec: MarginalSpec, n: int, stream: RandomStream) -> np.ndarray:
    """n direct draws of a compound Poisson sum; reference for the recursion."""
    counts = stream.generator.poisson(mean_count, n)
    claims = spec.sample(stream, int(counts.sum()))
    owners = np.repeat(np.arange(n), counts)
    return np.bincount(owners, weights=np.asarray(claims, dtype=float).reshape(-1), minlength=n)
