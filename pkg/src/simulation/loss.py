"""
Cox Stop-Loss - Loss Process
============================

Cox-process jumps by time change, claim marks, the discounted loss L_T,
the generalized loss built from g, and the add-a-jump operator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np

from ..core.errors import CollisionError, DomainError, ParameterDomainError
from ..core.random import ClaimPairSpec, RandomStream
from .intensity import DEFAULT_GRID_POINTS, IntensityModel, IntensityPath, cumulative_at, \
    inverse_cumulative, make_grid, simulate_path

logger = logging.getLogger(__name__)

ClaimFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
GeneralizedFunction = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


# === Claim functions ===


def f_identity(t, ell, x):
    """f(t, l, x) = x."""
    t, ell, x = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, ell, x)))
    return x.copy()


def f_scaled(t, ell, x):
    """f(t, l, x) = sqrt(l / t) * x; non-finite at t = 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(np.asarray(ell, dtype=float) / t) * np.asarray(x, dtype=float)


def g_from_f(f: ClaimFunction) -> GeneralizedFunction:
    """Lift f to a g that ignores the second mark."""
    def g(t, ell, x, y):
        return f(t, ell, x)
    g.__name__ = f"g_from_{getattr(f, '__name__', 'f')}"
    return g


def g_identity_y(t, ell, x, y):
    """g(t, l, x, y) = y."""
    t, ell, x, y = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, ell, x, y)))
    return y.copy()


F_FUNCTIONS: dict[str, ClaimFunction] = {"identity": f_identity, "scaled": f_scaled}


def discount(kappa: float, T: float, t):
    """exp(-kappa (T - t))."""
    return np.exp(-kappa * (T - np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class ClaimModel:
    """
    Claim-size maps and the law of the mark pairs.

    g defaults to f lifted to ignore theta, in which case the generalized
    loss coincides with the standard loss.
    """

    pair_spec: ClaimPairSpec
    f: ClaimFunction = f_identity
    g: GeneralizedFunction | None = None

    @classmethod
    def from_names(cls, pair_spec: ClaimPairSpec, f: str = "identity", g: str = "from_f") -> ClaimModel:
        if f not in F_FUNCTIONS:
            raise ParameterDomainError(f"unknown claim function '{f}'")
        f_fn = F_FUNCTIONS[f]
        if g == "from_f":
            return cls(pair_spec, f_fn, None)
        if g == "identity_y":
            return cls(pair_spec, f_fn, g_identity_y)
        raise ParameterDomainError(f"unknown generalized claim function '{g}'")

    @property
    def generalized(self) -> GeneralizedFunction:
        return self.g if self.g is not None else g_from_f(self.f)

    def claim_values(self, t, ell, eps):
        return self.f(t, ell, eps)

    def generalized_values(self, t, ell, eps, theta):
        return self.generalized(t, ell, eps, theta)


# === Scenarios ===


def _frozen(arr, shape=None) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LossScenario:
    """
    One realization of the jump times and their marks, given a path.

    marks has shape (N, 2) with rows (eps_i, theta_i) in jump order.
    """

    path: IntensityPath
    jump_times: np.ndarray
    marks: np.ndarray | None = None

    def __post_init__(self):
        times = _frozen(self.jump_times).reshape(-1)
        marks = _frozen(np.zeros((0, 2)) if self.marks is None else self.marks, (-1, 2))
        if times.size != marks.shape[0]:
            raise DomainError(f"{times.size} jump times but {marks.shape[0]} marks")
        if times.size and (times[0] <= 0.0 or times[-1] > self.path.T):
            raise DomainError(f"jump times must lie in (0, {self.path.T}]")
        if np.any(np.diff(times) <= 0):
            raise DomainError("jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "marks", marks)

    @property
    def count(self) -> int:
        return int(self.jump_times.size)

    @property
    def eps(self) -> np.ndarray:
        return self.marks[:, 0]

    @property
    def theta(self) -> np.ndarray:
        return self.marks[:, 1]

    def cum_at_jumps(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros(0)
        return np.atleast_1d(cumulative_at(self.path, self.jump_times))

    def to_csv(self, target: str | IO[str]) -> None:
        """Write columns tau, cum_lambda_at_tau, eps, theta."""
        table = np.column_stack((self.jump_times, self.cum_at_jumps(), self.eps, self.theta))
        np.savetxt(target, table.reshape(-1, 4), delimiter=",",
                   header="tau,cum_lambda_at_tau,eps,theta", comments="", fmt="%.17g")


def _jump_times(path: IntensityPath, counts_total: int, stream: RandomStream) -> np.ndarray:
    levels = np.minimum(path.total * stream.open_uniform(counts_total), path.total)
    return np.atleast_1d(inverse_cumulative(path, levels))


def simulate_jumps(path: IntensityPath, pair_spec: ClaimPairSpec, stream: RandomStream) -> LossScenario:
    """
    Jumps of the Cox process given the path.

    N ~ Poisson(Lambda_T); the jump times are the sorted uniform levels on
    (0, Lambda_T) mapped through the inverse cumulated intensity.
    """
    n = int(stream.generator.poisson(path.total))
    times = np.sort(_jump_times(path, n, stream)) if n else np.zeros(0)
    marks = pair_spec.sample(stream, n) if n else np.zeros((0, 2))
    return LossScenario(path, times, marks)


def loss_at_T(scenario: LossScenario, claim_model: ClaimModel, kappa: float) -> float:
    """Sum of f(tau_i, Lambda_tau_i, eps_i) exp(-kappa (T - tau_i))."""
    if scenario.count == 0:
        return 0.0
    times = scenario.jump_times
    values = claim_model.claim_values(times, scenario.cum_at_jumps(), scenario.eps)
    return float(np.sum(values * discount(kappa, scenario.path.T, times)))


def generalized_loss_at_T(scenario: LossScenario, claim_model: ClaimModel, kappa: float) -> float:
    """Sum of g(tau_i, Lambda_tau_i, eps_i, theta_i) exp(-kappa (T - tau_i))."""
    if scenario.count == 0:
        return 0.0
    times = scenario.jump_times
    values = claim_model.generalized_values(times, scenario.cum_at_jumps(), scenario.eps, scenario.theta)
    return float(np.sum(values * discount(kappa, scenario.path.T, times)))


# === Adding a jump ===


def add_jump(scenario: LossScenario, t: float, mark: tuple[float, float],
             reindex: bool = True) -> LossScenario:
    """
    Scenario with one more jump at t.

    The new jump takes position k = N_t in jump order and receives the
    supplied mark as eps_{N_t + 1}; the jumps after t are shifted one place
    and keep their own marks. With reindex=False the inserted jump instead
    reuses the mark of the next original jump, so that mark is counted
    twice (a broken construction used as a negative control).
    """
    T = scenario.path.T
    if not (0.0 < t <= T):
        raise DomainError(f"jump time must lie in (0, {T}], got {t}")
    times = scenario.jump_times
    if np.any(times == t):
        raise CollisionError(f"a jump already occurs at t={t}")
    k = int(np.searchsorted(times, t))
    new_mark = np.asarray(mark, dtype=float).reshape(2)
    if not reindex and k < scenario.count:
        new_mark = scenario.marks[k]
    return LossScenario(
        scenario.path,
        np.insert(times, k, t),
        np.insert(scenario.marks, k, new_mark, axis=0),
    )


def added_jump_contributions(path: IntensityPath, claim_model: ClaimModel, kappa: float,
                             times, marks, generalized: bool = False) -> np.ndarray:
    """Discounted claim of a jump at each time carrying the matching mark."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    marks = np.asarray(marks, dtype=float).reshape(-1, 2)
    ell = np.atleast_1d(cumulative_at(path, times))
    if generalized:
        values = claim_model.generalized_values(times, ell, marks[:, 0], marks[:, 1])
    else:
        values = claim_model.claim_values(times, ell, marks[:, 0])
    return values * discount(kappa, path.T, times)


def loss_with_added_jumps(scenario: LossScenario, claim_model: ClaimModel, kappa: float,
                          times, marks) -> np.ndarray:
    """
    loss_at_T(add_jump(scenario, t_j, m_j)) for every j at once.

    With the default marking the added jump contributes its own claim and
    every other term is unchanged.
    """
    base = loss_at_T(scenario, claim_model, kappa)
    return base + added_jump_contributions(scenario.path, claim_model, kappa, times, marks)


# === Vectorized conditional replicates ===


@dataclass(frozen=True)
class LossBatch:
    """n conditional replicates of L_T (and of the generalized loss when requested)."""

    loss: np.ndarray
    counts: np.ndarray
    generalized: np.ndarray | None = None
    jump_times: np.ndarray | None = None
    owners: np.ndarray | None = None


def simulate_loss_batch(path: IntensityPath, claim_model: ClaimModel, kappa: float, n: int,
                        stream: RandomStream, generalized: bool = False) -> LossBatch:
    """
    n independent replicates of the loss conditional on the same path.

    All jumps of all replicates are drawn in one vectorized pass and then
    summed per replicate.
    """
    if n < 1:
        raise ParameterDomainError(f"replicate count must be >= 1, got {n}")
    counts = stream.generator.poisson(path.total, n)
    total = int(counts.sum())
    owners = np.repeat(np.arange(n), counts)
    if total == 0:
        zeros = np.zeros(n)
        return LossBatch(zeros, counts, zeros.copy() if generalized else None, np.zeros(0), owners)

    times = _jump_times(path, total, stream)
    marks = claim_model.pair_spec.sample(stream, total)
    ell = np.atleast_1d(cumulative_at(path, times))
    disc = discount(kappa, path.T, times)
    loss = np.bincount(owners, weights=claim_model.claim_values(times, ell, marks[:, 0]) * disc,
                       minlength=n)
    gen = None
    if generalized:
        gvals = claim_model.generalized_values(times, ell, marks[:, 0], marks[:, 1]) * disc
        gen = np.bincount(owners, weights=gvals, minlength=n)
    logger.debug("loss batch: n=%d jumps=%d Lambda_T=%g", n, total, path.total)
    return LossBatch(loss, counts, gen, times, owners)


def simulate_unconditional(model: IntensityModel, claim_model: ClaimModel, kappa: float, T: float,
                           n: int, stream: RandomStream, grid_points: int = DEFAULT_GRID_POINTS,
                           generalized: bool = False) -> LossBatch:
    """
    n independent draws of the loss, each with its own intensity path.

    Deterministic intensities share one path.
    """
    grid = make_grid(T, grid_points)
    if model.deterministic:
        path = simulate_path(model, grid, stream.child(0))
        return simulate_loss_batch(path, claim_model, kappa, n, stream.child(1), generalized)
    loss, counts = np.empty(n), np.empty(n, dtype=np.int64)
    gen = np.empty(n) if generalized else None
    for i in range(n):
        replicate = stream.child(2, i)
        path = simulate_path(model, grid, replicate.child(0))
        batch = simulate_loss_batch(path, claim_model, kappa, 1, replicate.child(1), generalized)
        loss[i], counts[i] = batch.loss[0], batch.counts[0]
        if gen is not None:
            gen[i] = batch.generalized[0]
    return LossBatch(loss, counts, gen)
