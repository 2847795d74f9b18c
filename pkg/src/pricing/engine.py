"""
Cox Stop-Loss - Pricing Engine
==============================

Estimates E[L_hat_T h(L_T)] through the integration-by-parts formula

    int_0^T e^{-k(T-t)} E[ g(t, Lambda_t, x, y) lambda_t phi(f(t, Lambda_t, x) e^{-k(T-t)}) ] dt

with (x, y) ~ mu and phi the building block of the path. Each outer
path gets one block; every time node and every mu draw reuses it.

Outer paths are the only independent replicates, so every standard error
is the spread of per-path contributions. Path p always draws from the
stream (seed, p); results do not depend on the thread count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..core.errors import ModelError, NumericError, ParameterDomainError, PayoffError
from ..core.quadrature import QuadratureRule, time_nodes
from ..core.random import RandomStream
from ..simulation.block import CompoundDistribution, DiscretizedSeverity, EmpiricalBlock, build_block, \
    panjer_compound_cdf, phi_values
from ..simulation.intensity import ConstantIntensity, IntensityModel, IntensityPath, cumulative_at, \
    make_grid, simulate_path
from ..simulation.loss import ClaimModel, f_identity
from .payoffs import Contract, CustomH, GeneralizedStopLoss, IndicatorPayoff, Payoff, StopLoss
from .results import Budget, Estimate, PricingResult

logger = logging.getLogger(__name__)

PATH_KEY, BLOCK_KEY, MARK_KEY = 0, 1, 2


@dataclass(frozen=True)
class NumericsConfig:
    """Monte Carlo budget, quadrature and seed of a pricing run."""

    n_outer: int = 2000
    n_inner: int = 1000
    n_mu: int = 64
    nodes: int = 64
    quadrature: QuadratureRule = QuadratureRule.GAUSS_LEGENDRE
    grid_points: int = 1024
    seed: int = 20240601
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.quadrature, str):
            object.__setattr__(self, "quadrature", QuadratureRule.from_string(self.quadrature))
        for name in ("n_outer", "n_inner", "n_mu", "nodes", "threads"):
            if getattr(self, name) < 1:
                raise ParameterDomainError(f"numerics.{name} must be >= 1, got {getattr(self, name)}")
        if self.grid_points < 2:
            raise ParameterDomainError(f"numerics.grid must be >= 2, got {self.grid_points}")

    @property
    def budget(self) -> Budget:
        return Budget(self.n_outer, self.n_inner, self.n_mu, self.nodes)

    def with_changes(self, **changes) -> NumericsConfig:
        return replace(self, **changes)


# === Per-path evaluation ===


@dataclass(frozen=True)
class _Setup:
    model: IntensityModel
    claim_model: ClaimModel
    contract: Contract
    numerics: NumericsConfig
    grid: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    disc: np.ndarray


def _setup(model, claim_model, contract, numerics) -> _Setup:
    nodes, weights = time_nodes(contract.T, numerics.quadrature, numerics.nodes)
    return _Setup(model, claim_model, contract, numerics, make_grid(contract.T, numerics.grid_points),
                  nodes, weights, np.exp(-contract.kappa * (contract.T - nodes)))


def _path_and_block(setup: _Setup, index: int) -> tuple[RandomStream, IntensityPath, EmpiricalBlock]:
    stream = RandomStream(setup.numerics.seed, index)
    path = simulate_path(setup.model, setup.grid, stream.child(PATH_KEY))
    block = build_block(path, setup.claim_model, setup.contract.kappa, setup.numerics.n_inner,
                        stream.child(BLOCK_KEY))
    return stream, path, block


def _raise_non_finite(setup: _Setup, index: int, path: IntensityPath, bad_rows, what: str):
    j = int(np.flatnonzero(bad_rows)[0])
    t = float(setup.nodes[j])
    diagnostics = {
        "outer_path": index,
        "node_index": j,
        "t": t,
        "lambda_t": float(path.lambda_at(t)),
        "cum_lambda_t": float(cumulative_at(path, t)),
        "quadrature": setup.numerics.quadrature.value,
    }
    raise NumericError(f"non-finite {what} at quadrature node t={t:g} (outer path {index})", diagnostics)


def _node_inputs(setup: _Setup, index: int, path: IntensityPath, stream: RandomStream):
    """(lambda_t, shifts, g values) at every node, with n_mu fresh mu draws per node."""
    n_nodes, n_mu = setup.nodes.size, setup.numerics.n_mu
    lam = np.atleast_1d(path.lambda_at(setup.nodes))
    ell = np.atleast_1d(cumulative_at(path, setup.nodes))[:, None]
    marks = setup.claim_model.pair_spec.sample(stream.child(MARK_KEY), n_nodes * n_mu)
    marks = marks.reshape(n_nodes, n_mu, 2)
    t = setup.nodes[:, None]
    shifts = setup.claim_model.claim_values(t, ell, marks[..., 0]) * setup.disc[:, None]
    gvals = setup.claim_model.generalized_values(t, ell, marks[..., 0], marks[..., 1])
    bad = ~(np.all(np.isfinite(shifts), axis=1) & np.all(np.isfinite(gvals), axis=1))
    if bad.any():
        _raise_non_finite(setup, index, path, bad, "claim value")
    if np.any(shifts < 0) or np.any(gvals < 0):
        raise PayoffError("claim functions must be nonnegative")
    return lam, shifts, gvals


def _time_integral(setup: _Setup, index: int, path: IntensityPath, lam, gvals, phi) -> float:
    integrand = setup.disc * lam * np.mean(gvals * phi, axis=1)
    bad = ~np.isfinite(integrand)
    if bad.any():
        _raise_non_finite(setup, index, path, bad, "integrand")
    return float(np.dot(setup.weights, integrand))


def _jensen_phi(h: Payoff) -> Callable[[EmpiricalBlock, np.ndarray], np.ndarray]:
    def phi(block: EmpiricalBlock, shifts: np.ndarray) -> np.ndarray:
        values = np.asarray(h(block.mean + shifts), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise PayoffError(f"payoff '{h.name}' returned a negative or non-finite value")
        return values
    return phi


def _block_phi(h: Payoff) -> Callable[[EmpiricalBlock, np.ndarray], np.ndarray]:
    return lambda block, shifts: phi_values(block, h, shifts)


@dataclass(frozen=True)
class _Task:
    """What each outer path reports: one time integral per phi, plus layer probabilities."""

    phis: tuple[Callable[[EmpiricalBlock, np.ndarray], np.ndarray], ...]
    layer: tuple[float, float] | None = None


def _evaluate_path(setup: _Setup, task: _Task, index: int) -> np.ndarray:
    stream, path, block = _path_and_block(setup, index)
    lam, shifts, gvals = _node_inputs(setup, index, path, stream)
    row = [_time_integral(setup, index, path, lam, gvals, phi(block, shifts)) for phi in task.phis]
    if task.layer is not None:
        K, M = task.layer
        row.append(float(phi_values(block, IndicatorPayoff(K, M), 0.0)))
        row.append(0.0 if math.isinf(M) else float(1.0 - block.cdf(M)))
    row.append(block.mean)
    if index % 500 == 0:
        logger.debug("outer path %d done (Lambda_T=%g, block mean=%g)", index, path.total, block.mean)
    return np.asarray(row)


def evaluate_paths(setup: _Setup, task: _Task, n_outer: int | None = None) -> np.ndarray:
    """Per-path contributions, one row per outer path in path order."""
    n_outer = n_outer or setup.numerics.n_outer
    threads = setup.numerics.threads

    def run(index: int) -> np.ndarray:
        return _evaluate_path(setup, task, index)

    if threads == 1:
        rows = [run(i) for i in range(n_outer)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, range(n_outer)))
    return np.vstack(rows)


def _summary(values: np.ndarray) -> Estimate:
    return Estimate.from_samples(values)


def _result(values: np.ndarray, numerics: NumericsConfig, label: str,
            components: dict[str, Estimate] | None = None) -> PricingResult:
    est = _summary(values)
    return PricingResult(est.value, est.std_error, numerics.budget, numerics.seed, label, components or {})


# === Public pricing operations ===


def payoff_of(contract: Contract) -> Payoff:
    """The h whose expectation term a contract needs."""
    payoff = contract.payoff
    if isinstance(payoff, CustomH):
        return payoff.h
    if isinstance(payoff, GeneralizedStopLoss):
        return payoff.trigger_payoff()
    return IndicatorPayoff(payoff.K, payoff.M)


def malliavin_expectation(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                          numerics: NumericsConfig, h: Payoff | None = None) -> PricingResult:
    """
    E[L_hat_T h(L_T)] by the integration-by-parts formula.

    h defaults to the contract's payoff (the trigger indicator for
    stop-loss layers).
    """
    h = h or payoff_of(contract)
    setup = _setup(model, claim_model, contract, numerics)
    logger.info("malliavin expectation: h=%s budget=%s seed=%d", h.name, numerics.budget, numerics.seed)
    table = evaluate_paths(setup, _Task((_block_phi(h),)))
    result = _result(table[:, 0], numerics, f"E[L_hat h(L)] h={h.name}")
    logger.info("malliavin expectation: %.6g +/- %.2g", result.estimate, result.std_error)
    return result


def tranche_expectations(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                         numerics: NumericsConfig, payoffs: list[Payoff]) -> list[PricingResult]:
    """Expectation terms for several payoffs on shared paths, blocks and mu draws."""
    setup = _setup(model, claim_model, contract, numerics)
    table = evaluate_paths(setup, _Task(tuple(_block_phi(h) for h in payoffs)))
    return [_result(table[:, i], numerics, f"E[L_hat h(L)] h={h.name}") for i, h in enumerate(payoffs)]


def _layer_claims(claim_model: ClaimModel, contract: Contract) -> ClaimModel:
    """A plain stop-loss pays on L itself, so L_hat = L whatever g is configured."""
    if isinstance(contract.payoff, StopLoss) and claim_model.g is not None:
        return replace(claim_model, g=None)
    return claim_model


def _layer_of(contract: Contract) -> StopLoss | GeneralizedStopLoss:
    if not isinstance(contract.payoff, (StopLoss, GeneralizedStopLoss)):
        raise ParameterDomainError("stop-loss pricing needs a StopLoss or GeneralizedStopLoss payoff")
    return contract.payoff


def _stop_loss_table(setup: _Setup) -> tuple[np.ndarray, np.ndarray, StopLoss | GeneralizedStopLoss]:
    layer = _layer_of(setup.contract)
    trigger = payoff_of(setup.contract)
    table = evaluate_paths(setup, _Task((_block_phi(trigger),), (layer.K, layer.M)))
    cap = 0.0 if math.isinf(layer.M) else layer.M - layer.K
    premium = table[:, 0] - layer.K * table[:, 1] + cap * table[:, 2]
    return table, premium, layer


def stop_loss_price(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                    numerics: NumericsConfig) -> PricingResult:
    """
    Premium of a stop-loss layer [K, M]:

        E[L_hat 1_trigger] - K P[L in [K, M]] + (M - K) P[L > M].

    The expectation term uses the integration-by-parts formula; the
    probabilities come from the pooled blocks. Terms are combined per
    outer path, so the standard error accounts for their correlation.
    """
    setup = _setup(model, _layer_claims(claim_model, contract), contract, numerics)
    logger.info("stop-loss premium: %s budget=%s seed=%d", contract.describe(), numerics.budget,
                numerics.seed)
    table, premium, layer = _stop_loss_table(setup)
    components = {
        "expectation_term": _summary(table[:, 0]),
        "p_in_layer": _summary(table[:, 1]),
        "p_above_layer": _summary(table[:, 2]),
    }
    result = _result(premium, numerics, "stop_loss_premium", components)
    logger.info("stop-loss premium: %.6g +/- %.2g", result.estimate, result.std_error)
    return result


def convergence_trace(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                      numerics: NumericsConfig, start: int = 100) -> list[tuple[int, Estimate]]:
    """
    Estimates on the prefixes start, 2 start, 4 start, ... <= n_outer of
    one run's outer paths.
    """
    setup = _setup(model, _layer_claims(claim_model, contract), contract, numerics)
    if isinstance(contract.payoff, (StopLoss, GeneralizedStopLoss)):
        _, values, _ = _stop_loss_table(setup)
    else:
        values = evaluate_paths(setup, _Task((_block_phi(payoff_of(contract)),)))[:, 0]
    trace = []
    n = max(2, start)
    while n <= numerics.n_outer:
        trace.append((n, _summary(values[:n])))
        n *= 2
    if not trace or trace[-1][0] != numerics.n_outer:
        trace.append((numerics.n_outer, _summary(values)))
    return trace


def jensen_bound(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                 numerics: NumericsConfig, h: Payoff | None = None,
                 shape: str | None = None) -> PricingResult:
    """
    Jensen bound on E[L_hat h(L)]: phi(x) is replaced by
    h(E[L_T | lambda] + x) with the conditional mean taken from the block.
    A lower bound for convex h, an upper bound for concave h.
    """
    h = h or payoff_of(contract)
    shape = shape or h.shape
    if shape not in ("convex", "concave", "affine"):
        raise ParameterDomainError(f"Jensen bound needs a convex or concave payoff, '{h.name}' is {shape}")
    setup = _setup(model, claim_model, contract, numerics)
    table = evaluate_paths(setup, _Task((_jensen_phi(h),)))
    label = {"convex": "jensen_lower_bound", "concave": "jensen_upper_bound"}.get(shape, "jensen_affine")
    return _result(table[:, 0], numerics, label)


# === Constant intensity ===


def _phi_from_law(distribution: EmpiricalBlock | CompoundDistribution, h: Payoff, shifts: np.ndarray):
    if isinstance(distribution, EmpiricalBlock):
        return phi_values(distribution, h, shifts)
    if h.interval is not None:
        K, M = h.interval
        return distribution.cdf(M - shifts) - distribution.cdf_left(K - shifts)
    if h.above is not None:
        return 1.0 - distribution.cdf(h.above - shifts)
    atoms, pmf = distribution.atoms, distribution.pmf
    flat = np.asarray(shifts, dtype=float).reshape(-1)
    values = np.array([np.dot(pmf, h(atoms + s)) for s in flat])
    return values.reshape(np.shape(shifts))


def cramer_lundberg_price(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                          numerics: NumericsConfig,
                          distribution: EmpiricalBlock | CompoundDistribution | None = None,
                          h: Payoff | None = None) -> PricingResult:
    """
    E[L_hat h(L)] under constant intensity lambda0:

        lambda0 int_0^T int e^{-k(T-t)} g(t, lambda0 t, x, y) phi(f(t, lambda0 t, x) e^{-k(T-t)}) mu(dx, dy) dt

    phi comes from a block or a compound (Panjer) distribution; without
    one, a block of n_inner * n_outer replicates is simulated. The mu
    integral uses n_mu draws per node in each of n_outer groups; the
    standard error is the spread across groups given the distribution.
    """
    if not isinstance(model, ConstantIntensity):
        raise ModelError(f"closed form needs a constant intensity, got '{model.kind}'")
    h = h or payoff_of(contract)
    setup = _setup(model, claim_model, contract, numerics)
    root = RandomStream(numerics.seed, 0)
    path = simulate_path(model, setup.grid, root.child(PATH_KEY))
    if distribution is None:
        distribution = build_block(path, claim_model, contract.kappa, numerics.n_inner * numerics.n_outer,
                                   root.child(BLOCK_KEY))
    lam = np.full(setup.nodes.size, model.lambda0)
    values = np.empty(numerics.n_outer)
    for group in range(numerics.n_outer):
        _, shifts, gvals = _node_inputs(setup, group, path, RandomStream(numerics.seed, group))
        phi = _phi_from_law(distribution, h, shifts)
        values[group] = _time_integral(setup, group, path, lam, gvals, phi)
    return _result(values, numerics, f"cramer_lundberg h={h.name}")


def cramer_lundberg_lattice(lambda0: float, T: float, K: float, M: float, severity: DiscretizedSeverity,
                            compound: CompoundDistribution | None = None) -> float:
    """
    lambda0 T sum_k p_k x_k (F(M - x_k) - F(K - x_k -)) for f = g = x, kappa = 0,
    with F the compound law of the lattice claims.
    """
    if K > M:
        raise PayoffError(f"layer needs K <= M, got K={K}, M={M}")
    compound = compound or panjer_compound_cdf(lambda0 * T, severity)
    x = severity.atoms
    window = compound.cdf(M - x) - compound.cdf_left(K - x)
    return float(lambda0 * T * math.fsum(severity.pmf * x * window))


def cramer_lundberg_specialized(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                                severity: DiscretizedSeverity,
                                compound: CompoundDistribution | None = None) -> PricingResult:
    """Lattice closed form for f = g = x and kappa = 0 (exact up to discretization)."""
    if not isinstance(model, ConstantIntensity):
        raise ModelError(f"closed form needs a constant intensity, got '{model.kind}'")
    if claim_model.f is not f_identity or claim_model.g is not None or contract.kappa != 0:
        raise ModelError("lattice closed form needs f = g = x and kappa = 0")
    h = payoff_of(contract)
    if h.interval is None:
        raise ModelError("lattice closed form needs an interval trigger")
    K, M = h.interval
    value = cramer_lundberg_lattice(model.lambda0, contract.T, K, M, severity, compound)
    return PricingResult(value, 0.0, Budget(1, 0, 0, 0), 0, "cramer_lundberg_lattice")
