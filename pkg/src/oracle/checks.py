"""
Cox Stop-Loss - Validation Oracles
==================================

Independent checks of the pricing machinery:

- direct_mc_price: the defining expectation by plain simulation
- ipp_check: E[F int u dN] against E[int u_t F(. + jump at t) lambda_t dt]
- lemma_law_check: two-sample tests of the add-a-jump law identity
- poisson_reference: exact sums for Poisson losses
- pricing_check: integration-by-parts price against direct simulation
- cramer_lundberg_check: the same price against the constant-intensity closed form

Every check draws from streams derived from its seed only, so reports
reproduce exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special, stats

from ..core.errors import ContractViolationError, DomainError, ModelError, ParameterDomainError
from ..core.quadrature import time_nodes
from ..core.random import Constant, RandomStream
from ..pricing.engine import NumericsConfig, cramer_lundberg_price, cramer_lundberg_specialized, \
    malliavin_expectation, payoff_of
from ..pricing.payoffs import Contract, CustomH, GeneralizedStopLoss, Payoff
from ..pricing.results import CheckReport, Comparison, Estimate
from ..simulation.block import DiscretizedSeverity
from ..simulation.intensity import DEFAULT_GRID_POINTS, ConstantIntensity, IntensityModel, IntensityPath, \
    cumulative_at, make_grid, simulate_path
from ..simulation.loss import ClaimModel, LossScenario, add_jump, added_jump_contributions, discount, \
    f_identity, loss_at_T, loss_with_added_jumps, simulate_jumps, simulate_loss_batch, simulate_unconditional

logger = logging.getLogger(__name__)

LHS_KEY, RHS_KEY = 0, 1

# absolute slack so that two numerically zero sides agree
ZERO_ALLOWANCE = 1e-10
LATTICE_STEP = 0.01


# === Direct simulation ===


def direct_mc_price(model: IntensityModel, claim_model: ClaimModel, contract: Contract, n: int,
                    stream: RandomStream, h: Payoff | None = None,
                    grid_points: int = DEFAULT_GRID_POINTS) -> Estimate:
    """
    Mean of the contract payout over n unconditional scenarios.

    With an explicit h (or a CustomH payoff) the payout is L_hat h(L).
    """
    if n < 2:
        raise ParameterDomainError(f"direct simulation needs n >= 2, got {n}")
    batch = simulate_unconditional(model, claim_model, contract.kappa, contract.T, n, stream,
                                   grid_points, generalized=True)
    payoff = contract.payoff
    if h is None and isinstance(payoff, CustomH):
        h = payoff.h
    if h is not None:
        values = batch.generalized * np.asarray(h(batch.loss), dtype=float)
    elif isinstance(payoff, GeneralizedStopLoss):
        values = payoff.payout(batch.loss, batch.generalized)
    else:
        values = payoff.payout(batch.loss)
    return Estimate.from_samples(values)


def pricing_check(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                  numerics: NumericsConfig, n_direct: int, h: Payoff | None = None) -> CheckReport:
    """Integration-by-parts expectation term against direct simulation."""
    lhs = malliavin_expectation(model, claim_model, contract, numerics, h).as_estimate()
    rhs_stream = RandomStream(numerics.seed, 0).child(7)
    trigger = h or payoff_of(contract)
    rhs = direct_mc_price(model, claim_model, contract, n_direct, rhs_stream, trigger,
                          numerics.grid_points)
    report = CheckReport.from_estimates("pricing", lhs, rhs, numerics.seed, allowance=ZERO_ALLOWANCE)
    logger.info("pricing check: %.6g vs %.6g (%.2f SE) %s", lhs.value, rhs.value, report.discrepancy,
                report.verdict)
    return report


def _lattice_applies(claim_model: ClaimModel, contract: Contract) -> bool:
    return (claim_model.f is f_identity and claim_model.g is None and contract.kappa == 0
            and payoff_of(contract).interval is not None)


def cramer_lundberg_check(model: IntensityModel, claim_model: ClaimModel, contract: Contract,
                          numerics: NumericsConfig, step: float = LATTICE_STEP,
                          lhs: Estimate | None = None) -> CheckReport:
    """
    Integration-by-parts expectation term against the constant-intensity closed form.

    With f = g = x, kappa = 0 and an interval trigger the reference is the
    Panjer lattice, and the spread of the lower and upper lattices around
    the rounding one is allowed on top of the standard errors. Otherwise
    the closed form is evaluated on a pooled empirical block.
    """
    if not isinstance(model, ConstantIntensity):
        raise ModelError(f"closed form needs a constant intensity, got '{model.kind}'")
    if lhs is None:
        lhs = malliavin_expectation(model, claim_model, contract, numerics).as_estimate()
    if _lattice_applies(claim_model, contract):
        marginal = claim_model.pair_spec.marginal_eps
        if isinstance(marginal, Constant):
            lattices = {"rounding": DiscretizedSeverity.point_mass(marginal.value, marginal.value)}
        else:
            lattices = {method: DiscretizedSeverity.from_marginal(marginal, step, method)
                        for method in ("rounding", "lower", "upper")}
        prices = {method: cramer_lundberg_specialized(model, claim_model, contract, severity).estimate
                  for method, severity in lattices.items()}
        spread = max(abs(value - prices["rounding"]) for value in prices.values())
        name, rhs = "pricing[cramer_lundberg lattice]", Estimate(prices["rounding"], 0.0)
    else:
        spread = 0.0
        name = "pricing[cramer_lundberg block]"
        rhs = cramer_lundberg_price(model, claim_model, contract, numerics).as_estimate()
    report = CheckReport.from_estimates(name, lhs, rhs, numerics.seed, allowance=spread + ZERO_ALLOWANCE)
    logger.info("%s: %.6g vs %.6g (%.2f SE, lattice spread %.3g) %s", name, lhs.value, rhs.value,
                report.discrepancy, spread, report.verdict)
    return report


# === Integration by parts ===


@dataclass(frozen=True)
class Functional:
    """
    Bounded functional F of a scenario, |F| <= bound.

    of_loss evaluates F from L_T alone (vectorized); of_scenario handles
    anything else.
    """

    name: str
    bound: float
    of_loss: Callable[[np.ndarray], np.ndarray] | None = None
    of_scenario: Callable[[LossScenario], float] | None = None


def exp_minus_loss() -> Functional:
    return Functional("exp(-L_T)", 1.0, of_loss=lambda loss: np.exp(-loss))


def loss_at_most(c: float) -> Functional:
    return Functional(f"1(L_T <= {c:g})", 1.0, of_loss=lambda loss: (loss <= c).astype(float))


def constant_functional(value: float = 1.0) -> Functional:
    return Functional(f"F = {value:g}", abs(value), of_loss=lambda loss: np.full(np.shape(loss), value))


@dataclass(frozen=True)
class Integrand:
    """Deterministic (hence predictable) integrand u_t."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]


def u_one() -> Integrand:
    return Integrand("u = 1", lambda t: np.ones_like(np.asarray(t, dtype=float)))


def u_zero() -> Integrand:
    return Integrand("u = 0", lambda t: np.zeros_like(np.asarray(t, dtype=float)))


def u_discount(kappa: float, T: float) -> Integrand:
    return Integrand(f"u = exp(-{kappa:g}(T - t))", lambda t: discount(kappa, T, t))


def _bounded(functional: Functional, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(np.abs(values) > functional.bound * (1 + 1e-12)):
        raise ContractViolationError(
            f"functional {functional.name} exceeded its declared bound {functional.bound:g}")
    return values


def _evaluate(functional: Functional, scenario: LossScenario, claim_model: ClaimModel, kappa: float):
    if functional.of_loss is not None:
        return functional.of_loss(np.asarray(loss_at_T(scenario, claim_model, kappa)))
    return functional.of_scenario(scenario)


def _ipp_lhs(path: IntensityPath, claim_model: ClaimModel, kappa: float, functional: Functional,
             u: Integrand, stream: RandomStream) -> float:
    """F(omega) sum_i u(tau_i) for one scenario."""
    scenario = simulate_jumps(path, claim_model.pair_spec, stream)
    value = _bounded(functional, _evaluate(functional, scenario, claim_model, kappa))
    return float(value) * float(np.sum(u.fn(scenario.jump_times)))


def _ipp_rhs(path: IntensityPath, claim_model: ClaimModel, kappa: float, functional: Functional,
             u: Integrand, nodes: np.ndarray, weights: np.ndarray, stream: RandomStream) -> float:
    """sum_j w_j u(t_j) F(omega + jump at t_j) lambda_{t_j} for one scenario."""
    scenario = simulate_jumps(path, claim_model.pair_spec, stream)
    marks = claim_model.pair_spec.sample(stream.child(0), nodes.size)
    if functional.of_loss is not None:
        values = functional.of_loss(loss_with_added_jumps(scenario, claim_model, kappa, nodes, marks))
    else:
        values = [functional.of_scenario(add_jump(scenario, t, m)) for t, m in zip(nodes, marks)]
    values = _bounded(functional, values)
    lam = np.atleast_1d(path.lambda_at(nodes))
    return float(np.dot(weights, u.fn(nodes) * values * lam))


def _ipp_batch(path: IntensityPath, claim_model: ClaimModel, kappa: float, functional: Functional,
               u: Integrand, nodes: np.ndarray, weights: np.ndarray, n: int,
               lhs_stream: RandomStream, rhs_stream: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    """All replicates at once on a shared deterministic path (loss functionals only)."""
    left = simulate_loss_batch(path, claim_model, kappa, n, lhs_stream)
    u_sums = np.bincount(left.owners, weights=u.fn(left.jump_times), minlength=n)
    lhs = _bounded(functional, functional.of_loss(left.loss)) * u_sums

    right = simulate_loss_batch(path, claim_model, kappa, n, rhs_stream)
    marks = claim_model.pair_spec.sample(rhs_stream.child(0), n * nodes.size)
    added = added_jump_contributions(path, claim_model, kappa, np.tile(nodes, n), marks)
    values = _bounded(functional, functional.of_loss(right.loss[:, None] + added.reshape(n, nodes.size)))
    lam = np.atleast_1d(path.lambda_at(nodes))
    rhs = values @ (weights * u.fn(nodes) * lam)
    return lhs, rhs


def ipp_check(model: IntensityModel, claim_model: ClaimModel, functional: Functional, u: Integrand,
              n: int, stream: RandomStream, T: float = 1.0, kappa: float = 0.0, nodes: int = 64,
              grid_points: int = DEFAULT_GRID_POINTS) -> CheckReport:
    """
    E[F sum_i u(tau_i)] against E[int_0^T u_t F(omega + jump at t) lambda_t dt].

    The two sides use independent streams; the right side inserts one
    jump per Gauss-Legendre node with a fresh mark from mu.
    """
    if n < 2:
        raise ParameterDomainError(f"ipp check needs n >= 2, got {n}")
    t_nodes, t_weights = time_nodes(T, "gauss_legendre", nodes)
    grid = make_grid(T, grid_points)
    lhs_root, rhs_root = stream.child(LHS_KEY), stream.child(RHS_KEY)

    if model.deterministic and functional.of_loss is not None:
        path = simulate_path(model, grid, stream.child(2))
        lhs, rhs = _ipp_batch(path, claim_model, kappa, functional, u, t_nodes, t_weights, n,
                              lhs_root, rhs_root)
    else:
        lhs, rhs = np.empty(n), np.empty(n)
        for i in range(n):
            lhs_stream, rhs_stream = lhs_root.child(i), rhs_root.child(i)
            lhs_path = simulate_path(model, grid, lhs_stream.child(0))
            rhs_path = simulate_path(model, grid, rhs_stream.child(0))
            lhs[i] = _ipp_lhs(lhs_path, claim_model, kappa, functional, u, lhs_stream.child(1))
            rhs[i] = _ipp_rhs(rhs_path, claim_model, kappa, functional, u, t_nodes, t_weights,
                              rhs_stream.child(1))

    report = CheckReport.from_estimates(f"ipp[{functional.name}; {u.name}]", Estimate.from_samples(lhs),
                                        Estimate.from_samples(rhs), stream.seed, allowance=ZERO_ALLOWANCE)
    logger.info("%s: lhs=%.6g rhs=%.6g (%.2f SE) %s", report.name, report.lhs.value, report.rhs.value,
                report.discrepancy, report.verdict)
    return report


# === Law identity for an added jump ===


LEMMA_COMPONENTS = ("g_at_t", "loss_with_jump", "lambda_t")


def _lemma_vectors(model: IntensityModel, claim_model: ClaimModel, kappa: float, T: float, t: float,
                   n: int, stream: RandomStream, grid: np.ndarray,
                   reindex: bool) -> tuple[np.ndarray, np.ndarray]:
    left, right = np.empty((n, 3)), np.empty((n, 3))
    disc = float(discount(kappa, T, t))
    shared_path = simulate_path(model, grid, stream.child(2)) if model.deterministic else None
    for i in range(n):
        ls, rs = stream.child(LHS_KEY, i), stream.child(RHS_KEY, i)

        path = shared_path if shared_path is not None else simulate_path(model, grid, ls.child(0))
        scenario = simulate_jumps(path, claim_model.pair_spec, ls.child(1))
        fresh = claim_model.pair_spec.sample(ls.child(2), 1)[0]
        extended = add_jump(scenario, t, fresh, reindex=reindex)
        k = int(np.searchsorted(scenario.jump_times, t))
        eps, theta = extended.marks[k]
        ell = cumulative_at(path, t)
        g = float(claim_model.generalized_values(t, ell, eps, theta)) * disc
        left[i] = (g, loss_at_T(extended, claim_model, kappa), path.lambda_at(t))

        path = shared_path if shared_path is not None else simulate_path(model, grid, rs.child(0))
        scenario = simulate_jumps(path, claim_model.pair_spec, rs.child(1))
        eps, theta = claim_model.pair_spec.sample(rs.child(2), 1)[0]
        ell = cumulative_at(path, t)
        g = float(claim_model.generalized_values(t, ell, eps, theta)) * disc
        jump = float(claim_model.claim_values(t, ell, eps)) * disc
        right[i] = (g, loss_at_T(scenario, claim_model, kappa) + jump, path.lambda_at(t))
    return left, right


def _pooled_ranks(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ranks = stats.rankdata(np.concatenate((a, b)), method="average") / (a.size + b.size)
    return ranks[:a.size], ranks[a.size:]


def _ks(name: str, a: np.ndarray, b: np.ndarray) -> Comparison:
    result = stats.ks_2samp(a, b)
    return Comparison(name, float(result.statistic), float(result.pvalue))


def lemma_law_check(model: IntensityModel, claim_model: ClaimModel, kappa: float, T: float, t: float,
                    n: int, stream: RandomStream, grid_points: int = DEFAULT_GRID_POINTS,
                    significance: float = 0.01, reindex: bool = True) -> CheckReport:
    """
    Compare the laws of

        (g(t, Lambda_t, eps_{1+N_t}, theta_{1+N_t}) e^{-k(T-t)}, L_T(omega + jump at t), lambda_t)

    and

        (g(t, Lambda_t, eps', theta') e^{-k(T-t)}, L_T + f(t, Lambda_t, eps') e^{-k(T-t)}, lambda_t)

    with (eps', theta') an independent mark. Each marginal and each
    pairwise difference of pooled ranks goes through a two-sample KS test.
    reindex=False runs the broken mark indexing, which must fail.
    """
    if not (0.0 < t < T):
        raise DomainError(f"law check runs at interior times 0 < t < {T}, got {t}")
    if n < 2:
        raise ParameterDomainError(f"law check needs n >= 2, got {n}")
    left, right = _lemma_vectors(model, claim_model, kappa, T, t, n, stream, make_grid(T, grid_points),
                                 reindex)

    comparisons = [_ks(LEMMA_COMPONENTS[j], left[:, j], right[:, j]) for j in range(3)]
    ranks = [_pooled_ranks(left[:, j], right[:, j]) for j in range(3)]
    for a, b in ((0, 1), (0, 2), (1, 2)):
        name = f"{LEMMA_COMPONENTS[a]}-{LEMMA_COMPONENTS[b]}"
        comparisons.append(_ks(name, ranks[a][0] - ranks[b][0], ranks[a][1] - ranks[b][1]))

    label = "lemma" if reindex else "lemma[broken indexing]"
    report = CheckReport.from_comparisons(
        label, Estimate.from_samples(left[:, 1]), Estimate.from_samples(right[:, 1]), comparisons,
        stream.seed, significance)
    failed = [c.name for c in comparisons if c.pvalue < significance]
    if failed:
        logger.warning("%s: KS comparisons failed: %s", label, ", ".join(failed))
    logger.info("%s at t=%g: %s", label, t, report.verdict)
    return report


# === Exact Poisson sums ===


@dataclass(frozen=True)
class PoissonReference:
    p_below: float
    truncated_mean: float


def _poisson_cdf_upto(mean: float, top: int) -> float:
    """P[N <= top] by summing pmf terms computed in log space."""
    if top < 0:
        return 0.0
    cap = int(mean + 40.0 * math.sqrt(mean) + 60.0)
    k = np.arange(min(top, cap) + 1)
    log_pmf = -mean + k * math.log(mean) - special.gammaln(k + 1.0)
    return min(1.0, math.fsum(np.exp(log_pmf)))


def poisson_reference(mean: float, beta: float) -> PoissonReference:
    """
    P[N < beta] and E[N 1_{N < beta}] = mean P[N <= beta - 2] for N ~ Poisson(mean).
    """
    if not mean > 0:
        raise ParameterDomainError(f"Poisson mean must be positive, got {mean}")
    if beta <= 0:
        return PoissonReference(0.0, 0.0)
    top = math.ceil(beta) - 1 if math.isfinite(beta) else int(mean + 40.0 * math.sqrt(mean) + 60.0)
    return PoissonReference(_poisson_cdf_upto(mean, top), mean * _poisson_cdf_upto(mean, top - 1))
