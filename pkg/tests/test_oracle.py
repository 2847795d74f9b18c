"""
Tests for the Validation Oracles
================================
"""

import math

import pytest

from src.core.errors import ContractViolationError, DomainError, ModelError, ParameterDomainError
from src.core.random import ClaimPairSpec, Clayton, Constant, Exponential, Pareto, RandomStream
from src.oracle.checks import (
    ZERO_ALLOWANCE,
    Functional,
    constant_functional,
    cramer_lundberg_check,
    direct_mc_price,
    exp_minus_loss,
    ipp_check,
    lemma_law_check,
    loss_at_most,
    poisson_reference,
    pricing_check,
    u_discount,
    u_one,
    u_zero,
)
from src.pricing.engine import NumericsConfig
from src.pricing.payoffs import Contract, CustomH, StopLoss, make_payoff
from src.pricing.results import CheckReport, Estimate
from src.simulation.intensity import ConstantIntensity, LogBrownianIntensity
from src.simulation.loss import ClaimModel, f_scaled


def exp_claims(**kwargs) -> ClaimModel:
    return ClaimModel(ClaimPairSpec(Exponential(1.0), Exponential(1.0)), **kwargs)


class TestDirectPrice:
    """Test plain payoff simulation."""

    def test_whole_loss_layer(self):
        """K = 0, M = inf: mean payout is E[L_T] = lambda0 T."""
        estimate = direct_mc_price(ConstantIntensity(2.0), exp_claims(), Contract(T=1.0, payoff=StopLoss(0.0)),
                                   100_000, RandomStream(1))
        assert abs(estimate.value - 2.0) < 3 * estimate.std_error

    def test_custom_h_one(self):
        """h = 1 gives E[L_hat]."""
        contract = Contract(T=1.0, payoff=CustomH(make_payoff("one")))
        estimate = direct_mc_price(ConstantIntensity(1.0), exp_claims(), contract, 100_000, RandomStream(2))
        assert abs(estimate.value - 1.0) < 3 * estimate.std_error

    def test_needs_two_samples(self):
        """A single sample has no error bar."""
        with pytest.raises(ParameterDomainError):
            direct_mc_price(ConstantIntensity(1.0), exp_claims(), Contract(T=1.0), 1, RandomStream(0))


class TestIppCheck:
    """Test the integration-by-parts check."""

    @pytest.mark.parametrize("functional", [exp_minus_loss(), loss_at_most(1.0)])
    @pytest.mark.parametrize("u", [u_one(), u_discount(0.5, 1.0)])
    def test_constant_model_passes(self, functional, u):
        """Both sides agree for bounded loss functionals."""
        report = ipp_check(ConstantIntensity(1.0), exp_claims(), functional, u, 20_000, RandomStream(3),
                           kappa=0.5, nodes=16, grid_points=65)
        assert report.passed

    def test_counting_identity(self):
        """F = 1, u = 1: E[N_T] = E[Lambda_T]."""
        report = ipp_check(ConstantIntensity(1.5), exp_claims(), constant_functional(1.0), u_one(), 20_000,
                           RandomStream(4), nodes=16, grid_points=65)
        assert report.passed
        assert report.rhs.value == pytest.approx(1.5, abs=1e-12)

    def test_zero_integrand(self):
        """u = 0 makes both sides vanish."""
        report = ipp_check(ConstantIntensity(1.0), exp_claims(), exp_minus_loss(), u_zero(), 100,
                           RandomStream(5), nodes=8, grid_points=65)
        assert report.lhs.value == 0.0
        assert report.rhs.value == 0.0

    def test_log_brownian_passes(self):
        """The identity holds under a stochastic intensity."""
        report = ipp_check(LogBrownianIntensity(1.0, 0.3), exp_claims(), exp_minus_loss(), u_one(), 3000,
                           RandomStream(6), nodes=16, grid_points=65)
        assert report.passed

    @pytest.mark.slow
    def test_log_brownian_counting_identity(self):
        """F = 1, u = 1 at beta = 0.5: E[N_T] = E[Lambda_T] = (e^{2 beta^2 T} - 1) / (2 beta^2)."""
        report = ipp_check(LogBrownianIntensity(1.0, 0.5), exp_claims(), constant_functional(1.0), u_one(), 4000,
                           RandomStream(14), nodes=32, grid_points=257)
        assert report.passed
        expected = 2.0 * (math.exp(0.5) - 1.0)
        assert report.lhs.value == pytest.approx(expected, abs=4 * report.lhs.std_error)
        assert report.rhs.value == pytest.approx(expected, abs=4 * report.rhs.std_error)

    @pytest.mark.slow
    def test_log_brownian_discounted_integrand(self):
        """exp(-L_T) against the discounted integrand with Clayton marks and f_scaled."""
        claims = ClaimModel(ClaimPairSpec(Pareto(1.0, 3.0), Pareto(1.0, 3.0), Clayton(2.0)), f=f_scaled)
        report = ipp_check(LogBrownianIntensity(1.0, 0.5), claims, exp_minus_loss(), u_discount(0.05, 1.0), 4000,
                           RandomStream(15), kappa=0.05, nodes=32, grid_points=257)
        assert report.passed
        assert report.rhs.value > 0

    def test_scenario_functional(self):
        """Functionals of the whole scenario go through add_jump."""
        functional = Functional("1(N_T <= 1)", 1.0, of_scenario=lambda s: float(s.count <= 1))
        report = ipp_check(ConstantIntensity(1.0), exp_claims(), functional, u_one(), 2000, RandomStream(7),
                           nodes=8, grid_points=65)
        assert report.passed

    def test_unbounded_functional_rejected(self):
        """F exceeding its declared bound is a contract violation."""
        functional = Functional("L_T", 1.0, of_loss=lambda loss: loss)
        with pytest.raises(ContractViolationError):
            ipp_check(ConstantIntensity(5.0), exp_claims(), functional, u_one(), 200, RandomStream(8),
                      nodes=8, grid_points=65)


class TestLemmaLawCheck:
    """Test the law identity for an added jump."""

    def setup_method(self):
        """Setup test fixtures."""
        self.model = LogBrownianIntensity(1.0, 0.3)
        spec = ClaimPairSpec(Pareto(1.0, 3.0), Pareto(1.0, 3.0), Clayton(2.0))
        self.claims = ClaimModel(spec, f=f_scaled)

    def test_passes_with_correct_indexing(self):
        """All six comparisons pass at significance 0.01."""
        report = lemma_law_check(self.model, self.claims, 0.1, 1.0, 0.5, 3000, RandomStream(9), 65)
        assert len(report.comparisons) == 6
        assert report.passed

    def test_negative_control_fails(self):
        """Reusing the next jump's mark is detected."""
        model = ConstantIntensity(3.0)
        claims = exp_claims()
        report = lemma_law_check(model, claims, 0.0, 1.0, 0.5, 5000, RandomStream(10), 65, reindex=False)
        assert not report.passed

    @pytest.mark.slow
    def test_fixture_scale_passes(self):
        """beta = 0.5, f_scaled and Clayton marks at t = 0.5 with n = 10^4: all six comparisons pass."""
        report = lemma_law_check(LogBrownianIntensity(1.0, 0.5), self.claims, 0.05, 1.0, 0.5, 10_000,
                                 RandomStream(16), 513)
        assert len(report.comparisons) == 6
        assert report.passed

    @pytest.mark.slow
    def test_fixture_scale_broken_indexing_fails(self):
        """The same run with marks not shifted fails at least one comparison."""
        report = lemma_law_check(LogBrownianIntensity(1.0, 0.5), self.claims, 0.05, 1.0, 0.5, 10_000,
                                 RandomStream(17), 513, reindex=False)
        assert not report.passed
        assert any(c.pvalue < 0.01 for c in report.comparisons)

    @pytest.mark.parametrize("t", [0.0, 1.0])
    def test_boundary_times_rejected(self, t):
        """The check runs at interior times only."""
        with pytest.raises(DomainError):
            lemma_law_check(self.model, self.claims, 0.0, 1.0, t, 100, RandomStream(0), 65)


class TestPoissonReference:
    """Test exact Poisson sums."""

    def test_nonpositive_beta(self):
        """Nothing lies below beta <= 0."""
        reference = poisson_reference(2.0, 0.0)
        assert reference.p_below == 0.0
        assert reference.truncated_mean == 0.0

    def test_fractional_beta(self):
        """P[N < 2.5] = P[N <= 2]."""
        reference = poisson_reference(1.0, 2.5)
        assert reference.p_below == pytest.approx(2.5 / 2.718281828459045, rel=1e-12)


class TestPricingCheck:
    """Test the cross-oracle pricing check."""

    def test_constant_model_passes(self):
        """Integration by parts agrees with direct simulation."""
        numerics = NumericsConfig(n_outer=300, n_inner=300, n_mu=16, nodes=16, grid_points=65, seed=12)
        report = pricing_check(ConstantIntensity(1.0), exp_claims(), Contract(T=1.0, payoff=StopLoss(1.0, 2.0)),
                               numerics, 100_000)
        assert report.passed
        assert report.to_dict()["verdict"] == "pass"

    def test_constant_marks_constant_intensity(self):
        """Unit claims: both sides estimate the same Poisson quantity."""
        claims = ClaimModel(ClaimPairSpec(Constant(1.0), Constant(1.0)))
        numerics = NumericsConfig(n_outer=300, n_inner=300, n_mu=4, nodes=16, grid_points=65, seed=13)
        report = pricing_check(ConstantIntensity(2.0), claims, Contract(T=1.0, payoff=StopLoss(1.0, 2.0)),
                               numerics, 100_000)
        assert report.passed

    def test_negligible_intensity_passes(self):
        """Both sides numerically zero agree through the absolute allowance."""
        numerics = NumericsConfig(n_outer=50, n_inner=50, n_mu=4, nodes=8, grid_points=65, seed=19)
        report = pricing_check(ConstantIntensity(1e-12), exp_claims(), Contract(T=1.0), numerics, 2000)
        assert report.rhs.value == 0.0
        assert report.passed

    def test_allowance_is_absolute_slack(self):
        """Without standard errors only the allowance can absorb a gap."""
        lhs, rhs = Estimate(0.0, 0.0), Estimate(5e-13, 0.0)
        assert not CheckReport.from_estimates("zero", lhs, rhs, 0).passed
        report = CheckReport.from_estimates("zero", lhs, rhs, 0, allowance=ZERO_ALLOWANCE)
        assert report.passed
        assert report.to_dict()["allowance"] == ZERO_ALLOWANCE


class TestCramerLundbergCheck:
    """Test the closed-form leg of the pricing check."""

    def setup_method(self):
        """Setup test fixtures."""
        self.numerics = NumericsConfig(n_outer=300, n_inner=300, n_mu=16, nodes=16, grid_points=65, seed=18)
        self.contract = Contract(T=1.0, payoff=StopLoss(1.0, 2.0))

    def test_lattice_agrees(self):
        """Exponential claims: agreement within 3 SE plus the lattice spread."""
        report = cramer_lundberg_check(ConstantIntensity(1.0), exp_claims(), self.contract, self.numerics)
        assert report.name == "pricing[cramer_lundberg lattice]"
        assert report.passed
        assert report.allowance > ZERO_ALLOWANCE
        assert report.rhs.std_error == 0.0

    def test_unit_claims_lattice_is_exact(self):
        """Unit claims: the lattice gives E[N 1(1 <= N <= 2)] = 6 e^{-2} with no spread."""
        claims = ClaimModel(ClaimPairSpec(Constant(1.0), Constant(1.0)))
        report = cramer_lundberg_check(ConstantIntensity(2.0), claims, self.contract, self.numerics)
        assert report.rhs.value == pytest.approx(6.0 * math.exp(-2.0), rel=1e-9)
        assert report.allowance == ZERO_ALLOWANCE
        assert report.passed

    def test_discounted_contract_uses_block(self):
        """kappa > 0 falls back to the closed form on a pooled block."""
        contract = Contract(T=1.0, payoff=StopLoss(1.0, 2.0), kappa=0.5)
        report = cramer_lundberg_check(ConstantIntensity(1.0), exp_claims(), contract, self.numerics)
        assert report.name == "pricing[cramer_lundberg block]"
        assert report.passed

    def test_reuses_given_left_side(self):
        """A supplied left side is compared as is."""
        lhs = Estimate(0.0, 1e-6)
        report = cramer_lundberg_check(ConstantIntensity(1.0), exp_claims(), self.contract, self.numerics, lhs=lhs)
        assert report.lhs == lhs
        assert not report.passed

    def test_stochastic_intensity_rejected(self):
        """There is no closed form off constant intensity."""
        with pytest.raises(ModelError):
            cramer_lundberg_check(LogBrownianIntensity(1.0, 0.5), exp_claims(), self.contract, self.numerics)
