"""
Tests for Risk Measures
=======================
"""

import math

import numpy as np
import pytest
from scipy import stats

from src.core.errors import DegenerateConditioningError, DomainError, ParameterDomainError
from src.core.random import ClaimPairSpec, Constant, Exponential, RandomStream
from src.oracle.checks import poisson_reference
from src.pricing.risk import DiscreteLaw, expected_shortfall, var_quantiles
from src.simulation.block import DiscretizedSeverity, panjer_compound_cdf
from src.simulation.intensity import ConstantIntensity
from src.simulation.loss import ClaimModel, simulate_unconditional


class TestQuantiles:
    """Test upper and lower quantiles."""

    def test_hand_countable_sample(self):
        """1..10 at alpha = 0.5: q+ = 6, q- = 5."""
        q = var_quantiles(np.arange(1.0, 11.0), 0.5)
        assert q.q_plus == 6.0
        assert q.q_minus == 5.0
        assert q.var == -6.0

    def test_unsorted_sample(self):
        """Order of the sample does not matter."""
        q = var_quantiles(np.array([10.0, 3.0, 7.0, 1.0, 5.0, 2.0, 9.0, 4.0, 8.0, 6.0]), 0.5)
        assert q.q_plus == 6.0

    @pytest.mark.parametrize("alpha", [0.01, 0.5, 0.99])
    def test_point_mass(self, alpha):
        """A point mass is its own quantile at every level."""
        q = var_quantiles(np.full(20, 3.0), alpha)
        assert q.q_plus == q.q_minus == 3.0

    def test_poisson_quantile(self):
        """Poisson(2) at alpha = 0.9: q+ = 4."""
        q = var_quantiles(DiscreteLaw.poisson(2.0), 0.9)
        assert q.q_plus == 4.0

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_outside_unit_interval(self, alpha):
        """alpha must lie in (0, 1)."""
        with pytest.raises(DomainError):
            var_quantiles(np.arange(5.0), alpha)

    def test_empty_sample_rejected(self):
        """Quantiles of nothing are undefined."""
        with pytest.raises(ParameterDomainError):
            var_quantiles(np.array([]), 0.5)


class TestExpectedShortfall:
    """Test the expected shortfall."""

    def test_poisson_exact_sums(self):
        """Constant unit claims, lambda T = 2, alpha = 0.9 match the truncated Poisson sums."""
        es = expected_shortfall(DiscreteLaw.poisson(2.0), 0.9)
        reference = poisson_reference(2.0, es.beta)
        assert es.beta == 4.0
        assert es.p_below == pytest.approx(reference.p_below, abs=1e-12)
        assert es.value == pytest.approx(-reference.truncated_mean / reference.p_below, abs=1e-12)

    def test_poisson_reference_values(self):
        """P[N < 4] and E[N 1_{N < 4}] for N ~ Poisson(2)."""
        reference = poisson_reference(2.0, 4.0)
        assert reference.p_below == pytest.approx(stats.poisson.cdf(3, 2.0), abs=1e-14)
        expected = sum(k * stats.poisson.pmf(k, 2.0) for k in range(4))
        assert reference.truncated_mean == pytest.approx(expected, abs=1e-14)

    def test_scaled_poisson(self):
        """Claims of size c scale beta and ES by c."""
        unit = expected_shortfall(DiscreteLaw.poisson(2.0), 0.9)
        scaled = expected_shortfall(DiscreteLaw.poisson(2.0, scale=2.5), 0.9)
        assert scaled.beta == pytest.approx(2.5 * unit.beta)
        assert scaled.value == pytest.approx(2.5 * unit.value)

    def test_symmetric_sample_partition(self):
        """alpha = 0.5 on 1..10: ES is minus the mean of the values below q+."""
        es = expected_shortfall(np.arange(1.0, 11.0), 0.5)
        assert es.value == pytest.approx(-3.0)

    def test_shortfall_bounded_by_beta(self):
        """-ES <= beta on a continuous sample."""
        x = Exponential(1.0).sample(RandomStream(1), 10_000)
        es = expected_shortfall(x, 0.7)
        assert -es.value <= es.beta

    def test_high_alpha_tends_to_minus_mean(self):
        """As alpha -> 1 the conditioning event covers almost everything."""
        x = Exponential(1.0).sample(RandomStream(2), 100_000)
        es = expected_shortfall(x, 0.99999)
        assert es.value == pytest.approx(-x.mean(), abs=0.01)

    def test_point_mass_strict_is_degenerate(self):
        """A point-mass loss has an empty strict conditioning event."""
        with pytest.raises(DegenerateConditioningError):
            expected_shortfall(np.full(50, 2.0), 0.5)

    def test_point_mass_non_strict_returns_point(self):
        """With L <= beta the point mass returns minus the point."""
        es = expected_shortfall(np.full(50, 2.0), 0.5, strict=False)
        assert es.value == pytest.approx(-2.0)

    def test_strict_convention_is_observable(self):
        """The atom at beta changes ES under the two conventions."""
        law = DiscreteLaw.poisson(2.0)
        assert expected_shortfall(law, 0.9).value != expected_shortfall(law, 0.9, strict=False).value

    def test_panjer_law_accepted(self):
        """A Panjer lattice law gives exact ES sums."""
        compound = panjer_compound_cdf(1.0, DiscretizedSeverity.point_mass(1.0, 1.0))
        es = expected_shortfall(DiscreteLaw.from_compound(compound), 0.9)
        reference = poisson_reference(1.0, es.beta)
        assert es.value == pytest.approx(-reference.truncated_mean / reference.p_below, rel=1e-9)

    @pytest.mark.slow
    def test_monte_carlo_matches_exact(self):
        """Simulated ES at 10^6 samples matches the exact value within 3 SE."""
        claims = ClaimModel(ClaimPairSpec(Constant(1.0), Constant(1.0)))
        batch = simulate_unconditional(ConstantIntensity(2.0), claims, 0.0, 1.0, 1_000_000, RandomStream(3))
        simulated = expected_shortfall(batch.loss, 0.9)
        exact = expected_shortfall(DiscreteLaw.poisson(2.0), 0.9)
        assert simulated.beta == exact.beta
        assert abs(simulated.value - exact.value) <= 3 * simulated.std_error
        assert math.isfinite(simulated.std_error)
