"""
Tests for Run Configuration
===========================
"""

import json
import math

import pytest

from src.core.config import DEFAULTS, RunConfig, load_config
from src.core.errors import ConfigError
from src.core.random import Clayton, Pareto
from src.pricing.payoffs import CustomH, GeneralizedStopLoss, StopLoss
from src.simulation.intensity import ConstantIntensity, DeterministicIntensity, LogBrownianIntensity


class TestRunConfig:
    """Test parsing and validation of dotted-key configurations."""

    # === Parsing ===

    def test_defaults_fill_missing_keys(self):
        """Every key not given takes its default."""
        config = RunConfig.from_mapping({"model.lambda0": 2.0})
        assert config["model.lambda0"] == 2.0
        assert config["numerics.n_outer"] == DEFAULTS["numerics.n_outer"]

    def test_unknown_key_rejected(self):
        """Unknown keys are named in the error."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"model.lamda0": 2.0})
        assert info.value.key == "model.lamda0"

    def test_bad_choice_rejected(self):
        """Enumerated keys only take their listed values."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"model.kind": "hawkes"})
        assert "model.kind" in str(info.value)

    def test_boolean_is_not_a_count(self):
        """true is not an integer budget."""
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"numerics.n_outer": True})

    def test_fractional_count_rejected(self):
        """Budgets must be integers."""
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"numerics.n_inner": 10.5})

    def test_trapezoid_needs_two_nodes(self):
        """A single trapezoid node is rejected and the error names numerics.nodes."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"numerics.quadrature": "trapezoid", "numerics.nodes": 1})
        assert info.value.key == "numerics.nodes"
        assert "numerics.nodes" in str(info.value)
        RunConfig.from_mapping({"numerics.nodes": 1})
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"numerics.nodes": 1}).override({"numerics.quadrature": "trapezoid"})

    def test_infinite_upper_limit(self):
        """contract.M accepts "inf" and echoes it back as a string."""
        config = RunConfig.from_mapping({"contract.M": "inf"})
        assert math.isinf(config["contract.M"])
        assert config.echo()["contract.M"] == "inf"

    def test_override_skips_none(self):
        """Flags left unset keep the file value."""
        config = RunConfig.from_mapping({"numerics.seed": 5}).override(
            {"numerics.seed": None, "numerics.threads": 4})
        assert config["numerics.seed"] == 5
        assert config["numerics.threads"] == 4

    def test_echo_is_json_serializable(self):
        """The echo can be embedded in an output document."""
        json.dumps(RunConfig().echo())

    # === Builders ===

    def test_constant_model(self):
        """model.kind constant builds ConstantIntensity."""
        model = RunConfig.from_mapping({"model.lambda0": 3.0}).intensity_model()
        assert isinstance(model, ConstantIntensity)
        assert model.lambda0 == 3.0

    def test_logbrownian_model(self):
        """logbrownian carries lambda0 and beta."""
        model = RunConfig.from_mapping({"model.kind": "logbrownian", "model.beta": 0.2}).intensity_model()
        assert isinstance(model, LogBrownianIntensity)
        assert model.beta == 0.2

    def test_logbrownian_zero_beta_rejected(self):
        """beta = 0 is a configuration error."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"model.kind": "logbrownian", "model.beta": 0.0}).intensity_model()
        assert info.value.key == "model.beta"

    def test_deterministic_needs_table(self):
        """A deterministic model without its table names the missing key."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"model.kind": "deterministic"}).intensity_model()
        assert "model.table_t" in str(info.value)

    def test_deterministic_model(self):
        """The table becomes a DeterministicIntensity."""
        config = RunConfig.from_mapping({"model.kind": "deterministic", "model.table_t": [0, 1],
                                         "model.table_lambda": [1, 2]})
        assert isinstance(config.intensity_model(), DeterministicIntensity)

    def test_nonpositive_rate_rejected(self):
        """Marginal parameters must be positive."""
        with pytest.raises(ConfigError) as info:
            RunConfig.from_mapping({"claims.eps.rate": -1.0}).claim_pair_spec()
        assert info.value.key == "claims.eps.rate"

    def test_clayton_pareto_claims(self):
        """Pareto marginals under a Clayton copula."""
        spec = RunConfig.from_mapping({"claims.eps.kind": "pareto", "claims.dependence": "clayton",
                                       "claims.clayton_theta": 3.0}).claim_pair_spec()
        assert isinstance(spec.marginal_eps, Pareto)
        assert isinstance(spec.dependence, Clayton)
        assert spec.dependence.theta == 3.0

    def test_contracts(self):
        """Payoff kinds map to contract types."""
        assert isinstance(RunConfig().contract().payoff, StopLoss)
        generalized = RunConfig.from_mapping({"contract.payoff": "generalized_stop_loss",
                                              "contract.trigger": "exceedance"}).contract().payoff
        assert isinstance(generalized, GeneralizedStopLoss)
        assert generalized.trigger == "exceedance"
        custom = RunConfig.from_mapping({"contract.payoff": "custom", "contract.h": "square"}).contract()
        assert isinstance(custom.payoff, CustomH)

    def test_inverted_layer_rejected(self):
        """K > M is a configuration error."""
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"contract.K": 3.0, "contract.M": 2.0}).contract()

    def test_numerics(self):
        """numerics keys build a NumericsConfig."""
        numerics = RunConfig.from_mapping({"numerics.n_outer": 10, "numerics.quadrature": "trapezoid"}).numerics()
        assert numerics.n_outer == 10
        assert numerics.quadrature.value == "trapezoid"


class TestLoadConfig:
    """Test reading configuration files."""

    def test_none_gives_defaults(self):
        """No file means all defaults."""
        assert load_config(None).values == DEFAULTS

    def test_reads_file(self, tmp_path):
        """A JSON file is parsed and validated."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"model.lambda0": 4.0}))
        config = load_config(path)
        assert config["model.lambda0"] == 4.0
        assert config.source == str(path)

    def test_syntax_error_reports_line(self, tmp_path):
        """Invalid JSON names the line."""
        path = tmp_path / "bad.json"
        path.write_text('{\n  "model.lambda0": 1.0,\n  oops\n}\n')
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.line == 3

    def test_missing_file_raises_os_error(self, tmp_path):
        """Unreadable files surface as OSError."""
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")

    def test_shipped_fixtures_parse(self):
        """Every configuration under configs/ is valid."""
        from pathlib import Path

        root = Path(__file__).resolve().parent.parent / "configs"
        paths = sorted(root.glob("*.json"))
        assert paths
        for path in paths:
            config = load_config(path)
            config.intensity_model()
            config.contract()
