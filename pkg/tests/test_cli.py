"""
Tests for the Command-Line Front End
====================================
"""

import io
import json
from pathlib import Path

import pytest

from src.cli import RunOptions, Runner
from src.cli.commands import get_registry
from src.main import main
from src.oracle.checks import ZERO_ALLOWANCE, poisson_reference

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SHIPPED_CONFIGS = sorted(path.name for path in CONFIG_DIR.glob("*.json"))

SMALL_NUMERICS = {
    "numerics.n_outer": 100,
    "numerics.n_inner": 100,
    "numerics.n_mu": 8,
    "numerics.nodes": 8,
    "numerics.grid": 65,
}


class TestRunner:
    """Test subcommands through the runner."""

    def setup_method(self):
        """Setup test fixtures."""
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()
        self.runner = Runner(self.stdout, self.stderr)

    def write_config(self, tmp_path, data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    def run(self, command, config=None, **flags):
        return self.runner.run(RunOptions(command, config=config, **flags))

    # === Registry ===

    def test_all_subcommands_registered(self):
        """price, es, block, validate and bench are available."""
        assert get_registry().all_names() == ["bench", "block", "es", "price", "validate"]

    def test_unknown_command(self):
        """An unknown subcommand is a configuration error."""
        assert self.run("hedge") == 2

    # === price ===

    def test_price_zero_payoff(self, tmp_path):
        """h = 0 prices to exactly 0 and echoes the seed and configuration."""
        path = self.write_config(tmp_path, {**SMALL_NUMERICS, "contract.payoff": "custom", "contract.h": "zero"})
        assert self.run("price", path, seed=42) == 0
        document = json.loads(self.stdout.getvalue())
        assert document["estimate"] == 0.0
        assert document["seed"] == 42
        assert document["config_echo"]["numerics.seed"] == 42
        assert {"std_error", "ci95", "budget"} <= set(document)

    def test_price_is_reproducible(self, tmp_path):
        """Identical configuration and seed give identical documents."""
        path = self.write_config(tmp_path, SMALL_NUMERICS)
        self.run("price", path)
        first = self.stdout.getvalue()
        self.stdout.seek(0)
        self.stdout.truncate()
        self.run("price", path, threads=2)
        second = json.loads(self.stdout.getvalue())
        assert json.loads(first)["estimate"] == second["estimate"]

    def test_missing_required_field(self, tmp_path):
        """A deterministic model without a table exits 2 naming the field."""
        path = self.write_config(tmp_path, {"model.kind": "deterministic"})
        assert self.run("price", path) == 2
        assert "model.table_t" in self.stderr.getvalue()

    def test_unknown_key(self, tmp_path):
        """Unknown keys exit 2."""
        path = self.write_config(tmp_path, {"numerics.n_outr": 5})
        assert self.run("price", path) == 2
        assert "numerics.n_outr" in self.stderr.getvalue()

    def test_single_trapezoid_node(self, tmp_path):
        """One trapezoid node is a configuration error, not a numeric one."""
        path = self.write_config(tmp_path, {**SMALL_NUMERICS, "numerics.nodes": 1, "numerics.quadrature": "trapezoid"})
        assert self.run("price", path) == 2
        assert "numerics.nodes" in self.stderr.getvalue()

    def test_invalid_json(self, tmp_path):
        """JSON syntax errors exit 2 with the line number."""
        path = tmp_path / "bad.json"
        path.write_text("{\n  \"model.lambda0\": ,\n}\n")
        assert self.run("price", str(path)) == 2
        assert "line 2" in self.stderr.getvalue()

    def test_missing_config_file(self, tmp_path):
        """An unreadable configuration is an I/O error."""
        assert self.run("price", str(tmp_path / "absent.json")) == 4

    # === es ===

    def test_es_analytic_poisson(self):
        """Constant unit claims match the exact Poisson sums."""
        assert self.run("es", "configs/poisson_es.json") == 0
        document = json.loads(self.stdout.getvalue())
        reference = poisson_reference(2.0, document["beta"])
        assert document["beta"] == 4.0
        assert document["p_below"] == pytest.approx(reference.p_below, abs=1e-12)
        assert document["es"] == pytest.approx(-reference.truncated_mean / reference.p_below, abs=1e-12)

    def test_es_alpha_out_of_range(self, tmp_path):
        """alpha outside (0, 1) exits 2."""
        path = self.write_config(tmp_path, {"es.alpha": 1.5})
        assert self.run("es", path) == 2
        assert "es.alpha" in self.stderr.getvalue()

    def test_es_degenerate_conditioning(self, tmp_path):
        """A loss that is always 0 has an empty strict conditioning event."""
        path = self.write_config(tmp_path, {"model.lambda0": 1e-12, "es.n_samples": 1000,
                                            "numerics.grid": 65})
        assert self.run("es", path) == 3
        assert "DegenerateConditioningError" in self.stderr.getvalue()

    def test_es_simulated(self, tmp_path):
        """Simulated mode reports beta, p_below, es and std_error."""
        path = self.write_config(tmp_path, {"es.n_samples": 20_000, "numerics.grid": 65})
        assert self.run("es", path) == 0
        document = json.loads(self.stdout.getvalue())
        assert {"beta", "p_below", "es", "std_error", "seed", "config_echo"} <= set(document)
        assert -document["es"] <= document["beta"]

    def test_es_analytic_needs_constant_model(self, tmp_path):
        """Analytic mode refuses stochastic intensities."""
        path = self.write_config(tmp_path, {"es.mode": "analytic", "model.kind": "logbrownian"})
        assert self.run("es", path) == 2

    # === block ===

    def test_block_zero_guard(self):
        """A negligible intensity gives the single row (0, 1)."""
        assert self.run("block", "configs/zero_guard.json") == 0
        assert self.stdout.getvalue() == "x,cdf\n0,1\n"

    def test_block_constant_claims_steps_at_integers(self, tmp_path):
        """Unit claims give CDF steps at the integers, ties merged."""
        path = self.write_config(tmp_path, {"claims.eps.kind": "constant", "claims.theta.kind": "constant",
                                            "model.lambda0": 2.0, "numerics.n_inner": 2000,
                                            "output.format": "csv"})
        assert self.run("block", path) == 0
        lines = self.stdout.getvalue().splitlines()
        assert lines[0] == "x,cdf"
        xs = [float(line.split(",")[0]) for line in lines[1:]]
        assert all(x == int(x) for x in xs)
        assert len(xs) < 2000
        assert float(lines[-1].split(",")[1]) == 1.0

    def test_block_unwritable_output(self):
        """Writing to a missing directory exits 4."""
        code = self.run("block", "configs/zero_guard.json", output="/nonexistent-dir/block.csv")
        assert code == 4

    def test_block_to_file(self, tmp_path):
        """--output writes the document to a file instead of stdout."""
        target = tmp_path / "block.csv"
        assert self.run("block", "configs/zero_guard.json", output=str(target)) == 0
        assert target.read_text() == "x,cdf\n0,1\n"
        assert self.stdout.getvalue() == ""

    def test_block_unconditional_json(self, tmp_path):
        """The unconditional CDF can be written as JSON."""
        path = self.write_config(tmp_path, {"block.mode": "unconditional", "model.kind": "logbrownian",
                                            "numerics.n_inner": 200, "numerics.grid": 65})
        assert self.run("block", path, format="json") == 0
        document = json.loads(self.stdout.getvalue())
        assert document["cdf"][-1] == 1.0
        assert document["x"] == sorted(document["x"])

    # === bench ===

    def test_bench_csv(self, tmp_path):
        """bench writes n_outer_used, estimate, std_error rows."""
        path = self.write_config(tmp_path, {**SMALL_NUMERICS, "numerics.n_outer": 400, "output.format": "csv"})
        assert self.run("bench", path) == 0
        lines = self.stdout.getvalue().splitlines()
        assert lines[0] == "n_outer_used,estimate,std_error"
        assert [line.split(",")[0] for line in lines[1:]] == ["100", "200", "400"]

    # === validate ===

    def test_validate_empty_check_list(self, tmp_path):
        """Asking for no checks exits 2."""
        path = self.write_config(tmp_path, {"validate.checks": []})
        assert self.run("validate", path) == 2

    def test_validate_passes(self, tmp_path):
        """Correct indexing passes and the broken control is rejected."""
        path = self.write_config(tmp_path, {"model.lambda0": 3.0, "validate.checks": ["lemma"],
                                            "validate.n": 5000, "numerics.grid": 65})
        assert self.run("validate", path) == 0
        document = json.loads(self.stdout.getvalue())
        names = [report["name"] for report in document["reports"]]
        assert "lemma[negative control]" in names
        assert document["passed"] is True

    def test_validate_mutated_reindexing_fails(self, tmp_path):
        """Broken mark indexing makes the battery fail."""
        path = self.write_config(tmp_path, {"model.lambda0": 3.0, "validate.checks": ["lemma"],
                                            "validate.n": 5000, "numerics.grid": 65})
        assert self.run("validate", path, mutate_reindex=True) == 1
        document = json.loads(self.stdout.getvalue())
        assert document["passed"] is False
        assert "validation failed" in self.stderr.getvalue()

    def test_validate_constant_intensity_adds_closed_form(self, tmp_path):
        """A constant intensity adds the Cramer-Lundberg leg to the pricing report."""
        path = self.write_config(tmp_path, {**SMALL_NUMERICS, "validate.checks": ["pricing"], "validate.n": 4000})
        assert self.run("validate", path) == 0
        reports = json.loads(self.stdout.getvalue())["reports"]
        assert [report["name"] for report in reports] == ["pricing", "pricing[cramer_lundberg lattice]"]
        assert reports[1]["allowance"] > ZERO_ALLOWANCE

    @pytest.mark.slow
    @pytest.mark.parametrize("name", SHIPPED_CONFIGS)
    def test_validate_shipped_fixture(self, name):
        """Every shipped fixture passes its own validation battery."""
        code = self.run("validate", str(CONFIG_DIR / name), format="json")
        assert code == 0, self.stderr.getvalue()
        assert json.loads(self.stdout.getvalue())["passed"] is True


class TestMain:
    """Test the argparse entry point."""

    def test_block_command(self, capsys):
        """main runs a subcommand and returns its exit code."""
        assert main(["block", "--config", "configs/zero_guard.json"]) == 0
        assert capsys.readouterr().out == "x,cdf\n0,1\n"

    def test_version(self, capsys):
        """--version prints the version and exits."""
        with pytest.raises(SystemExit):
            main(["--version"])
        assert "Cox Stop-Loss" in capsys.readouterr().out

    def test_seed_flag_overrides(self, tmp_path, capsys):
        """--seed wins over numerics.seed."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"numerics.seed": 1, "numerics.n_inner": 10, "numerics.grid": 65}))
        assert main(["block", "--config", str(path), "--seed", "9", "--format", "json"]) == 0
        assert json.loads(capsys.readouterr().out)["seed"] == 9
