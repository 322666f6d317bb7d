"""Tests for the verification service and the qaffine CLI."""

import json
import logging
import os
from fractions import Fraction
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.config import ConfigError, RunConfig, Settings
from src.verification_service import (
    EXIT_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    Check,
    SuiteReport,
    VerificationService,
    cli,
    render,
)

QUIET = {"QAFFINE_LOG_LEVEL": "ERROR"}


@pytest.fixture(autouse=True)
def restore_process_state():
    """Drop the handlers and QAFFINE_* variables installed by the CLI."""
    root = logging.getLogger()
    level = root.level
    before = set(os.environ)
    yield
    # load_dotenv writes straight into os.environ
    for name in set(os.environ) - before:
        if name.startswith("QAFFINE_"):
            del os.environ[name]
    for handler in root.handlers[:]:
        root.removeHandler(handler)
        handler.close()
    root.setLevel(level)


@pytest.fixture
def run_cli():
    """Invoke the CLI in an empty directory with quiet logging."""
    runner = CliRunner()

    def invoke(*args):
        with runner.isolated_filesystem():
            return runner.invoke(cli, list(args), env=QUIET)

    return invoke


def payload(result):
    return json.loads(result.stdout)


class TestReports:
    """Test report objects and rendering."""

    def test_suite_passes_only_if_every_check_passes(self):
        """Test SuiteReport.passed."""
        report = SuiteReport("dets", {"depth": 3})
        report.checks.append(Check("a", {}, 0, 0, True))
        assert report.passed

        report.checks.append(Check("b", {}, 0, 1, False, note="off by one"))
        data = report.to_dict()
        assert not data["passed"]
        assert data["checks"][1]["note"] == "off by one"
        assert "note" not in data["checks"][0]

    def test_render_tsv(self):
        """Test one TSV row per check."""
        report = SuiteReport("dets", {})
        report.checks.append(Check("det_D_delta", {}, "x", "x", True))

        text = render({"suites": [report.to_dict()]}, "tsv")

        assert text.split("\t")[:3] == ["dets", "det_D_delta", "pass"]

    def test_render_json_sorted(self):
        """Test that JSON output is stable."""
        assert render({"b": 1, "a": 2}, "json") == '{\n  "a": 2,\n  "b": 1\n}'


class TestVerificationService:
    """Test the service without the CLI."""

    def test_unknown_suite(self):
        """Test that unknown suites raise ConfigError."""
        service = VerificationService(Settings(), RunConfig())
        with pytest.raises(ConfigError, match="Unknown suite"):
            service.run_suite("bogus")

    def test_dets_suite_levi(self):
        """Test that X = {1} passes with a note on the closed form."""
        service = VerificationService(Settings(), RunConfig(subset=frozenset({1})))

        report = service.run_suite("dets")

        assert report.passed
        assert report.checks[0].note is not None

    def test_reach_checks_count_cleared_slices(self):
        """Test that the singular-vector check clears slices outside the exact range."""
        run = RunConfig(h_values=(Fraction(2), Fraction(3), Fraction(5)), loop_bound=2, len_bound=2, depth=1, slack=1)
        checks = {c.name: c for c in VerificationService(Settings(), run)._reach_checks(0)}

        check = checks["no_singular_vectors"]
        assert check.got["singular"] == []
        assert check.got["cleared_slices"] > 0
        assert check.passed

    def test_seeded_weight_is_reproducible(self):
        """Test that the same seed gives the same weight."""
        first = VerificationService(Settings(), RunConfig(seed=4)).weight()
        second = VerificationService(Settings(), RunConfig(seed=4)).weight()

        assert first == second


class TestVerifyCommand:
    """Test `qaffine verify`."""

    def test_jacobi(self, run_cli):
        """Test the degree-1 Jacobi sweep for n = 3."""
        result = run_cli("verify", "jacobi", "--n", "3", "--deg", "1")

        assert result.exit_code == EXIT_OK
        data = payload(result)
        assert data["passed"]
        assert data["suites"][0]["checks"][0]["got"] == 0

    @pytest.mark.parametrize("subset", ["", "1"])
    def test_dets(self, run_cli, subset):
        """Test the determinant suite with and without a Levi part."""
        result = run_cli("verify", "dets", "--n", "3", "--x", subset)

        assert result.exit_code == EXIT_OK

    def test_heis(self, run_cli):
        """Test the Heisenberg suite at depth 3."""
        result = run_cli("verify", "heis", "--n", "3", "--depth", "3")

        assert result.exit_code == EXIT_OK
        names = {c["name"] for c in payload(result)["suites"][0]["checks"]}
        assert {"quotient_brackets", "iso_witness", "finite_components"} <= names

    def test_bad_rank(self, run_cli):
        """Test that n < 3 is a usage error."""
        result = run_cli("verify", "jacobi", "--n", "2")

        assert result.exit_code == EXIT_USAGE

    def test_bad_level(self, run_cli):
        """Test that inexact levels are rejected."""
        result = run_cli("verify", "heis", "--a", "0.5")

        assert result.exit_code == EXIT_USAGE

    def test_failure_exit_code(self):
        """Test that the failure code differs from usage errors."""
        assert EXIT_FAILED not in (EXIT_OK, EXIT_USAGE)


class TestOtherCommands:
    """Test construction commands."""

    def test_heis_phi_verma(self, run_cli):
        """Test dims of the all-plus phi-Verma module."""
        result = run_cli("heis", "phi-verma", "--n", "3", "--depth", "4")

        assert result.exit_code == 0
        data = payload(result)
        assert data["dims"] == {"0": 1, "-1": 2, "-2": 1, "-3": 2, "-4": 4}
        assert data["dims"] == data["expected_dims"]
        assert data["gram"] == ["2", "6"]

    def test_heis_iso(self, run_cli):
        """Test the isomorphism witness for one flip."""
        result = run_cli("heis", "iso", "--n", "3", "--depth", "3", "--r", "0", "--j", "2")

        data = payload(result)
        assert data["flipped"] == "+-|++"
        assert data["equivalent"]
        assert all(data["witness"].values())

    def test_heis_bad_phi(self, run_cli):
        """Test that malformed phi is a usage error."""
        result = run_cli("heis", "phi-verma", "--n", "3", "--phi", "+|++")

        assert result.exit_code == EXIT_USAGE

    def test_char(self, run_cli):
        """Test the M_H character comparison."""
        result = run_cli("char", "--alg", "H", "--n", "3", "--lambda", "2,3,5")

        assert result.exit_code == 0
        data = payload(result)
        assert data["passed"]
        assert data["dims"]["-1"] == 2

    def test_dets_with_value(self, run_cli):
        """Test det evaluation at a given weight."""
        result = run_cli("dets", "--n", "3", "--lambda", "1,1,1;0")

        data = payload(result)
        assert data["value"] == "12"
        assert data["reference"] is not None

    def test_wrong_lambda_length(self, run_cli):
        """Test that lambda must have n values."""
        result = run_cli("dets", "--n", "3", "--lambda", "1,2")

        assert result.exit_code == EXIT_USAGE

    def test_out_file(self, tmp_path):
        """Test writing a TSV report."""
        out = tmp_path / "reports" / "dets.tsv"
        runner = CliRunner()

        with runner.isolated_filesystem():
            result = runner.invoke(cli, ["verify", "dets", "--format", "tsv", "--out", str(out)], env=QUIET)

        assert result.exit_code == EXIT_OK
        assert out.read_text().startswith("dets\tdet_D_delta\tpass")


class TestInitConfig:
    """Test `qaffine init-config`."""

    def test_create_and_refuse_overwrite(self):
        """Test creation and the --force guard."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            first = runner.invoke(cli, ["init-config"], env=QUIET)
            assert first.exit_code == 0
            assert Path(".env").exists()

            second = runner.invoke(cli, ["init-config"], env=QUIET)
            assert "already exists" in second.output

            third = runner.invoke(cli, ["init-config", "--force"], env=QUIET)
            assert "created" in third.output
