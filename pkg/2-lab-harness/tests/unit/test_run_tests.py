"""
Unit tests for the test-runner profiles.
"""

import subprocess

import pytest

import run_tests
from app.services.selftest import Profile


@pytest.fixture
def fake_run(mocker):
    return mocker.patch.object(run_tests.subprocess, "run", return_value=subprocess.CompletedProcess([], 0))


class TestProfiles:
    """Test each profile maps to the intended command."""

    def test_quick_skips_slow_and_statistical(self, fake_run):
        """Test the quick profile deselects both expensive markers and stops at the first failure."""
        assert run_tests.main(["quick"]) == 0
        cmd = fake_run.call_args.args[0]
        assert cmd[cmd.index("-m") + 1] == "not slow and not statistical"
        assert "-x" in cmd and "--no-cov" in cmd

    def test_statistical_selects_banded_tests(self, fake_run):
        """Test the statistical profile runs only tests marked statistical."""
        run_tests.main(["statistical"])
        cmd = fake_run.call_args.args[0]
        assert cmd[cmd.index("-m") + 1] == "statistical"

    def test_full_has_no_marker_filter(self, fake_run):
        """Test the full profile includes the acceptance-size tests."""
        run_tests.main(["full"])
        assert "-m" not in fake_run.call_args.args[0]

    @pytest.mark.parametrize("profile", list(Profile))
    def test_selftest_profiles_match_the_cli(self, fake_run, profile):
        """Test every self-test size profile has a runner entry that passes it to the CLI."""
        run_tests.main([f"selftest-{profile.value}"])
        cmd = fake_run.call_args.args[0]
        assert cmd[-3:] == ["selftest", "--profile", profile.value]

    def test_extra_arguments_are_forwarded(self, fake_run):
        """Test trailing arguments reach pytest."""
        run_tests.main(["unit", "-k", "codec"])
        assert fake_run.call_args.args[0][-2:] == ["-k", "codec"]

    def test_failure_exit_code_is_returned(self, mocker):
        """Test the runner returns the command's exit code."""
        mocker.patch.object(run_tests.subprocess, "run", return_value=subprocess.CompletedProcess([], 3))
        assert run_tests.main(["selftest-quick"]) == 3

    def test_unknown_profile(self, fake_run, capsys):
        """Test an unknown profile prints usage and runs nothing."""
        assert run_tests.main(["leisurely"]) == 2
        assert run_tests.main([]) == 2
        assert "statistical" in capsys.readouterr().out
        fake_run.assert_not_called()
