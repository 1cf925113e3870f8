#!/usr/bin/env python3
"""
Test runner for the USAT block lab.

Profiles follow the lab's own size tiers: `quick` skips everything that
samples at acceptance sizes or asserts a Monte Carlo band, `statistical`
runs only the banded tests, `full` runs every test including the slow
acceptance-size ones, and `selftest-quick` / `selftest-full` run the
acceptance self-test through the CLI.
"""

import subprocess
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

HERE = Path(__file__).parent
PYTEST = [sys.executable, "-m", "pytest"]
COVERAGE_ARGS = ["--cov-report=xml:coverage.xml"]

# profile -> (description, command)
PROFILES: Dict[str, Tuple[str, List[str]]] = {
    "quick": ("Quick run (no slow or statistical tests)",
              PYTEST + ["tests/", "-m", "not slow and not statistical", "--no-cov", "-x", "-q"]),
    "unit": ("Unit tests at reduced sizes", PYTEST + ["tests/unit/", "-m", "not slow"]),
    "integration": ("CLI integration tests", PYTEST + ["tests/integration/", "-m", "not slow"]),
    "statistical": ("Monte Carlo band tests", PYTEST + ["tests/", "-m", "statistical", "--no-cov"]),
    "full": ("Every test, acceptance sizes included", PYTEST + ["tests/", "--no-cov"]),
    "coverage": ("Reduced-size tests with coverage", PYTEST + ["tests/", "-m", "not slow"] + COVERAGE_ARGS),
    "selftest-quick": ("Acceptance self-test, quick profile",
                       [sys.executable, "main.py", "selftest", "--profile", "quick"]),
    "selftest-full": ("Acceptance self-test, full profile",
                      [sys.executable, "main.py", "selftest", "--profile", "full"]),
}


def run_command(cmd: List[str], description: str) -> int:
    """Run a command from the harness directory and return its exit code."""
    print(f"\n{'=' * 60}")
    print(f"Running: {description}")
    print(f"Command: {' '.join(cmd)}")
    print(f"{'=' * 60}")

    result = subprocess.run(cmd, cwd=HERE)

    if result.returncode != 0:
        print(f"\n{description} failed with exit code {result.returncode}")
    else:
        print(f"\n{description} completed successfully")
    return result.returncode


def usage() -> str:
    lines = [f"Usage: python run_tests.py [{'|'.join(PROFILES)}]", "", "Profiles:"]
    lines += [f"  {name:<15} - {description}" for name, (description, _) in PROFILES.items()]
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one profile; the exit code is the command's (selftest keeps the lab's 0/1/2/3 codes)."""
    args = sys.argv[1:] if argv is None else argv
    if not args or args[0].lower() not in PROFILES:
        if args:
            print(f"Unknown profile: {args[0]}")
        print(usage())
        return 2

    description, cmd = PROFILES[args[0].lower()]
    code = run_command(cmd + args[1:], description)
    if code == 0 and args[0].lower() == "coverage":
        print("\nCoverage report generated:")
        print("  - HTML: htmlcov/index.html")
        print("  - XML: coverage.xml")
    return code


if __name__ == "__main__":
    sys.exit(main())
