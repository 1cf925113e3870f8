"""
Services for the lab CLI.

Includes:
- experiments: Experiment orchestration, one method per subcommand
- selftest: Acceptance self-test over all ten criteria
- reporting: JSON report and CSV table output
"""

from .experiments import SUBCOMMANDS, ExperimentService, Outcome
from .reporting import ReportWriter, render_report
from .selftest import Profile, SelfTestService

__all__ = [
    "SUBCOMMANDS",
    "ExperimentService",
    "Outcome",
    "ReportWriter",
    "render_report",
    "Profile",
    "SelfTestService",
]
