"""
Utility functions for the lab CLI.

Includes:
- validation: Seed parsing, ensemble sanity checks and enumeration budgets
"""

from .validation import check_enumeration_budget, parse_seed, validate_ensemble

__all__ = ["parse_seed", "validate_ensemble", "check_enumeration_budget"]
