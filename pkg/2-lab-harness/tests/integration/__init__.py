"""Integration tests package for end-to-end CLI runs."""
