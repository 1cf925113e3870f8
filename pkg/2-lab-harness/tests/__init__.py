"""
Test suite for the USAT block lab.

Unit tests cover the shared experiment library and the CLI plumbing;
integration tests run `lab` subcommands end to end on small configurations.
"""
