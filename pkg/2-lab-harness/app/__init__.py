"""
Lab harness - the `lab` command-line application.

This package wires configuration, logging and report writing around the
experiments implemented in the shared library.
"""
