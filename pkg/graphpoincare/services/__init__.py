"""Experiment, suite and estimation drivers behind the CLI commands."""
