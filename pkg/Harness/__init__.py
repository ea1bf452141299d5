"""Scenario harness: config files, runs, CSV and summary output."""
