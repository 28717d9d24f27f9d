"""Bayesian fault localization and value-aware patch prioritization."""
