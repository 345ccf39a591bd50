"""Samplers, branching-process limits and exponent estimators."""
