"""Recursive Bayesian bipartitioning for network community detection."""

__version__ = "0.1.0"
