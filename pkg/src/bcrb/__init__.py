"""Bayesian Cramer-Rao-type bounds indexed by log-Sobolev reference measures."""
