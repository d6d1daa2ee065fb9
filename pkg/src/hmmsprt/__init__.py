"""Likelihood exponents and the SPRT for pairs of hidden Markov models."""
