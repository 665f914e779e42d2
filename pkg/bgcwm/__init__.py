"""Bayesian Gaussian cluster-weighted model: telescoping Gibbs sampler and post-processing."""

__version__ = "1.0.0"
