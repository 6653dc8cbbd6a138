"""Fourier series of functionals, Barron spectral norms and shallow ReLU
approximants with an experiment harness and a pointwise PDE learner."""

__version__ = "0.1.0"
