"""Lie algebroids and the linear Poisson structure on their predual bundles,
on finite truncations of sequence spaces."""

__version__ = "0.1.0"
