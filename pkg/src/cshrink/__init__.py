"""Minimax shrinkage estimation of a complex matrix-variate normal mean."""
__version__ = "0.1.0"
