"""Noisy non-adaptive group testing: designs, decoders, bounds and simulation."""

__version__ = "0.1.0"
