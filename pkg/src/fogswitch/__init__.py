"""Latency-aware switching between edge and remote back-end instances."""
__version__ = "0.1.0"
