"""Quantum-cloud job scheduling toolkit: resource estimation, Pareto
scheduling, and deterministic cluster simulation."""

__version__ = "0.1.0"
