"""Compiler, simulators and verifier for ancilla-driven IQP circuits."""

__version__ = "0.1.0"
