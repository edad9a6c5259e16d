"""Finite-level biworld semantics for multi-agent only knowing."""

__version__ = "0.1.0"
