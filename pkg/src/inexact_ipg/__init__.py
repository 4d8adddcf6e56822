"""Exact and inexact iterative projected gradient recovery over point-cloud models."""

__version__ = "0.1.0"
