"""Curvature diagnostics for averaging operators over polynomial families of submanifolds."""

__version__ = "0.1.0"
