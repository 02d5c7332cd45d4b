"""Numerical toolkit for special Lagrangian submanifolds of C^m."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
