"""Kriging and EGO for mixed and hierarchical design spaces."""
from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
