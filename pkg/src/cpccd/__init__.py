"""Corrupted point cloud completion toolkit."""
from cpccd._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
