"""Spectral analysis, normal forms and simulation of neural fields with transmission delays."""

from .errors import FieldError
from .model import ModelParams, SpatialGrid

__all__ = ["FieldError", "ModelParams", "SpatialGrid"]
__version__ = "0.1.0"
