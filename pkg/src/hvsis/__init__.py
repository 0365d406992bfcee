"""Numerical toolkit for the human-vector SIS epidemic model."""
from .model import (
    AuxState,
    ControlInputs,
    HvState,
    ModelParams,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = ["AuxState", "ControlInputs", "HvState", "ModelParams", "ValidationError"]
