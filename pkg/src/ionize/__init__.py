"""Ionization of a point-interaction bound state under a periodically driven second center."""

from ionize.model import ModelParams, BoundState, ComplexPoint, validate_params, load_config, ValidationError
from ionize.alpha import AlphaProfile, GenericityReport, genericity_residual

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "BoundState",
    "ComplexPoint",
    "AlphaProfile",
    "GenericityReport",
    "ValidationError",
    "validate_params",
    "load_config",
    "genericity_residual",
]
