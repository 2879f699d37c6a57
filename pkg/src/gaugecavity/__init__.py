"""Cavity-QED models in the quadrature representation: gauge structure and wave-packet dynamics."""
from .field import QuadratureGrid, Representation, SpinorField, initial_state
from .model import ModelKind, ModelSpec, ghz_to_rad_ns
from .propagator import PropagatorConfig, TrajectoryRecord, evolve

__version__ = "0.1.0"

__all__ = [
    "ModelKind",
    "ModelSpec",
    "PropagatorConfig",
    "QuadratureGrid",
    "Representation",
    "SpinorField",
    "TrajectoryRecord",
    "evolve",
    "ghz_to_rad_ns",
    "initial_state",
]
