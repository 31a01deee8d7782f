"""Narain lattice full vertex operator algebras: Fock spaces, vertex operators, Schwinger
functions and numerical checks of the Osterwalder-Schrader axioms."""

__version__ = "0.1.0"

from .errors import NarainError
from .lattice import EvenLattice, Polarization, ii11
from .model import Model, ii11_model, load_model, model_from_matrices, parse_model_text

__all__ = [
    "EvenLattice",
    "Model",
    "NarainError",
    "Polarization",
    "ii11",
    "ii11_model",
    "load_model",
    "model_from_matrices",
    "parse_model_text",
]
