"""Stabilizer entanglement distillation toolkit."""

from .gf2 import CheckMatrix, PauliString, StandardForm, multiply, standard_form, symplectic_product
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CheckMatrix",
    "PauliString",
    "StandardForm",
    "multiply",
    "standard_form",
    "symplectic_product",
]
