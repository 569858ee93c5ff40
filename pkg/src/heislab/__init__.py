"""Numerical laboratory for transport by contact vector fields on the Heisenberg group."""
from .contact_fields import HVectorField, contact_from_psi, perturbed_vertical, preset_psi
from .fields import ScalarField, compact_bump, coord_symbols
from .grid_calculus import Box, GridField, NormSpec
from .heis_core import dilate, inverse, mul
from .mollification import Mollifier
from .report import ConvergenceReport

__version__ = "0.1.0"

__all__ = ["Box", "ConvergenceReport", "GridField", "HVectorField", "Mollifier", "NormSpec", "ScalarField",
           "compact_bump", "contact_from_psi", "coord_symbols", "dilate", "inverse", "mul", "perturbed_vertical",
           "preset_psi"]
