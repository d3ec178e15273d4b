"""Modal DG diffusion kernel on periodic Cartesian meshes.

Provides symmetric/non-symmetric interior penalty viscous forms, the
lifting-based reconstruction of the diffusive flux, a decomposition of
viscous dissipation into non-negative physical and numerical parts, sharp
trace constants with minimal-penalty formulas, and a scenario runner that
records a per-timestep energy ledger.
"""

__version__ = "0.1.0"

from .mesh import PeriodicCartesianMesh, Facet, build_mesh, facet_length_scale
from .dgcore import DgSpace, DgField, project_initial, broken_gradient, kinetic_energy
from .sip import SipParams, ViscousOperator, assemble_sip, assemble_nip, symmetric_value
from .dissipation import LiftedFlux, DissipationBreakdown, lift_jumps, decompose
from .trace_constants import (
    TraceConstant,
    PenaltyRecommendation,
    sharp_trace_constant,
    min_penalty,
)

__all__ = [
    "PeriodicCartesianMesh",
    "Facet",
    "build_mesh",
    "facet_length_scale",
    "DgSpace",
    "DgField",
    "project_initial",
    "broken_gradient",
    "kinetic_energy",
    "SipParams",
    "ViscousOperator",
    "assemble_sip",
    "assemble_nip",
    "symmetric_value",
    "LiftedFlux",
    "DissipationBreakdown",
    "lift_jumps",
    "decompose",
    "TraceConstant",
    "PenaltyRecommendation",
    "sharp_trace_constant",
    "min_penalty",
    "__version__",
]
