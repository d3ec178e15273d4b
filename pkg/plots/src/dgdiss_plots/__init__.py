"""Rendering and validation for dgdiss energy-ledger CSV files.

This package consumes only the public ledger contract (a '#'-prefixed JSON
metadata line followed by a fixed-schema CSV); it never imports the solver
package, so the primary acceptance suite runs without it and vice versa.
"""

__version__ = "0.1.0"

from .ledger import Ledger, LedgerFormatError, ValidationReport, read_ledger, validate_ledger
from .figures import PANELS, PlotSpec, render

__all__ = [
    "Ledger",
    "LedgerFormatError",
    "ValidationReport",
    "read_ledger",
    "validate_ledger",
    "PlotSpec",
    "PANELS",
    "render",
    "__version__",
]
