"""Conic program assembly and solution."""

from .program import ConeBlock, ConicProgram, ProgramBuilder, tri_len, triu_to_full, triu_weights
from .residuals import Residuals, residuals
from .sdpa import export_sdpa, import_sdpa
from .solve import BACKENDS, BackendUnavailable, SolveReport, SolveResult, available_backends, solve

__all__ = [
    "BACKENDS",
    "BackendUnavailable",
    "ConeBlock",
    "ConicProgram",
    "ProgramBuilder",
    "Residuals",
    "SolveReport",
    "SolveResult",
    "available_backends",
    "export_sdpa",
    "import_sdpa",
    "residuals",
    "solve",
    "tri_len",
    "triu_to_full",
    "triu_weights",
]
