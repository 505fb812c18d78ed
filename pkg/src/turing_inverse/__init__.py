"""Recover chemotaxis model parameters from the cosine amplitudes of a Turing pattern."""

from .inverse import RecoveryResult, SolverOptions, Status, degeneracy_screen, identifiability_report, solve_inverse
from .pde import Grid1D, FieldPair, PdeCoefficients, dispersion_scan, simulate, step_to_steady
from .residuals import AmplitudeSpectrum, Model, ModelParams, forward_galerkin_solve, generic_residuals, residuals
from .spectral import ExtractionResult, extract, project_amplitudes

__all__ = [
    "AmplitudeSpectrum",
    "ExtractionResult",
    "FieldPair",
    "Grid1D",
    "Model",
    "ModelParams",
    "RecoveryResult",
    "SolverOptions",
    "Status",
    "degeneracy_screen",
    "dispersion_scan",
    "extract",
    "forward_galerkin_solve",
    "generic_residuals",
    "identifiability_report",
    "project_amplitudes",
    "residuals",
    "simulate",
    "solve_inverse",
    "step_to_steady",
]
