"""
IMEX-RK3 solver for the Landau-Lifshitz equation with artificial-diffusion
splitting, plus a manufactured-solution verification harness.
"""

from .models.dynamics import ModelConfig, ModelVariant
from .models.grid import GridSpec, ScalarField, VectorField
from .models.integrator import RunConfig, StepDiagnostics, imex_rk_step, integrate
from .models.manufactured import ManufacturedCase, manufactured_case
from .models.tableau import ImexTableau, paper_tableau

__version__ = "1.0.0"

__all__ = [
    "GridSpec",
    "ImexTableau",
    "ManufacturedCase",
    "ModelConfig",
    "ModelVariant",
    "RunConfig",
    "ScalarField",
    "StepDiagnostics",
    "VectorField",
    "imex_rk_step",
    "integrate",
    "manufactured_case",
    "paper_tableau",
]
