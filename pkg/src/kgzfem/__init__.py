"""Energy-conserving Crank-Nicolson Q1 finite elements for the generalized Klein-Gordon-Zakharov system."""

from .analysis import EnergyBreakdown, convergence_study, energy, error_norm, interpolate, postprocess_I2h
from .assembly import Q1Space, assemble_mass, assemble_stiffness, space_for
from .mesh import TensorMesh, build_mesh, macro_patches, unit_mesh
from .problems import catalog
from .scheme import CrankNicolsonStepper, StepState, TimeGrid, initialize, picard_step, ritz_project, run

__version__ = "0.1.0"

__all__ = [
    "EnergyBreakdown", "convergence_study", "energy", "error_norm", "interpolate", "postprocess_I2h",
    "Q1Space", "assemble_mass", "assemble_stiffness", "space_for",
    "TensorMesh", "build_mesh", "macro_patches", "unit_mesh", "catalog",
    "CrankNicolsonStepper", "StepState", "TimeGrid", "initialize", "picard_step", "ritz_project", "run",
    "__version__",
]
