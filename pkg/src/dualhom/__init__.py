"""Two-scale solver library for coupled dual-continuum diffusion.

Pipeline: solve unit-cell correctors, integrate effective coefficients,
time-step the homogenized macro system, reconstruct first- and second-order
corrected solutions on a fine periodic mesh, and validate them against a
refined reference solve of the oscillatory problem.
"""

__version__ = "0.1.0"

from .cells import CellSolutions, solve_first_order, solve_second_order
from .config import RunConfig, load_config
from .effective import EffectiveCoefficients, compute_effective, kappa_star_energy
from .errors import (BlowupError, ConfigError, DualhomError,
                     InvalidMaterialError, OutOfDomainError, SolverFailure,
                     UndefinedMetricError)
from .macro import CoupledStepper, MacroTrajectory, solve_homogenized
from .materials import MaterialSpec, PhasePair
from .mesh import (InclusionSpec, Mesh, build_periodic_fine_mesh,
                   build_unit_square_mesh, locate_point, wrap_to_cell)
from .metrics import ErrorSeries, error_evolution, relative_h1_semi, relative_l2
from .reconstruct import (MultiscaleField, Reconstructor, reconstruct_foms,
                          reconstruct_homs)
from .reference import FineCoefficients, solve_multiscale

__all__ = [
    "BlowupError", "CellSolutions", "ConfigError", "CoupledStepper",
    "DualhomError", "EffectiveCoefficients", "ErrorSeries",
    "FineCoefficients", "InclusionSpec", "InvalidMaterialError",
    "MacroTrajectory", "MaterialSpec", "Mesh", "MultiscaleField",
    "OutOfDomainError", "PhasePair", "Reconstructor", "RunConfig",
    "SolverFailure", "UndefinedMetricError", "build_periodic_fine_mesh",
    "build_unit_square_mesh", "compute_effective", "error_evolution",
    "kappa_star_energy", "load_config", "locate_point", "reconstruct_foms",
    "reconstruct_homs", "relative_h1_semi", "relative_l2",
    "solve_first_order", "solve_homogenized", "solve_multiscale",
    "solve_second_order", "wrap_to_cell",
]
