"""Stabilized Lagrange-Galerkin P1 solver for an Oseen-type diffusive
Peterlin viscoelastic model, with a manufactured-solution convergence
harness on the unit square."""

from .mesh import Mesh, PointLocation, build_unit_square_mesh, element_geometry, locate_point
from .quadrature import QuadratureRule, quad_rule
from .fields import ScalarField, SymTensorField, VectorField, eval_field, interpolate
from .scheme import (AnalyticTriple, DofMap, Params, State, StepAssembler,
                     assemble_step_system, run_simulation, stokes_poisson_project, time_step)
from .norms import ErrorAccumulator, ErrorReport, TrajectoryErrors, h_seminorm, slopes

__all__ = [
    "Mesh", "PointLocation", "build_unit_square_mesh", "element_geometry", "locate_point",
    "QuadratureRule", "quad_rule",
    "ScalarField", "SymTensorField", "VectorField", "eval_field", "interpolate",
    "AnalyticTriple", "DofMap", "Params", "State", "StepAssembler",
    "assemble_step_system", "run_simulation", "stokes_poisson_project", "time_step",
    "ErrorAccumulator", "ErrorReport", "TrajectoryErrors", "h_seminorm", "slopes",
]
