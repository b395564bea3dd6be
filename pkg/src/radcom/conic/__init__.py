"""Dense interior-point solver for small conic programs."""

from .cones import Dims
from .ipm import solve
from .program import ConeProgram, ResidualReport, SolverSolution, validate_solution

__all__ = ["ConeProgram", "Dims", "ResidualReport", "SolverSolution", "solve", "validate_solution"]
