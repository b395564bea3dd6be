"""Exception hierarchy shared by the solver and the beamforming algorithms."""


class RadComError(Exception):
    """Base class for all package errors."""


class ContractViolation(RadComError, ValueError):
    """An argument breaks an operation's precondition (shape, symmetry, sign)."""


class RankOneExtractionFailed(RadComError):
    """The matrix is too far from rank one to be read as ``w w^H``."""

    def __init__(self, residual, threshold):
        super().__init__(
            f"rank-one residual {residual:.3e} exceeds threshold {threshold:.3e}"
        )
        self.residual = residual
        self.threshold = threshold


class InfeasibleError(RadComError):
    """The requested rate / beampattern targets cannot be met jointly."""


class MaxIterationsError(RadComError):
    """An iteration cap was reached before the termination rule held."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SolverFailure(RadComError):
    """The conic solver broke down numerically."""
