"""Transmit beampattern: desired masks, evaluation, the radar-only
least-squares design and the mismatch ratio.

The pattern of a covariance ``R`` at angle ``theta`` is
``a(theta)^H R a(theta)``. The radar-only benchmark jointly picks a
scale ``delta`` and ``R`` (PSD, fixed trace) to fit ``delta * P*``.
"""

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import steering_matrix
from .conic import ConeProgram, solve as conic_solve
from .errors import ContractViolation, SolverFailure
from .hermitian import HermitianBasis, as_hermitian, project_psd

PERFECT_FIT_RTOL = 1e-12


@dataclass(frozen=True)
class AngularGrid:
    """Uniform grid over [-90, 90] degrees; ``m_points`` odd so 0 is on-grid."""

    m_points: int = 181

    def __post_init__(self):
        if self.m_points < 3 or self.m_points % 2 == 0:
            raise ContractViolation("grid size must be odd and at least 3")

    @cached_property
    def angles_deg(self):
        return np.linspace(-90.0, 90.0, self.m_points)

    def steering(self, n):
        """``(M, N)`` matrix whose rows are ``a(theta_m)^T``."""
        return steering_matrix(self.angles_deg, n)

    def quad_rows(self, n):
        """Rows mapping Hermitian coordinates to pattern samples."""
        return _quad_rows(self.m_points, n)


_QUAD_CACHE = {}


def _quad_rows(m, n):
    key = (m, n)
    if key not in _QUAD_CACHE:
        grid = AngularGrid(m)
        rows = HermitianBasis(n).quad_coeffs(grid.steering(n))
        rows.setflags(write=False)
        _QUAD_CACHE[key] = rows
    return _QUAD_CACHE[key]


@dataclass
class DesiredPattern:
    gains: np.ndarray
    beam_width_deg: float = 10.0
    targets_deg: list = field(default_factory=list)


@dataclass
class IdealSolution:
    r0_star: np.ndarray
    delta_star: float
    error_star: float
    p_max: float


def desired_pattern(targets_deg, width_deg, grid):
    """0/1 mask: one within ``width/2`` of any target, zero elsewhere."""
    targets = [float(t) for t in targets_deg]
    if not targets:
        raise ContractViolation("at least one target angle is required")
    if width_deg < 0:
        raise ContractViolation("beam width must be non-negative")
    th = grid.angles_deg
    if any(t < th[0] or t > th[-1] for t in targets):
        raise ContractViolation("target outside the grid span")
    half = 0.5 * width_deg + 1e-9
    gains = np.zeros(grid.m_points)
    for t in targets:
        gains[np.abs(th - t) <= half] = 1.0
    return DesiredPattern(gains=gains, beam_width_deg=float(width_deg), targets_deg=targets)


def evaluate_pattern(R, grid):
    """Pattern samples ``a(theta_m)^H R a(theta_m)`` on the grid."""
    R = as_hermitian(R)
    A = grid.steering(R.shape[0])
    return np.einsum("mi,ij,mj->m", A.conj(), R, A).real


def pattern_error(R, delta, desired, grid):
    """Squared least-squares misfit ``sum_m |delta P*_m - P_R(theta_m)|^2``."""
    if delta < 0:
        raise ContractViolation("delta must be non-negative")
    r = delta * desired.gains - evaluate_pattern(R, grid)
    return float(r @ r)


def solve_ideal(desired, grid, p_max, n_antennas, solver=None, tol=1e-9):
    """Radar-only least-squares design over ``delta >= 0`` and ``R0``.

    Minimises the fitting norm under ``R0 >= 0`` and ``Tr R0 = p_max``
    (internally the trace is normalised to one). ``solver`` defaults to
    :func:`radcom.conic.solve`.
    """
    if not p_max > 0:
        raise ContractViolation("p_max must be positive")
    n = int(n_antennas)
    solver = solver or conic_solve
    basis = HermitianBasis(n)
    Q = grid.quad_rows(n)

    p = ConeProgram()
    x = p.add_variables(basis.dim, "R0")
    d = p.add_variables(1, "delta", lb=0.0)
    t = p.add_variables(1, "t")
    c = np.zeros(p.n)
    c[t] = 1.0
    p.set_objective(c)
    p.add_eq(p.row([(x, basis.trace_coeffs(np.eye(n)))]), 1.0)
    A = np.zeros((grid.m_points, p.n))
    A[:, x] = -Q
    A[:, d[0]] = desired.gains
    p.add_soc(A, np.zeros(grid.m_points), p.row([(t, 1.0)]))
    p.add_psd(x, basis.embedded, np.zeros((2 * n, 2 * n)))

    sol = solver(p, tol=tol)
    if not sol.ok:
        raise SolverFailure(f"ideal beampattern design: solver status {sol.status}")
    R0 = project_psd(basis.to_matrix(sol.x[x]), "R0")
    R0 = p_max * R0 / np.trace(R0).real
    delta = max(float(sol.x[d[0]]), 0.0) * p_max
    err = pattern_error(R0, delta, desired, grid)
    return IdealSolution(r0_star=R0, delta_star=delta, error_star=err, p_max=float(p_max))


def perfect_fit(ideal, desired):
    scale = (ideal.delta_star * float(np.sum(desired.gains))) ** 2
    return ideal.error_star <= PERFECT_FIT_RTOL * scale, scale


def mismatch_ratio(R, ideal, desired, grid):
    """Relative excess pattern error over the radar-only optimum.

    When the radar-only design fits exactly the ratio is 0 for another
    exact fit and ``inf`` otherwise.
    """
    err = pattern_error(R, ideal.delta_star, desired, grid)
    exact, scale = perfect_fit(ideal, desired)
    if exact:
        return 0.0 if err <= PERFECT_FIT_RTOL * scale else np.inf
    return (err - ideal.error_star) / ideal.error_star


def add_mismatch_cone(p, blocks, ideal, desired, grid, gamma_b, p_scale, backoff=0.0):
    """Add ``||delta* P* - P_R|| <= sqrt((1 + gamma_b) err*)`` to ``p``.

    ``R = p_scale * sum_k W(x_k)`` where ``blocks`` lists the Hermitian
    coordinate index arrays ``x_k``. The radius is shrunk by the relative
    ``backoff``. Returns the radius in normalised units.
    """
    n = int(round(np.sqrt(len(blocks[0]))))
    Q = grid.quad_rows(n)
    exact, _ = perfect_fit(ideal, desired)
    if exact:
        raise ContractViolation("mismatch constraint is ill-posed for a perfect radar-only fit")
    A = np.zeros((grid.m_points, p.n))
    for idx in blocks:
        A[:, idx] -= Q
    b = desired.gains * (ideal.delta_star / p_scale)
    radius = np.sqrt((1.0 + gamma_b) * ideal.error_star) * (1.0 - backoff) / p_scale
    p.add_soc(A, b, np.zeros(p.n), radius)
    return radius


def emit_pattern_csv(R, grid, path):
    """Write ``theta_deg,gain`` rows for the pattern of covariance ``R``."""
    gains = evaluate_pattern(R, grid)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta_deg", "gain"])
            for th, g in zip(grid.angles_deg, gains):
                w.writerow([f"{th:.12g}", f"{g:.12g}"])
    except OSError as exc:
        raise OSError(f"cannot write pattern CSV {path}: {exc}") from exc
