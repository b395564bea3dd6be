"""Beamformer-based NOMA for one radar/communication pair.

The base station sends a multicast stream on ``w_m`` (for both users)
and a unicast stream on ``w_u`` (C-user only). The C-user decodes the
multicast stream first and cancels it. The design maximises the unicast
received power subject to the multicast rate at both users, a beampattern
mismatch limit and the total power, with the rank-one requirement
handled by :mod:`radcom.penalty`.

Subproblems are posed on ``W / p_max`` so the power row reads ``Tr = 1``.
"""

from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import beampattern as bp
from .errors import ContractViolation
from .hermitian import (HermitianBasis, eigen_max, extract_rank_one, outer,
                        project_psd, rank_one_residual)
from .conic import ConeProgram
from .penalty import PenaltyConfig, run_penalty

BBRates = namedtuple("BBRates", "r_mc r_u r_mr r_m")


def rates_bb(channels, w_m, w_u, k=0):
    """Rates of pair ``k`` with SIC at the C-user (unit noise)."""
    hc, hr = channels.h_c[k], channels.h_r[k]
    gcm = abs(np.vdot(hc, w_m)) ** 2
    gcu = abs(np.vdot(hc, w_u)) ** 2
    grm = abs(np.vdot(hr, w_m)) ** 2
    gru = abs(np.vdot(hr, w_u)) ** 2
    r_mc = np.log2(1.0 + gcm / (gcu + 1.0))
    r_u = np.log2(1.0 + gcu)
    r_mr = np.log2(1.0 + grm / (gru + 1.0))
    return BBRates(r_mc, r_u, r_mr, min(r_mc, r_mr))


class SpectralTangent:
    """Affine majorant ``W -> -||Wn||_2 - v^H (W - Wn) v`` of ``-||W||_2``.

    ``v`` is the principal eigenvector of the PSD expansion point ``Wn``.
    """

    def __init__(self, Wn):
        self.lam, self.v = eigen_max(project_psd(Wn, "expansion point"))
        self.Wn = np.asarray(Wn, dtype=complex)

    def __call__(self, W):
        D = np.asarray(W, dtype=complex) - self.Wn
        return -self.lam - float(np.vdot(self.v, D @ self.v).real)

    def coeffs(self, basis):
        """``(g, g0)`` with ``-lambda - v^H (W - Wn) v = g @ x + g0``."""
        g = -basis.trace_coeffs(outer(self.v))
        g0 = -self.lam + float(np.vdot(self.v, self.Wn @ self.v).real)
        return g, g0


def spectral_linearization(Wn):
    return SpectralTangent(Wn)


@dataclass
class BBInstance:
    channels: object
    rbar_m: float
    gamma_b: float
    p_max: float
    ideal: object
    grid: object
    desired: object

    def __post_init__(self):
        if not self.gamma_b > -1:
            raise ContractViolation("gamma_b must exceed -1")
        if not self.rbar_m >= 0:
            raise ContractViolation("rbar_m must be non-negative")
        if self.channels.k_pairs != 1:
            raise ContractViolation("beamformer-based NOMA serves exactly one pair")

    @property
    def gamma_m(self):
        return 2.0 ** self.rbar_m - 1.0

    @property
    def n(self):
        return self.channels.n_antennas


@lru_cache(maxsize=64)
def cached_ideal(targets, width_deg, m_points, p_max, n):
    grid = bp.AngularGrid(m_points)
    desired = bp.desired_pattern(list(targets), width_deg, grid)
    return bp.solve_ideal(desired, grid, p_max, n)


def radar_reference(scenario, grid, width_deg=10.0):
    """(desired pattern, radar-only solution) for the scenario's targets."""
    desired = bp.desired_pattern(scenario.r_angles_deg, width_deg, grid)
    ideal = cached_ideal(tuple(scenario.r_angles_deg), float(width_deg), grid.m_points,
                         float(scenario.p_max_linear), scenario.n_antennas)
    return desired, ideal


def make_instance(scenario, channels, grid, width_deg=10.0):
    desired, ideal = radar_reference(scenario, grid, width_deg)
    return BBInstance(channels=channels, rbar_m=scenario.rbar_m, gamma_b=scenario.gamma_b,
                      p_max=scenario.p_max_linear, ideal=ideal, grid=grid, desired=desired)


@dataclass
class BBSolution:
    W_m: np.ndarray
    W_u: np.ndarray
    w_m: np.ndarray
    w_u: np.ndarray
    rates: BBRates
    mismatch_ratio: float
    inner_iters: int
    outer_iters: int
    rank_residual: float
    history: list = field(default_factory=list)
    rejected: int = 0
    program: object = None
    solution: object = None

    @property
    def r_u(self):
        return self.rates.r_u

    @property
    def r_m(self):
        return self.rates.r_m

    @property
    def covariance(self):
        return outer(self.w_m) + outer(self.w_u)


def add_hermitian_psd(p, n, name):
    basis = HermitianBasis(n)
    idx = p.add_variables(basis.dim, name)
    p.add_psd(idx, basis.embedded, np.zeros((2 * n, 2 * n)))
    return idx


def build_subproblem(inst, W_m_n, W_u_n, eta, backoff=0.0):
    """Convex subproblem at the expansion point ``(W_m_n, W_u_n)``.

    Variables are the Hermitian coordinates of ``W_m / p_max`` and
    ``W_u / p_max`` (groups ``"W_m"``, ``"W_u"``). The objective is the
    negated unicast power plus the linearised rank penalty; the constant
    of the tangent cancels with the trace term at the expansion point.
    """
    n, pm = inst.n, inst.p_max
    basis = HermitianBasis(n)
    hc, hr = inst.channels.h_c[0], inst.channels.h_r[0]
    Gc = basis.trace_coeffs(pm * outer(hc))
    Gr = basis.trace_coeffs(pm * outer(hr))
    tr = basis.trace_coeffs(np.eye(n))
    gm = inst.gamma_m * (1.0 + backoff)

    p = ConeProgram()
    xm = add_hermitian_psd(p, n, "W_m")
    xu = add_hermitian_psd(p, n, "W_u")
    c = np.zeros(p.n)
    c0 = 0.0
    c[xu] -= Gc
    for idx, Wn in ((xm, W_m_n), (xu, W_u_n)):
        g, g0 = SpectralTangent(Wn / pm).coeffs(basis)
        c[idx] += (tr + g) / eta
        c0 += g0 / eta
    p.set_objective(c, c0)
    # multicast SINR at both users, SIC at the C-user
    for G in (Gc, Gr):
        p.add_ineq(p.row([(xm, -G), (xu, gm * G)]), -gm)
    bp.add_mismatch_cone(p, [xm, xu], inst.ideal, inst.desired, inst.grid, inst.gamma_b, pm,
                         backoff)
    p.add_eq(p.row([(xm, tr), (xu, tr)]), 1.0)
    return p


class _BBProblem:
    def __init__(self, inst, backoff):
        self.inst = inst
        self.backoff = backoff
        self.basis = HermitianBasis(inst.n)

    def build(self, state, eta):
        return build_subproblem(self.inst, state[0], state[1], eta, self.backoff)

    def decode(self, prog, sol, state):
        pm = self.inst.p_max
        return tuple(
            pm * project_psd(self.basis.to_matrix(sol.x[prog.groups[g]]), g)
            for g in ("W_m", "W_u")
        )

    def penalized(self, state, eta):
        pm = self.inst.p_max
        hc = self.inst.channels.h_c[0]
        f = -float(np.vdot(hc, state[1] @ hc).real)
        return f + sum(rank_one_residual(W / pm) for W in state) / eta

    def rank_residual(self, state):
        return max(rank_one_residual(W / self.inst.p_max) for W in state)


def initial_point(inst):
    W0 = inst.p_max / (2.0 * inst.n) * np.eye(inst.n, dtype=complex)
    return W0, W0.copy()


def extract_beams(Ws, p_max, threshold):
    """Rank-one beams of ``Ws``, jointly rescaled to total power ``p_max``.

    The dropped eigen-components carry at most ``threshold`` of the
    normalised power, so the rescaling factor is within that of one.
    """
    ws = [extract_rank_one(W / p_max, threshold) for W in Ws]
    total = sum(float(np.vdot(w, w).real) for w in ws)
    return [np.sqrt(p_max / total) * w for w in ws]


def solve_bb(inst, config=None, solver=None):
    """Double-layer penalty design; rates come from the extracted beams."""
    cfg = config or PenaltyConfig()
    prob = _BBProblem(inst, cfg.backoff)
    res = run_penalty(prob, initial_point(inst), cfg, solver)
    W_m, W_u = res.state
    w_m, w_u = extract_beams(res.state, inst.p_max, cfg.eps_outer)
    R = outer(w_m) + outer(w_u)
    return BBSolution(
        W_m=W_m, W_u=W_u, w_m=w_m, w_u=w_u,
        rates=rates_bb(inst.channels, w_m, w_u),
        mismatch_ratio=bp.mismatch_ratio(R, inst.ideal, inst.desired, inst.grid),
        inner_iters=res.inner_iters, outer_iters=res.outer_iters,
        rank_residual=res.rank_residual, history=res.history, rejected=res.rejected,
        program=res.program, solution=res.solution,
    )
