"""Cluster-based NOMA for K radar/communication pairs.

Pair ``k`` gets one beam ``w_k`` carrying a superposition of a multicast
stream (share ``alpha_m``) and a unicast stream (share ``alpha_u``). The
C-user of the pair decodes the multicast stream first and cancels it;
other pairs' beams are interference. The design maximises the sum
unicast rate under per-pair multicast rates, the beampattern mismatch
limit and the total power.

The non-convex SINR expressions go through auxiliary variables:

* ``varpi_k`` lower-bounds the unicast SINR via ``B_k``:
  ``varpi (I + 1) <= B**2 <= alpha_u Tr(H_c W_k)``;
* ``A_{l,k}**2 >= I_{l,k} + 1`` upper-bounds the interference plus noise
  seen in the multicast constraints.

The non-convex pieces are replaced by the affine minorants
:func:`gamma_bound` and :func:`upsilon_bound` at the current point. The
objective term ``log(1 + varpi)`` is replaced by the concave minorant
``log(1 + vn) + 1 - (1 + vn) / (1 + varpi)`` whose epigraph is a rotated
cone, so every subproblem is a linear cone program that majorises the
penalised objective with equality at its expansion point.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import beampattern as bp
from .bb_noma import SpectralTangent, add_hermitian_psd, cached_ideal, extract_beams
from .conic import ConeProgram, solve as conic_solve
from .errors import ContractViolation, InfeasibleError
from .hermitian import HermitianBasis, outer, project_psd, rank_one_residual
from .penalty import PenaltyConfig, run_penalty

EPS_AUX = 1e-8
LN2 = math.log(2.0)

PairRates = namedtuple("PairRates", "r_mc r_mr r_m r_u")
Aux = namedtuple("Aux", "varpi a_r a_c b")


# ---------------------------------------------------------------- rates


def _gains(channels, ws):
    """``g[l][k, i] = |h_{l,k}^H w_i|**2`` for ``l`` in ``("r", "c")``."""
    ws = np.asarray(ws, dtype=complex)
    return {
        "r": np.abs(channels.h_r.conj() @ ws.T) ** 2,
        "c": np.abs(channels.h_c.conj() @ ws.T) ** 2,
    }


def rates_cb(channels, ws, alpha_m, alpha_u):
    """Per-pair rates ``(r_mc, r_mr, r_m, r_u)`` as arrays over pairs."""
    am = np.asarray(alpha_m, float)
    au = np.asarray(alpha_u, float)
    if np.any(np.abs(am + au - 1.0) > 1e-9):
        raise ContractViolation("power splits must sum to one per pair")
    g = _gains(channels, ws)
    out = {}
    for l in ("r", "c"):
        own = np.diag(g[l])
        interf = g[l].sum(axis=1) - own
        out[l] = (own, interf)
    own_c, int_c = out["c"]
    own_r, int_r = out["r"]
    r_mc = np.log2(1.0 + am * own_c / (au * own_c + int_c + 1.0))
    r_mr = np.log2(1.0 + am * own_r / (au * own_r + int_r + 1.0))
    r_u = np.log2(1.0 + au * own_c / (int_c + 1.0))
    return PairRates(r_mc, r_mr, np.minimum(r_mc, r_mr), r_u)


def _traces(channels, Ws):
    """``T[l][k, i] = Tr(H_{l,k} W_i)`` for physical matrices ``Ws``."""
    T = {}
    for l, H in (("r", channels.h_r), ("c", channels.h_c)):
        T[l] = np.array([[float(np.vdot(h, W @ h).real) for W in Ws] for h in H])
    return T


def sinr_aux(signal, interference):
    """``(varpi, B)`` at a point: ``varpi = signal / (interference + 1)``,
    ``B = sqrt(signal)``, both clamped below by ``EPS_AUX``."""
    signal = np.maximum(np.asarray(signal, float), 0.0)
    varpi = np.maximum(signal / (np.asarray(interference, float) + 1.0), EPS_AUX)
    return varpi, np.maximum(np.sqrt(signal), EPS_AUX)


def auxiliary_from_state(Ws, alpha_u, channels):
    """Auxiliaries tight at the state ``(Ws, alpha_u)``."""
    T = _traces(channels, Ws)
    au = np.asarray(alpha_u, float)
    own_c = np.diag(T["c"])
    int_c = T["c"].sum(axis=1) - own_c
    int_r = T["r"].sum(axis=1) - np.diag(T["r"])
    varpi, b = sinr_aux(au * own_c, int_c)
    a_r = np.sqrt(np.maximum(int_r, 0.0) + 1.0)
    a_c = np.sqrt(np.maximum(int_c, 0.0) + 1.0)
    return Aux(varpi, a_r, a_c, b)


# ---------------------------------------------------------- Taylor bounds


def gamma_bound(B, varpi, Bn, varpi_n):
    """Affine minorant of ``B**2 / varpi`` at ``(Bn, varpi_n)``."""
    if varpi_n < EPS_AUX:
        raise ContractViolation("expansion point varpi must be at least EPS_AUX")
    return 2.0 * Bn / varpi_n * B - (Bn / varpi_n) ** 2 * varpi


def upsilon_bound(A, An):
    """Affine minorant of ``A**2`` at ``An``."""
    return 2.0 * An * A - An ** 2


def log_minorant(varpi, varpi_n):
    """Concave minorant of ``log(1 + varpi)`` (natural log), tight at ``varpi_n``."""
    return math.log1p(varpi_n) + 1.0 - (1.0 + varpi_n) / (1.0 + varpi)


# -------------------------------------------------------- instance / state


@dataclass
class CBInstance:
    channels: object
    rbar: np.ndarray
    gamma_b: float
    p_max: float
    ideal: object
    grid: object
    desired: object

    def __post_init__(self):
        K = self.channels.k_pairs
        self.rbar = np.broadcast_to(np.asarray(self.rbar, float), (K,)).copy()
        if np.any(self.rbar < 0):
            raise ContractViolation("multicast rate targets must be non-negative")
        if not self.gamma_b > -1:
            raise ContractViolation("gamma_b must exceed -1")
        if not self.p_max > 0:
            raise ContractViolation("p_max must be positive")

    @property
    def k_pairs(self):
        return self.channels.k_pairs

    @property
    def n(self):
        return self.channels.n_antennas

    @property
    def gamma_m(self):
        return 2.0 ** self.rbar - 1.0


def make_cb_instance(scenario, channels, grid, width_deg=10.0):
    desired = bp.desired_pattern(scenario.r_angles_deg, width_deg, grid)
    ideal = cached_ideal(tuple(scenario.r_angles_deg), float(width_deg), grid.m_points,
                         float(scenario.p_max_linear), scenario.n_antennas)
    return CBInstance(channels=channels, rbar=scenario.rbar_m, gamma_b=scenario.gamma_b,
                      p_max=scenario.p_max_linear, ideal=ideal, grid=grid, desired=desired)


@dataclass
class CBState:
    Ws: tuple
    alpha_u: np.ndarray
    aux: Aux = None

    @property
    def alpha_m(self):
        return 1.0 - self.alpha_u


@dataclass
class CBSolution:
    Ws: tuple
    ws: list
    alpha_m: np.ndarray
    alpha_u: np.ndarray
    rates: PairRates
    mismatch_ratio: float
    inner_iters: int
    outer_iters: int
    rank_residual: float
    history: list = field(default_factory=list)
    rejected: int = 0
    program: object = None
    solution: object = None

    @property
    def sum_rate(self):
        return float(np.sum(self.rates.r_u))

    @property
    def r_m_min(self):
        return float(np.min(self.rates.r_m))

    @property
    def covariance(self):
        return sum(outer(w) for w in self.ws)


# ---------------------------------------------------------- subproblem


def add_unicast_sca(p, varpi, B, r, signal, interference, vn, Bn):
    """Unicast SINR lower bound ``varpi`` and its log-minorant epigraph ``r``.

    ``signal = (u, u0, v, v0)`` gives ``B**2 <= (u x + u0)(v x + v0)``;
    ``interference = (row, const)`` is the interference power. Adds
    ``interference + 1 <= Gamma(B, varpi)`` and ``r (1 + varpi) >= 1 + vn``.
    """
    u, u0, v, v0 = signal
    p.add_rsoc(u, u0, v, v0, p.row([(B, 1.0)])[None, :], [0.0])
    row, const = interference
    p.add_ineq(row + p.row([(B, -2.0 * Bn / vn), (varpi, (Bn / vn) ** 2)]), -1.0 - const)
    p.add_rsoc(p.row([(varpi, 1.0)]), 1.0, p.row([(r, 1.0)]), 0.0,
               np.zeros((1, p.n)), [math.sqrt(1.0 + vn)])


def add_multicast_sca(p, A, gamma, factor, own, interference, An):
    """``gamma A**2 <= factor * own`` and ``Upsilon(A) >= interference + 1``.

    ``factor = (u, u0)`` and ``own`` is the row of the pair's own received
    power; ``interference = (row, const)``.
    """
    u, u0 = factor
    p.add_rsoc(u, u0, own, 0.0, math.sqrt(gamma) * p.row([(A, 1.0)])[None, :], [0.0])
    row, const = interference
    p.add_ineq(row + p.row([(A, -2.0 * An)]), -1.0 - const - An ** 2)


def rank_penalty_objective(c, blocks, Ws, p_max, eta, basis):
    """Add the linearised rank penalty of every block to ``c``; return its constant."""
    tr = basis.trace_coeffs(np.eye(basis.n))
    c0 = 0.0
    for idx, W in zip(blocks, Ws):
        g, g0 = SpectralTangent(W / p_max).coeffs(basis)
        c[idx] += (tr + g) / eta
        c0 += g0 / eta
    return c0


def build_subproblem(inst, state, eta, backoff=0.0, tdma=False):
    """Convex subproblem at ``state``.

    Variables: Hermitian coordinates of ``W_k / p_max`` (groups ``"W0"``,
    ``"W1"``, ...), unicast shares ``alpha_u`` (group ``"alpha_u"``, absent
    with ``tdma``) and the auxiliaries ``varpi``, ``B``, ``A_r``, ``A_c``
    and ``r`` (the log-minorant epigraph).

    With ``tdma`` the slot structure of the time-division benchmark is
    used instead: no power split, multicast threshold ``2**(2 rbar) - 1``
    and rates carry a factor one half.
    """
    K, n, pm = inst.k_pairs, inst.n, inst.p_max
    basis = HermitianBasis(n)
    aux = state.aux if state.aux is not None else auxiliary_from_state(
        state.Ws, state.alpha_u, inst.channels)
    if tdma:
        gm = (2.0 ** (2.0 * inst.rbar) - 1.0) * (1.0 + backoff)
        weight = 0.5
    else:
        gm = inst.gamma_m * (1.0 + backoff)
        weight = 1.0

    p = ConeProgram()
    xs = [add_hermitian_psd(p, n, f"W{k}") for k in range(K)]
    au = None if tdma else p.add_variables(K, "alpha_u", lb=0.0, ub=1.0)
    varpi = p.add_variables(K, "varpi", lb=0.0)
    B = p.add_variables(K, "B", lb=0.0)
    A = {"r": p.add_variables(K, "A_r"), "c": p.add_variables(K, "A_c")}
    r = p.add_variables(K, "r")

    G = {l: [basis.trace_coeffs(pm * outer(h)) for h in H]
         for l, H in (("r", inst.channels.h_r), ("c", inst.channels.h_c))}

    def interference(l, k):
        return p.row([(xs[i], G[l][k]) for i in range(K) if i != k]), 0.0

    c = np.zeros(p.n)
    c0 = 0.0
    for k in range(K):
        c[r[k]] += weight / LN2
        c0 -= weight * (1.0 + math.log1p(aux.varpi[k])) / LN2
        own_c = p.row([(xs[k], G["c"][k])])
        if tdma:
            share = (np.zeros(p.n), 1.0)
            mfactor = (np.zeros(p.n), 1.0)
        else:
            share = (p.row([(au[k], 1.0)]), 0.0)
            mfactor = (p.row([(au[k], -(1.0 + gm[k]))]), 1.0)
        add_unicast_sca(p, varpi[k], B[k], r[k], (*share, own_c, 0.0), interference("c", k),
                        aux.varpi[k], aux.b[k])
        an = {"r": aux.a_r[k], "c": aux.a_c[k]}
        for l in ("r", "c"):
            add_multicast_sca(p, A[l][k], gm[k], mfactor, p.row([(xs[k], G[l][k])]),
                              interference(l, k), an[l])
    c0 += rank_penalty_objective(c, xs, state.Ws, pm, eta, basis)
    p.set_objective(c, c0)
    bp.add_mismatch_cone(p, xs, inst.ideal, inst.desired, inst.grid, inst.gamma_b, pm, backoff)
    tr = basis.trace_coeffs(np.eye(n))
    p.add_eq(p.row([(x, tr) for x in xs]), 1.0)
    return p


class _CBProblem:
    def __init__(self, inst, backoff, tdma=False):
        self.inst = inst
        self.backoff = backoff
        self.tdma = tdma
        self.basis = HermitianBasis(inst.n)
        self.weight = 0.5 if tdma else 1.0

    def build(self, state, eta):
        return build_subproblem(self.inst, state, eta, self.backoff, self.tdma)

    def decode(self, prog, sol, state):
        pm, K = self.inst.p_max, self.inst.k_pairs
        Ws = tuple(pm * project_psd(self.basis.to_matrix(sol.x[prog.groups[f"W{k}"]]), f"W{k}")
                   for k in range(K))
        if self.tdma:
            au = np.ones(K)
        else:
            au = np.clip(sol.x[prog.groups["alpha_u"]], 0.0, 1.0)
        return CBState(Ws, au, auxiliary_from_state(Ws, au, self.inst.channels))

    def penalized(self, state, eta):
        aux = state.aux
        f = -self.weight * float(np.sum(np.log2(1.0 + aux.varpi)))
        return f + sum(rank_one_residual(W / self.inst.p_max) for W in state.Ws) / eta

    def rank_residual(self, state):
        return max(rank_one_residual(W / self.inst.p_max) for W in state.Ws)


# ------------------------------------------------------ initialisation


INIT_SPLITS = (0.5, 0.25, 0.1, 0.02)


def _slack_program(inst, alpha_u, gm, backoff):
    """Maximise the smallest multicast margin at a fixed power split."""
    K, n, pm = inst.k_pairs, inst.n, inst.p_max
    basis = HermitianBasis(n)
    p = ConeProgram()
    xs = [add_hermitian_psd(p, n, f"W{k}") for k in range(K)]
    t = p.add_variables(1, "t")
    c = np.zeros(p.n)
    c[t] = -1.0
    p.set_objective(c)
    for l, H in (("r", inst.channels.h_r), ("c", inst.channels.h_c)):
        for k in range(K):
            Gk = basis.trace_coeffs(pm * outer(H[k]))
            coef = (1.0 - alpha_u[k]) - gm[k] * alpha_u[k]
            # t <= coef * own - gm * (interference + 1)
            pairs = [(xs[k], -coef * Gk), (t, 1.0)]
            pairs += [(xs[i], gm[k] * Gk) for i in range(K) if i != k]
            p.add_ineq(p.row(pairs), -gm[k])
    bp.add_mismatch_cone(p, xs, inst.ideal, inst.desired, inst.grid, inst.gamma_b, pm, backoff)
    tr = basis.trace_coeffs(np.eye(n))
    p.add_eq(p.row([(x, tr) for x in xs]), 1.0)
    return p, xs, t


def initialize_feasible(inst, backoff=0.0, tdma=False, solver=None, tol=1e-8):
    """Feasible starting state.

    The split starts at one half and falls back to smaller unicast shares
    when the multicast targets cannot be met at one half. Raises
    :class:`InfeasibleError` when no split in ``INIT_SPLITS`` works.
    """
    solver = solver or conic_solve
    K = inst.k_pairs
    basis = HermitianBasis(inst.n)
    if tdma:
        gm = (2.0 ** (2.0 * inst.rbar) - 1.0) * (1.0 + backoff)
        splits = (0.0,)
    else:
        gm = inst.gamma_m * (1.0 + backoff)
        splits = INIT_SPLITS
    for s in splits:
        # in the slot model the multicast beam carries its whole power
        au = np.full(K, s)
        p, xs, t = _slack_program(inst, au, gm, backoff)
        sol = solver(p, tol=tol)
        if sol.status == "Infeasible":
            raise InfeasibleError("mismatch and power constraints cannot be met together")
        if not sol.ok or sol.x[t[0]] < 0:
            continue
        Ws = tuple(inst.p_max * project_psd(basis.to_matrix(sol.x[x]), "W") for x in xs)
        au = np.ones(K) if tdma else au
        return CBState(Ws, au, auxiliary_from_state(Ws, au, inst.channels))
    raise InfeasibleError("multicast rate targets unattainable from any initial split")


# ------------------------------------------------------------- driver


def run_cb(inst, config=None, solver=None, tdma=False):
    """Shared driver for the NOMA design and the multi-pair TDMA benchmark.

    Returns ``(PenaltyResult, beams)``.
    """
    cfg = config or PenaltyConfig()
    state = initialize_feasible(inst, cfg.backoff, tdma, solver, cfg.solver_tol)
    res = run_penalty(_CBProblem(inst, cfg.backoff, tdma), state, cfg, solver)
    ws = extract_beams(res.state.Ws, inst.p_max, cfg.eps_outer)
    return res, ws


def solve_cb(inst, config=None, solver=None):
    """Joint beamforming and power allocation; rates use the extracted beams."""
    res, ws = run_cb(inst, config, solver)
    st = res.state
    au = st.alpha_u
    am = 1.0 - au
    R = sum(outer(w) for w in ws)
    return CBSolution(
        Ws=st.Ws, ws=ws, alpha_m=am, alpha_u=au,
        rates=rates_cb(inst.channels, ws, am, au),
        mismatch_ratio=bp.mismatch_ratio(R, inst.ideal, inst.desired, inst.grid),
        inner_iters=res.inner_iters, outer_iters=res.outer_iters,
        rank_residual=res.rank_residual, history=res.history, rejected=res.rejected,
        program=res.program, solution=res.solution,
    )
