"""Benchmark schemes.

* TDMA (one pair): the multicast and unicast messages go out in two equal
  time slots on a common beam, so each rate carries a factor one half.
* CBF without SIC (one pair): two beams as in the beamformer-based NOMA
  design, but the C-user treats the multicast stream as interference.
* TDMA (K pairs): one beam per pair, the two slots as above, with
  inter-pair interference in both slots.

All three share the penalty loop and, where an SINR ratio appears, the
auxiliary-variable machinery of :mod:`radcom.cb_noma`.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import beampattern as bp
from .bb_noma import add_hermitian_psd, extract_beams, initial_point
from .cb_noma import (LN2, add_unicast_sca, rank_penalty_objective, run_cb, sinr_aux,
                      _traces)
from .conic import ConeProgram
from .errors import ContractViolation
from .hermitian import HermitianBasis, outer, project_psd, rank_one_residual
from .penalty import PenaltyConfig, run_penalty

BaselineRates = namedtuple("BaselineRates", "r_m r_u")


@dataclass
class BaselineSolution:
    scheme: str
    ws: list
    Ws: tuple
    rates: BaselineRates
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
    def r_u(self):
        return self.sum_rate

    @property
    def r_m_min(self):
        return float(np.min(self.rates.r_m))

    @property
    def covariance(self):
        return sum(outer(w) for w in self.ws)


def _finish(scheme, inst, res, Ws, ws, rates):
    R = sum(outer(w) for w in ws)
    return BaselineSolution(
        scheme=scheme, ws=ws, Ws=tuple(Ws),
        rates=rates, mismatch_ratio=bp.mismatch_ratio(R, inst.ideal, inst.desired, inst.grid),
        inner_iters=res.inner_iters, outer_iters=res.outer_iters,
        rank_residual=res.rank_residual, history=res.history, rejected=res.rejected,
        program=res.program, solution=res.solution,
    )


def _single_pair(inst):
    if inst.channels.k_pairs != 1:
        raise ContractViolation("this benchmark serves exactly one pair")


# ------------------------------------------------------------ TDMA, K = 1


def rates_tdma_single(channels, w):
    gc = abs(np.vdot(channels.h_c[0], w)) ** 2
    gr = abs(np.vdot(channels.h_r[0], w)) ** 2
    r_m = 0.5 * np.log2(1.0 + min(gc, gr))
    return BaselineRates(np.array([r_m]), np.array([0.5 * np.log2(1.0 + gc)]))


class _TDMASingle:
    def __init__(self, inst, backoff):
        self.inst = inst
        self.backoff = backoff
        self.basis = HermitianBasis(inst.n)

    def build(self, state, eta):
        inst, basis = self.inst, self.basis
        pm = inst.p_max
        Gc = basis.trace_coeffs(pm * outer(inst.channels.h_c[0]))
        Gr = basis.trace_coeffs(pm * outer(inst.channels.h_r[0]))
        thr = (2.0 ** (2.0 * inst.rbar_m) - 1.0) * (1.0 + self.backoff)
        p = ConeProgram()
        x = add_hermitian_psd(p, inst.n, "W")
        c = np.zeros(p.n)
        c[x] -= Gc
        c0 = rank_penalty_objective(c, [x], state, pm, eta, basis)
        p.set_objective(c, c0)
        for G in (Gc, Gr):
            p.add_ineq(p.row([(x, -G)]), -thr)
        bp.add_mismatch_cone(p, [x], inst.ideal, inst.desired, inst.grid, inst.gamma_b, pm,
                             self.backoff)
        p.add_eq(p.row([(x, basis.trace_coeffs(np.eye(inst.n)))]), 1.0)
        return p

    def decode(self, prog, sol, state):
        W = project_psd(self.basis.to_matrix(sol.x[prog.groups["W"]]), "W")
        return (self.inst.p_max * W,)

    def penalized(self, state, eta):
        hc = self.inst.channels.h_c[0]
        W = state[0]
        return -float(np.vdot(hc, W @ hc).real) + rank_one_residual(W / self.inst.p_max) / eta

    def rank_residual(self, state):
        return rank_one_residual(state[0] / self.inst.p_max)


def solve_tdma_single(inst, config=None, solver=None):
    """Common-beam TDMA for one pair (takes a beamformer-based instance)."""
    _single_pair(inst)
    cfg = config or PenaltyConfig()
    W0 = inst.p_max / inst.n * np.eye(inst.n, dtype=complex)
    res = run_penalty(_TDMASingle(inst, cfg.backoff), (W0,), cfg, solver)
    ws = extract_beams(res.state, inst.p_max, cfg.eps_outer)
    return _finish("tdma", inst, res, res.state, ws, rates_tdma_single(inst.channels, ws[0]))


# ----------------------------------------------------- CBF without SIC


def rates_cbf_no_sic(channels, w_m, w_u):
    hc, hr = channels.h_c[0], channels.h_r[0]
    g = {name: abs(np.vdot(h, w)) ** 2
         for name, h, w in (("cm", hc, w_m), ("cu", hc, w_u), ("rm", hr, w_m), ("ru", hr, w_u))}
    r_m = min(np.log2(1.0 + g["cm"] / (g["cu"] + 1.0)), np.log2(1.0 + g["rm"] / (g["ru"] + 1.0)))
    r_u = np.log2(1.0 + g["cu"] / (g["cm"] + 1.0))
    return BaselineRates(np.array([r_m]), np.array([r_u]))


@dataclass
class _CBFState:
    W_m: np.ndarray
    W_u: np.ndarray
    varpi: float
    b: float

    def __iter__(self):
        return iter((self.W_m, self.W_u))


def _cbf_state(inst, W_m, W_u):
    T = _traces(inst.channels, [W_m, W_u])["c"][0]
    varpi, b = sinr_aux(T[1], T[0])
    return _CBFState(W_m, W_u, float(varpi), float(b))


class _CBFNoSIC:
    def __init__(self, inst, backoff):
        self.inst = inst
        self.backoff = backoff
        self.basis = HermitianBasis(inst.n)

    def build(self, state, eta):
        inst, basis = self.inst, self.basis
        pm = inst.p_max
        Gc = basis.trace_coeffs(pm * outer(inst.channels.h_c[0]))
        Gr = basis.trace_coeffs(pm * outer(inst.channels.h_r[0]))
        gm = inst.gamma_m * (1.0 + self.backoff)
        p = ConeProgram()
        xm = add_hermitian_psd(p, inst.n, "W_m")
        xu = add_hermitian_psd(p, inst.n, "W_u")
        varpi = p.add_variables(1, "varpi", lb=0.0)[0]
        B = p.add_variables(1, "B", lb=0.0)[0]
        r = p.add_variables(1, "r")[0]
        c = np.zeros(p.n)
        c[r] = 1.0 / LN2
        c0 = -(1.0 + np.log1p(state.varpi)) / LN2
        c0 += rank_penalty_objective(c, [xm, xu], tuple(state), pm, eta, basis)
        p.set_objective(c, c0)
        add_unicast_sca(p, varpi, B, r, (np.zeros(p.n), 1.0, p.row([(xu, Gc)]), 0.0),
                        (p.row([(xm, Gc)]), 0.0), state.varpi, state.b)
        for G in (Gc, Gr):
            p.add_ineq(p.row([(xm, -G), (xu, gm * G)]), -gm)
        bp.add_mismatch_cone(p, [xm, xu], inst.ideal, inst.desired, inst.grid, inst.gamma_b,
                             pm, self.backoff)
        tr = basis.trace_coeffs(np.eye(inst.n))
        p.add_eq(p.row([(xm, tr), (xu, tr)]), 1.0)
        return p

    def decode(self, prog, sol, state):
        pm = self.inst.p_max
        W_m, W_u = (pm * project_psd(self.basis.to_matrix(sol.x[prog.groups[g]]), g)
                    for g in ("W_m", "W_u"))
        return _cbf_state(self.inst, W_m, W_u)

    def penalized(self, state, eta):
        pm = self.inst.p_max
        res = sum(rank_one_residual(W / pm) for W in state)
        return -float(np.log2(1.0 + state.varpi)) + res / eta

    def rank_residual(self, state):
        return max(rank_one_residual(W / self.inst.p_max) for W in state)


def solve_cbf_no_sic(inst, config=None, solver=None):
    """Two beams, unicast decoded with the multicast stream as interference."""
    _single_pair(inst)
    cfg = config or PenaltyConfig()
    state = _cbf_state(inst, *initial_point(inst))
    res = run_penalty(_CBFNoSIC(inst, cfg.backoff), state, cfg, solver)
    w_m, w_u = extract_beams(tuple(res.state), inst.p_max, cfg.eps_outer)
    return _finish("cbf_no_sic", inst, res, tuple(res.state), [w_m, w_u],
                   rates_cbf_no_sic(inst.channels, w_m, w_u))


# ------------------------------------------------------------ TDMA, K >= 2


def rates_tdma_multi(channels, ws):
    T = {}
    for l, H in (("r", channels.h_r), ("c", channels.h_c)):
        g = np.abs(H.conj() @ np.asarray(ws).T) ** 2
        own = np.diag(g)
        T[l] = own / (g.sum(axis=1) - own + 1.0)
    r_m = 0.5 * np.log2(1.0 + np.minimum(T["r"], T["c"]))
    return BaselineRates(r_m, 0.5 * np.log2(1.0 + T["c"]))


def solve_tdma_multi(inst, config=None, solver=None):
    """Per-pair common-beam TDMA for ``K >= 2`` pairs (takes a cluster instance)."""
    if inst.k_pairs < 2:
        raise ContractViolation("multi-pair TDMA needs at least two pairs")
    res, ws = run_cb(inst, config, solver, tdma=True)
    return _finish("tdma_multi", inst, res, res.state.Ws, ws, rates_tdma_multi(inst.channels, ws))
