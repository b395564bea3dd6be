import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import rates_scalar
from radcom import cb_noma as cb
from radcom.beampattern import AngularGrid
from radcom.certify import certify
from radcom.channel import Scenario, generate_channels
from radcom.conic import solve, validate_solution
from radcom.errors import ContractViolation, InfeasibleError
from radcom.hermitian import HermitianBasis, outer
from radcom.penalty import history_is_monotone

GRID = AngularGrid(61)


def instance(**kw):
    sc = Scenario(**kw)
    return cb.make_cb_instance(sc, generate_channels(sc), GRID)


def k3(**kw):
    base = dict(n_antennas=6, k_pairs=3, r_angles_deg=[-60, 0, 60])
    base.update(kw)
    return instance(**base)


def rand_beams(rng, K, n, p):
    w = rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n))
    return w * np.sqrt(p / np.sum(np.abs(w) ** 2))


def test_rates_trivial_cases():
    inst = instance()
    w = rand_beams(np.random.default_rng(0), 1, 4, inst.p_max)
    r = cb.rates_cb(inst.channels, w, [0.0], [1.0])
    g = abs(np.vdot(inst.channels.h_c[0], w[0])) ** 2
    assert r.r_mc[0] == 0 and r.r_u[0] == pytest.approx(np.log2(1 + g))
    r = cb.rates_cb(inst.channels, w, [1.0], [0.0])
    assert r.r_u[0] == 0
    with pytest.raises(ContractViolation):
        cb.rates_cb(inst.channels, w, [0.3], [0.3])


def test_rates_match_scalar_oracle():
    inst = k3()
    rng = np.random.default_rng(1)
    w = rand_beams(rng, 3, 6, inst.p_max)
    au = rng.random(3)
    r = cb.rates_cb(inst.channels, w, 1 - au, au)
    ref = rates_scalar(inst.channels.h_c, inst.channels.h_r, w, 1 - au, au)
    for k in range(3):
        assert r.r_u[k] == pytest.approx(ref[k]["u"], rel=1e-12)
        assert r.r_m[k] == pytest.approx(min(ref[k]["mc"], ref[k]["mr"]), rel=1e-12)


def test_auxiliary_examples():
    inst = instance()
    w = rand_beams(np.random.default_rng(2), 1, 4, inst.p_max)
    W = outer(w[0])
    T = np.vdot(inst.channels.h_c[0], W @ inst.channels.h_c[0]).real
    aux = cb.auxiliary_from_state([W], [1.0], inst.channels)
    assert aux.varpi[0] == pytest.approx(T) and aux.a_c[0] == 1.0 and aux.a_r[0] == 1.0
    assert aux.b[0] == pytest.approx(np.sqrt(T))
    aux = cb.auxiliary_from_state([W], [0.0], inst.channels)
    assert aux.varpi[0] == cb.EPS_AUX and aux.b[0] == cb.EPS_AUX


def test_auxiliary_identity_with_interference():
    inst = k3()
    rng = np.random.default_rng(3)
    Ws = [outer(w) for w in rand_beams(rng, 3, 6, inst.p_max)]
    aux = cb.auxiliary_from_state(Ws, rng.random(3), inst.channels)
    assert np.allclose(aux.varpi * aux.a_c ** 2, aux.b ** 2, rtol=1e-9)
    assert np.all(aux.a_r ** 2 >= 1 - 1e-9)


def test_bound_examples():
    assert cb.gamma_bound(2.0, 1.0, 1.0, 1.0) == 3.0
    assert cb.gamma_bound(1.5, 0.7, 1.5, 0.7) == pytest.approx(1.5 ** 2 / 0.7)
    assert cb.upsilon_bound(3.0, 2.0) == 8.0
    assert cb.upsilon_bound(2.5, 2.5) == 6.25
    with pytest.raises(ContractViolation):
        cb.gamma_bound(1.0, 1.0, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(B=st.floats(-10, 10), w=st.floats(1e-6, 100), Bn=st.floats(0, 10), wn=st.floats(1e-8, 100),
       A=st.floats(-50, 50), An=st.floats(-50, 50))
def test_bounds_are_minorants(B, w, Bn, wn, A, An):
    assert cb.gamma_bound(B, w, Bn, wn) <= B * B / w + 1e-9 * (1 + B * B / w)
    assert A * A - cb.upsilon_bound(A, An) == pytest.approx((A - An) ** 2, abs=1e-9 * (1 + A * A))
    assert cb.log_minorant(w, wn) <= math.log1p(w) + 1e-12


def _state_point(prog, inst, state):
    """Subproblem variables evaluated at the expansion point."""
    basis = HermitianBasis(inst.n)
    x = np.zeros(prog.n)
    aux = state.aux
    for k, W in enumerate(state.Ws):
        x[prog.groups[f"W{k}"]] = basis.from_matrix(W / inst.p_max)
    if "alpha_u" in prog.groups:
        x[prog.groups["alpha_u"]] = state.alpha_u
    x[prog.groups["varpi"]] = aux.varpi
    x[prog.groups["B"]] = aux.b
    x[prog.groups["A_r"]] = aux.a_r
    x[prog.groups["A_c"]] = aux.a_c
    x[prog.groups["r"]] = 1.0
    return x


def test_expansion_point_feasible_along_iterations():
    inst = k3(seed=4)
    state = cb.initialize_feasible(inst)
    prob = cb._CBProblem(inst, 0.0)
    for _ in range(3):
        prog = prob.build(state, 1e2)
        x = _state_point(prog, inst, state)
        rep = validate_solution(prog, x, tol=1e-7)
        assert rep.ok, rep
        assert prog.objective(x) == pytest.approx(prob.penalized(state, 1e2), rel=1e-9)
        sol = solve(prog)
        assert sol.ok and validate_solution(prog, sol).ok
        assert sol.objective <= prob.penalized(state, 1e2) + 1e-7
        state = prob.decode(prog, sol, state)
        assert sum(np.trace(W).real for W in state.Ws) == pytest.approx(inst.p_max, rel=1e-6)


def test_zero_multicast_target_subproblem():
    inst = instance(rbar_m=0.0)
    state = cb.initialize_feasible(inst)
    sol = solve(cb.build_subproblem(inst, state, 1e4))
    assert sol.ok


def test_initialize_infeasible_for_huge_rate():
    with pytest.raises(InfeasibleError):
        cb.initialize_feasible(instance(rbar_m=20.0, gamma_p_db=10.0))


def test_mrt_oracle_k1():
    inst = instance(seed=2, rbar_m=0.0, gamma_b_db=60.0)
    sol = cb.solve_cb(inst)
    h = inst.channels.h_c[0]
    assert sol.sum_rate == pytest.approx(np.log2(1 + inst.p_max * np.vdot(h, h).real), abs=1e-3)
    assert sol.alpha_u[0] == pytest.approx(1.0, abs=1e-3)


def test_k3_certified_consistent_deterministic():
    inst = k3(seed=5)
    sol = cb.solve_cb(inst)
    assert certify(inst, sol, inst.rbar, inst.gamma_b).ok
    assert history_is_monotone(sol.history)
    assert np.allclose(sol.alpha_m + sol.alpha_u, 1.0)
    assert np.all((sol.alpha_u >= 0) & (sol.alpha_u <= 1))
    aux = cb.auxiliary_from_state(sol.Ws, sol.alpha_u, inst.channels)
    assert np.sum(np.log2(1 + aux.varpi)) == pytest.approx(sol.sum_rate, abs=1e-4)
    again = cb.solve_cb(k3(seed=5))
    assert again.sum_rate == sol.sum_rate
    assert all(np.array_equal(a, b) for a, b in zip(again.ws, sol.ws))
