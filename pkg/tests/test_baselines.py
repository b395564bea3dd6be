import numpy as np
import pytest

from radcom import baselines as bl
from radcom import bb_noma as bb
from radcom import cb_noma as cb
from radcom.beampattern import AngularGrid
from radcom.certify import certify
from radcom.channel import Scenario, generate_channels
from radcom.errors import ContractViolation
from radcom.penalty import history_is_monotone

GRID = AngularGrid(61)


def instance(**kw):
    sc = Scenario(**kw)
    return bb.make_instance(sc, generate_channels(sc), GRID)


def mrt(inst):
    h = inst.channels.h_c[0]
    return np.log2(1 + inst.p_max * np.vdot(h, h).real)


def test_tdma_single_mrt_half_rate():
    inst = instance(seed=4, rbar_m=0.0, gamma_b_db=60.0)
    sol = bl.solve_tdma_single(inst)
    assert sol.r_u == pytest.approx(0.5 * mrt(inst), abs=1e-3)
    assert sol.rank_residual <= 1e-5


def test_cbf_no_sic_mrt():
    inst = instance(seed=4, rbar_m=0.0, gamma_b_db=60.0)
    sol = bl.solve_cbf_no_sic(inst)
    assert sol.r_u == pytest.approx(mrt(inst), abs=1e-3)
    # the multicast beam carries no power in the optimum
    assert np.vdot(sol.ws[0], sol.ws[0]).real <= 1e-3 * inst.p_max


def test_single_pair_baselines_certified():
    inst = instance(seed=6)
    for solver in (bl.solve_tdma_single, bl.solve_cbf_no_sic):
        sol = solver(inst)
        assert certify(inst, sol, inst.rbar_m, inst.gamma_b).ok
        assert history_is_monotone(sol.history)


def test_tdma_single_insensitive_to_inactive_rate_target():
    a = bl.solve_tdma_single(instance(seed=7, rbar_m=0.5))
    assert a.r_m_min > 0.8
    b = bl.solve_tdma_single(instance(seed=7, rbar_m=0.25))
    assert b.r_u == pytest.approx(a.r_u, abs=1e-4)


def test_noma_beats_baselines_on_one_seed():
    inst = instance(seed=8)
    r_noma = bb.solve_bb(inst).r_u
    assert r_noma > bl.solve_tdma_single(inst).r_u > bl.solve_cbf_no_sic(inst).r_u


def test_tdma_multi_requires_several_pairs():
    sc = Scenario()
    inst = cb.make_cb_instance(sc, generate_channels(sc), GRID)
    with pytest.raises(ContractViolation):
        bl.solve_tdma_multi(inst)
    with pytest.raises(ContractViolation):
        bl.solve_cbf_no_sic(cb.make_cb_instance(
            Scenario(k_pairs=2, r_angles_deg=[-60, 60]),
            generate_channels(Scenario(k_pairs=2, r_angles_deg=[-60, 60])), GRID))


def test_tdma_multi_certified_and_deterministic():
    sc = Scenario(n_antennas=6, k_pairs=2, r_angles_deg=[-60, 60], seed=9)
    inst = cb.make_cb_instance(sc, generate_channels(sc), GRID)
    sol = bl.solve_tdma_multi(inst)
    assert certify(inst, sol, inst.rbar, inst.gamma_b).ok
    r = bl.rates_tdma_multi(inst.channels, sol.ws)
    assert np.array_equal(r.r_u, sol.rates.r_u)
    again = bl.solve_tdma_multi(cb.make_cb_instance(sc, generate_channels(sc), GRID))
    assert again.sum_rate == sol.sum_rate
