import numpy as np
import pytest

from radcom.channel import (Scenario, generate_channels, pair_rng, path_loss_db,
                            steering_matrix, steering_vector)
from radcom.errors import ContractViolation


def test_steering_vector_broadside_and_modulus():
    assert np.allclose(steering_vector(0.0, 4), np.ones(4))
    a = steering_vector(30.0, 6)
    assert np.allclose(np.abs(a), 1.0)
    assert np.allclose(a, np.exp(1j * np.pi * np.arange(6) * 0.5))
    assert np.allclose(steering_matrix([30.0, 0.0], 6)[0], a)


def test_path_loss():
    assert path_loss_db("LoS", 1000.0) == pytest.approx(100.0)
    assert path_loss_db("NLoS", 100.0) == pytest.approx(100.0)
    with pytest.raises(ContractViolation):
        path_loss_db("LoS", 0.5)
    with pytest.raises(ContractViolation):
        path_loss_db("foo", 10.0)


def test_default_scenario_units():
    sc = Scenario()
    assert sc.p_max_linear == pytest.approx(1e11)
    assert sc.gamma_b == pytest.approx(0.1)
    ch = generate_channels(sc)
    # LoS R-user: |h|^2 per antenna equals the path gain
    assert np.allclose(np.abs(ch.h_r[0]) ** 2 * sc.p_max_linear, 10.0)


def test_scenario_validation():
    with pytest.raises(ContractViolation):
        Scenario(k_pairs=2, r_angles_deg=[0.0])
    with pytest.raises(ContractViolation):
        Scenario(r_angles_deg=[90.0])
    with pytest.raises(ContractViolation):
        Scenario(n_antennas=1)
    with pytest.raises(ContractViolation):
        Scenario(rbar_m=-1.0)


def test_channels_deterministic_and_pair_streams_independent():
    a = generate_channels(Scenario(seed=7))
    b = generate_channels(Scenario(seed=7))
    assert np.array_equal(a.h_c, b.h_c)
    c = generate_channels(Scenario(seed=7, k_pairs=3, r_angles_deg=[-60, 0, 60]))
    assert np.array_equal(a.h_c[0], c.h_c[0])
    assert not np.array_equal(c.h_c[0], c.h_c[1])


def test_rayleigh_variance():
    sc = Scenario(n_antennas=8)
    g = 10 ** (-path_loss_db("NLoS", sc.d_c) / 10)
    h = np.concatenate([generate_channels(sc, seed=s).h_c[0] for s in range(400)])
    assert np.mean(np.abs(h) ** 2) / g == pytest.approx(1.0, rel=0.1)
    assert pair_rng(1, 0).random() != pair_rng(1, 1).random()
