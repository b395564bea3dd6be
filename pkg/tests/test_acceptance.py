"""Acceptance criteria 1-9 at their stated tolerances and desk-scale sizes.

Each test records one pass/fail line through ``criterion_report``; the
lines are repeated in the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from oracles import brute_force_ideal_n2, one_sided_lower
from radcom import baselines as bl
from radcom import bb_noma as bb
from radcom import beampattern as bp
from radcom import cb_noma as cb
from radcom.beampattern import AngularGrid
from radcom.certify import certify
from radcom.channel import Scenario, generate_channels
from radcom.experiments import config_from_dict, emit_csv, run_sweep
from radcom.penalty import history_is_monotone

GRID = AngularGrid(61)
GAMMA_B_SWEEP = [-20, -15, -10, -5, 0]
GAMMA_P_SWEEP = [100, 110, 120, 130]


def timed_sweep(d):
    cfg = config_from_dict(dict(d, grid_points=61))
    t0 = time.perf_counter()
    recs = run_sweep(cfg, threads=1)
    return recs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fig5_runs():
    return timed_sweep({"n_antennas": 4, "gamma_p_db": 110, "rbar_m": 0.5,
                        "schemes": ["bb_noma", "tdma", "cbf_no_sic"],
                        "sweep": {"param": "gamma_b_db", "values": GAMMA_B_SWEEP},
                        "trials": 50})


@pytest.fixture(scope="module")
def fig7_runs():
    return timed_sweep({"n_antennas": 4, "rbar_m": 0.5, "gamma_b_db": -10,
                        "schemes": ["bb_noma", "cbf_no_sic"],
                        "sweep": {"param": "gamma_p_db", "values": GAMMA_P_SWEEP},
                        "trials": 30})


@pytest.fixture(scope="module")
def fig9_runs():
    return timed_sweep({"n_antennas": 10, "k_pairs": 3, "r_angles_deg": [-60, 0, 60],
                        "gamma_p_db": 110, "rbar_m": 0.5, "gamma_b_db": -10,
                        "schemes": ["cb_noma", "tdma_multi"], "trials": 30})


def by_key(records, value, scheme):
    return {r.seed: r for r in records if r.sweep_value == value and r.scheme == scheme}


def paired(records, value, a, b):
    ra, rb = by_key(records, value, a), by_key(records, value, b)
    seeds = [s for s in ra if s in rb and ra[s].status == "ok" and rb[s].status == "ok"]
    return (np.array([ra[s].r_u_sum for s in seeds]), np.array([rb[s].r_u_sum for s in seeds]))


# --------------------------------------------------------------- criterion 1


def test_c1_constraint_certification(criterion_report, fig5_runs, fig7_runs, fig9_runs):
    records = fig5_runs[0] + fig7_runs[0] + fig9_runs[0]
    ok = [r for r in records if r.status == "ok"]
    failed = [r for r in ok if not r.certified]
    # direct certification of the two cluster schemes at N = 4
    extra = []
    for seed in range(3):
        sc = Scenario(n_antennas=4, k_pairs=2, r_angles_deg=[-60, 60], seed=seed)
        inst = cb.make_cb_instance(sc, generate_channels(sc), GRID)
        for solver in (cb.solve_cb, bl.solve_tdma_multi):
            t0 = time.perf_counter()
            sol = solver(inst)
            extra.append((certify(inst, sol, inst.rbar, inst.gamma_b).ok,
                          1e3 * (time.perf_counter() - t0)))
    n4 = [r.wall_ms for r in fig5_runs[0] + fig7_runs[0]] + [t for _, t in extra]
    slowest = max(n4)
    passed = not failed and all(c for c, _ in extra) and slowest < 10_000
    schemes = sorted({r.scheme for r in ok})
    criterion_report(1, passed, f"{len(ok) + len(extra)} ok solutions over {schemes}, "
                     f"{len(failed)} uncertified, slowest N=4 solve {slowest / 1e3:.2f} s")
    assert len(schemes) == 5
    assert passed


# --------------------------------------------------------------- criterion 2


def test_c2_mrt_oracle(criterion_report):
    t0 = time.perf_counter()
    worst = {}
    for seed in range(20):
        sc = Scenario(n_antennas=4, seed=seed, rbar_m=0.0, gamma_b_db=60.0)
        ch = generate_channels(sc)
        h = ch.h_c[0]
        ref = np.log2(1 + sc.p_max_linear * np.vdot(h, h).real)
        bi = bb.make_instance(sc, ch, GRID)
        ci = cb.make_cb_instance(sc, ch, GRID)
        runs = (("bb_noma", bb.solve_bb(bi).r_u, ref),
                ("cb_noma", cb.solve_cb(ci).sum_rate, ref),
                ("cbf_no_sic", bl.solve_cbf_no_sic(bi).r_u, ref),
                ("tdma", bl.solve_tdma_single(bi).r_u, ref / 2))
        for name, got, want in runs:
            worst[name] = max(worst.get(name, 0.0), abs(got - want))
    elapsed = time.perf_counter() - t0
    passed = max(worst.values()) <= 1e-3 and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion_report(2, passed, f"max |R_u - oracle| bits: {detail}; {elapsed:.1f} s")
    assert passed


# --------------------------------------------------------------- criterion 3


def test_c3_ideal_pattern_oracle(criterion_report):
    t0 = time.perf_counter()
    rel = []
    for target in (0.0, 25.0, -40.0):
        d = bp.desired_pattern([target], 10.0, GRID)
        ideal = bp.solve_ideal(d, GRID, 1e11, 2)
        ref = brute_force_ideal_n2(d.gains, GRID.angles_deg, 1e11)
        rel.append(abs(ideal.error_star - ref) / ref)
    fine = AngularGrid(181)
    targets = [-60.0, 0.0, 60.0]
    d = bp.desired_pattern(targets, 10.0, fine)
    ideal = bp.solve_ideal(d, fine, 1e11, 10)
    P = bp.evaluate_pattern(ideal.r0_star, fine)
    th = fine.angles_deg
    offsets = []
    for t in targets:
        win = np.abs(th - t) <= 25
        offsets.append(abs(th[win][np.argmax(P[win])] - t))
    elapsed = time.perf_counter() - t0
    passed = max(rel) <= 1e-3 and max(offsets) <= 5.0 and elapsed < 120
    criterion_report(3, passed, f"N=2 worst relative gap {max(rel):.1e}; "
                     f"N=10 peak offsets {offsets} deg; {elapsed:.1f} s")
    assert passed


# --------------------------------------------------------------- criterion 4


def test_c4_scheme_ordering(criterion_report, fig5_runs):
    recs, elapsed = fig5_runs
    noma, tdma = paired(recs, -10, "bb_noma", "tdma")
    tdma2, cbf = paired(recs, -10, "tdma", "cbf_no_sic")
    lo1 = one_sided_lower(noma - tdma)
    lo2 = one_sided_lower(tdma2 - cbf)
    passed = (noma.mean() > tdma.mean() > cbf.mean() and lo1 > 0 and lo2 > 0
              and len(noma) >= 45 and elapsed < 900)
    criterion_report(4, passed, f"mean R_u NOMA {noma.mean():.3f} > TDMA {tdma.mean():.3f} > "
                     f"CBF {cbf.mean():.3f}; 95% lower bounds {lo1:.3f}, {lo2:.3f} "
                     f"({len(noma)} pairs); sweep {elapsed:.0f} s")
    assert passed


# --------------------------------------------------------------- criterion 5


def test_c5_monotone_in_gamma_b(criterion_report, fig5_runs):
    recs, _ = fig5_runs
    worst = {}
    table = {}
    for scheme in ("bb_noma", "tdma", "cbf_no_sic"):
        means = []
        for v in GAMMA_B_SWEEP:
            rates = [r.r_u_sum for r in recs if r.scheme == scheme and r.sweep_value == v
                     and r.status == "ok"]
            means.append(np.mean(rates))
        table[scheme] = means
        worst[scheme] = max(0.0, max(a - b for a, b in zip(means, means[1:])))
    passed = max(worst.values()) <= 0.05
    detail = "; ".join(f"{s} " + "/".join(f"{m:.3f}" for m in ms) for s, ms in table.items())
    criterion_report(5, passed, f"means over gamma_b {GAMMA_B_SWEEP} dB: {detail}")
    assert passed


# --------------------------------------------------------------- criterion 6


def test_c6_interference_limited(criterion_report, fig7_runs):
    recs, elapsed = fig7_runs
    gains = {}
    for scheme in ("bb_noma", "cbf_no_sic"):
        series = [by_key(recs, v, scheme) for v in GAMMA_P_SWEEP]
        seeds = [s for s in series[0] if all(d[s].status == "ok" for d in series)]
        means = [np.mean([d[s].r_u_sum for s in seeds]) for d in series]
        gains[scheme] = (means[1] - means[0], means[3] - means[2], len(seeds))
    c_lo, c_hi, nc = gains["cbf_no_sic"]
    n_lo, n_hi, nn = gains["bb_noma"]
    passed = c_hi < c_lo and n_hi >= 0.5 * n_lo and elapsed < 900
    criterion_report(6, passed, f"CBF gain 100->110 {c_lo:.3f}, 120->130 {c_hi:.3f} ({nc} seeds); "
                     f"NOMA {n_lo:.3f}, {n_hi:.3f} ({nn} seeds); sweep {elapsed:.0f} s")
    assert passed


# --------------------------------------------------------------- criterion 7


def test_c7_multi_pair_ordering(criterion_report, fig9_runs):
    recs, elapsed = fig9_runs
    value = recs[0].sweep_value
    cbn, tdm = paired(recs, value, "cb_noma", "tdma_multi")
    lo = one_sided_lower(cbn - tdm)
    passed = cbn.mean() > tdm.mean() and lo > 0 and len(cbn) >= 27 and elapsed < 1800
    criterion_report(7, passed, f"mean sum rate CB-NOMA {cbn.mean():.3f} vs TDMA {tdm.mean():.3f}; "
                     f"95% lower bound {lo:.3f} ({len(cbn)} pairs); sweep {elapsed:.0f} s")
    assert passed


# --------------------------------------------------------------- criterion 8


def test_c8_sca_bounds(criterion_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_viol = 0.0
    worst_eq = 0.0
    for _ in range(1000):
        n = rng.integers(2, 7)
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Wn = X @ X.conj().T
        r = rng.integers(1, n + 1)
        Y = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        W = Y @ Y.conj().T
        tan = bb.spectral_linearization(Wn)
        scale = 1 + np.abs(W).max() + np.abs(Wn).max()
        worst_viol = max(worst_viol, (-np.linalg.eigvalsh(W)[-1] - tan(W)) / scale)
        worst_eq = max(worst_eq, abs(tan(Wn) + np.linalg.eigvalsh(Wn)[-1]) / scale)
    for _ in range(1000):
        Bn, B = rng.uniform(0, 10), rng.uniform(-10, 10)
        wn, w = rng.uniform(cb.EPS_AUX, 50), rng.uniform(1e-6, 50)
        q = B * B / w
        worst_viol = max(worst_viol, (cb.gamma_bound(B, w, Bn, wn) - q) / (1 + q))
        worst_eq = max(worst_eq, abs(cb.gamma_bound(Bn, wn, Bn, wn) - Bn * Bn / wn)
                       / (1 + Bn * Bn / wn))
    for _ in range(1000):
        An, A = rng.uniform(-20, 20), rng.uniform(-20, 20)
        worst_viol = max(worst_viol, (cb.upsilon_bound(A, An) - A * A) / (1 + A * A))
        worst_eq = max(worst_eq, abs(cb.upsilon_bound(An, An) - An * An) / (1 + An * An))
    elapsed = time.perf_counter() - t0
    passed = worst_viol <= 1e-9 and worst_eq <= 1e-9 and elapsed < 10
    criterion_report(8, passed, f"worst bound violation {worst_viol:.1e}, worst gap at expansion "
                     f"point {worst_eq:.1e}; {elapsed:.1f} s")
    assert passed


# --------------------------------------------------------------- criterion 9


def test_c9_descent_and_determinism(criterion_report, fig5_runs, fig7_runs, fig9_runs, tmp_path):
    records = fig5_runs[0] + fig7_runs[0] + fig9_runs[0]
    ok = [r for r in records if r.status == "ok"]
    bad = [r for r in ok if not history_is_monotone(r.history, rtol=1e-9)]
    d = {"schemes": ["bb_noma", "tdma", "cbf_no_sic"], "grid_points": 61, "trials": 3,
         "sweep": {"param": "gamma_b_db", "values": [-20, 0]}}
    cfg = config_from_dict(d)
    blobs = []
    for i, threads in enumerate((1, 2, 3)):
        path = tmp_path / f"run{i}.csv"
        emit_csv(run_sweep(cfg, threads=threads), path)
        blobs.append(path.read_bytes())
    same = all(b == blobs[0] for b in blobs)
    passed = not bad and same
    criterion_report(9, passed, f"{len(ok) - len(bad)}/{len(ok)} histories non-increasing; "
                     f"CSV byte-identical across 1/2/3 workers: {same}")
    assert passed
