"""Monte Carlo sweeps.

Trial ``t`` of a sweep draws its channels from the seed
``SeedSequence([master, t])``, shared by every scheme and sweep value, so
scheme comparisons are paired. Trials run in worker processes when more
than one thread is requested; results are gathered in task order, so the
output does not depend on the worker count.
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import baselines, bb_noma, cb_noma
from ..beampattern import AngularGrid
from ..certify import certify
from ..channel import generate_channels
from ..errors import InfeasibleError, MaxIterationsError, SolverFailure

log = logging.getLogger(__name__)

STATUSES = ("ok", "infeasible", "maxiter")


@dataclass
class TrialRecord:
    sweep_param: str
    sweep_value: float
    scheme: str
    seed: int
    status: str
    r_u: list = field(default_factory=list)
    r_m: list = field(default_factory=list)
    r_u_sum: float = None
    r_m_min: float = None
    mismatch_ratio: float = None
    inner_iters: int = None
    outer_iters: int = None
    wall_ms: float = None
    certified: bool = None
    history: list = field(default_factory=list)


def trial_seed(master, t):
    return int(np.random.SeedSequence([int(master), int(t)]).generate_state(1, np.uint64)[0])


def make_instance(scheme, scenario, grid, width_deg=10.0):
    channels = generate_channels(scenario)
    if scheme in ("cb_noma", "tdma_multi"):
        return cb_noma.make_cb_instance(scenario, channels, grid, width_deg)
    return bb_noma.make_instance(scenario, channels, grid, width_deg)


SOLVERS = {
    "bb_noma": bb_noma.solve_bb,
    "cb_noma": cb_noma.solve_cb,
    "tdma": baselines.solve_tdma_single,
    "cbf_no_sic": baselines.solve_cbf_no_sic,
    "tdma_multi": baselines.solve_tdma_multi,
}


def solve_scheme(scheme, inst, penalty):
    return SOLVERS[scheme](inst, penalty)


def _rates(sol):
    return (np.atleast_1d(np.asarray(sol.rates.r_u, float)),
            np.atleast_1d(np.asarray(sol.rates.r_m, float)))


def run_trial(scheme, scenario, grid, width_deg, penalty, param, value):
    """One solve recorded as a :class:`TrialRecord` (errors become statuses)."""
    rec = TrialRecord(param, value, scheme, scenario.seed, "ok")
    t0 = time.perf_counter()
    try:
        inst = make_instance(scheme, scenario, grid, width_deg)
        sol = solve_scheme(scheme, inst, penalty)
    except InfeasibleError:
        rec.status = "infeasible"
    except (MaxIterationsError, SolverFailure) as exc:
        log.info("%s seed %d: %s", scheme, scenario.seed, exc)
        rec.status = "maxiter"
    rec.wall_ms = 1e3 * (time.perf_counter() - t0)
    if rec.status != "ok":
        return rec
    r_u, r_m = _rates(sol)
    rec.r_u, rec.r_m = r_u.tolist(), r_m.tolist()
    rec.r_u_sum = float(r_u.sum())
    rec.r_m_min = float(r_m.min())
    rec.mismatch_ratio = float(sol.mismatch_ratio)
    rec.inner_iters, rec.outer_iters = sol.inner_iters, sol.outer_iters
    rbar = inst.rbar if scheme in ("cb_noma", "tdma_multi") else inst.rbar_m
    rec.certified = certify(inst, sol, rbar, inst.gamma_b).ok
    rec.history = list(sol.history)
    return rec


def _task(args):
    return run_trial(*args)


def sweep_tasks(config, master_seed=None, trials=None):
    master = config.seed if master_seed is None else master_seed
    n = config.trials if trials is None else trials
    grid = AngularGrid(config.grid_points)
    penalty = config.penalty_config()
    tasks = []
    for value in config.sweep.values:
        for t in range(n):
            sc = config.scenario_at(value, trial_seed(master, t))
            for scheme in config.schemes:
                tasks.append((scheme, sc, grid, config.beam_width_deg, penalty,
                               config.sweep.param, value))
    return tasks


def resolve_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get("RADCOM_THREADS", "1"))
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads


def run_sweep(config, threads=None, master_seed=None, trials=None):
    """All records of ``config``: sweep values x trials x schemes, in that order."""
    tasks = sweep_tasks(config, master_seed, trials)
    threads = resolve_threads(threads)
    if threads == 1 or len(tasks) == 1:
        return [_task(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_task, tasks, chunksize=1))


def summarize(records):
    """``{(value, scheme): (feasible count, total, conditional mean sum rate)}``."""
    out = {}
    for r in records:
        key = (r.sweep_value, r.scheme)
        n_ok, n, rates = out.get(key, (0, 0, []))
        if r.status == "ok":
            rates = rates + [r.r_u_sum]
            n_ok += 1
        out[key] = (n_ok, n + 1, rates)
    return {k: (ok, n, float(np.mean(v)) if v else float("nan")) for k, (ok, n, v) in out.items()}
