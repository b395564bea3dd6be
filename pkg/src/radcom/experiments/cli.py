"""``radcom`` command line.

Exit codes: 0 success, 2 configuration or usage error, 3 infeasible
single solve, 4 solver failure or iteration cap.
"""

import os

# one BLAS thread per process; parallelism is across trials
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import logging  # noqa: E402
import sys  # noqa: E402

import numpy as np  # noqa: E402

from ..beampattern import AngularGrid, emit_pattern_csv  # noqa: E402
from ..bb_noma import radar_reference  # noqa: E402
from ..errors import InfeasibleError, MaxIterationsError, SolverFailure  # noqa: E402
from .config import ConfigError, ExperimentConfig, SCHEMES, load_config  # noqa: E402
from .io import emit_csv  # noqa: E402
from .runner import make_instance, resolve_threads, run_sweep, solve_scheme, summarize  # noqa: E402
from .runner import TrialRecord  # noqa: E402

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("--seed", type=int, help="master seed (overrides config seed)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="radcom", description="NOMA joint radar/communication designs")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("ideal", parents=[common], help="radar-only beampattern")
    s = sub.add_parser("solve", parents=[common], help="one design at the config's scenario")
    s.add_argument("--scheme", choices=SCHEMES, required=True)
    w = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep to CSV")
    w.add_argument("--trials", type=int)
    w.add_argument("--threads", type=int)
    sub.add_parser("validate-config", parents=[common], help="check a config file")
    return p


def _load(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.scenario["seed"] = args.seed
    return cfg


def _out_dir(args, cfg):
    d = args.out or cfg.out_dir
    os.makedirs(d, exist_ok=True)
    return d


def cmd_ideal(args, cfg):
    sc = cfg.scenario_at(cfg.sweep.values[0], cfg.seed)
    grid = AngularGrid(cfg.grid_points)
    _, ideal = radar_reference(sc, grid, cfg.beam_width_deg)
    path = os.path.join(_out_dir(args, cfg), "ideal_pattern.csv")
    emit_pattern_csv(ideal.r0_star, grid, path)
    print(f"delta*={ideal.delta_star:.12g} error*={ideal.error_star:.12g} -> {path}")
    return EXIT_OK


def cmd_solve(args, cfg):
    sc = cfg.scenario_at(cfg.sweep.values[0], cfg.seed)
    grid = AngularGrid(cfg.grid_points)
    try:
        inst = make_instance(args.scheme, sc, grid, cfg.beam_width_deg)
        sol = solve_scheme(args.scheme, inst, cfg.penalty_config())
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MaxIterationsError, SolverFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = _out_dir(args, cfg)
    emit_pattern_csv(sol.covariance, grid, os.path.join(out, f"{args.scheme}_pattern.csv"))
    r_u = np.atleast_1d(sol.rates.r_u)
    r_m = np.atleast_1d(sol.rates.r_m)
    rec = TrialRecord(cfg.sweep.param, cfg.sweep.values[0], args.scheme, sc.seed, "ok",
                      r_u_sum=float(r_u.sum()), r_m_min=float(r_m.min()),
                      mismatch_ratio=float(sol.mismatch_ratio), inner_iters=sol.inner_iters,
                      outer_iters=sol.outer_iters)
    emit_csv([rec], os.path.join(out, cfg.csv_name))
    print(f"{args.scheme}: sum unicast rate {rec.r_u_sum:.6f} bit/s/Hz, "
          f"min multicast rate {rec.r_m_min:.6f}, mismatch {rec.mismatch_ratio:.6g}")
    return EXIT_OK


def cmd_sweep(args, cfg):
    try:
        threads = resolve_threads(args.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    records = run_sweep(cfg, threads=threads, trials=args.trials)
    path = os.path.join(_out_dir(args, cfg), cfg.csv_name)
    emit_csv(records, path, timing=cfg.timing)
    for (value, scheme), (ok, n, mean) in summarize(records).items():
        print(f"{cfg.sweep.param}={value:g} {scheme}: mean sum rate {mean:.4f} "
              f"(feasible {ok}/{n}, mean over feasible trials)")
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        if args.cmd == "validate-config":
            print("config ok")
            return EXIT_OK
        return {"ideal": cmd_ideal, "solve": cmd_solve, "sweep": cmd_sweep}[args.cmd](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
