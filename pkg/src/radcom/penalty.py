"""Double-layer penalty loop shared by every beamforming scheme.

The rank-one requirement ``Tr(W) - ||W||_2 = 0`` is moved into the
objective with weight ``1/eta``. The inner layer runs successive convex
approximation at fixed ``eta`` (the spectral norm is replaced by its
tangent at the current point); the outer layer shrinks ``eta``
geometrically until every matrix is rank one to the requested accuracy.

A scheme plugs in through four callables on a problem object:

``build(state, eta)``
    the convex subproblem expanded at ``state``;
``decode(program, solution, state)``
    the next state read from a solved subproblem;
``penalized(state, eta)``
    the exact penalised objective at ``state``, which the subproblem
    majorises with equality at its expansion point;
``rank_residual(state)``
    the largest rank-one residual of the state's matrices.
"""

import logging
from dataclasses import dataclass, field

from .conic import solve as conic_solve
from .errors import ContractViolation, InfeasibleError, MaxIterationsError, SolverFailure

log = logging.getLogger(__name__)


@dataclass
class PenaltyConfig:
    eta0: float = 1e4
    eps_scale: float = 0.5
    eps_inner: float = 1e-2
    eps_outer: float = 1e-5
    max_inner: int = 50
    max_outer: int = 40
    eta_floor: float = 1e-12
    # after the rank-one test passes, keep shrinking eta (at most
    # ``max_final`` times) until the residual is below ``eps_final``
    eps_final: float = 1e-7
    max_final: int = 3
    solver_tol: float = 1e-8
    # a step rejected for an objective increase is re-solved once at this
    # tolerance before the inner loop gives up
    retry_tol: float = 1e-10
    # relative tightening of rate and pattern constraints in every
    # subproblem, so rank-one extraction cannot push the beams across them
    backoff: float = 1e-5

    def __post_init__(self):
        if not (0.0 <= self.backoff < 1e-2):
            raise ContractViolation("backoff must lie in [0, 1e-2)")
        if not (0.0 < self.eps_scale < 1.0):
            raise ContractViolation("eps_scale must lie in (0, 1)")
        for name in ("eta0", "eps_inner", "eps_outer", "eta_floor", "eps_final", "retry_tol"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.max_inner < 1 or self.max_outer < 1 or self.max_final < 0:
            raise ContractViolation("iteration caps must be positive")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ContractViolation(f"unknown penalty settings: {sorted(unknown)}")
        return cls(**d)


@dataclass
class PenaltyResult:
    state: object
    eta: float
    inner_iters: int
    outer_iters: int
    rank_residual: float
    history: list = field(default_factory=list)
    rejected: int = 0
    program: object = None
    solution: object = None


def fractional_reduction(prev, new):
    return (prev - new) / max(abs(prev), 1e-12)


def run_penalty(problem, state, config=None, solver=None):
    """Run the double-layer loop from a feasible ``state``.

    Each history entry is ``(outer, inner, eta, value)``. Within one outer
    iteration the first value is the exact penalised objective at the
    starting point and the following ones are subproblem optima, so the
    sequence is non-increasing. A subproblem whose optimum would exceed
    the previous value (possible only through solver inexactness) is
    re-solved at ``retry_tol``; if it still exceeds it, the step is
    rejected and ends the inner loop.

    Raises :class:`InfeasibleError` if the very first subproblem is
    infeasible and :class:`MaxIterationsError` if the outer loop ends
    before the rank-one test passes.
    """
    cfg = config or PenaltyConfig()
    solver = solver or conic_solve
    eta = cfg.eta0
    history = []
    inner_total = 0
    rejected = 0
    last_prog = last_sol = None
    final_rounds = 0
    res = problem.rank_residual(state)
    outer = 0
    while True:
        if outer >= cfg.max_outer + final_rounds:
            raise MaxIterationsError(
                f"outer loop cap reached with rank-one residual {res:.3e}",
                _diag(history, inner_total, outer, eta, res, rejected),
            )
        value = problem.penalized(state, eta)
        history.append((outer, 0, eta, value))
        for inner in range(1, cfg.max_inner + 1):
            prog = problem.build(state, eta)
            sol = solver(prog, tol=cfg.solver_tol)
            if sol.status == "Infeasible":
                if last_sol is None:
                    raise InfeasibleError("subproblem infeasible at the initial point")
                rejected += 1
                break
            if not sol.ok:
                if last_sol is None:
                    raise SolverFailure(f"first subproblem: solver status {sol.status}")
                rejected += 1
                log.debug("inner step rejected: status %s", sol.status)
                break
            if sol.objective > value and cfg.retry_tol < cfg.solver_tol:
                retry = solver(prog, tol=cfg.retry_tol)
                if retry.ok:
                    sol = retry
            if sol.objective > value:
                rejected += 1
                log.debug("inner step rejected: %.12e > %.12e", sol.objective, value)
                break
            inner_total += 1
            state = problem.decode(prog, sol, state)
            last_prog, last_sol = prog, sol
            history.append((outer, inner, eta, sol.objective))
            done = fractional_reduction(value, sol.objective) < cfg.eps_inner
            value = sol.objective
            if done:
                break
        outer += 1
        res = problem.rank_residual(state)
        log.debug("outer %d eta=%.3e residual=%.3e", outer, eta, res)
        if res <= cfg.eps_outer:
            if res <= cfg.eps_final or final_rounds >= cfg.max_final:
                break
            final_rounds += 1
        eta *= cfg.eps_scale
        if eta < cfg.eta_floor:
            if res <= cfg.eps_outer:
                break
            raise MaxIterationsError(
                f"penalty factor fell below {cfg.eta_floor:g} with residual {res:.3e}",
                _diag(history, inner_total, outer, eta, res, rejected),
            )
    return PenaltyResult(
        state=state, eta=eta, inner_iters=inner_total, outer_iters=outer,
        rank_residual=res, history=history, rejected=rejected,
        program=last_prog, solution=last_sol,
    )


def _diag(history, inner, outer, eta, res, rejected):
    return {
        "history": history,
        "inner_iters": inner,
        "outer_iters": outer,
        "eta": eta,
        "rank_residual": res,
        "rejected": rejected,
    }


def history_is_monotone(history, rtol=1e-9):
    """True if every within-outer-iteration sequence is non-increasing."""
    prev = None
    for outer, inner, _, value in history:
        if inner > 0 and prev is not None:
            if value > prev[1] + rtol * max(1.0, abs(prev[1])) and prev[0] == outer:
                return False
        prev = (outer, value)
    return True

