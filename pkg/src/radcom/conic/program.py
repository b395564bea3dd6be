"""Conic program description, compilation to standard form, and checking.

A :class:`ConeProgram` minimises a linear objective over real scalar
variables subject to affine equalities and inequalities, second-order
cones, rotated second-order cones and real symmetric PSD constraints.
Complex Hermitian variables enter through their real coordinates (see
:class:`radcom.hermitian.HermitianBasis`) and their real embeddings.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation
from .cones import Dims, svec


@dataclass
class SOC:
    """``||A x + b|| <= t @ x + t0``."""

    A: np.ndarray
    b: np.ndarray
    t: np.ndarray
    t0: float = 0.0


@dataclass
class RSOC:
    """``(u @ x + u0) (t @ x + t0) >= ||W x + w0||**2`` with both factors >= 0."""

    u: np.ndarray
    u0: float
    t: np.ndarray
    t0: float
    W: np.ndarray
    w0: np.ndarray


@dataclass
class PSD:
    """``F0 + sum_k x[idx[k]] F[k]`` is positive semidefinite."""

    idx: np.ndarray
    F: np.ndarray
    F0: np.ndarray


@dataclass
class StandardForm:
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    A: np.ndarray
    b: np.ndarray
    dims: Dims
    free: np.ndarray
    x_fixed: np.ndarray
    c0: float


def _pad(v, n):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == n:
        return v
    pad = [(0, 0)] * (v.ndim - 1) + [(0, n - v.shape[-1])]
    return np.pad(v, pad)


class ConeProgram:
    """Builder and container for a dense conic program.

    Variables are declared in named groups with :meth:`add_variables`;
    constraint rows are dense vectors over all variables declared so far
    (shorter rows are zero-padded at compile time).
    """

    def __init__(self):
        self.n = 0
        self.groups = {}
        self.lb = []
        self.ub = []
        self.c = None
        self.c0 = 0.0
        self.eq_rows, self.eq_rhs = [], []
        self.ineq_rows, self.ineq_rhs = [], []
        self.soc = []
        self.rsoc = []
        self.psd = []

    # -- declaration -------------------------------------------------------
    def add_variables(self, count, name, lb=-np.inf, ub=np.inf):
        if name in self.groups:
            raise ContractViolation(f"duplicate variable group {name!r}")
        idx = np.arange(self.n, self.n + count)
        self.groups[name] = idx
        self.lb += list(np.broadcast_to(np.asarray(lb, float), (count,)))
        self.ub += list(np.broadcast_to(np.asarray(ub, float), (count,)))
        self.n += count
        return idx

    def row(self, pairs=()):
        """Dense row from ``(indices, coefficients)`` pairs."""
        r = np.zeros(self.n)
        for idx, coef in pairs:
            np.add.at(r, idx, coef)
        return r

    def set_objective(self, c, c0=0.0):
        self.c = np.asarray(c, dtype=float)
        self.c0 = float(c0)

    def add_eq(self, row, rhs):
        self.eq_rows.append(np.asarray(row, float))
        self.eq_rhs.append(float(rhs))

    def add_ineq(self, row, rhs):
        """``row @ x <= rhs``."""
        self.ineq_rows.append(np.asarray(row, float))
        self.ineq_rhs.append(float(rhs))

    def add_soc(self, A, b, t, t0=0.0):
        A = np.atleast_2d(np.asarray(A, float))
        self.soc.append(SOC(A, np.asarray(b, float).reshape(-1), np.asarray(t, float), float(t0)))

    def add_rsoc(self, u, u0, t, t0, W, w0):
        W = np.atleast_2d(np.asarray(W, float))
        self.rsoc.append(
            RSOC(np.asarray(u, float), float(u0), np.asarray(t, float), float(t0),
                 W, np.asarray(w0, float).reshape(-1))
        )

    def add_psd(self, idx, F, F0):
        F = np.asarray(F, float)
        F0 = np.asarray(F0, float)
        if F.shape[1:] != F0.shape or F.shape[0] != len(idx):
            raise ContractViolation("PSD block shapes are inconsistent")
        self.psd.append(PSD(np.asarray(idx), F, F0))

    @property
    def psd_blocks(self):
        return [p.F0.shape[0] for p in self.psd]

    # -- evaluation --------------------------------------------------------
    def objective(self, x):
        return float(_pad(self.c, self.n) @ x + self.c0)

    def compile(self):
        """Standard form ``min c'x  s.t.  G x + s = h, A x = b, s in K``.

        Variables with equal lower and upper bounds are substituted out.
        """
        n = self.n
        if self.c is None:
            raise ContractViolation("objective not set")
        c = _pad(self.c, n)
        if not np.all(np.isfinite(c)):
            raise ContractViolation("objective has non-finite coefficients")
        lb, ub = np.array(self.lb), np.array(self.ub)
        fixed = np.isfinite(lb) & (lb == ub)
        free = np.flatnonzero(~fixed)
        x_fixed = np.where(fixed, lb, 0.0)

        G_rows, h = [], []
        for i in np.flatnonzero(np.isfinite(lb) & ~fixed):
            r = np.zeros(n)
            r[i] = -1.0
            G_rows.append(r)
            h.append(-lb[i])
        for i in np.flatnonzero(np.isfinite(ub) & ~fixed):
            r = np.zeros(n)
            r[i] = 1.0
            G_rows.append(r)
            h.append(ub[i])
        for r, rhs in zip(self.ineq_rows, self.ineq_rhs):
            G_rows.append(_pad(r, n))
            h.append(rhs)
        n_lp = len(G_rows)
        q = []
        for cone in self.soc:
            G_rows.append(-_pad(cone.t, n))
            h.append(cone.t0)
            G_rows.extend(-_pad(cone.A, n))
            h.extend(cone.b)
            q.append(1 + cone.A.shape[0])
        for cone in self.rsoc:
            u, t, W = _pad(cone.u, n), _pad(cone.t, n), _pad(cone.W, n)
            # (u+t, u-t, 2w) in the Lorentz cone  <=>  u t >= ||w||^2, u,t >= 0
            G_rows.append(-(u + t))
            h.append(cone.u0 + cone.t0)
            G_rows.append(-(u - t))
            h.append(cone.u0 - cone.t0)
            G_rows.extend(-2.0 * W)
            h.extend(2.0 * cone.w0)
            q.append(2 + W.shape[0])
        s = []
        for blk in self.psd:
            d = blk.F0.shape[0]
            Gb = np.zeros((d * (d + 1) // 2, n))
            Gb[:, blk.idx] = -svec(blk.F).T
            G_rows.extend(Gb)
            h.extend(svec(blk.F0))
            s.append(d)
        G = np.array(G_rows).reshape(-1, n)
        h = np.array(h, dtype=float)
        A = np.array([_pad(r, n) for r in self.eq_rows]).reshape(-1, n)
        b = np.array(self.eq_rhs, dtype=float)

        c0 = self.c0 + c @ x_fixed
        h = h - G @ x_fixed
        b = b - A @ x_fixed
        dims = Dims(l=n_lp, q=q, s=s)
        return StandardForm(c[free], G[:, free], h, A[:, free], b, dims, free, x_fixed, c0)

    # -- debug dump --------------------------------------------------------
    def to_json(self, path):
        """Write a self-describing JSON file that :meth:`from_json` reads back."""
        def arr(a):
            return np.asarray(a, float).tolist()

        doc = {
            "format": "radcom.ConeProgram/1",
            "n": self.n,
            "groups": {k: v.tolist() for k, v in self.groups.items()},
            "lb": [None if not np.isfinite(v) else v for v in self.lb],
            "ub": [None if not np.isfinite(v) else v for v in self.ub],
            "objective": {"c": arr(_pad(self.c, self.n)), "c0": self.c0},
            "eq": [{"row": arr(_pad(r, self.n)), "rhs": v} for r, v in zip(self.eq_rows, self.eq_rhs)],
            "ineq": [{"row": arr(_pad(r, self.n)), "rhs": v} for r, v in zip(self.ineq_rows, self.ineq_rhs)],
            "soc": [{"A": arr(_pad(k.A, self.n)), "b": arr(k.b), "t": arr(_pad(k.t, self.n)), "t0": k.t0}
                    for k in self.soc],
            "rsoc": [{"u": arr(_pad(k.u, self.n)), "u0": k.u0, "t": arr(_pad(k.t, self.n)), "t0": k.t0,
                      "W": arr(_pad(k.W, self.n)), "w0": arr(k.w0)} for k in self.rsoc],
            "psd": [{"idx": k.idx.tolist(), "F": arr(k.F), "F0": arr(k.F0)} for k in self.psd],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        p = cls()
        for name, idx in doc["groups"].items():
            p.groups[name] = np.asarray(idx, dtype=int)
        p.n = doc["n"]
        p.lb = [-np.inf if v is None else v for v in doc["lb"]]
        p.ub = [np.inf if v is None else v for v in doc["ub"]]
        p.set_objective(doc["objective"]["c"], doc["objective"]["c0"])
        for e in doc["eq"]:
            p.add_eq(e["row"], e["rhs"])
        for e in doc["ineq"]:
            p.add_ineq(e["row"], e["rhs"])
        for k in doc["soc"]:
            p.add_soc(k["A"], k["b"], k["t"], k["t0"])
        for k in doc["rsoc"]:
            p.add_rsoc(k["u"], k["u0"], k["t"], k["t0"], k["W"], k["w0"])
        for k in doc["psd"]:
            p.add_psd(np.asarray(k["idx"], int), k["F"], k["F0"])
        return p


@dataclass
class SolverSolution:
    status: str
    x: np.ndarray = None
    objective: float = np.nan
    dual_objective: float = np.nan
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    gap: float = np.inf
    iterations: int = 0
    y: np.ndarray = None
    z: np.ndarray = None
    certificate: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "Optimal"


@dataclass
class ResidualReport:
    """Worst violation per constraint class, recomputed from scratch."""

    bounds: float = 0.0
    eq: float = 0.0
    ineq: float = 0.0
    soc: float = 0.0
    rsoc: float = 0.0
    psd: float = 0.0
    tol: float = 0.0

    @property
    def worst(self):
        return max(self.bounds, self.eq, self.ineq, self.soc, self.rsoc, self.psd)

    @property
    def ok(self):
        return self.worst <= self.tol


def validate_solution(p, sol, tol=1e-6):
    """Recompute every constraint residual of ``p`` at the primal point of ``sol``.

    Only the program data and ``sol.x`` are used. Rotated cones report
    ``max(||w||^2 - u t, -u, -t)`` scaled by ``1 + u t``; PSD blocks report
    the negated minimum eigenvalue.
    """
    x = np.asarray(sol.x if hasattr(sol, "x") else sol, dtype=float)
    n = p.n
    rep = ResidualReport(tol=tol)
    lb, ub = np.array(p.lb), np.array(p.ub)
    with np.errstate(invalid="ignore"):
        rep.bounds = max(0.0, float(np.max(np.concatenate([lb - x, x - ub, [0.0]]))))
    if p.eq_rows:
        A = np.array([_pad(r, n) for r in p.eq_rows])
        rep.eq = float(np.max(np.abs(A @ x - np.array(p.eq_rhs))))
    if p.ineq_rows:
        G = np.array([_pad(r, n) for r in p.ineq_rows])
        rep.ineq = max(0.0, float(np.max(G @ x - np.array(p.ineq_rhs))))
    for k in p.soc:
        v = np.linalg.norm(_pad(k.A, n) @ x + k.b) - (_pad(k.t, n) @ x + k.t0)
        rep.soc = max(rep.soc, float(v))
    for k in p.rsoc:
        u = _pad(k.u, n) @ x + k.u0
        t = _pad(k.t, n) @ x + k.t0
        w = _pad(k.W, n) @ x + k.w0
        v = max((w @ w - u * t) / (1.0 + abs(u * t)), -u, -t)
        rep.rsoc = max(rep.rsoc, float(v))
    for k in p.psd:
        M = k.F0 + np.tensordot(x[k.idx], k.F, axes=1)
        rep.psd = max(rep.psd, float(-np.linalg.eigvalsh(0.5 * (M + M.T))[0]))
    return rep
