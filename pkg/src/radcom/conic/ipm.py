"""Primal-dual interior-point method for dense symmetric-cone programs.

Solves ``min c'x  s.t.  G x + s = h, A x = b, s in K`` through the
homogeneous self-dual embedding, so infeasibility is detected with a
certificate instead of by divergence. Search directions use
Nesterov-Todd scaling with a Mehrotra predictor-corrector; the reduced
KKT system is formed and factorised densely.
"""

import logging
import os

import numpy as np
import scipy.linalg as sla

from ..errors import ContractViolation
from . import cones
from .program import SolverSolution

log = logging.getLogger(__name__)

STEP_FRACTION = 0.99


def _equilibrate(A, G, dims, iters=15):
    """Ruiz scaling: column factors ``D``, row factors ``EA``, ``EG``.

    Rows of one Lorentz or PSD block share a factor so the cone is preserved.
    """
    n = G.shape[1]
    D = np.ones(n)
    EA = np.ones(A.shape[0])
    EG = np.ones(G.shape[0])
    blocks = [sl for sl in dims.q_slices] + [sl for sl in dims.s_slices]
    As, Gs = A.copy(), G.copy()
    for _ in range(iters):
        cn = np.max(np.abs(Gs), axis=0) if Gs.size else np.zeros(n)
        if As.size:
            cn = np.maximum(cn, np.max(np.abs(As), axis=0))
        cn = np.where(cn > 0, cn, 1.0)
        dc = 1.0 / np.sqrt(cn)
        D *= dc
        As *= dc
        Gs *= dc
        if As.size:
            rn = np.max(np.abs(As), axis=1)
            rn = np.where(rn > 0, rn, 1.0)
            EA /= np.sqrt(rn)
            As /= np.sqrt(rn)[:, None]
        if Gs.size:
            rn = np.max(np.abs(Gs), axis=1)
            for sl in blocks:
                rn[sl] = np.max(rn[sl])
            rn = np.where(rn > 0, rn, 1.0)
            EG /= np.sqrt(rn)
            Gs /= np.sqrt(rn)[:, None]
    return D, EA, EG, As, Gs


class _KKT:
    """Factorised Newton system ``[[0, A', G'], [A, 0, 0], [G, 0, -W'W]]``.

    It is solved in the scaled variable ``W z``, i.e. as the augmented
    system ``[[0, A', Gs'], [A, 0, 0], [Gs, 0, -I]]`` with
    ``Gs = W^{-T} G``. Forming ``Gs' Gs`` instead would square the
    condition number, which near a degenerate optimum costs several
    digits of accuracy.
    """

    def __init__(self, A, G, W):
        self.A, self.G, self.W = A, G, W
        Gs = W.apply(G, inverse=True, transpose=True)
        n, p, m = G.shape[1], A.shape[0], G.shape[0]
        K = np.zeros((n + p + m, n + p + m))
        K[:n, n:n + p] = A.T
        K[n:n + p, :n] = A
        K[:n, n + p:] = Gs.T
        K[n + p:, :n] = Gs
        K[n + p:, n + p:] = -np.eye(m)
        self.n, self.p = n, p
        self.lu = sla.lu_factor(K, check_finite=False)

    def _solve_once(self, bx, by, bz):
        rhs = np.concatenate([bx, by, self.W.apply(bz, inverse=True, transpose=True)])
        sol = sla.lu_solve(self.lu, rhs, check_finite=False)
        n, p = self.n, self.p
        return sol[:n], sol[n:n + p], self.W.apply(sol[n + p:], inverse=True)

    def _residual(self, bx, by, bz, x, y, z):
        rx = bx - (self.A.T @ y + self.G.T @ z)
        ry = by - self.A @ x
        rz = bz - (self.G @ x - self.W.apply(self.W.apply(z), transpose=True))
        return rx, ry, rz

    def solve(self, bx, by, bz, max_refine=10):
        """Solve with iterative refinement until the residual stops shrinking."""
        x, y, z = self._solve_once(bx, by, bz)
        scale = max(np.linalg.norm(bx), np.linalg.norm(by), np.linalg.norm(bz), 1e-300)
        r = self._residual(bx, by, bz, x, y, z)
        rn = max(np.linalg.norm(v) for v in r)
        for _ in range(max_refine):
            if rn <= 1e-15 * scale:
                break
            dx, dy, dz = self._solve_once(*r)
            xn, yn, zn = x + dx, y + dy, z + dz
            r_new = self._residual(bx, by, bz, xn, yn, zn)
            rn_new = max(np.linalg.norm(v) for v in r_new)
            if rn_new >= 0.5 * rn:
                if rn_new < rn:
                    x, y, z = xn, yn, zn
                break
            x, y, z, r, rn = xn, yn, zn, r_new, rn_new
        return x, y, z


def solve_standard(c, G, h, A, b, dims, tol=1e-8, max_iter=200):
    """Solve a standard-form cone program; returns a dict of raw results."""
    n = G.shape[1]
    D, EA, EG, As, Gs = _equilibrate(A, G, dims)
    cs = D * c
    cscale = max(1.0, np.max(np.abs(cs))) if n else 1.0
    cs = cs / cscale
    bs, hs = EA * b, EG * h
    out = _hsd(cs, Gs, hs, As, bs, dims, tol, max_iter)
    # undo scalings
    if out.get("x") is not None:
        out["x"] = D * out["x"]
    if out.get("s") is not None:
        out["s"] = out["s"] / EG
    if out.get("z") is not None:
        out["z"] = EG * out["z"] * (cscale if out["status"] != "Infeasible" else 1.0)
    if out.get("y") is not None:
        out["y"] = EA * out["y"] * (cscale if out["status"] != "Infeasible" else 1.0)
    return out


def _hsd(c, G, h, A, b, dims, tol, max_iter):
    n, p = G.shape[1], A.shape[0]
    e = cones.identity(dims)
    deg = dims.degree

    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, np.linalg.norm(h))

    class _Identity:
        def apply(self, v, inverse=False, transpose=False):
            return v

    try:
        kkt = _KKT(A, G, _Identity())
    except (np.linalg.LinAlgError, ValueError) as exc:
        return {"status": "NumericalFailure", "message": str(exc), "iterations": 0}
    x, y, z = kkt.solve(np.zeros(n), b, h)
    s = -z
    _, y, z = kkt.solve(-c, np.zeros(p), np.zeros(dims.size))
    for v in (s, z):
        t = cones.max_shift(v, dims)
        if t >= -1e-8 * max(np.linalg.norm(v), 1.0):
            v += (1.0 + t) * e
    tau, kappa = 1.0, 1.0

    last = None
    best = None
    for it in range(max_iter + 1):
        rx = A.T @ y + G.T @ z + c * tau
        ry = b * tau - A @ x
        rz = s + G @ x - h * tau
        cx, by, hz = c @ x, b @ y, h @ z
        rt = kappa + cx + by + hz
        gap = s @ z
        mu = (gap + kappa * tau) / (deg + 1)

        pcost, dcost = cx / tau, -(by + hz) / tau
        pres = max(np.linalg.norm(ry) / resy0, np.linalg.norm(rz) / resz0) / tau
        dres = np.linalg.norm(rx) / resx0 / tau
        gap_t = gap / tau ** 2
        if pcost < 0:
            relgap = gap_t / -pcost
        elif dcost > 0:
            relgap = gap_t / dcost
        else:
            relgap = np.inf
        hresx = np.linalg.norm(A.T @ y + G.T @ z)
        hresy = np.linalg.norm(A @ x)
        hresz = np.linalg.norm(G @ x + s)
        pinf = hresx / resx0 / -(hz + by) if hz + by < 0 else np.inf
        dinf = max(hresy / resy0, hresz / resz0) / -cx if cx < 0 else np.inf
        last = dict(pres=pres, dres=dres, gap=gap_t, relgap=relgap, pcost=pcost,
                    dcost=dcost, iterations=it)
        log.debug("%3d pcost=% .8e dcost=% .8e gap=%.2e pres=%.2e dres=%.2e k/t=%.2e",
                  it, pcost, dcost, gap_t, pres, dres, kappa / tau)

        gap_ok = gap_t <= tol * max(1.0, abs(pcost)) or relgap <= tol
        if pres <= tol and dres <= tol and gap_ok:
            return dict(status="Optimal", x=x / tau, s=s / tau, y=y / tau, z=z / tau, **last)
        merit = max(pres, dres, min(gap_t / max(1.0, abs(pcost)), abs(relgap)))
        if best is None or merit < best[0]:
            best = (merit, dict(x=x / tau, s=s / tau, y=y / tau, z=z / tau, **last))
        elif merit > 1e3 * best[0] and best[0] < 1e-5:
            # accuracy is being lost near the optimum; fall back to the best point
            return dict(status="NumericalFailure", message="stalled", **best[1])
        if pinf <= tol:
            scale = -(hz + by)
            return dict(status="Infeasible", x=None, s=None, y=y / scale, z=z / scale,
                        infeasibility_residual=pinf, **last)
        if dinf <= tol:
            return dict(status="Unbounded", x=x / -cx, s=s / -cx, y=None, z=None,
                        unboundedness_residual=dinf, **last)
        if it == max_iter:
            break

        try:
            with np.errstate(invalid="raise", divide="raise"):
                step = _newton_step(c, G, h, A, b, dims, e, x, y, z, s, tau, kappa,
                                    rx, ry, rz, rt, mu)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            return dict(status="NumericalFailure", message=str(exc), **best[1])
        if step is None:
            return dict(status="NumericalFailure", message="zero step", **best[1])
        x, y, z, s, tau, kappa = step
        if not (np.all(np.isfinite(x)) and np.isfinite(tau)):
            return dict(status="NumericalFailure", message="non-finite iterate", **best[1])

    return dict(status="MaxIterations", **best[1])


def _newton_step(c, G, h, A, b, dims, e, x, y, z, s, tau, kappa, rx, ry, rz, rt, mu):
    """One predictor-corrector step; returns the new iterate or ``None``."""
    W = cones.Scaling(s, z, dims)
    kkt = _KKT(A, G, W)
    lam = W.lam
    x1, y1, z1 = kkt.solve(-c, b, h)
    denom_base = c @ x1 + b @ y1 + h @ z1

    dirs = {}
    sigma = 0.0
    for phase in ("affine", "combined"):
        if phase == "affine":
            eta = 1.0
            ds = cones.jordan(lam, lam, dims)
            dk = tau * kappa
        else:
            eta = 1.0 - sigma
            a = dirs["affine"]
            ds = (cones.jordan(lam, lam, dims)
                  + cones.jordan(a["dss"], a["dzs"], dims)
                  - sigma * mu * e)
            dk = tau * kappa + a["dtau"] * a["dkappa"] - sigma * mu
        lds = cones.jordan_div(lam, ds, dims)
        bz = -eta * rz + W.apply(lds, transpose=True)
        x2, y2, z2 = kkt.solve(-eta * rx, eta * ry, bz)
        dtau = (-eta * rt + dk / tau - (c @ x2 + b @ y2 + h @ z2)) / (
            denom_base - kappa / tau)
        dx = x2 + dtau * x1
        dy = y2 + dtau * y1
        dz = z2 + dtau * z1
        dzs = W.apply(dz)
        ds_lin = -eta * rz + h * dtau - G @ dx
        dss = W.apply(ds_lin, inverse=True, transpose=True)
        dkappa = (-dk - kappa * dtau) / tau
        amax = min(cones.step_to_boundary(lam, dss, dims),
                   cones.step_to_boundary(lam, dzs, dims))
        if dtau < 0:
            amax = min(amax, -tau / dtau)
        if dkappa < 0:
            amax = min(amax, -kappa / dkappa)
        dirs[phase] = dict(dx=dx, dy=dy, dz=dz, ds=ds_lin, dss=dss, dzs=dzs,
                           dtau=dtau, dkappa=dkappa, amax=amax)
        if phase == "affine":
            sigma = (1.0 - min(1.0, amax)) ** 3

    d = dirs["combined"]
    alpha = min(1.0, STEP_FRACTION * d["amax"])
    if not np.isfinite(alpha) or alpha <= 0:
        return None
    ds_unscaled = d["ds"]
    return (x + alpha * d["dx"], y + alpha * d["dy"], z + alpha * d["dz"],
            s + alpha * ds_unscaled, tau + alpha * d["dtau"], kappa + alpha * d["dkappa"])


def solve(p, tol=1e-8, max_iter=200, dump_path=None):
    """Solve a :class:`~radcom.conic.program.ConeProgram`.

    ``tol`` is used for primal and dual feasibility (relative to the data
    norms) and for the duality gap. Returns a
    :class:`~radcom.conic.program.SolverSolution`; the status is one of
    ``Optimal``, ``Infeasible``, ``Unbounded``, ``MaxIterations`` or
    ``NumericalFailure``.

    ``dump_path`` writes the program as JSON before solving. Setting the
    environment variable ``RADCOM_DUMP_DIR`` dumps every program that does
    not end ``Optimal`` into that directory.
    """
    if not (1e-10 <= tol <= 1e-4):
        raise ContractViolation(f"tol={tol} outside [1e-10, 1e-4]")
    if dump_path is not None:
        p.to_json(dump_path)
    sf = p.compile()
    raw = solve_standard(sf.c, sf.G, sf.h, sf.A, sf.b, sf.dims, tol=tol, max_iter=max_iter)
    status = raw["status"]
    sol = SolverSolution(status=status, iterations=raw.get("iterations", 0))
    sol.primal_residual = raw.get("pres", np.inf)
    sol.dual_residual = raw.get("dres", np.inf)
    sol.gap = raw.get("gap", np.inf)
    if raw.get("x") is not None:
        x = sf.x_fixed.copy()
        x[sf.free] = raw["x"]
        sol.x = x
        sol.objective = p.objective(x)
    if raw.get("y") is not None:
        sol.y, sol.z = raw["y"], raw["z"]
        if status != "Infeasible":
            sol.dual_objective = float(-(sf.h @ sol.z) - (sf.b @ sol.y)) + sf.c0
    if status == "Infeasible":
        # Farkas certificate: G'z + A'y = 0, z in K*, h'z + b'y = -1
        sol.certificate = {
            "y": sol.y,
            "z": sol.z,
            "residual": float(np.linalg.norm(sf.G.T @ sol.z + sf.A.T @ sol.y)),
            "h_z_plus_b_y": float(sf.h @ sol.z + sf.b @ sol.y),
        }
    if status == "NumericalFailure":
        log.debug("solver breakdown: %s", raw.get("message"))
    dump_dir = os.environ.get("RADCOM_DUMP_DIR")
    if dump_dir and status != "Optimal":
        global _DUMP_COUNT
        _DUMP_COUNT += 1
        path = os.path.join(dump_dir, f"program_{os.getpid()}_{_DUMP_COUNT}.json")
        p.to_json(path)
        log.warning("solver status %s; program written to %s", status, path)
    return sol


_DUMP_COUNT = 0
