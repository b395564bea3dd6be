"""Symmetric-cone algebra for a product of orthant, Lorentz and PSD cones.

Vectors are laid out as ``[orthant | soc_1 | ... | soc_q | svec(S_1) | ...]``.
PSD blocks use the ``svec`` convention (lower triangle, off-diagonals
scaled by sqrt(2)) so that ``svec(X) @ svec(Y) == Tr(X Y)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def _svec_index(d):
    i, j = np.tril_indices(d)
    w = np.where(i == j, 1.0, SQRT2)
    return i, j, w


def svec_dim(d):
    return d * (d + 1) // 2


def svec(X):
    """svec of a symmetric matrix, or of a stack of them (leading axes kept)."""
    X = np.asarray(X)
    d = X.shape[-1]
    i, j, w = _svec_index(d)
    return X[..., i, j] * w


def smat(v, d):
    v = np.asarray(v)
    i, j, w = _svec_index(d)
    out = np.zeros(v.shape[:-1] + (d, d))
    vals = v / w
    out[..., i, j] = vals
    out[..., j, i] = vals
    return out


@dataclass
class Dims:
    """Cone dimensions: orthant size ``l``, SOC sizes ``q``, PSD orders ``s``."""

    l: int = 0
    q: list = field(default_factory=list)
    s: list = field(default_factory=list)

    def __post_init__(self):
        self.q = [int(m) for m in self.q]
        self.s = [int(d) for d in self.s]
        off = self.l
        self.q_slices = []
        for m in self.q:
            self.q_slices.append(slice(off, off + m))
            off += m
        self.s_slices = []
        for d in self.s:
            self.s_slices.append(slice(off, off + svec_dim(d)))
            off += svec_dim(d)
        self.size = off

    @property
    def degree(self):
        return self.l + len(self.q) + sum(self.s)

    def blocks(self):
        """(kind, slice, size) for every block, orthant first."""
        out = []
        if self.l:
            out.append(("l", slice(0, self.l), self.l))
        out += [("q", sl, m) for sl, m in zip(self.q_slices, self.q)]
        out += [("s", sl, d) for sl, d in zip(self.s_slices, self.s)]
        return out

    def as_dict(self):
        return {"l": self.l, "q": list(self.q), "s": list(self.s)}


def identity(dims):
    e = np.zeros(dims.size)
    e[: dims.l] = 1.0
    for sl in dims.q_slices:
        e[sl.start] = 1.0
    for sl, d in zip(dims.s_slices, dims.s):
        e[sl] = svec(np.eye(d))
    return e


def min_eig(x, dims):
    """Smallest "eigenvalue" of ``x`` in the Jordan-algebra sense, per cone."""
    vals = []
    if dims.l:
        vals.append(np.min(x[: dims.l]))
    for sl in dims.q_slices:
        vals.append(x[sl.start] - np.linalg.norm(x[sl.start + 1: sl.stop]))
    for sl, d in zip(dims.s_slices, dims.s):
        vals.append(np.linalg.eigvalsh(smat(x[sl], d))[0])
    return min(vals) if vals else np.inf


def inner(u, v, dims):
    return float(u @ v)


def jordan(u, v, dims):
    """Jordan product ``u o v``."""
    out = np.empty(dims.size)
    out[: dims.l] = u[: dims.l] * v[: dims.l]
    for sl in dims.q_slices:
        a, b = u[sl], v[sl]
        out[sl.start] = a @ b
        out[sl.start + 1: sl.stop] = a[0] * b[1:] + b[0] * a[1:]
    for sl, d in zip(dims.s_slices, dims.s):
        U, V = smat(u[sl], d), smat(v[sl], d)
        P = U @ V
        out[sl] = svec(0.5 * (P + P.T))
    return out


def jordan_div(lam, u, dims):
    """Solve ``lam o x = u`` for ``x``; PSD parts of ``lam`` must be diagonal."""
    out = np.empty(dims.size)
    out[: dims.l] = u[: dims.l] / lam[: dims.l]
    for sl in dims.q_slices:
        l0, l1 = lam[sl.start], lam[sl.start + 1: sl.stop]
        u0, u1 = u[sl.start], u[sl.start + 1: sl.stop]
        det = l0 * l0 - l1 @ l1
        x0 = (l0 * u0 - l1 @ u1) / det
        out[sl.start] = x0
        out[sl.start + 1: sl.stop] = (u1 - x0 * l1) / l0
    for sl, d in zip(dims.s_slices, dims.s):
        i, j, _ = _svec_index(d)
        diag = lam_diag(lam[sl], d)
        out[sl] = u[sl] / (0.5 * (diag[i] + diag[j]))
    return out


def lam_diag(v, d):
    i, j, _ = _svec_index(d)
    return v[i == j]


def max_shift(x, dims):
    """``inf { t : x + t e in K }``."""
    return -min_eig(x, dims)


def step_to_boundary(lam, dx, dims):
    """Largest ``a >= 0`` with ``lam + a dx`` in the cone (``inf`` if unbounded).

    ``lam`` must be interior with diagonal PSD parts (the NT-scaled point).
    """
    amax = np.inf
    if dims.l:
        d = dx[: dims.l]
        neg = d < 0
        if np.any(neg):
            amax = min(amax, np.min(-lam[: dims.l][neg] / d[neg]))
    for sl in dims.q_slices:
        x, d = lam[sl], dx[sl]
        nrm = np.sqrt(max(x[0] ** 2 - x[1:] @ x[1:], 0.0))
        xb, db = x / nrm, d / nrm
        rho0 = xb[0] * db[0] - xb[1:] @ db[1:]
        rho1 = db[1:] - (rho0 + db[0]) / (xb[0] + 1.0) * xb[1:]
        t = np.linalg.norm(rho1) - rho0
        if t > 0:
            amax = min(amax, 1.0 / t)
    for sl, d in zip(dims.s_slices, dims.s):
        r = 1.0 / np.sqrt(lam_diag(lam[sl], d))
        D = smat(dx[sl], d) * np.outer(r, r)
        mn = np.linalg.eigvalsh(D)[0]
        if mn < 0:
            amax = min(amax, -1.0 / mn)
    return amax


class Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-T} s = lam``.

    Orthant and Lorentz blocks are symmetric; a PSD block acts as
    ``U -> R^{-1} U R^{-T}`` so ``W^T``, ``W^{-1}`` and ``W^{-T}`` differ.
    """

    def __init__(self, s, z, dims):
        # the construction below is written for W s = W^{-T} z; swap roles
        s, z = z, s
        self.dims = dims
        self.lam = np.empty(dims.size)
        l = dims.l
        if l:
            self.d = np.sqrt(z[:l] / s[:l])
            self.lam[:l] = np.sqrt(s[:l] * z[:l])
        self.soc = []
        for sl, m in zip(dims.q_slices, dims.q):
            sb, zb = s[sl], z[sl]
            a = np.sqrt(sb[0] ** 2 - sb[1:] @ sb[1:])
            b = np.sqrt(zb[0] ** 2 - zb[1:] @ zb[1:])
            beta = np.sqrt(a / b)
            sn, zn = sb / a, zb / b
            gam = np.sqrt(0.5 * (1.0 + sn @ zn))
            w = sn.copy()
            w[1:] -= zn[1:]
            w[0] += zn[0]
            w /= 2.0 * gam
            v = w.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * v[0])
            J = -np.eye(m)
            J[0, 0] = 1.0
            Jv = J @ v
            Winv = beta * (2.0 * np.outer(v, v) - J)
            W = (2.0 * np.outer(Jv, Jv) - J) / beta
            self.soc.append((W, Winv))
            self.lam[sl] = W @ sb
        self.psd = []
        for sl, d in zip(dims.s_slices, dims.s):
            S, Z = smat(s[sl], d), smat(z[sl], d)
            Ls = np.linalg.cholesky(S)
            Lz = np.linalg.cholesky(Z)
            U, sv, Vt = np.linalg.svd(Lz.T @ Ls)
            R = Ls @ Vt.T / np.sqrt(sv)
            Rinv = (np.sqrt(sv)[:, None] * Vt) @ sla.solve_triangular(
                Ls, np.eye(d), lower=True
            )
            self.psd.append((R, Rinv))
            self.lam[sl] = svec(np.diag(sv))

    def apply(self, v, inverse=False, transpose=False):
        """``W v``, ``W^T v``, ``W^{-1} v`` or ``W^{-T} v``.

        ``v`` may be a vector or a matrix whose rows follow the cone layout.
        """
        dims = self.dims
        out = np.empty_like(v, dtype=float)
        l = dims.l
        if l:
            f = 1.0 / self.d if inverse else self.d
            out[:l] = (f[:, None] * v[:l]) if v.ndim == 2 else f * v[:l]
        for sl, (W, Winv) in zip(dims.q_slices, self.soc):
            out[sl] = (Winv if inverse else W) @ v[sl]
        for sl, d, (R, Rinv) in zip(dims.s_slices, dims.s, self.psd):
            # W: R^-1 U R^-T   W^T: R^-T U R^-1   W^-1: R U R^T   W^-T: R^T U R
            if not inverse:
                L = Rinv.T if transpose else Rinv
            else:
                L = R.T if transpose else R
            blk = v[sl]
            if blk.ndim == 2:
                X = smat(blk.T, d)
                out[sl] = svec(L @ X @ L.T).T
            else:
                X = smat(blk, d)
                out[sl] = svec(L @ X @ L.T)
        return out
