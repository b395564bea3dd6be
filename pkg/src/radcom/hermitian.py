"""Complex Hermitian matrix utilities.

Covariances and lifted beamformers (``W = w w^H``) are plain complex
``numpy`` arrays; the helpers here validate them, pull out the principal
eigenpair, measure distance from rank one, and map them to the real
symmetric form the conic solver works with.
"""

import logging
from functools import lru_cache

import numpy as np

from .errors import ContractViolation, RankOneExtractionFailed

log = logging.getLogger(__name__)

HERMITIAN_ATOL = 1e-12
PSD_RTOL = 1e-9


def as_hermitian(H, psd=False, atol=HERMITIAN_ATOL):
    """Return ``H`` as a complex square array, checking Hermitian symmetry.

    With ``psd=True`` the minimum eigenvalue must also be at least
    ``-1e-9 * (1 + lambda_max)``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] == 0:
        raise ContractViolation(f"expected a non-empty square matrix, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ContractViolation("matrix has non-finite entries")
    asym = np.max(np.abs(H - H.conj().T))
    if asym > atol * max(1.0, np.max(np.abs(H))):
        raise ContractViolation(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    if psd:
        lam = np.linalg.eigvalsh(H)
        if lam[0] < -PSD_RTOL * (1.0 + lam[-1]):
            raise ContractViolation(
                f"matrix is not PSD (min eigenvalue {lam[0]:.3e})"
            )
    return H


def _phase_fix(v, tol=1e-12):
    # first non-negligible component made real positive
    mag = np.abs(v)
    idx = int(np.argmax(mag > tol * mag.max()))
    ph = v[idx] / mag[idx]
    return v / ph


def eigen_max(H):
    """Largest eigenvalue of a Hermitian matrix and its unit eigenvector.

    The eigenvector's first non-negligible entry is real and positive, so
    repeated calls on the same input return identical vectors.
    """
    H = as_hermitian(H)
    lam, V = np.linalg.eigh(H)
    return float(lam[-1]), _phase_fix(V[:, -1])


def nuclear_norm(W):
    """Nuclear norm of a PSD matrix, i.e. its trace."""
    W = as_hermitian(W, psd=True)
    return float(np.trace(W).real)


def rank_one_residual(W):
    """``||W||_* - ||W||_2`` for PSD ``W``; zero exactly when rank(W) <= 1."""
    W = as_hermitian(W, psd=True)
    lam = np.linalg.eigvalsh(W)
    return float(np.trace(W).real - lam[-1])


def extract_rank_one(W, threshold=1e-5):
    """Recover ``w`` with ``W ~ w w^H`` as ``sqrt(lambda_max) * v_max``.

    Raises :class:`RankOneExtractionFailed` when the rank-one residual is
    above ``threshold``.
    """
    W = as_hermitian(W, psd=True)
    res = rank_one_residual(W)
    if res > threshold:
        raise RankOneExtractionFailed(res, threshold)
    lam, v = eigen_max(W)
    return np.sqrt(max(lam, 0.0)) * v


def outer(w):
    w = np.asarray(w, dtype=complex)
    return np.outer(w, w.conj())


def project_psd(W, name="matrix"):
    """Hermitian part of ``W`` with negative eigenvalues zeroed.

    Eigenvalues below the PSD tolerance are logged before being clipped.
    """
    W = np.asarray(W, dtype=complex)
    W = 0.5 * (W + W.conj().T)
    lam, V = np.linalg.eigh(W)
    if lam[0] < -PSD_RTOL * (1.0 + abs(lam[-1])):
        log.warning("%s: clipping eigenvalue %.3e to zero", name, lam[0])
    lam = np.clip(lam, 0.0, None)
    return (V * lam) @ V.conj().T


def real_embed(H):
    """Real symmetric ``2N x 2N`` embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    H = as_hermitian(H)
    return embed_unchecked(H)


def embed_unchecked(H):
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


class HermitianBasis:
    """Real coordinates for ``N x N`` Hermitian matrices.

    A Hermitian matrix is written ``W = sum_k x_k B_k`` with ``N**2`` real
    coordinates: the diagonal, then the real parts of the strict upper
    triangle, then the imaginary parts.
    """

    def __init__(self, n):
        if n < 1:
            raise ContractViolation("dimension must be positive")
        self.n = n
        self.dim = n * n
        iu, ju = np.triu_indices(n, 1)
        self._iu, self._ju = iu, ju
        B = np.zeros((self.dim, n, n), dtype=complex)
        B[np.arange(n), np.arange(n), np.arange(n)] = 1.0
        m = len(iu)
        k = n + np.arange(m)
        B[k, iu, ju] = 1.0
        B[k, ju, iu] = 1.0
        k = n + m + np.arange(m)
        B[k, iu, ju] = 1j
        B[k, ju, iu] = -1j
        self.basis = B

    def to_matrix(self, x):
        x = np.asarray(x, dtype=float)
        n, m = self.n, len(self._iu)
        W = np.zeros((n, n), dtype=complex)
        W[np.arange(n), np.arange(n)] = x[:n]
        off = x[n:n + m] + 1j * x[n + m:]
        W[self._iu, self._ju] = off
        W[self._ju, self._iu] = off.conj()
        return W

    def from_matrix(self, W):
        W = np.asarray(W, dtype=complex)
        d = W[np.arange(self.n), np.arange(self.n)].real
        off = W[self._iu, self._ju]
        return np.concatenate([d, off.real, off.imag])

    def trace_coeffs(self, G):
        """Vector ``c`` with ``Tr(G W(x)) = c @ x`` for Hermitian ``G``."""
        G = np.asarray(G, dtype=complex)
        d = G[np.arange(self.n), np.arange(self.n)].real
        g = G[self._iu, self._ju]
        # Tr(G W) = sum_i G_ii W_ii + 2 Re sum_{i<j} conj(G_ij) W_ij
        return np.concatenate([d, 2.0 * g.real, 2.0 * g.imag])

    def quad_coeffs(self, A):
        """Rows ``c_m`` with ``a_m^H W(x) a_m = c_m @ x`` for the rows of ``A``."""
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        d = np.abs(A) ** 2
        cross = A[:, self._iu].conj() * A[:, self._ju]
        # a^H W a = sum_i |a_i|^2 W_ii + 2 Re sum_{i<j} conj(a_i) a_j W_ij
        return np.hstack([d, 2.0 * cross.real, -2.0 * cross.imag])

    @property
    def embedded(self):
        """Real embeddings of the basis matrices, shape ``(N**2, 2N, 2N)``."""
        return _embedded_basis(self.n)


@lru_cache(maxsize=None)
def _embedded_basis(n):
    B = HermitianBasis.__new__(HermitianBasis)
    HermitianBasis.__init__(B, n)
    out = np.stack([embed_unchecked(b) for b in B.basis])
    out.setflags(write=False)
    return out
