"""Dense matrix kernels shared by every other module.

Matrices are plain 2-d numpy arrays of ``float64`` or ``complex128``.
Wherever a transpose appears for real data, the conjugate transpose is
used for complex data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RankDeficientError, SingularMatrixError, SvdConvergenceError


def tol_orth(m: int, n: int) -> float:
    return 1e-10 * max(m, n)


tol_recon = tol_orth


def tol_rank(m: int, n: int) -> float:
    return 1e-13 * max(m, n)


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-d float64 or complex128 array."""
    a = np.asarray(a)
    if a.ndim != 2 or 0 in a.shape:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if np.iscomplexobj(a):
        return a.astype(np.complex128, copy=False)
    return a.astype(np.float64, copy=False)


def ctranspose(a: np.ndarray) -> np.ndarray:
    return a.conj().T if np.iscomplexobj(a) else a.T


def leading_block(a: np.ndarray, k: int, l: int | None = None) -> np.ndarray:
    """Return the northwestern ``k x l`` block (``l`` defaults to ``k``)."""
    l = k if l is None else l
    m, n = a.shape
    if not (1 <= k <= m and 1 <= l <= n):
        raise ValueError(f"leading block {k}x{l} out of range for a {m}x{n} matrix")
    return a[:k, :l]


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


@dataclass(frozen=True)
class QrResult:
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = left @ diag(singulars) @ right^H``.

    ``right`` holds the right singular vectors as columns (n x rho).
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    @property
    def shape(self):
        return self.left.shape[0], self.right.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.left * self.singulars) @ ctranspose(self.right)


@dataclass(frozen=True)
class TruncatedSVD:
    """Rank-r truncation ``A_r = left @ diag(singulars) @ right^H``.

    ``tail`` keeps the discarded singular values sigma_{r+1}, ..., sigma_rho
    so the optimal error ``||A - A_r|| = sigma_{r+1}`` stays available.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray
    tail: np.ndarray

    @property
    def rank(self) -> int:
        return self.singulars.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.left * self.singulars) @ ctranspose(self.right)

    def residual_norm(self) -> float:
        return float(self.tail[0]) if self.tail.size else 0.0


def qr(a) -> QrResult:
    """Thin QR with a positive real diagonal in ``r``.

    Raises :class:`RankDeficientError` when a diagonal entry of ``r`` falls
    below ``tol_rank * ||a||``.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m < n:
        raise RankDeficientError(m, 0.0, 0.0)
    q, r = np.linalg.qr(a, mode="reduced")
    d = np.diagonal(r).copy()
    mag = np.abs(d)
    phase = np.ones_like(d)
    nz = mag > 0
    phase[nz] = d[nz] / mag[nz]
    q = q * phase
    r = r * phase.conj()[:, None]
    r = np.triu(r)
    if np.iscomplexobj(r):
        idx = np.arange(n)
        r[idx, idx] = r[idx, idx].real
    norm_a = spectral_norm(a)
    threshold = tol_rank(m, n) * norm_a
    for j in range(n):
        if mag[j] <= threshold:
            raise RankDeficientError(j, float(mag[j]), threshold)
    return QrResult(q, r)


def orth(a) -> np.ndarray:
    """The orthogonal factor Q(a) of :func:`qr`."""
    return qr(a).q


def _lapack_svd(a, compute_uv):
    try:
        return np.linalg.svd(a, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(
            a, full_matrices=False, compute_uv=compute_uv, lapack_driver="gesvd"
        )
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge with gesdd nor gesvd: {exc}"
        ) from exc


def svd(a) -> SvdResult:
    a = as_matrix(a)
    u, s, vh = _lapack_svd(a, True)
    return SvdResult(u, s, ctranspose(vh))


def singular_values(a) -> np.ndarray:
    return _lapack_svd(as_matrix(a), False)


def spectral_norm(a) -> float:
    return float(singular_values(a)[0])


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def _sigma_min(a) -> tuple[float, float]:
    s = singular_values(a)
    if s[-1] == 0.0:
        raise SingularMatrixError("matrix is exactly singular (sigma_rho = 0)")
    return float(s[0]), float(s[-1])


def pseudo_inverse_norm(a) -> float:
    """``||a^+|| = 1 / sigma_rho(a)`` for a matrix of full rank rho."""
    return 1.0 / _sigma_min(a)[1]


def condition_number(a) -> float:
    s1, sr = _sigma_min(a)
    return s1 / sr


def truncate_svd(s: SvdResult, r: int) -> TruncatedSVD:
    rho = s.singulars.shape[0]
    if not 1 <= r <= rho:
        raise ValueError(f"truncation rank {r} outside [1, {rho}]")
    return TruncatedSVD(
        s.left[:, :r], s.singulars[:r], s.right[:, :r], s.singulars[r:]
    )


def canonicalize_columns(q: np.ndarray) -> np.ndarray:
    """Fix the column gauge: the largest-magnitude entry of each column is real positive."""
    q = np.array(q, copy=True)
    idx = np.argmax(np.abs(q), axis=0)
    pivots = q[idx, np.arange(q.shape[1])]
    mag = np.abs(pivots)
    phase = np.where(mag > 0, pivots / np.where(mag > 0, mag, 1), 1)
    return q * phase.conj()
