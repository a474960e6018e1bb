"""DFT, circulant and Toeplitz-block arithmetic.

Conventions: ``omega = exp(+2*pi*i/n)`` and ``Omega = (omega**(i*j))``, so
the forward transform here is ``n * numpy.fft.ifft`` and the inverse
``Omega^{-1} = Omega^H / n`` is ``numpy.fft.fft / n``.  A circulant with
first column ``c`` is ``C = Omega^{-1} diag(Omega c) Omega``.

numpy's pocketfft handles every length in O(n log n), so no power-of-two
restriction is imposed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SingularMatrixError
from .linalg import tol_rank

REAL_TOL = 1e-12


def dft_dense(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    idx = np.arange(n)
    # reduce the exponent mod n first so large n keeps full accuracy
    return np.exp(2j * np.pi * (np.outer(idx, idx) % n) / n)


def fft(v, axis: int = 0) -> np.ndarray:
    """``Omega @ v`` along ``axis``."""
    v = np.asarray(v)
    return v.shape[axis] * np.fft.ifft(v, axis=axis)


def inverse_fft(v, axis: int = 0) -> np.ndarray:
    """``Omega^{-1} @ v`` along ``axis``."""
    v = np.asarray(v)
    return np.fft.fft(v, axis=axis) / v.shape[axis]


def _maybe_real(out, *inputs):
    if all(not np.iscomplexobj(x) for x in inputs):
        scale = np.linalg.norm(out)
        leak = np.max(np.abs(out.imag)) if out.size else 0.0
        if leak > REAL_TOL * max(scale, 1.0):
            raise ArithmeticError(f"real inputs produced imaginary parts up to {leak:.2e}")
        return out.real.copy()
    return out


@dataclass(frozen=True, eq=False)
class CirculantMatrix:
    """``n x n`` circulant ``C = (c_{(i-j) mod n})`` stored by its first column."""

    first_column: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.first_column)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("first column must be a non-empty vector")
        c = c.astype(np.complex128 if np.iscomplexobj(c) else np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "first_column", c)

    @classmethod
    def from_spectrum(cls, u) -> "CirculantMatrix":
        u = np.asarray(u, dtype=np.complex128)
        obj = cls(inverse_fft(u))
        u = u.copy()
        u.setflags(write=False)
        obj.__dict__["spectrum"] = u
        return obj

    @property
    def n(self) -> int:
        return self.first_column.shape[0]

    @property
    def shape(self):
        return self.n, self.n

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.first_column)

    @cached_property
    def spectrum(self) -> np.ndarray:
        u = fft(self.first_column)
        u.setflags(write=False)
        return u

    @cached_property
    def transpose_spectrum(self) -> np.ndarray:
        # C^T is circulant with first column c_{-i mod n}; its spectrum is u_{-k mod n}
        return np.roll(self.spectrum[::-1], 1)

    def dense(self) -> np.ndarray:
        n = self.n
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        return self.first_column[idx]

    def transpose(self) -> "CirculantMatrix":
        return CirculantMatrix(np.roll(self.first_column[::-1], 1))


@dataclass(frozen=True, eq=False)
class ToeplitzBlock:
    """Leading ``rows x cols`` block of a circulant."""

    parent: CirculantMatrix
    rows: int
    cols: int

    def __post_init__(self):
        n = self.parent.n
        if not (1 <= self.rows <= n and 1 <= self.cols <= n):
            raise ValueError(f"block {self.rows}x{self.cols} exceeds parent size {n}")

    @property
    def shape(self):
        return self.rows, self.cols

    def dense(self) -> np.ndarray:
        idx = (np.arange(self.rows)[:, None] - np.arange(self.cols)[None, :]) % self.parent.n
        return self.parent.first_column[idx]


def _spectral_apply(u, x):
    x = np.asarray(x)
    vec = x.ndim == 1
    xm = x[:, None] if vec else x
    out = inverse_fft(u[:, None] * fft(xm, axis=0), axis=0)
    return out[:, 0] if vec else out


def circulant_apply(c: CirculantMatrix, x) -> np.ndarray:
    """``C @ x`` for a vector or a matrix of columns, in O(n log n) per column."""
    x = np.asarray(x)
    if x.shape[0] != c.n:
        raise ValueError(f"dimension mismatch: circulant of size {c.n} times {x.shape}")
    return _maybe_real(_spectral_apply(c.spectrum, x), c.first_column, x)


def circulant_solve(c: CirculantMatrix, b) -> np.ndarray:
    """``C^{-1} @ b`` by spectral division."""
    b = np.asarray(b)
    if b.shape[0] != c.n:
        raise ValueError(f"dimension mismatch: circulant of size {c.n} and rhs {b.shape}")
    mag = np.abs(c.spectrum)
    threshold = tol_rank(c.n, c.n) * mag.max()
    j = int(np.argmin(mag))
    if mag[j] <= threshold:
        raise SingularMatrixError(
            f"circulant is numerically singular: |u_{j}| = {mag[j]:.3e} <= {threshold:.3e}",
            index=j,
        )
    return _maybe_real(_spectral_apply(1.0 / c.spectrum, b), c.first_column, b)


def matmul_by_circulant(a, c: CirculantMatrix) -> np.ndarray:
    """``a @ C`` computed row-wise as ``(C^T a^T)^T``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[1] != c.n:
        raise ValueError(f"dimension mismatch: {a.shape} @ circulant of size {c.n}")
    out = _spectral_apply(c.transpose_spectrum, a.T).T
    return _maybe_real(out, a, c.first_column)


def matmul_by_toeplitz_block(a, t: ToeplitzBlock) -> np.ndarray:
    """``a @ T`` by zero-padding ``a`` to the parent circulant and truncating columns."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[1] != t.rows:
        raise ValueError(f"dimension mismatch: {a.shape} @ Toeplitz block {t.shape}")
    n = t.parent.n
    if t.rows < n:
        pad = np.zeros((a.shape[0], n), dtype=a.dtype)
        pad[:, : t.rows] = a
        a = pad
    return matmul_by_circulant(a, t.parent)[:, : t.cols]

