"""Gaussian elimination with and without pivoting, recursive block elimination,
multiplicative preprocessing ``A -> F A H`` and iterative refinement.

A pivot counts as zero when ``|p| <= tol_pivot(n) * ||A||`` with
``tol_pivot(n) = 1e-13 * n``.  A solve is treated as a numerical failure
when it raises :class:`~randmult.errors.ZeroPivotError` or its relative
residual exceeds :data:`FAILURE_RESIDUAL`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import multipliers as mult
from .errors import SingularMatrixError, SingularPivotBlockError, ZeroPivotError
from .linalg import as_matrix, singular_values, spectral_norm

FAILURE_RESIDUAL = 1e-3


def tol_pivot(n: int) -> float:
    return 1e-13 * n


def relative_residual(a, x, b) -> float:
    return float(np.linalg.norm(a @ x - b) / np.linalg.norm(b))


# --------------------------------------------------------------------------
# LU factorizations


@dataclass(frozen=True)
class LuFactors:
    """``A[perm] = lower @ upper``; ``perm`` is ``None`` when no pivoting was used."""

    lower: np.ndarray
    upper: np.ndarray
    perm: np.ndarray | None = None

    @property
    def pivots(self) -> np.ndarray:
        return np.diagonal(self.upper).copy()

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b)
        if self.perm is not None:
            b = b[self.perm]
        y = scipy.linalg.solve_triangular(self.lower, b, lower=True, unit_diagonal=True,
                                          check_finite=False)
        return scipy.linalg.solve_triangular(self.upper, y, lower=False, check_finite=False)

    def matrix(self) -> np.ndarray:
        """The factored matrix, with the row permutation undone."""
        lu = self.lower @ self.upper
        if self.perm is None:
            return lu
        out = np.empty_like(lu)
        out[self.perm] = lu
        return out


def genp_factor(a, tol: float | None = None) -> LuFactors:
    """LU factorization taking the pivots in natural order (no row exchanges).

    ``tol`` overrides the relative zero-pivot threshold; ``tol=0`` only
    rejects exact zeros.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"GENP needs a square matrix, got {a.shape}")
    rel = tol_pivot(n) if tol is None else tol
    threshold = rel * spectral_norm(a) if rel > 0 else 0.0
    w = a.copy()
    for j in range(n):
        p = w[j, j]
        if not abs(p) > threshold:
            raise ZeroPivotError(j + 1, p, threshold)
        if j + 1 < n:
            w[j + 1:, j] /= p
            w[j + 1:, j + 1:] -= np.outer(w[j + 1:, j], w[j, j + 1:])
    lower = np.tril(w, -1)
    np.fill_diagonal(lower, 1.0)
    return LuFactors(lower, np.triu(w))


def gepp_factor(a) -> LuFactors:
    """LU factorization with partial pivoting: every multiplier has modulus <= 1."""
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"GEPP needs a square matrix, got {a.shape}")
    threshold = tol_pivot(n) * spectral_norm(a)
    w = a.copy()
    perm = np.arange(n)
    for j in range(n):
        i = j + int(np.argmax(np.abs(w[j:, j])))
        if not abs(w[i, j]) > threshold:
            raise SingularMatrixError(
                f"matrix is singular to working precision at column {j + 1}", index=j + 1)
        if i != j:
            w[[j, i]] = w[[i, j]]
            perm[[j, i]] = perm[[i, j]]
        if j + 1 < n:
            w[j + 1:, j] /= w[j, j]
            w[j + 1:, j + 1:] -= np.outer(w[j + 1:, j], w[j, j + 1:])
    lower = np.tril(w, -1)
    np.fill_diagonal(lower, 1.0)
    return LuFactors(lower, np.triu(w), perm)


# --------------------------------------------------------------------------
# block elimination


def schur_complement(a, k: int) -> np.ndarray:
    """``E - D B^{-1} C`` for the split of ``a`` with leading ``k x k`` pivot block ``B``."""
    a = as_matrix(a)
    n = a.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    b = a[:k, :k]
    s = singular_values(b)
    if not s[-1] > tol_pivot(n) * spectral_norm(a):
        raise SingularMatrixError(f"leading {k}x{k} block is numerically singular", index=k)
    return a[k:, k:] - a[k:, :k] @ np.linalg.solve(b, a[:k, k:])


@dataclass(eq=False)
class BlockNode:
    """One node of a recursive block factorization.

    The node covers rows/columns ``offset .. offset+size`` of the input and
    holds ``matrix``, which is ``S(A^(offset), A^(offset+size))``.  Internal
    nodes split it as ``[[B, C], [D, E]]`` with pivot block ``B`` of size ``k``
    and keep the strips ``D B^{-1}`` and ``B^{-1} C`` plus the children for
    ``B`` and for the Schur complement ``S = E - D B^{-1} C``.
    """

    offset: int
    matrix: np.ndarray
    k: int = 0
    lower_strip: np.ndarray | None = None
    upper_strip: np.ndarray | None = None
    pivot: "BlockNode | None" = None
    schur: "BlockNode | None" = None
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_leaf(self) -> bool:
        return self.pivot is None

    def solve(self, b) -> np.ndarray:
        """``M^{-1} b`` through the inverse block factorization."""
        if self.is_leaf:
            if self.size == 1:
                return b / self.matrix[0, 0]
            return scipy.linalg.lu_solve(self._lu, b, check_finite=False)
        k = self.k
        b1, b2 = b[:k], b[k:]
        y1 = self.pivot.solve(b1)
        y2 = self.schur.solve(b2 - self.lower_strip @ b1)
        return np.concatenate([y1 - self.upper_strip @ y2, y2])

    def solve_left(self, r) -> np.ndarray:
        """``r M^{-1}`` for a row block ``r``."""
        if self.is_leaf:
            if self.size == 1:
                return r / self.matrix[0, 0]
            return scipy.linalg.lu_solve(self._lu, r.T, trans=1, check_finite=False).T
        k = self.k
        r1, r2 = r[:, :k], r[:, k:]
        w2 = self.schur.solve_left(r2 - r1 @ self.upper_strip)
        u1 = self.pivot.solve_left(r1) - w2 @ self.lower_strip
        return np.concatenate([u1, w2], axis=1)

    def reassemble(self) -> np.ndarray:
        """Multiply the block factors back together (lower, block-diagonal, upper)."""
        if self.is_leaf:
            return self.matrix
        b = self.pivot.reassemble()
        s = self.schur.reassemble()
        top = np.concatenate([b, b @ self.upper_strip], axis=1)
        bottom = np.concatenate(
            [self.lower_strip @ b, self.lower_strip @ b @ self.upper_strip + s], axis=1)
        return np.concatenate([top, bottom], axis=0)

    def walk(self):
        yield self
        if not self.is_leaf:
            yield from self.pivot.walk()
            yield from self.schur.walk()

    def leaves(self):
        return [node for node in self.walk() if node.is_leaf]


@dataclass(eq=False)
class BlockFactorization:
    root: BlockNode
    split: tuple[int, ...]
    strategy: str

    @property
    def n(self) -> int:
        return self.root.size

    def solve(self, b) -> np.ndarray:
        return self.root.solve(np.asarray(b))

    def reassemble(self) -> np.ndarray:
        return self.root.reassemble()

    def pivot_blocks(self) -> list[np.ndarray]:
        return [leaf.matrix for leaf in self.root.leaves()]

    def pivots(self) -> np.ndarray:
        """Diagonal pivots when every pivot block is 1x1."""
        blocks = self.pivot_blocks()
        if any(b.shape != (1, 1) for b in blocks):
            raise ValueError("pivots are scalars only for the split (1, 1, ..., 1)")
        return np.array([b[0, 0] for b in blocks])

    def schur_at(self, k: int) -> np.ndarray:
        """The stored Schur complement ``S(A^(k), A)``, if this factorization produced it."""
        for node in self.root.walk():
            if node.offset == k and node.offset + node.size == self.n:
                return node.matrix
        raise KeyError(f"no Schur complement after eliminating {k} columns in this tree")


def _balanced_point(sizes) -> int:
    return (len(sizes) + 1) // 2


def block_ge_factor(a, split=None, strategy: str = "balanced") -> BlockFactorization:
    """Recursive block Gaussian elimination.

    ``split`` lists the sizes of the diagonal pivot blocks in order (default:
    all ones, i.e. a complete recursive factorization).  ``strategy``
    decides how the list is cut at each level: ``"balanced"`` halves it,
    ``"chain"`` peels off the first block (the order GENP uses).
    """
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"block elimination needs a square matrix, got {a.shape}")
    split = tuple(int(s) for s in (split if split is not None else (1,) * n))
    if any(s < 1 for s in split) or sum(split) != n:
        raise ValueError(f"split {split} must be positive sizes summing to {n}")
    if strategy not in ("balanced", "chain"):
        raise ValueError(f"unknown strategy {strategy!r}")
    threshold = tol_pivot(n) * spectral_norm(a)
    cut = _balanced_point if strategy == "balanced" else (lambda sizes: 1)

    def build(m, offset, sizes):
        if len(sizes) == 1:
            s_min = singular_values(m)[-1]
            if not s_min > threshold:
                raise SingularPivotBlockError(offset, m.shape[0], float(s_min), threshold)
            return BlockNode(offset, m, _lu=scipy.linalg.lu_factor(m, check_finite=False))
        h = cut(sizes)
        k = sum(sizes[:h])
        pivot = build(m[:k, :k], offset, sizes[:h])
        upper = pivot.solve(m[:k, k:])
        lower = pivot.solve_left(m[k:, :k])
        s = m[k:, k:] - lower @ m[:k, k:]
        schur = build(s, offset + k, sizes[h:])
        return BlockNode(offset, m, k, lower, upper, pivot, schur)

    return BlockFactorization(build(a, 0, split), split, strategy)


# --------------------------------------------------------------------------
# pivot safety


@dataclass(frozen=True)
class SafetyReport:
    n_norm: float
    n_minus: float
    n_plus: float
    leading_conds: np.ndarray

    def check_pivots(self, pivots, rel: float = 1e-6) -> list[int]:
        """1-based indices of pivots violating ``1/|p| <= N_-`` or ``|p| <= N_+``."""
        bad = []
        for j, p in enumerate(np.abs(np.asarray(pivots)), start=1):
            if p == 0 or 1.0 / p > self.n_minus * (1 + rel) or p > self.n_plus * (1 + rel):
                bad.append(j)
        return bad


def safety_report(a, strict: bool = True) -> SafetyReport:
    """Norm envelope of the GENP pivots: ``N = ||A||``, ``N_- = max_j ||(A^(j))^{-1}||``
    and ``N_+ = N + N_- N^2``, plus the condition number of every leading block.

    With ``strict`` a numerically singular leading block raises
    :class:`SingularMatrixError`; otherwise its condition number is reported
    as is (``inf`` for an exactly singular block).
    """
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("safety report needs a square matrix")
    s_full = singular_values(a)
    norm = float(s_full[0])
    threshold = tol_pivot(n) * norm
    conds = np.empty(n)
    n_minus = 0.0
    for j in range(1, n + 1):
        s = singular_values(a[:j, :j])
        if strict and not s[-1] > threshold:
            raise SingularMatrixError(f"leading {j}x{j} block is numerically singular", index=j)
        inv = math.inf if s[-1] == 0 else 1.0 / s[-1]
        conds[j - 1] = s[0] * inv if s[0] > 0 else math.inf
        n_minus = max(n_minus, inv)
    return SafetyReport(norm, n_minus, norm + n_minus * norm ** 2, conds)


# --------------------------------------------------------------------------
# refinement and preprocessed solves


@dataclass(frozen=True)
class RefinementResult:
    x: np.ndarray
    residual_history: list[float]
    diverged: bool = False


def iterative_refine(a, solver, b, x0, steps: int) -> RefinementResult:
    """Residual correction ``x <- x + solve(b - A x)`` with a fixed factorization.

    ``solver`` is an :class:`LuFactors` or any callable approximating
    ``A^{-1}``.  Residuals are formed in working precision.  The loop stops
    early, flagging divergence, once the residual has grown two steps in a row.
    """
    solve = solver.solve if isinstance(solver, LuFactors) else solver
    a = np.asarray(a)
    b = np.asarray(b)
    x = np.asarray(x0)
    history = [relative_residual(a, x, b)]
    grew = 0
    for _ in range(steps):
        d = solve(b - a @ x)
        x = x + d
        history.append(relative_residual(a, x, b))
        grew = grew + 1 if history[-1] > history[-2] else 0
        if grew >= 2:
            return RefinementResult(x, history, True)
    return RefinementResult(x, history)


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    residual_history: list[float]
    factors: LuFactors
    diverged: bool = False

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


def _materialize(spec, n, default_rng):
    if spec is None:
        return None
    if isinstance(spec, mult.MultiplierSpec):
        if spec.kind is mult.Kind.NONE:
            return None
        return mult.generate(spec.with_shape(n, n), default_rng)
    return spec


def preprocess_solve(a, b, pre=None, post=None, refine_steps: int = 0,
                     method: str = "genp") -> SolveResult:
    """Solve ``A x = b`` through ``F A H y = F b``, ``x = H y``.

    ``pre`` and ``post`` are :class:`~randmult.multipliers.MultiplierSpec`
    instances (generated from their own seeds), already materialized
    multipliers, or ``None``.  ``method`` picks ``"genp"`` or ``"gepp"``
    for the product.  ``residual_history[i]`` is the relative residual after
    ``i`` refinement steps.
    """
    a = as_matrix(a)
    n = a.shape[0]
    b = np.asarray(b)
    f = _materialize(pre, n, None)
    h = _materialize(post, n, None)
    m = mult.left_multiply(f, mult.right_multiply(a, h))
    factors = genp_factor(m) if method == "genp" else gepp_factor(m)
    keep_real = not (np.iscomplexobj(a) or np.iscomplexobj(b))

    def solve(r):
        y = factors.solve(mult.left_multiply(f, r))
        x = mult.left_multiply(h, y)
        return x.real if keep_real and np.iscomplexobj(x) else x

    ref = iterative_refine(a, solve, b, solve(b), refine_steps)
    return SolveResult(ref.x, ref.residual_history, factors, ref.diverged)


def solve_with_retry(a, b, pre=None, post=None, refine_steps: int = 0,
                     retries: int = 3) -> SolveResult:
    """:func:`preprocess_solve`, redrawing the random multipliers after a zero pivot."""
    for attempt in range(retries + 1):
        try:
            return preprocess_solve(a, b, pre, post, refine_steps)
        except ZeroPivotError:
            if attempt == retries:
                raise
            pre = _reseed(pre, attempt)
            post = _reseed(post, attempt)
    raise AssertionError("unreachable")


def _reseed(spec, attempt):
    if not isinstance(spec, mult.MultiplierSpec):
        return spec
    state = np.random.SeedSequence(spec.seed, spawn_key=(attempt + 1,)).generate_state(2)
    return spec.with_seed(int(state[0]) << 32 | int(state[1]))
