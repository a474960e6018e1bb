"""Randomized range finding with zero or positive oversampling, the error
bounds that go with it, and a-posteriori error estimation.

The sketch is ``Y = B_i H`` with ``B_i = (A A^H)^i A``, whose singular values
are ``sigma_j(A)^(2i+1)`` and whose left singular vectors are those of ``A``.
It is applied as ``2i + 1`` alternating products and never formed.  Power
steps do not re-orthonormalize, which is fine for ``i <= 2``; beyond that the
small singular directions drown in roundoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import multipliers as mult
from .errors import SingularMatrixError
from .linalg import (
    SvdResult,
    TruncatedSVD,
    as_matrix,
    ctranspose,
    frobenius_norm,
    qr,
    singular_values,
    spectral_norm,
    tol_rank,
)
from .rng import as_generator

_STRUCTURED_KINDS = (mult.Kind.REAL_CIRCULANT, mult.Kind.UNITARY_CIRCULANT, mult.Kind.TOEPLITZ)


@dataclass(frozen=True)
class LowRankResult:
    """Orthonormal basis ``q`` (m x l) of the sketch range.

    ``h`` is the multiplier actually used (dense or structured).
    """

    q: np.ndarray
    l: int
    r: int
    h: object = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return self.l - self.r

    def project(self, x) -> np.ndarray:
        """``Q Q^H x`` without forming the projector."""
        return self.q @ (ctranspose(self.q) @ x)

    def approx(self, a) -> np.ndarray:
        """The rank-``l`` approximation ``Q Q^H A`` (dense; meant for moderate sizes)."""
        return self.project(np.asarray(a))

    def residual_apply(self, a, x) -> np.ndarray:
        """``(A - Q Q^H A) x`` computed as ``y - Q Q^H y`` with ``y = A x``."""
        y = np.asarray(a) @ x
        return y - self.project(y)


def power_apply(a, x, steps: int) -> np.ndarray:
    """``(A A^H)^steps A x`` by alternating products."""
    if steps < 0:
        raise ValueError("power steps must be non-negative")
    a = np.asarray(a)
    ah = ctranspose(a)
    y = a @ x
    for _ in range(steps):
        y = a @ (ah @ y)
    return y


def sketch_multiplier(spec: mult.MultiplierSpec, n: int, l: int, rng=None):
    """Materialize an ``n x l`` multiplier; circulant kinds give their leading ``n x l`` block."""
    spec = spec.with_shape(n, l)
    if spec.kind in _STRUCTURED_KINDS and l == n:
        return mult.generate(spec, rng)
    if spec.kind in (mult.Kind.REAL_CIRCULANT, mult.Kind.UNITARY_CIRCULANT):
        variant = "real" if spec.kind is mult.Kind.REAL_CIRCULANT else "unitary"
        spec = mult.MultiplierSpec(mult.Kind.TOEPLITZ, n, l, spec.seed, variant=variant)
    return mult.generate(spec, rng)


def range_find(a, r: int, p: int = 0, multiplier=None, power_steps: int = 0,
               rng=None, strict: bool = True) -> LowRankResult:
    """Orthonormal basis ``Q(B_i H)`` for an ``n x (r + p)`` random multiplier ``H``.

    ``multiplier`` is a :class:`MultiplierSpec` (default Gaussian), or an
    explicit ``n x l`` matrix / structured block (then ``p`` is implied by
    its width).  ``rng`` overrides the spec's seed.  With ``strict`` a
    rank-deficient sketch raises :class:`~randmult.errors.RankDeficientError`;
    otherwise the Householder basis is returned as is.
    """
    a = as_matrix(a)
    m, n = a.shape
    if r < 1 or p < 0:
        raise ValueError("need r >= 1 and p >= 0")
    if multiplier is None:
        multiplier = mult.MultiplierSpec(mult.Kind.GAUSSIAN, n, r + p)
    if isinstance(multiplier, mult.MultiplierSpec):
        l = r + p
        if l > min(m, n):
            raise ValueError(f"sketch width {l} exceeds min(m, n) = {min(m, n)}")
        h = sketch_multiplier(multiplier, n, l, rng)
    else:
        h = multiplier
        l = h.shape[1]
        if h.shape[0] != n or l < r:
            raise ValueError(f"multiplier shape {h.shape} does not fit a {a.shape} input with r={r}")
    y = mult.right_multiply(a, h)
    for _ in range(power_steps):
        y = a @ (ctranspose(a) @ y)
    q = qr(y).q if strict else np.linalg.qr(y, mode="reduced")[0]
    return LowRankResult(q, l, r, h)


def subspace_residual(a, result: LowRankResult, truth: TruncatedSVD) -> tuple[float, float]:
    """``rn1 = ||Q (Q^H S_r) - S_r||`` and ``rn2 = ||A - Q Q^H A||``."""
    s_r = truth.left
    rn1 = spectral_norm(result.project(s_r) - s_r)
    a = np.asarray(a)
    rn2 = spectral_norm(a - result.approx(a))
    return rn1, rn2


@dataclass(frozen=True)
class BoundReport:
    delta_plus: float
    delta_plus_prime: float
    sigma_r: float
    sigma_r1: float
    h_frobenius: float
    t_h_inv_norm: float
    norm_a: float
    reference_bounds: dict = field(default_factory=dict)


def reference_bounds(singulars, r: int, p: int, shape) -> dict:
    """Expected-error bounds for Gaussian sketches with oversampling ``p >= 2``.

    ``frobenius``: ``E||A - QQ^H A||_F <= sqrt(1 + r/(p-1)) * tail_F``;
    ``spectral``: ``E||A - QQ^H A|| <= (1 + sqrt(r/(p-1))) sigma_{r+1} + e sqrt(r+p)/p * tail_F``;
    ``simplified``: ``(1 + 4 sqrt(r+p)/(p-1) * sqrt(min(m, n))) sigma_{r+1}``.
    Empty when ``p < 2``.
    """
    if p < 2:
        return {}
    s = np.asarray(singulars)
    tail = s[r:]
    tail_f = float(np.sqrt(np.sum(tail ** 2)))
    s_r1 = float(tail[0]) if tail.size else 0.0
    return {
        "frobenius": math.sqrt(1 + r / (p - 1)) * tail_f,
        "spectral": (1 + math.sqrt(r / (p - 1))) * s_r1 + math.e * math.sqrt(r + p) / p * tail_f,
        "simplified": (1 + 4 * math.sqrt(r + p) / (p - 1) * math.sqrt(min(shape))) * s_r1,
    }


def error_bounds(a_svd: SvdResult, h, r: int) -> BoundReport:
    """First-order bounds ``Delta_+`` on ``rn1`` and ``Delta'_+`` on ``rn2``.

    ``Delta_+ = sqrt(2) ||H||_F ||(T_r^H H)^+|| sigma_{r+1} / sigma_r`` and
    ``Delta'_+ = sigma_{r+1} + 2 Delta_+ ||A||``.  For ``l > r`` the inverse
    becomes the pseudo-inverse.
    """
    h = mult.as_dense(h)
    s = a_svd.singulars
    if not 1 <= r < s.shape[0]:
        raise ValueError(f"need 1 <= r < rank, got r={r}")
    th = ctranspose(a_svd.right[:, :r]) @ h
    sv = singular_values(th)
    s_min = sv[r - 1] if sv.shape[0] >= r else 0.0
    if not s_min > tol_rank(*th.shape) * sv[0]:
        raise SingularMatrixError("T_r^H H is singular; the bound is undefined for this multiplier")
    t_inv = 1.0 / float(s_min)
    hf = frobenius_norm(h)
    sigma_r, sigma_r1, norm_a = float(s[r - 1]), float(s[r]), float(s[0])
    dp = math.sqrt(2.0) * hf * t_inv * sigma_r1 / sigma_r
    dpp = sigma_r1 + 2.0 * dp * norm_a
    refs = reference_bounds(s, r, h.shape[1] - r, a_svd.shape)
    return BoundReport(dp, dpp, sigma_r, sigma_r1, hf, t_inv, norm_a, refs)


def posterior_estimate(a, result: LowRankResult, probes: int, seed) -> float:
    """``10 sqrt(2/pi) max_j ||(A - QQ^H A) g_j||`` over ``probes`` Gaussian vectors.

    Exceeds ``||A - QQ^H A||`` with probability at least ``1 - 10**-probes``.
    """
    if probes < 1:
        raise ValueError("need at least one probe")
    a = np.asarray(a)
    g = as_generator(seed).standard_normal((a.shape[1], probes))
    res = result.residual_apply(a, g)
    return 10.0 * math.sqrt(2.0 / math.pi) * float(np.max(np.linalg.norm(res, axis=0)))


def srft_width(n: int, r: int) -> tuple[int, bool]:
    """``l = ceil(4 (sqrt(r) + sqrt(8 log(r n) n))^2 log r)``, clamped to ``[r, n]``.

    Returns ``(l, clamped)``.
    """
    raw = math.ceil(4 * (math.sqrt(r) + math.sqrt(8 * math.log(r * n) * n)) ** 2 * math.log(r))
    l = min(n, max(r, raw))
    return l, l != raw


@dataclass(frozen=True)
class SrftCheck:
    residual: float
    bound: float
    l: int
    clamped: bool


def srft_sketch_check(a, r: int, seed, variant: str = "srft") -> SrftCheck:
    """``||(I - P_Y) A||`` for an SRFT sketch versus ``sqrt(1 + 7n/l) sigma_{r+1}``.

    ``variant="circulant"`` sketches with the sampled columns of the unitary
    circulant ``Omega^{-1} D Omega`` instead, which spans the same space as
    ``Omega^{-1} S``.
    """
    a = as_matrix(a)
    n = a.shape[1]
    l, clamped = srft_width(n, r)
    if variant == "srft":
        h = mult.gen_srft(n, l, seed)
    elif variant == "circulant":
        h = mult.gen_srft_circulant_columns(n, l, seed)
    else:
        raise ValueError(f"unknown SRFT variant {variant!r}")
    result = range_find(a, r, multiplier=h, strict=False)
    residual = spectral_norm(a - result.approx(a))
    s = singular_values(a)
    bound = math.sqrt(1 + 7 * n / l) * float(s[r])
    return SrftCheck(residual, bound, l, clamped)
