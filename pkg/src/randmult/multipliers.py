"""Seeded random multipliers and Monte-Carlo probes of their norms.

A multiplier is described by a :class:`MultiplierSpec` and materialized by
:func:`generate` as one of

* ``None`` (identity, no preprocessing),
* a dense ``numpy`` array,
* a :class:`~randmult.structured.CirculantMatrix`, or
* a :class:`~randmult.structured.ToeplitzBlock`.

:func:`right_multiply` and :func:`left_multiply` dispatch on
that type so structured multipliers keep their FFT fast path.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import structured
from .linalg import singular_values
from .rng import as_generator, stream
from .stats import StatRecord
from .structured import CirculantMatrix, ToeplitzBlock


class Kind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    REAL_CIRCULANT = "circulant"
    UNITARY_CIRCULANT = "unitary-circulant"
    TOEPLITZ = "toeplitz"
    SRFT = "srft"
    FINITE = "finite"
    CIRC_SKEW = "circskew"
    NONE = "none"


VARIANTS = ("real", "unitary")


@dataclass(frozen=True)
class MultiplierSpec:
    kind: Kind
    rows: int
    cols: int
    seed: int = 0
    cardinality: int | None = None
    variant: str = "real"

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.rows < 1 or self.cols < 1:
            raise ValueError("multiplier dimensions must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.kind is Kind.FINITE:
            if self.cardinality is None or self.cardinality < 2:
                raise ValueError("finite-set multipliers need cardinality >= 2")
        if self.kind is Kind.CIRC_SKEW and self.rows != self.cols:
            raise ValueError("circulant/skew-circulant products are square")
        if self.kind in (Kind.TOEPLITZ, Kind.REAL_CIRCULANT, Kind.UNITARY_CIRCULANT, Kind.SRFT):
            if self.cols > self.rows:
                raise ValueError(f"{self.kind.value} multipliers need cols <= rows")

    @classmethod
    def from_token(cls, token: str, rows: int, cols: int | None = None,
                   seed: int = 0) -> "MultiplierSpec":
        """Parse a CLI token such as ``"toeplitz:variant=unitary"`` or ``"finite:card=65536"``."""
        name, _, opts = token.strip().partition(":")
        kw = {}
        for item in filter(None, opts.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"malformed multiplier option {item!r} in {token!r}")
            kw[key.strip()] = value.strip()
        try:
            kind = Kind(name.strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in Kind)
            raise ValueError(f"unknown multiplier {name!r}; expected one of {choices}") from None
        extra = set(kw) - {"card", "variant"}
        if extra:
            raise ValueError(f"unknown multiplier options {sorted(extra)} in {token!r}")
        card = int(kw["card"]) if "card" in kw else None
        return cls(kind, rows, rows if cols is None else cols, seed,
                   cardinality=card, variant=kw.get("variant", "real"))

    @property
    def token(self) -> str:
        if self.kind is Kind.FINITE:
            return f"finite:card={self.cardinality}"
        if self.kind is Kind.TOEPLITZ:
            return f"toeplitz:variant={self.variant}"
        return self.kind.value

    def with_seed(self, seed: int) -> "MultiplierSpec":
        return replace(self, seed=int(seed))

    def with_shape(self, rows: int, cols: int) -> "MultiplierSpec":
        return replace(self, rows=rows, cols=cols)


# --------------------------------------------------------------------------
# generators


def gen_gaussian(m: int, n: int, seed, mean: float = 0.0) -> np.ndarray:
    """``m x n`` matrix of i.i.d. N(mean, 1) draws."""
    g = as_generator(seed).standard_normal((m, n))
    return g + mean if mean else g


def gen_real_circulant(n: int, seed) -> CirculantMatrix:
    """Circulant whose first column is i.i.d. uniform on [-1, 1]."""
    return CirculantMatrix(as_generator(seed).uniform(-1.0, 1.0, n))


def gen_unitary_circulant(n: int, seed) -> CirculantMatrix:
    """Circulant with spectrum ``exp(2*pi*i*phi_j)``, ``phi_j`` uniform on [0, 1)."""
    phi = as_generator(seed).random(n)
    return CirculantMatrix.from_spectrum(np.exp(2j * np.pi * phi))


def gen_toeplitz_block(n: int, l: int, seed, variant: str = "real") -> ToeplitzBlock:
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    if variant == "real":
        parent = gen_real_circulant(n, seed)
    elif variant == "unitary":
        parent = gen_unitary_circulant(n, seed)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return ToeplitzBlock(parent, n, l)


def srft_parts(n: int, l: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Random unit-circle diagonal and ``l`` sampled column indices of an SRFT."""
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    rng = as_generator(seed)
    d = np.exp(2j * np.pi * rng.random(n))
    cols = np.sort(rng.choice(n, size=l, replace=False))
    return d, cols


def gen_srft(n: int, l: int, seed, *, diagonal=None, columns=None) -> np.ndarray:
    """``sqrt(n/l) * D @ Omega @ R`` as a dense ``n x l`` complex matrix.

    ``diagonal`` and ``columns`` override the random draws (test hooks).
    """
    d, cols = srft_parts(n, l, seed)
    if diagonal is not None:
        d = np.asarray(diagonal, dtype=np.complex128)
    if columns is not None:
        cols = np.asarray(columns)
    idx = np.arange(n)
    omega_r = np.exp(2j * np.pi * (np.outer(idx, cols) % n) / n)
    return math.sqrt(n / len(cols)) * d[:, None] * omega_r


def gen_srft_circulant_columns(n: int, l: int, seed) -> np.ndarray:
    """``C @ R``: the columns of the unitary circulant ``Omega^{-1} D Omega`` that the
    SRFT with the same seed samples.  Spans the same space as ``Omega^{-1} S``."""
    d, cols = srft_parts(n, l, seed)
    return CirculantMatrix.from_spectrum(d).dense()[:, cols]


def gen_finite_set_uniform(m: int, n: int, seed, cardinality: int) -> np.ndarray:
    """Integers drawn uniformly from ``{-floor(c/2), ..., ceil(c/2) - 1}``."""
    if cardinality < 2:
        raise ValueError("cardinality must be at least 2")
    lo = -(cardinality // 2)
    hi = cardinality - cardinality // 2
    return as_generator(seed).integers(lo, hi, size=(m, n)).astype(np.float64)


def skew_circulant_dense(c) -> np.ndarray:
    """Skew-circulant with first column ``c``: entries above the diagonal wrap with a sign flip."""
    c = np.asarray(c)
    n = c.shape[0]
    diff = np.arange(n)[:, None] - np.arange(n)[None, :]
    sign = np.where(diff < 0, -1.0, 1.0)
    return sign * c[diff % n]


def gen_circ_skew_product(n: int, seed) -> np.ndarray:
    """Experimental: real circulant times a skew-circulant, both with uniform [-1, 1] columns."""
    rng = as_generator(seed)
    circ = CirculantMatrix(rng.uniform(-1.0, 1.0, n))
    skew = skew_circulant_dense(rng.uniform(-1.0, 1.0, n))
    return structured.circulant_apply(circ, skew)


def generate(spec: MultiplierSpec, rng=None):
    """Materialize ``spec``; ``rng`` overrides the spec's own seed."""
    src = as_generator(spec.seed if rng is None else rng)
    n, l = spec.rows, spec.cols
    k = spec.kind
    if k is Kind.NONE:
        return None
    if k is Kind.GAUSSIAN:
        return gen_gaussian(n, l, src)
    if k is Kind.FINITE:
        return gen_finite_set_uniform(n, l, src, spec.cardinality)
    if k is Kind.SRFT:
        return gen_srft(n, l, src)
    if k is Kind.CIRC_SKEW:
        return gen_circ_skew_product(n, src)
    if k is Kind.REAL_CIRCULANT:
        circ = gen_real_circulant(n, src)
    elif k is Kind.UNITARY_CIRCULANT:
        circ = gen_unitary_circulant(n, src)
    else:
        circ = gen_toeplitz_block(n, n, src, spec.variant).parent
    return circ if l == n else ToeplitzBlock(circ, n, l)


# --------------------------------------------------------------------------
# applying multipliers


def as_dense(h) -> np.ndarray | None:
    if h is None or isinstance(h, np.ndarray):
        return h
    return h.dense()


def right_multiply(a: np.ndarray, h) -> np.ndarray:
    """``a @ h``."""
    if h is None:
        return a
    if isinstance(h, CirculantMatrix):
        return structured.matmul_by_circulant(a, h)
    if isinstance(h, ToeplitzBlock):
        return structured.matmul_by_toeplitz_block(a, h)
    return a @ h


def left_multiply(f, a: np.ndarray) -> np.ndarray:
    """``f @ a``."""
    if f is None:
        return a
    if isinstance(f, CirculantMatrix):
        return structured.circulant_apply(f, a)
    if isinstance(f, ToeplitzBlock):
        if f.cols != f.rows:
            return f.dense() @ a
        return structured.circulant_apply(f.parent, a)
    return f @ a



# --------------------------------------------------------------------------
# exact strong nonsingularity for integer matrices


def leading_minors_exact(a) -> list[int]:
    """All leading principal minors of an integer matrix, computed exactly.

    Fraction-free (Bareiss) elimination without pivoting: after step k the
    pivot equals det of the leading (k+1)-block.  Stops at the first zero
    minor, so a short list means the matrix is not strongly nonsingular.
    """
    m = [[int(x) for x in row] for row in np.asarray(a)]
    n = len(m)
    minors = []
    prev = 1
    for k in range(n):
        piv = m[k][k]
        minors.append(piv)
        if piv == 0:
            break
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * piv - m[i][k] * m[k][j]) // prev
        prev = piv
    return minors


def is_strongly_nonsingular_exact(a) -> bool:
    minors = leading_minors_exact(a)
    return len(minors) == len(a) and minors[-1] != 0


# --------------------------------------------------------------------------
# norm probes


@dataclass(frozen=True)
class RandomNormStats:
    family: MultiplierSpec
    samples: int
    norm: StatRecord
    pinv_norm: StatRecord
    cond: StatRecord
    norms: np.ndarray = field(repr=False)
    pinv_norms: np.ndarray = field(repr=False)
    conds: np.ndarray = field(repr=False)


def probe_norm_stats(spec: MultiplierSpec, trials: int) -> RandomNormStats:
    """Sample ``trials`` multipliers and summarize ``||H||``, ``||H^+||`` and ``kappa(H)``.

    Trial ``t`` draws from the stream ``(spec.seed, t)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if spec.kind is Kind.NONE:
        raise ValueError("the identity multiplier has nothing to probe")
    norms = np.empty(trials)
    pinv = np.empty(trials)
    conds = np.empty(trials)
    for t in range(trials):
        h = as_dense(generate(spec, stream(spec.seed, t)))
        s = singular_values(h)
        norms[t] = s[0]
        pinv[t] = 1.0 / s[-1] if s[-1] > 0 else math.inf
        conds[t] = s[0] * pinv[t]
    return RandomNormStats(
        spec, trials,
        StatRecord.from_values(norms), StatRecord.from_values(pinv),
        StatRecord.from_values(conds), norms, pinv, conds,
    )
