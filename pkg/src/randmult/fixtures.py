"""Plain-text fixture formats.

Matrix: a header ``rows cols field`` (``field`` is ``real`` or ``complex``)
followed by whitespace-separated entries in row-major order; complex entries
are written ``re+imj``.

Circulant: a header ``circulant n field`` followed by the first column.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .structured import CirculantMatrix

FIELDS = ("real", "complex")


def _fmt_real(x) -> str:
    return repr(float(x))


def _fmt_complex(z) -> str:
    im = float(z.imag)
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{float(z.real)!r}{sign}{abs(im)!r}j"


def _entries(values, field_name):
    fmt = _fmt_complex if field_name == "complex" else _fmt_real
    return [fmt(v) for v in values]


def _parse_entries(tokens, field_name, count):
    if len(tokens) != count:
        raise ValueError(f"expected {count} entries, found {len(tokens)}")
    if field_name == "complex":
        return np.array([complex(t) for t in tokens], dtype=np.complex128)
    return np.array([float(t) for t in tokens], dtype=np.float64)


def _field_of(a) -> str:
    return "complex" if np.iscomplexobj(a) else "real"


def dumps_matrix(a) -> str:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError("matrix fixtures hold 2-d arrays")
    kind = _field_of(a)
    lines = [f"{a.shape[0]} {a.shape[1]} {kind}"]
    lines += [" ".join(_entries(row, kind)) for row in a]
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> np.ndarray:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("matrix fixture needs a 'rows cols field' header")
    rows, cols, kind = int(tokens[0]), int(tokens[1]), tokens[2]
    if kind not in FIELDS or rows < 1 or cols < 1:
        raise ValueError(f"bad matrix header {' '.join(tokens[:3])!r}")
    return _parse_entries(tokens[3:], kind, rows * cols).reshape(rows, cols)


def dumps_circulant(c: CirculantMatrix) -> str:
    kind = _field_of(c.first_column)
    return f"circulant {c.n} {kind}\n" + " ".join(_entries(c.first_column, kind)) + "\n"


def loads_circulant(text: str) -> CirculantMatrix:
    tokens = text.split()
    if len(tokens) < 3 or tokens[0] != "circulant":
        raise ValueError("circulant fixture needs a 'circulant n field' header")
    n, kind = int(tokens[1]), tokens[2]
    if kind not in FIELDS or n < 1:
        raise ValueError(f"bad circulant header {' '.join(tokens[:3])!r}")
    return CirculantMatrix(_parse_entries(tokens[3:], kind, n))


def load(path):
    """Read either fixture kind; circulants are returned as :class:`CirculantMatrix`."""
    text = Path(path).read_text()
    if text.lstrip().startswith("circulant"):
        return loads_circulant(text)
    return loads_matrix(text)


def save_matrix(path, a) -> None:
    Path(path).write_text(dumps_matrix(a))
