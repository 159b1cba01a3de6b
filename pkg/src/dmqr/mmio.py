"""MatrixMarket file exchange (real general, array and coordinate formats).

The parser is deliberately strict: anything outside the small accepted grammar
raises MatrixMarketError pointing at the offending line.  Values are written
with 17 significant digits so a write-read round trip is bit exact.
"""

from __future__ import annotations

import os

import numpy as np

from .matrix import dense

__all__ = ["MatrixMarketError", "read_matrix_market", "write_matrix_market"]

_BANNER = "%%matrixmarket"
_MAX_ENTRIES = 2**31


class MatrixMarketError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def _parse_dims(path, lineno, parts, want: int):
    if len(parts) != want:
        raise MatrixMarketError(path, lineno, f"expected {want} integers, got {parts!r}")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise MatrixMarketError(path, lineno, f"non-integer size field in {parts!r}") from None
    if any(v < 0 for v in vals):
        raise MatrixMarketError(path, lineno, "negative size field")
    return vals


def read_matrix_market(path) -> np.ndarray:
    """Read a real general MatrixMarket file into a dense column-major matrix.

    Coordinate entries are scattered into zeros; array entries are consumed in
    column-major order as the format prescribes.
    """
    with open(path, "r") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    header = lines[0].strip().split()
    if len(header) != 5 or header[0].lower() != _BANNER:
        raise MatrixMarketError(path, 1, f"malformed header: {lines[0].strip()!r}")
    obj, fmt, field, symmetry = (tok.lower() for tok in header[1:])
    if obj != "matrix":
        raise MatrixMarketError(path, 1, f"unsupported object {obj!r}")
    if fmt not in ("array", "coordinate"):
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r}")
    if field != "real":
        raise MatrixMarketError(path, 1, f"non-real field {field!r}")
    if symmetry != "general":
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [
        (i + 1, ln.strip())
        for i, ln in enumerate(lines[1:], start=1)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError(path, len(lines), "missing size line")
    size_lineno, size_line = body[0]
    entries = body[1:]

    if fmt == "array":
        m, n = _parse_dims(path, size_lineno, size_line.split(), 2)
        if m * n > _MAX_ENTRIES:
            raise MatrixMarketError(path, size_lineno, f"dimension overflow: {m} x {n}")
        if len(entries) != m * n:
            raise MatrixMarketError(
                path, size_lineno, f"expected {m * n} values, found {len(entries)}"
            )
        out = np.zeros((m, n), order="F")
        flat = out.reshape(-1, order="F")
        for pos, (lineno, text) in enumerate(entries):
            try:
                flat[pos] = float(text)
            except ValueError:
                raise MatrixMarketError(path, lineno, f"bad real value {text!r}") from None
        return dense(out)

    m, n, nnz = _parse_dims(path, size_lineno, size_line.split(), 3)
    if m * n > _MAX_ENTRIES:
        raise MatrixMarketError(path, size_lineno, f"dimension overflow: {m} x {n}")
    if len(entries) != nnz:
        raise MatrixMarketError(
            path, size_lineno, f"expected {nnz} entries, found {len(entries)}"
        )
    out = np.zeros((m, n), order="F")
    for lineno, text in entries:
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, f"expected 'i j value', got {text!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, lineno, f"bad coordinate entry {text!r}") from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(path, lineno, f"index ({i}, {j}) outside {m} x {n}")
        out[i - 1, j - 1] = v
    return dense(out)


def write_matrix_market(path, A, fmt: str = "array") -> None:
    """Write a dense matrix as MatrixMarket real general, array or coordinate."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("only 2-d matrices can be written")
    if fmt not in ("array", "coordinate"):
        raise ValueError(f"unsupported format {fmt!r}")
    m, n = A.shape
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        if fmt == "array":
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{m} {n}\n")
            for j in range(n):
                for i in range(m):
                    fh.write(f"{A[i, j]:.16e}\n")
        else:
            nz = np.nonzero(A.T)  # transpose so entries come out column-major
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{m} {n} {len(nz[0])}\n")
            for j, i in zip(*nz):
                fh.write(f"{i + 1} {j + 1} {A[i, j]:.16e}\n")
    os.replace(tmp, path)
