"""Compressed sparse row matrices and the few kernels the model needs.

Kernels parallelize over output rows only and reduce each row in storage
order, so results are bitwise identical for any thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "CsrMatrix",
    "from_triplets",
    "from_dense",
    "spmm",
    "spmm_transpose",
    "normalize_symmetric",
    "write_matrix_market",
    "read_matrix_market",
]


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Immutable CSR matrix in canonical form (sorted, unique, no explicit zeros)."""

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        rows, cols = self.shape
        if rows < 0 or cols < 0:
            raise ValueError(f"invalid shape {self.shape}")
        for name in ("indptr", "indices", "data"):
            getattr(self, name).setflags(write=False)
        if len(self.indptr) != rows + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("malformed indptr")
        if len(self.indices) != len(self.data):
            raise ValueError("indices and data lengths differ")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("malformed indptr")
        if self.nnz:
            if self.indices.min() < 0 or self.indices.max() >= cols:
                raise ValueError("column index out of bounds")
            # within a row columns must strictly increase; row starts are exempt
            step = np.diff(self.indices) > 0
            starts = self.indptr[1:-1]
            step[starts[(starts > 0) & (starts < self.nnz)] - 1] = True
            if not np.all(step):
                raise ValueError("column indices not strictly increasing within a row")
            if np.any(self.data == 0.0):
                raise ValueError("explicit zero stored")

    @property
    def nnz(self) -> int:
        return len(self.data)

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_ids(), self.indices] = self.data
        return out

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.row_ids(), self.indices.copy(), self.data.copy()

    def transpose(self) -> CsrMatrix:
        rows = self.row_ids()
        order = np.lexsort((rows, self.indices))
        counts = np.bincount(self.indices, minlength=self.cols)
        indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        return CsrMatrix(
            (self.cols, self.rows), indptr, rows[order].copy(), self.data[order].copy()
        )

    @property
    def T(self) -> CsrMatrix:
        return self.transpose()

    def row_sums(self) -> np.ndarray:
        return _row_sums(self.indptr, self.data)

    def diagonal(self) -> np.ndarray:
        n = min(self.shape)
        out = np.zeros(n)
        rows = self.row_ids()
        on_diag = (rows == self.indices) & (rows < n)
        out[rows[on_diag]] = self.data[on_diag]
        return out

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        t = self.transpose()
        return (
            np.array_equal(self.indptr, t.indptr)
            and np.array_equal(self.indices, t.indices)
            and np.array_equal(self.data, t.data)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


def from_triplets(rows, cols, values, shape: tuple[int, int]) -> CsrMatrix:
    """Assemble a canonical CSR matrix; duplicate coordinates are summed, zeros dropped."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=np.float64).ravel()
    n_rows, n_cols = int(shape[0]), int(shape[1])
    if not (len(rows) == len(cols) == len(values)):
        raise ValueError("triplet arrays must have equal length")
    if len(rows) and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError(f"triplet index out of bounds for shape {shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite value in triplets")

    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    if len(rows):
        new = np.empty(len(rows), dtype=bool)
        new[0] = True
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        values = np.add.reduceat(values, starts) if len(starts) < len(values) else values
        rows, cols = rows[starts], cols[starts]
        keep = values != 0.0
        rows, cols, values = rows[keep], cols[keep], values[keep]
    counts = np.bincount(rows, minlength=n_rows)
    indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return CsrMatrix((n_rows, n_cols), indptr, cols.copy(), values.copy())


def from_dense(a) -> CsrMatrix:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    r, c = np.nonzero(a)
    return from_triplets(r, c, a[r, c], a.shape)


@numba.njit(cache=True)
def _row_sums(indptr, data):
    n = len(indptr) - 1
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p]
        out[i] = s
    return out


@numba.njit(parallel=True, cache=True)
def _spmm_kernel(indptr, indices, data, b, out):
    n_rows = len(indptr) - 1
    k = b.shape[1]
    for i in numba.prange(n_rows):
        for p in range(indptr[i], indptr[i + 1]):
            v = data[p]
            j = indices[p]
            for c in range(k):
                out[i, c] += v * b[j, c]


def _as_dense(b) -> np.ndarray:
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.ndim != 2:
        raise ValueError(f"dense operand must be 2-D, got shape {b.shape}")
    return b


def spmm(a: CsrMatrix, b) -> np.ndarray:
    """Sparse-dense product ``a @ b``."""
    b = _as_dense(b)
    if a.cols != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = np.zeros((a.rows, b.shape[1]))
    _spmm_kernel(a.indptr, a.indices, a.data, b, out)
    return out


def spmm_transpose(a: CsrMatrix, b, symmetric: bool = False) -> np.ndarray:
    """Compute ``a.T @ b``.

    With ``symmetric=True`` the caller asserts ``a == a.T`` and the product is
    taken directly without materializing the transpose.
    """
    b = _as_dense(b)
    if a.rows != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape}.T @ {b.shape}")
    if symmetric:
        if a.rows != a.cols:
            raise ValueError("symmetric shortcut requires a square matrix")
        return spmm(a, b)
    return spmm(a.transpose(), b)


def normalize_symmetric(a: CsrMatrix) -> CsrMatrix:
    """Return ``D^-1/2 A D^-1/2`` with ``D`` the diagonal of row sums."""
    if a.rows != a.cols:
        raise ValueError(f"normalization needs a square matrix, got {a.shape}")
    deg = a.row_sums()
    bad = np.flatnonzero(~(deg > 0.0))
    if len(bad):
        raise ValueError(f"row {int(bad[0])} has non-positive degree {deg[bad[0]]!r}")
    rows = a.row_ids()
    # one product per entry keeps (i, j) and (j, i) bitwise equal
    values = a.data / np.sqrt(deg[rows] * deg[a.indices])
    return CsrMatrix(a.shape, a.indptr.copy(), a.indices.copy(), values)


def write_matrix_market(path: str | Path, a: CsrMatrix, symmetric: bool | None = None) -> None:
    """Write ``a`` in Matrix Market coordinate real format.

    Symmetric matrices are stored as their lower triangle.  Values are written
    with 17 significant digits so a read-back is lossless.
    """
    if symmetric is None:
        symmetric = a.is_symmetric()
    elif symmetric and not a.is_symmetric():
        raise ValueError("matrix is not symmetric")
    rows, cols, vals = a.triplets()
    if symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        # lower triangle in column-major order, as the format expects
        order = np.lexsort((rows, cols))
        rows, cols, vals = rows[order], cols[order], vals[order]
    kind = "symmetric" if symmetric else "general"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        fh.write(f"{a.rows} {a.cols} {len(vals)}\n")
        fh.writelines(f"{r + 1} {c + 1} {v:.17g}\n" for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()))


def read_matrix_market(path: str | Path) -> CsrMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0].lower() != "%%matrixmarket":
            raise ValueError(f"{path}: not a Matrix Market file")
        obj, fmt, field_, sym = (h.lower() for h in header[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise ValueError(f"{path}: only coordinate matrices are supported")
        if field_ not in ("real", "integer", "double"):
            raise ValueError(f"{path}: unsupported field {field_!r}")
        if sym not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry {sym!r}")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            if not line:
                raise ValueError(f"{path}: missing size line")
            line = fh.readline()
        n_rows, n_cols, nnz = (int(x) for x in line.split())
        body = np.loadtxt(fh, ndmin=2, comments="%") if nnz else np.zeros((0, 3))
    if len(body) != nnz:
        raise ValueError(f"{path}: expected {nnz} entries, found {len(body)}")
    rows = body[:, 0].astype(np.int64) - 1
    cols = body[:, 1].astype(np.int64) - 1
    vals = body[:, 2]
    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate((rows, cols[off])),
            np.concatenate((cols, rows[off])),
            np.concatenate((vals, vals[off])),
        )
    return from_triplets(rows, cols, vals, (n_rows, n_cols))
