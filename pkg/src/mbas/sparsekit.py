"""Sparse kernels: CSR storage, products, CG, SPD factorization, Matrix-Market I/O.

Complex vectors are plain ``numpy`` complex arrays; a real operator acts on
them componentwise (real and imaginary parts separately).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from mbas.errors import ConvergenceError, DimensionError, NotPositiveDefiniteError

__all__ = [
    "CsrMatrix",
    "SpdFactor",
    "cg_solve",
    "frob_norm",
    "read_matrix_market",
    "read_vector",
    "spd_factorize",
    "spd_solve",
    "spmv",
    "spmv_complex",
    "write_matrix_market",
    "write_vector",
]


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Real sparse matrix in compressed-sparse-row form.

    Column indices are strictly increasing inside each row. Instances are
    treated as immutable; the arrays are flagged read-only on construction.
    """

    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        col_idx = np.asarray(self.col_idx, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if row_ptr.shape != (self.nrows + 1,):
            raise DimensionError("row_ptr must have length nrows + 1")
        if row_ptr[0] != 0 or np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must start at 0 and be nondecreasing")
        nnz = int(row_ptr[-1])
        if col_idx.shape != (nnz,) or values.shape != (nnz,):
            raise DimensionError("col_idx/values length must equal row_ptr[-1]")
        if nnz and (col_idx.min() < 0 or col_idx.max() >= self.ncols):
            raise ValueError("column index out of range")
        # strictly increasing columns within each row
        if nnz > 1:
            step = np.diff(col_idx)
            row_start = np.zeros(nnz, dtype=bool)
            row_start[row_ptr[:-1][row_ptr[:-1] < nnz]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within rows")
        for arr in (row_ptr, col_idx, values):
            arr.setflags(write=False)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_scipy(cls, a) -> "CsrMatrix":
        a = sp.csr_matrix(a, dtype=np.float64)
        a.sum_duplicates()
        a.sort_indices()
        return cls(a.shape[0], a.shape[1], a.indptr.copy(), a.indices.copy(), a.data.copy())

    @classmethod
    def from_dense(cls, a) -> "CsrMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    @classmethod
    def identity(cls, n: int) -> "CsrMatrix":
        return cls.from_scipy(sp.identity(n, format="csr"))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @cached_property
    def scipy(self) -> sp.csr_matrix:
        """Read-only scipy view sharing this matrix's arrays."""
        return sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.scipy.toarray()

    def diagonal(self) -> np.ndarray:
        return self.scipy.diagonal()

    def row_sums(self) -> np.ndarray:
        return np.add.reduceat(self.values, self.row_ptr[:-1]) if self.nnz else np.zeros(self.nrows)

    def pattern_equals(self, other: "CsrMatrix") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
        )

    def is_symmetric(self, tol: float = 0.0) -> bool:
        """True when (i, j) is stored iff (j, i) is, with values equal up to ``tol``."""
        if self.nrows != self.ncols:
            return False
        t = CsrMatrix.from_scipy(self.scipy.T)
        if not self.pattern_equals(t):
            return False
        return bool(np.all(np.abs(self.values - t.values) <= tol * np.abs(self.values).max(initial=0.0)))

    def linear_combination(self, a: float, other: "CsrMatrix", b: float) -> "CsrMatrix":
        """Return ``a*self + b*other``."""
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        return CsrMatrix.from_scipy(a * self.scipy + b * other.scipy)

    def shifted(self, shift: float, scale: float = 1.0) -> "CsrMatrix":
        """Return ``shift*I + scale*self``."""
        return CsrMatrix.from_scipy(shift * sp.identity(self.nrows, format="csr") + scale * self.scipy)


def spmv(a: CsrMatrix, x) -> np.ndarray:
    """Real product ``a @ x``; ``x`` may be a vector or a stack of columns."""
    x = np.asarray(x)
    if x.shape[0] != a.ncols:
        raise DimensionError(f"matrix has {a.ncols} columns, vector has {x.shape[0]} rows")
    if np.iscomplexobj(x):
        raise TypeError("spmv takes a real vector; use spmv_complex")
    return a.scipy @ x


def spmv_complex(a: CsrMatrix, x) -> np.ndarray:
    """Apply the real matrix ``a`` to the real and imaginary parts of ``x``."""
    x = np.asarray(x)
    if x.shape[0] != a.ncols:
        raise DimensionError(f"matrix has {a.ncols} columns, vector has {x.shape[0]} rows")
    if not np.iscomplexobj(x):
        return (a.scipy @ x).astype(np.complex128)
    return (a.scipy @ x.real) + 1j * (a.scipy @ x.imag)


def frob_norm(a: CsrMatrix) -> float:
    return float(np.sqrt(np.sum(a.values * a.values)))


def cg_solve(a: CsrMatrix, b, tol: float = 1e-12, maxit: int | None = None, x0=None):
    """Conjugate gradients for SPD ``a``.

    Returns ``(x, iterations)``. Stops when ``||b - a x|| <= tol ||b||``;
    raises :class:`ConvergenceError` if that does not happen within ``maxit``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (a.nrows,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({a.nrows},)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if maxit is None:
        maxit = max(10 * a.nrows, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    A = a.scipy
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - A @ x
    p = r.copy()
    rr = r @ r
    target = (tol * bnorm) ** 2
    for it in range(1, maxit + 1):
        if rr <= target:
            # recursive residual can drift from the true one at tight tol
            r = b - A @ x
            rr = r @ r
            if rr <= target:
                return x, it - 1
            p = r.copy()
        ap = A @ p
        pap = p @ ap
        if pap <= 0.0:
            raise NotPositiveDefiniteError("CG met a direction with non-positive curvature")
        step = rr / pap
        x += step * p
        r -= step * ap
        rr_new = r @ r
        p *= rr_new / rr
        p += r
        rr = rr_new
    res = np.linalg.norm(b - A @ x) / bnorm
    if res <= tol:
        return x, maxit
    raise ConvergenceError(f"CG did not converge in {maxit} iterations", residual=res, iterations=maxit)


class SpdFactor:
    """Sparse factorization of an SPD matrix under a fill-reducing symmetric ordering.

    Backed by SuperLU with diagonal pivoting only and a minimum-degree ordering
    of ``A + A^T``; with no off-diagonal pivoting the U diagonal holds the
    LDL^T pivots, which is how positive definiteness is verified.
    """

    def __init__(self, a: CsrMatrix):
        if a.nrows != a.ncols:
            raise DimensionError("matrix must be square")
        self.n = a.nrows
        try:
            lu = splu(
                a.scipy.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise NotPositiveDefiniteError(f"factorization failed: {exc}") from exc
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise NotPositiveDefiniteError("factorization needed off-diagonal pivoting")
        pivots = lu.U.diagonal()
        if not np.all(pivots > 0):
            raise NotPositiveDefiniteError(f"non-positive pivot {pivots.min():.3e}")
        self._lu = lu
        self.perm = lu.perm_c

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise DimensionError(f"right-hand side has {b.shape[0]} rows, expected {self.n}")
        if np.iscomplexobj(b):
            return self._lu.solve(np.ascontiguousarray(b.real)) + 1j * self._lu.solve(
                np.ascontiguousarray(b.imag)
            )
        return self._lu.solve(np.asarray(b, dtype=np.float64))


def spd_factorize(a: CsrMatrix) -> SpdFactor:
    return SpdFactor(a)


def spd_solve(f: SpdFactor, b) -> np.ndarray:
    return f.solve(b)


def write_matrix_market(path, a: CsrMatrix, symmetric: bool | None = None, comment: str = "") -> None:
    """Write ``a`` in coordinate format (1-based indices, full double precision)."""
    if symmetric is None:
        symmetric = a.is_symmetric()
    scipy.io.mmwrite(
        str(path), a.scipy.tocoo(), comment=comment, field="real",
        symmetry="symmetric" if symmetric else "general", precision=17,
    )


def read_matrix_market(path) -> CsrMatrix:
    m = scipy.io.mmread(str(path))
    if np.iscomplexobj(m.data if sp.issparse(m) else m):
        raise ValueError("complex Matrix-Market files are not supported")
    return CsrMatrix.from_scipy(sp.csr_matrix(m))


def write_vector(path, v) -> None:
    """One entry per line; ``.csv`` suffix writes ``re,im`` columns for complex data."""
    v = np.asarray(v)
    path = Path(path)
    if np.iscomplexobj(v):
        np.savetxt(path, np.column_stack([v.real, v.imag]), fmt="%.17g", delimiter=",")
    elif path.suffix == ".csv":
        np.savetxt(path, v.reshape(-1, 1), fmt="%.17g", delimiter=",")
    else:
        np.savetxt(path, v, fmt="%.17g")


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    data = np.loadtxt(path, delimiter="," if "," in first else None, ndmin=1)
    if data.ndim == 2 and data.shape[1] == 2:
        return data[:, 0] + 1j * data[:, 1]
    return data.reshape(-1)
