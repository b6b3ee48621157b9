"""Sparse exact matrices with formal-scalar entries.

Entries are :class:`~qjacobi.ncalg.Scalar` values, so matrices may carry
formal constants (powers of ``ipi``) and all linear algebra stays exact.
Storage is a dict of row dicts; the tensor operators built from Lie
structure constants are extremely sparse, which keeps products on the
512-dimensional triple tensor spaces cheap.

Index convention for Kronecker products is row-major: basis vector
i (x) j of a product space sits at position i * dim2 + j.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .ncalg import Scalar, ScalarLike

__all__ = ["MatrixError", "SparseMatrix", "kron", "minimal_polynomial"]


class MatrixError(ValueError):
    """Shape mismatch, singularity, or entries outside the rationals
    where plain rationals are required."""


class SparseMatrix:
    """An immutable exact matrix; zero entries are never stored."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, entries: Iterable[tuple[int, int, ScalarLike]] = ()):
        if rows < 1 or cols < 1:
            raise MatrixError("matrix dimensions must be positive")
        self.rows = rows
        self.cols = cols
        data: dict[int, dict[int, Scalar]] = {}
        for i, j, value in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise MatrixError(f"entry ({i}, {j}) outside {rows}x{cols}")
            scal = Scalar.coerce(value)
            if scal.is_zero:
                continue
            row = data.setdefault(i, {})
            merged = row.get(j, Scalar.zero()) + scal
            if merged.is_zero:
                row.pop(j, None)
            else:
                row[j] = merged
        self._data = {i: row for i, row in data.items() if row}

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[ScalarLike]]) -> "SparseMatrix":
        nrows = len(rows)
        ncols = len(rows[0])
        entries = []
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise MatrixError("ragged rows")
            entries.extend((i, j, v) for j, v in enumerate(row))
        return cls(nrows, ncols, entries)

    def entry(self, i: int, j: int) -> Scalar:
        return self._data.get(i, {}).get(j, Scalar.zero())

    def items(self):
        for i, row in self._data.items():
            for j, value in row.items():
                yield i, j, value

    @property
    def is_zero(self) -> bool:
        return not self._data

    def nnz(self) -> int:
        return sum(len(row) for row in self._data.values())

    def _same_shape(self, other: "SparseMatrix"):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise MatrixError(f"shape mismatch {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __add__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        self._same_shape(other)
        out = SparseMatrix(self.rows, self.cols)
        data = {i: dict(row) for i, row in self._data.items()}
        for i, j, value in other.items():
            row = data.setdefault(i, {})
            merged = row.get(j, Scalar.zero()) + value
            if merged.is_zero:
                row.pop(j, None)
            else:
                row[j] = merged
        out._data = {i: row for i, row in data.items() if row}
        return out

    def __sub__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        out = SparseMatrix(self.rows, self.cols)
        out._data = {i: {j: -v for j, v in row.items()} for i, row in self._data.items()}
        return out

    def scale(self, factor: ScalarLike) -> "SparseMatrix":
        factor = Scalar.coerce(factor)
        out = SparseMatrix(self.rows, self.cols)
        if factor.is_zero:
            return out
        out._data = {i: {j: v * factor for j, v in row.items()} for i, row in self._data.items()}
        return out

    def __mul__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            return self.scale(other)
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise MatrixError(f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        out = SparseMatrix(self.rows, other.cols)
        data: dict[int, dict[int, Scalar]] = {}
        for i, row in self._data.items():
            acc: dict[int, Scalar] = {}
            for k, a in row.items():
                brow = other._data.get(k)
                if not brow:
                    continue
                for j, b in brow.items():
                    merged = acc.get(j, Scalar.zero()) + a * b
                    if merged.is_zero:
                        acc.pop(j, None)
                    else:
                        acc[j] = merged
            if acc:
                data[i] = acc
        out._data = data
        return out

    def __rmul__(self, other):
        if isinstance(other, (Scalar, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def transpose(self) -> "SparseMatrix":
        out = SparseMatrix(self.cols, self.rows)
        data: dict[int, dict[int, Scalar]] = {}
        for i, j, value in self.items():
            data.setdefault(j, {})[i] = value
        out._data = data
        return out

    def trace(self) -> Scalar:
        if self.rows != self.cols:
            raise MatrixError("trace of a non-square matrix")
        total = Scalar.zero()
        for i, row in self._data.items():
            total = total + row.get(i, Scalar.zero())
        return total

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self._data == other._data

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(sorted((i, j, v) for i, j, v in self.items()))))

    def first_difference(self, other: "SparseMatrix"):
        """Smallest (row, col, here, there) where the matrices differ."""
        self._same_shape(other)
        spots = {(i, j) for i, j, _ in self.items()} | {(i, j) for i, j, _ in other.items()}
        for i, j in sorted(spots):
            a, b = self.entry(i, j), other.entry(i, j)
            if a != b:
                return (i, j, a, b)
        return None

    # Ring protocol used by hseries coefficients.
    def ring_one(self) -> "SparseMatrix":
        if self.rows != self.cols:
            raise MatrixError("identity exists only for square matrices")
        return SparseMatrix.identity(self.rows)

    def ring_zero(self) -> "SparseMatrix":
        return SparseMatrix.zeros(self.rows, self.cols)

    def to_dense(self) -> list[list[Scalar]]:
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": [[self.entry(i, j).to_text() for j in range(self.cols)] for i in range(self.rows)],
        }

    def to_text(self) -> str:
        rows = [
            "[" + ", ".join(self.entry(i, j).to_text() for j in range(self.cols)) + "]"
            for i in range(self.rows)
        ]
        return "[" + "; ".join(rows) + "]"

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    def _fraction_rows(self) -> dict[int, dict[int, Fraction]]:
        try:
            return {i: {j: v.as_fraction() for j, v in row.items()} for i, row in self._data.items()}
        except Exception as exc:
            raise MatrixError("exact elimination needs plain rational entries") from exc

    def rank(self) -> int:
        """Exact rank over the rationals (entries must be constant-free)."""
        data = [dict(row) for row in self._fraction_rows().values()]
        rank = 0
        for col_rows in _eliminate(data):
            rank += 1
        return rank

    def inverse(self) -> "SparseMatrix":
        """Exact inverse of a square rational matrix."""
        if self.rows != self.cols:
            raise MatrixError("inverse of a non-square matrix")
        n = self.rows
        frac = self._fraction_rows()
        dense = [[frac.get(i, {}).get(j, Fraction(0)) for j in range(n)] for i in range(n)]
        aug = [dense[i] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if aug[r][col]), None)
            if pivot is None:
                raise MatrixError("matrix is singular")
            aug[col], aug[pivot] = aug[pivot], aug[col]
            factor = aug[col][col]
            aug[col] = [x / factor for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col]:
                    f = aug[r][col]
                    aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
        return SparseMatrix(n, n, [(i, j, aug[i][n + j]) for i in range(n) for j in range(n)])


def _eliminate(rows: list[dict[int, Fraction]]):
    """Destructive sparse Gaussian elimination; yields one pivot per rank."""
    rows = [row for row in rows if row]
    while rows:
        pivot_row = min(rows, key=lambda row: min(row))
        rows.remove(pivot_row)
        col = min(pivot_row)
        pivot = pivot_row[col]
        yield col
        reduced = []
        for row in rows:
            if col in row:
                f = row[col] / pivot
                merged = dict(row)
                for j, v in pivot_row.items():
                    next_v = merged.get(j, Fraction(0)) - f * v
                    if next_v:
                        merged[j] = next_v
                    else:
                        merged.pop(j, None)
                row = merged
            if row:
                reduced.append(row)
        rows = reduced


def kron(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Kronecker product with row-major index convention."""
    out = SparseMatrix(a.rows * b.rows, a.cols * b.cols)
    data: dict[int, dict[int, Scalar]] = {}
    for i, k, va in a.items():
        for j, l, vb in b.items():
            data.setdefault(i * b.rows + j, {})[k * b.cols + l] = va * vb
    out._data = data
    return out


def minimal_polynomial(matrix: SparseMatrix) -> list[Fraction]:
    """Monic minimal polynomial coefficients (constant term first).

    Found by Krylov iteration on the flattened powers of the matrix: the
    first linear dependence among 1, M, M^2, ... gives the polynomial.
    """
    if matrix.rows != matrix.cols:
        raise MatrixError("minimal polynomial of a non-square matrix")
    n = matrix.rows
    frac_rows = matrix._fraction_rows()

    def flatten(mat: dict[int, dict[int, Fraction]]) -> dict[int, Fraction]:
        return {i * n + j: v for i, row in mat.items() for j, v in row.items() if v}

    def matmul(mat: dict[int, dict[int, Fraction]]) -> dict[int, dict[int, Fraction]]:
        out: dict[int, dict[int, Fraction]] = {}
        for i, row in mat.items():
            acc: dict[int, Fraction] = {}
            for k, a in row.items():
                for j, b in frac_rows.get(k, {}).items():
                    v = acc.get(j, Fraction(0)) + a * b
                    if v:
                        acc[j] = v
                    else:
                        acc.pop(j, None)
            if acc:
                out[i] = acc
        return out

    basis: list[tuple[dict[int, Fraction], list[Fraction]]] = []
    power = {i: {i: Fraction(1)} for i in range(n)}
    k = 0
    while True:
        vec = flatten(power)
        comb = [Fraction(0)] * (k + 1)
        comb[k] = Fraction(1)
        for bvec, bcomb in basis:
            lead = min(bvec)
            if vec.get(lead):
                f = vec[lead] / bvec[lead]
                for j, v in bvec.items():
                    nv = vec.get(j, Fraction(0)) - f * v
                    if nv:
                        vec[j] = nv
                    else:
                        vec.pop(j, None)
                for j, c in enumerate(bcomb):
                    comb[j] -= f * c
        if not vec:
            lead = comb[k]
            return [c / lead for c in comb]
        basis.append((vec, comb))
        power = matmul(power)
        k += 1
        if k > n:
            raise MatrixError("minimal polynomial search exceeded the dimension")
