"""Bit-packed linear algebra and polynomial arithmetic over GF(2).

Matrices are stored row-major, 64 columns per ``uint64`` word, bit ``j % 64`` of
word ``j // 64`` holding column ``j``.  Unused high bits of the last word are
always zero.  Univariate polynomials are handled internally as Python ints
(bit ``i`` is the coefficient of ``x**i``).
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np

WORD = 64
MAX_ENTRIES = 1 << 31


def _nwords(cols: int) -> int:
    return max(1, (cols + WORD - 1) // WORD)


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 2D 0/1 array into rows of little-endian uint64 words."""
    dense = np.asarray(dense, dtype=np.uint8) & 1
    if dense.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {dense.shape}")
    r, c = dense.shape
    nw = _nwords(c)
    padded = np.zeros((r, nw * WORD), dtype=np.uint8)
    padded[:, :c] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(r, nw)


def unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    r = words.shape[0]
    if r == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words.astype("<u8")).view(np.uint8).reshape(r, -1)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols].copy()


class BinMatrix:
    """Immutable GF(2) matrix with bit-packed rows."""

    __slots__ = ("rows", "cols", "words", "__dict__")

    def __init__(self, words: np.ndarray, cols: int):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != _nwords(cols):
            raise ValueError("word array does not match column count")
        tail = cols % WORD
        if tail and words.shape[0] and np.any(words[:, -1] >> np.uint64(tail)):
            raise ValueError("bits set beyond the last column")
        words.setflags(write=False)
        self.rows = words.shape[0]
        self.cols = cols
        self.words = words

    @classmethod
    def from_dense(cls, dense) -> BinMatrix:
        dense = np.asarray(dense)
        if dense.ndim == 1:
            dense = dense.reshape(1, -1)
        if dense.ndim != 2:
            raise ValueError("expected a 2D array")
        if dense.size > MAX_ENTRIES:
            raise OverflowError(f"{dense.shape} exceeds storage limit")
        return cls(pack_rows(dense), dense.shape[1])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BinMatrix:
        return cls(np.zeros((rows, _nwords(cols)), dtype=np.uint64), cols)

    @classmethod
    def identity(cls, n: int) -> BinMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @cached_property
    def _dense(self) -> np.ndarray:
        d = unpack_rows(self.words, self.cols)
        d.setflags(write=False)
        return d

    def dense(self) -> np.ndarray:
        """Read-only uint8 view of the entries."""
        return self._dense

    def toarray(self) -> np.ndarray:
        return self._dense.copy()

    @property
    def T(self) -> BinMatrix:
        return BinMatrix.from_dense(self._dense.T)

    def transpose(self) -> BinMatrix:
        return self.T

    def __matmul__(self, other: BinMatrix) -> BinMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        prod = self._dense.astype(np.float64) @ other._dense.astype(np.float64)
        return BinMatrix.from_dense((prod.astype(np.int64) & 1).astype(np.uint8))

    def __add__(self, other: BinMatrix) -> BinMatrix:
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return BinMatrix(self.words ^ other.words, self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BinMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    @property
    def nnz(self) -> int:
        return int(self._dense.sum())

    def is_zero(self) -> bool:
        return not self.words.any()

    def row(self, i: int) -> np.ndarray:
        return self._dense[i]

    def take_rows(self, idx: Sequence[int]) -> BinMatrix:
        return BinMatrix(self.words[np.asarray(idx, dtype=np.intp)], self.cols)

    def take_cols(self, idx: Sequence[int]) -> BinMatrix:
        return BinMatrix.from_dense(self._dense[:, np.asarray(idx, dtype=np.intp)])

    def row_weights(self) -> np.ndarray:
        return self._dense.sum(axis=1)

    def col_weights(self) -> np.ndarray:
        return self._dense.sum(axis=0)

    def mul_vec(self, v) -> np.ndarray:
        """Return ``self @ v`` over GF(2) for a vector or a batch of column vectors."""
        v = np.asarray(v, dtype=np.uint8)
        return ((self._dense.astype(np.float64) @ v.astype(np.float64)).astype(np.int64) & 1).astype(
            np.uint8
        )


def hstack(mats: Sequence[BinMatrix]) -> BinMatrix:
    return BinMatrix.from_dense(np.hstack([m.dense() for m in mats]))


def vstack(mats: Sequence[BinMatrix]) -> BinMatrix:
    cols = {m.cols for m in mats}
    if len(cols) != 1:
        raise ValueError("column counts differ")
    return BinMatrix(np.vstack([m.words for m in mats]), cols.pop())


def kron(a: BinMatrix, b: BinMatrix) -> BinMatrix:
    rows, cols = a.rows * b.rows, a.cols * b.cols
    if rows * cols > MAX_ENTRIES:
        raise OverflowError(f"kron result {rows}x{cols} exceeds storage limit")
    return BinMatrix.from_dense(np.kron(a.dense(), b.dense()).astype(np.uint8))


# --------------------------------------------------------------------------
# elimination kernels


@numba.njit(cache=True)
def _getbit(words, r, j):
    return (words[r, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


@numba.njit(cache=True)
def rref_inplace(words, col_order):
    """Reduce packed ``words`` to reduced row-echelon form in place.

    Pivots are searched column by column in ``col_order``; within a column the
    first row at or below the current pivot row is used.  Returns the pivot
    column of each of the first ``rank`` rows.
    """
    nrows, nw = words.shape
    pivots = np.empty(min(nrows, col_order.shape[0]), dtype=np.int64)
    prow = 0
    for jj in range(col_order.shape[0]):
        if prow == nrows:
            break
        j = col_order[jj]
        w = j >> 6
        mask = np.uint64(1) << np.uint64(j & 63)
        found = -1
        for r in range(prow, nrows):
            if words[r, w] & mask:
                found = r
                break
        if found < 0:
            continue
        if found != prow:
            for k in range(nw):
                tmp = words[prow, k]
                words[prow, k] = words[found, k]
                words[found, k] = tmp
        for r in range(nrows):
            if r != prow and (words[r, w] & mask):
                for k in range(nw):
                    words[r, k] ^= words[prow, k]
        pivots[prow] = j
        prow += 1
    return pivots[:prow]


def rref(m: BinMatrix, col_order=None) -> tuple[np.ndarray, np.ndarray]:
    """Return (reduced packed rows, pivot columns)."""
    words = np.array(m.words, dtype=np.uint64, copy=True)
    order = np.arange(m.cols, dtype=np.int64) if col_order is None else np.asarray(col_order, np.int64)
    piv = rref_inplace(words, order)
    return words, piv


def rank(m: BinMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(rref(m)[1])


def right_kernel(m: BinMatrix) -> BinMatrix:
    """Basis (as rows) of ``{x : m @ x = 0}``."""
    if m.rows == 0:
        return BinMatrix.identity(m.cols)
    words, piv = rref(m)
    r = len(piv)
    reduced = unpack_rows(words[:r], m.cols)
    free = np.setdiff1d(np.arange(m.cols), piv)
    basis = np.zeros((len(free), m.cols), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        basis[t, piv] = reduced[:, f]
    return BinMatrix.from_dense(basis) if len(free) else BinMatrix.zeros(0, m.cols)


def left_kernel(m: BinMatrix) -> BinMatrix:
    """Basis (as rows) of ``{v : v @ m = 0}``."""
    return right_kernel(m.T)


def rank_and_kernels(m: BinMatrix) -> tuple[int, BinMatrix, BinMatrix]:
    return rank(m), right_kernel(m), left_kernel(m)


def row_basis(m: BinMatrix) -> BinMatrix:
    """Reduced row-echelon basis of the row space."""
    words, piv = rref(m)
    return BinMatrix(words[: len(piv)], m.cols)


def in_rowspace(basis_words: np.ndarray, basis_pivots: np.ndarray, v: np.ndarray) -> bool:
    """Test membership of a packed vector against an RREF basis."""
    v = v.copy()
    for i, j in enumerate(basis_pivots):
        if (v[j >> 6] >> np.uint64(j & 63)) & np.uint64(1):
            v ^= basis_words[i]
    return not v.any()


def solve(m: BinMatrix, rhs) -> np.ndarray | None:
    """One solution ``x`` of ``m @ x = rhs`` (free variables zero), or None."""
    aug = np.hstack([m.dense(), np.asarray(rhs, dtype=np.uint8).reshape(-1, 1)])
    words = pack_rows(aug)
    piv = rref_inplace(words, np.arange(m.cols, dtype=np.int64))
    red = unpack_rows(words, m.cols + 1)
    if red[len(piv):, -1].any():
        return None
    x = np.zeros(m.cols, dtype=np.uint8)
    x[piv] = red[: len(piv), -1]
    return x


# --------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class BinPoly:
    """Binary polynomial in up to two variables as a sorted tuple of exponents."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen: set[tuple[int, int]] = set()
        for t in self.terms:
            if t in seen:
                seen.discard(t)  # coefficients live in GF(2)
            else:
                seen.add(t)
        if any(e < 0 for t in seen for e in t):
            raise ValueError("negative exponent")
        object.__setattr__(self, "terms", tuple(sorted(seen)))

    @classmethod
    def from_exponents(cls, exps: Iterable) -> BinPoly:
        terms = []
        for e in exps:
            if isinstance(e, (int, np.integer)):
                terms.append((int(e), 0))
            else:
                e = tuple(int(v) for v in e)
                terms.append(e if len(e) == 2 else (e[0], 0))
        return cls(tuple(terms))

    @classmethod
    def from_int(cls, bits: int) -> BinPoly:
        return cls(tuple((i, 0) for i in range(bits.bit_length()) if bits >> i & 1))

    @property
    def weight(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_univariate(self) -> bool:
        return all(ey == 0 for _, ey in self.terms)

    def reduce(self, nx: int, ny: int = 1) -> BinPoly:
        return BinPoly(tuple((ex % nx, ey % ny) for ex, ey in self.terms))

    def to_int(self) -> int:
        if not self.is_univariate():
            raise ValueError("polynomial is not univariate")
        v = 0
        for ex, _ in self.terms:
            v ^= 1 << ex
        return v

    @property
    def degree(self) -> int:
        return self.to_int().bit_length() - 1

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for ex, ey in self.terms:
            s = ""
            if ex:
                s += "x" if ex == 1 else f"x^{ex}"
            if ey:
                s += "y" if ey == 1 else f"y^{ey}"
            parts.append(s or "1")
        return "+".join(parts)


def pmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def pdivmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("polynomial division by zero")
    q = 0
    db = b.bit_length()
    while a and a.bit_length() >= db:
        s = a.bit_length() - db
        q ^= 1 << s
        a ^= b << s
    return q, a


def pgcd(a: int, b: int) -> int:
    while b:
        a, b = b, pdivmod(a, b)[1]
    return a


def poly_gcd(ps: Sequence[BinPoly]) -> BinPoly:
    """Greatest common divisor of univariate binary polynomials."""
    g = 0
    for p in ps:
        g = pgcd(g, p.to_int())
    if g == 0:
        raise ValueError("gcd of zero polynomials is undefined")
    return BinPoly.from_int(g)


def cyclic_mulmod(a: int, b: int, ell: int) -> int:
    """Product of ``a`` and ``b`` modulo ``x**ell - 1``."""
    prod = pmul(a, b)
    mask = (1 << ell) - 1
    out = 0
    while prod:
        out ^= prod & mask
        prod >>= ell
    return out


def permutation_matrix(ell: int) -> BinMatrix:
    return circulant(BinPoly(((1, 0),)), ell)


def circulant(p: BinPoly, ell: int) -> BinMatrix:
    """``p(P)`` for the ``ell``-cycle ``P``: row ``i`` has ones at ``(i + e) % ell``."""
    if ell <= 0:
        raise ValueError("circulant size must be positive")
    if not p.is_univariate():
        raise ValueError("circulant expects a univariate polynomial")
    dense = np.zeros((ell, ell), dtype=np.uint8)
    rows = np.arange(ell)
    for ex, _ in p.reduce(ell).terms:
        dense[rows, (rows + ex) % ell] ^= 1
    return BinMatrix.from_dense(dense)
