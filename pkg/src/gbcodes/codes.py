"""Two-block (GB / abelian 2BGA) CSS codes built from a pair of polynomials."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import gf2
from .gf2 import BinMatrix, BinPoly


class CodeSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GroupSpec:
    """Abelian group ``C_nx x C_ny``; ``ny == 1`` is the cyclic group ``C_nx``."""

    nx: int
    ny: int = 1

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise CodeSpecError(f"generator orders must be >= 1, got ({self.nx}, {self.ny})")

    @property
    def order(self) -> int:
        return self.nx * self.ny

    @property
    def is_cyclic(self) -> bool:
        return self.ny == 1

    def index(self, ex: int, ey: int) -> int:
        return (ex % self.nx) * self.ny + (ey % self.ny)

    def element(self, idx: int) -> tuple[int, int]:
        return divmod(idx, self.ny)


# The three circulant codes studied in the phenomenological simulations.
PRESETS: dict[str, str] = {
    "GB15": "group = 15 1\na = (0)(6)(13)\nb = (0)(1)(4)\n",
    "GB31": "group = 31 1\na = (0)(1)(12)\nb = (0)(3)(8)\n",
    "GB63": "group = 63 1\na = (0)(7)(8)\nb = (0)(37)(43)\n",
}

_MONO = re.compile(r"\(\s*(-?\d+)\s*(?:,\s*(-?\d+)\s*)?\)")


def _parse_poly(text: str, group: GroupSpec) -> BinPoly:
    body = text.replace(" ", "")
    if not body:
        raise CodeSpecError("empty polynomial")
    pos, terms = 0, []
    for m in _MONO.finditer(body):
        if m.start() != pos:
            raise CodeSpecError(f"malformed monomial list: {text!r}")
        pos = m.end()
        terms.append((int(m.group(1)) % group.nx, int(m.group(2) or 0) % group.ny))
    if pos != len(body):
        raise CodeSpecError(f"malformed monomial list: {text!r}")
    poly = BinPoly(tuple(terms))
    if poly.is_zero():
        raise CodeSpecError(f"polynomial {text!r} is zero")
    return poly


def parse_code_spec(text: str) -> tuple[GroupSpec, BinPoly, BinPoly]:
    """Parse a ``group = / a = / b =`` code description.

    Exponents are reduced modulo the generator orders.
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in ("group", "a", "b"):
            raise CodeSpecError(f"line {lineno}: expected 'group|a|b = ...', got {raw!r}")
        if key in fields:
            raise CodeSpecError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = value.strip()
    missing = {"group", "a", "b"} - fields.keys()
    if missing:
        raise CodeSpecError(f"missing keys: {sorted(missing)}")
    try:
        orders = [int(v) for v in fields["group"].split()]
    except ValueError:
        raise CodeSpecError(f"bad group line {fields['group']!r}") from None
    if len(orders) == 1:
        orders.append(1)
    if len(orders) != 2:
        raise CodeSpecError("group needs one or two generator orders")
    group = GroupSpec(*orders)
    return group, _parse_poly(fields["a"], group), _parse_poly(fields["b"], group)


def load_code_spec(source: str | Path) -> tuple[GroupSpec, BinPoly, BinPoly]:
    """Parse a spec file path or one of the preset names (``GB15`` ...)."""
    key = str(source)
    if key.upper() in PRESETS:
        return parse_code_spec(PRESETS[key.upper()])
    return parse_code_spec(Path(source).read_text())


def format_code_spec(group: GroupSpec, a: BinPoly, b: BinPoly) -> str:
    def fmt(p: BinPoly) -> str:
        if group.is_cyclic:
            return "".join(f"({ex})" for ex, _ in p.terms)
        return "".join(f"({ex},{ey})" for ex, ey in p.terms)

    return f"group = {group.nx} {group.ny}\na = {fmt(a)}\nb = {fmt(b)}\n"


def group_matrix(p: BinPoly, group: GroupSpec) -> BinMatrix:
    """``p(P_X, P_Y)`` with ``P_X = P_nx (x) I_ny`` and ``P_Y = I_nx (x) P_ny``."""
    ell = group.order
    dense = np.zeros((ell, ell), dtype=np.uint8)
    rows = np.arange(ell)
    gx, gy = np.divmod(rows, group.ny)
    for ex, ey in p.reduce(group.nx, group.ny).terms:
        cols = ((gx + ex) % group.nx) * group.ny + (gy + ey) % group.ny
        dense[rows, cols] ^= 1
    return BinMatrix.from_dense(dense)


@dataclass(frozen=True, eq=False)
class CssCode:
    group: GroupSpec
    a: BinPoly
    b: BinPoly
    hx: BinMatrix
    hz: BinMatrix
    lx: BinMatrix
    lz: BinMatrix
    k: int
    rows_removed: int = 0
    removed_rows: tuple[int, ...] = ()
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ell(self) -> int:
        return self.group.order

    @property
    def n(self) -> int:
        return 2 * self.ell

    @property
    def kappa(self) -> int:
        return self.k // 2

    @property
    def wa(self) -> int:
        return self.a.weight

    @property
    def wb(self) -> int:
        return self.b.weight

    def full_hx(self) -> BinMatrix:
        """``H_X`` with every row present, regardless of removals."""
        return hstack_blocks(group_matrix(self.a, self.group), group_matrix(self.b, self.group))

    def __repr__(self) -> str:
        tag = f", m={self.rows_removed}" if self.rows_removed else ""
        return f"CssCode({self.name or self.group}, [[{self.n},{self.k}]]{tag})"


def hstack_blocks(a: BinMatrix, b: BinMatrix) -> BinMatrix:
    return gf2.hstack([a, b])


def build_css(group: GroupSpec, a: BinPoly, b: BinPoly, name: str = "") -> CssCode:
    if a.is_zero() or b.is_zero():
        raise CodeSpecError("polynomials must be nonzero")
    A = group_matrix(a, group)
    B = group_matrix(b, group)
    if A @ B != B @ A:
        raise AssertionError("block matrices do not commute")
    hx = gf2.hstack([A, B])
    hz = gf2.hstack([B.T, A.T])
    k = hx.cols - 2 * gf2.rank(hx)
    lx, lz = _logicals(hx, hz, k)
    return CssCode(group, a.reduce(group.nx, group.ny), b.reduce(group.nx, group.ny), hx, hz, lx, lz, k, name=name)


def code_from_spec(source: str | Path, name: str | None = None) -> CssCode:
    group, a, b = load_code_spec(source)
    if name is None:
        key = str(source)
        name = key.upper() if key.upper() in PRESETS else Path(key).stem
    return build_css(group, a, b, name=name)


def _complement(basis_of: BinMatrix, candidates: BinMatrix) -> BinMatrix:
    """Rows from ``candidates`` (reduced) extending the row space of ``basis_of``."""
    stacked = gf2.vstack([basis_of, candidates])
    words = np.array(stacked.words, copy=True)
    base_rank = gf2.rank(basis_of)
    # Eliminate the H rows first so that surviving candidate rows are the complement.
    head = words[: basis_of.rows]
    piv = gf2.rref_inplace(head, np.arange(stacked.cols, dtype=np.int64))
    assert len(piv) == base_rank
    basis_w = head[:base_rank].copy()
    basis_p = list(piv)
    picked = []
    for row in words[basis_of.rows :]:
        v = row.copy()
        for i, j in enumerate(basis_p):
            if (v[j >> 6] >> np.uint64(j & 63)) & np.uint64(1):
                v ^= basis_w[i]
        if not v.any():
            continue
        lead = _lowest_bit(v)
        for i in range(len(basis_w)):
            if (basis_w[i][lead >> 6] >> np.uint64(lead & 63)) & np.uint64(1):
                basis_w[i] ^= v
        basis_w = np.vstack([basis_w, v[None, :]])
        basis_p.append(lead)
        picked.append(v)
    if not picked:
        return gf2.BinMatrix.zeros(0, stacked.cols)
    return BinMatrix(np.array(picked), stacked.cols)


def _lowest_bit(v: np.ndarray) -> int:
    for w, word in enumerate(v):
        if word:
            word = int(word)
            return w * 64 + (word & -word).bit_length() - 1
    raise ValueError("zero vector")


def _logicals(hx: BinMatrix, hz: BinMatrix, k: int) -> tuple[BinMatrix, BinMatrix]:
    if k == 0:
        return BinMatrix.zeros(0, hx.cols), BinMatrix.zeros(0, hx.cols)
    lx = _complement(hx, gf2.right_kernel(hz))
    lz = _complement(hz, gf2.right_kernel(hx))
    if lx.rows != k or lz.rows != k:
        raise AssertionError(f"expected {k} logical generators, got {lx.rows}/{lz.rows}")
    return lx, lz


def logical_generators(code: CssCode) -> tuple[BinMatrix, BinMatrix]:
    """``(L_X, L_Z)``: ``L_X H_Z^T = 0``, ``L_Z H_X^T = 0``, ``rank(L_X L_Z^T) = k``."""
    return code.lx, code.lz


def dimension(code: CssCode) -> int:
    """Code dimension from ranks, cross-checked against ``2 deg gcd(a, b, x^l - 1)`` when cyclic."""
    k = code.n - gf2.rank(code.full_hx()) - gf2.rank(code.hz)
    if code.group.is_cyclic:
        h = h_poly(code)
        if 2 * h.degree != k:
            raise AssertionError(f"rank gives k={k}, gcd gives k={2 * h.degree}")
    return k


def h_poly(code: CssCode) -> BinPoly:
    if not code.group.is_cyclic:
        raise ValueError("h(x) is defined for cyclic groups only")
    ell = code.ell
    return gf2.poly_gcd([code.a, code.b, BinPoly(((0, 0), (ell, 0)))])


def metacheck_matrices(code: CssCode) -> tuple[BinMatrix, BinMatrix]:
    """``(M_X, M_Z)`` with ``M_X H_X = 0`` and ``M_Z H_Z = 0``.

    For cyclic groups with all rows present this is ``g(P)`` with
    ``g = (x^l - 1) / h``; otherwise a left-kernel basis.
    """
    if code.kappa == 0 and code.rows_removed == 0:
        return BinMatrix.zeros(0, code.hx.rows), BinMatrix.zeros(0, code.hz.rows)
    if code.group.is_cyclic and code.rows_removed == 0:
        ell = code.ell
        g, rem = gf2.pdivmod((1 << ell) | 1, h_poly(code).to_int())
        assert rem == 0
        mx = gf2.circulant(BinPoly.from_int(g), ell)
        return mx, mx.T
    return gf2.left_kernel(code.hx), gf2.left_kernel(code.hz)


def drop_redundant_rows(code: CssCode, m: int) -> CssCode:
    """Remove ``m`` redundant rows of ``H_X``, highest index first, never lowering the rank."""
    if m < 0 or m > code.kappa - code.rows_removed:
        raise ValueError(f"can remove at most kappa={code.kappa} rows, asked for {m}")
    if m == 0:
        return code
    target = gf2.rank(code.hx)
    keep = list(range(code.hx.rows))
    removed = []
    for idx in range(code.hx.rows - 1, -1, -1):
        if len(removed) == m:
            break
        trial = [i for i in keep if i != idx]
        if gf2.rank(code.hx.take_rows(trial)) == target:
            keep = trial
            removed.append(idx)
    if len(removed) != m:
        raise ValueError(f"only {len(removed)} rows removable without lowering rank")
    orig = _original_row_ids(code)
    return replace(
        code,
        hx=code.hx.take_rows(keep),
        rows_removed=code.rows_removed + m,
        removed_rows=tuple(sorted(code.removed_rows + tuple(orig[i] for i in removed))),
        _cache={},
    )


def _original_row_ids(code: CssCode) -> list[int]:
    gone = set(code.removed_rows)
    return [i for i in range(code.ell) if i not in gone]
