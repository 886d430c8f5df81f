"""Distances, syndrome distance, confinement profiles and low-weight codeword counts.

Low-weight codewords are enumerated by growing connected clusters on the
Tanner graph of ``H``.  A cluster is only ever extended through a variable
adjacent to its lowest-index unsatisfied check, which keeps the branching
factor at the row weight while still reaching every codeword with minimal
support.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numba
import numpy as np

from . import gf2
from .codes import CssCode, GroupSpec, build_css
from .gf2 import BinMatrix, BinPoly, rref_inplace


@dataclass(frozen=True)
class ConfinementProfile:
    entries: tuple[tuple[int, int], ...]

    def weights(self) -> tuple[int, ...]:
        return tuple(s for _, s in self.entries)


@dataclass
class WeightSpectrum:
    counts: dict[int, int] = field(default_factory=dict)

    def __getitem__(self, w: int) -> int:
        return self.counts.get(w, 0)


class BudgetExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# sparse adjacency


def tanner(h: BinMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """CSR adjacency ``(var_ptr, var_chk, chk_ptr, chk_var)`` of the Tanner graph."""
    d = h.dense()
    rows, cols = np.nonzero(d)
    chk_ptr = np.zeros(h.rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=h.rows), out=chk_ptr[1:])
    chk_var = cols.astype(np.int64)
    order = np.lexsort((rows, cols))
    var_ptr = np.zeros(h.cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=h.cols), out=var_ptr[1:])
    var_chk = rows[order].astype(np.int64)
    return var_ptr, var_chk, chk_ptr, chk_var


def _pack_columns(m: BinMatrix) -> np.ndarray:
    """Column ``j`` of ``m`` as packed words (shape ``cols x words``)."""
    return gf2.pack_rows(m.dense().T) if m.rows else np.zeros((m.cols, 1), dtype=np.uint64)


@numba.njit(cache=True)
def popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@numba.njit(cache=True)
def _support_rank(chosen, depth, var_ptr, var_chk, mask):
    """GF(2) rank of ``H[:, chosen[:depth]]``; ``mask`` is scratch zeroed on exit."""
    nt = 0
    touched = np.empty(depth * 64, dtype=np.int64)
    for i in range(depth):
        v = chosen[i]
        for p in range(var_ptr[v], var_ptr[v + 1]):
            c = var_chk[p]
            if mask[c] == 0:
                if nt == touched.shape[0]:
                    bigger = np.empty(2 * nt, dtype=np.int64)
                    bigger[:nt] = touched
                    touched = bigger
                touched[nt] = c
                nt += 1
            mask[c] |= np.uint64(1) << np.uint64(i)
    basis = np.zeros(64, dtype=np.uint64)
    r = 0
    for t in range(nt):
        x = mask[touched[t]]
        mask[touched[t]] = 0
        for b in range(63, -1, -1):
            if not (x >> np.uint64(b)) & np.uint64(1):
                continue
            if basis[b] == 0:
                basis[b] = x
                r += 1
                break
            x ^= basis[b]
    return r


@numba.njit(cache=True)
def _cluster_search(var_ptr, var_chk, chk_ptr, chk_var, kgT, starts, min_index, w_max, collect, out, node_budget):
    """Enumerate zero-syndrome clusters of weight ``<= w_max``.

    ``collect=False``: branch-and-bound for the lightest nontrivial codeword,
    returns ``(best_weight, 0, nodes)``; the support is left in ``out[0]``.
    ``collect=True``: write every nontrivial minimal-support codeword found
    into ``out`` (rows padded with -1) and return ``(0, count, nodes)``;
    ``count`` may exceed ``out.shape[0]``, in which case the caller retries.
    """
    nvar = var_ptr.shape[0] - 1
    nchk = chk_ptr.shape[0] - 1
    nwk = kgT.shape[1]
    maxcolw = 0
    for v in range(nvar):
        maxcolw = max(maxcolw, var_ptr[v + 1] - var_ptr[v])
    synd = np.zeros(nchk, dtype=np.uint8)
    inset = np.zeros(nvar, dtype=np.bool_)
    scratch = np.zeros(nchk, dtype=np.uint64)
    par = np.zeros(nwk, dtype=np.uint64)
    chosen = np.empty(w_max + 1, dtype=np.int64)
    bchk = np.empty(w_max + 2, dtype=np.int64)
    bpos = np.empty(w_max + 2, dtype=np.int64)
    best = w_max + 1
    nout = 0
    nodes = 0
    unsat = 0
    for si in range(starts.shape[0]):
        s = starts[si]
        if nodes > node_budget:
            break
        # add s
        inset[s] = True
        chosen[0] = s
        for p in range(var_ptr[s], var_ptr[s + 1]):
            c = var_chk[p]
            synd[c] ^= 1
            unsat += 1 if synd[c] else -1
        for k in range(nwk):
            par[k] ^= kgT[s, k]
        depth = 1
        need_eval = True
        while depth > 0:
            if need_eval:
                need_eval = False
                nodes += 1
                limit = w_max if collect else best - 1
                leaf = False
                if unsat == 0:
                    leaf = True
                    nontrivial = False
                    for k in range(nwk):
                        if par[k] != 0:
                            nontrivial = True
                    if nontrivial:
                        if collect:
                            if _support_rank(chosen, depth, var_ptr, var_chk, scratch) == depth - 1:
                                if nout < out.shape[0]:
                                    srt = np.sort(chosen[:depth])
                                    for i in range(depth):
                                        out[nout, i] = srt[i]
                                    for i in range(depth, out.shape[1]):
                                        out[nout, i] = -1
                                nout += 1
                        elif depth < best:
                            best = depth
                            for i in range(depth):
                                out[0, i] = chosen[i]
                elif depth >= limit or unsat > maxcolw * (limit - depth) or nodes > node_budget:
                    leaf = True
                if leaf:
                    v = chosen[depth - 1]
                    inset[v] = False
                    for p in range(var_ptr[v], var_ptr[v + 1]):
                        c = var_chk[p]
                        synd[c] ^= 1
                        unsat += 1 if synd[c] else -1
                    for k in range(nwk):
                        par[k] ^= kgT[v, k]
                    depth -= 1
                    continue
                cmin = nchk
                for i in range(depth):
                    v = chosen[i]
                    for p in range(var_ptr[v], var_ptr[v + 1]):
                        c = var_chk[p]
                        if synd[c] and c < cmin:
                            cmin = c
                bchk[depth] = cmin
                bpos[depth] = chk_ptr[cmin]
            c = bchk[depth]
            p = bpos[depth]
            nxt = -1
            while p < chk_ptr[c + 1]:
                v = chk_var[p]
                p += 1
                if not inset[v] and (not min_index or v > s):
                    nxt = v
                    break
            bpos[depth] = p
            if nxt >= 0:
                inset[nxt] = True
                chosen[depth] = nxt
                for q in range(var_ptr[nxt], var_ptr[nxt + 1]):
                    cc = var_chk[q]
                    synd[cc] ^= 1
                    unsat += 1 if synd[cc] else -1
                for k in range(nwk):
                    par[k] ^= kgT[nxt, k]
                depth += 1
                need_eval = True
            else:
                v = chosen[depth - 1]
                inset[v] = False
                for q in range(var_ptr[v], var_ptr[v + 1]):
                    cc = var_chk[q]
                    synd[cc] ^= 1
                    unsat += 1 if synd[cc] else -1
                for k in range(nwk):
                    par[k] ^= kgT[v, k]
                depth -= 1
    return best, nout, nodes


def _check_orthogonal(h: BinMatrix, g: BinMatrix) -> None:
    if g.rows and h.rows and not (h @ g.T).is_zero():
        raise ValueError("H and G are not orthogonal")


def _nontrivial_test(g: BinMatrix) -> np.ndarray:
    """Packed columns of a basis of ``ker G``: ``v`` is outside ``rowspace(G)`` iff some parity is odd."""
    kg = gf2.right_kernel(g) if g.rows else BinMatrix.identity(g.cols)
    return _pack_columns(kg)


def min_distance_exhaustive(
    h: BinMatrix,
    g: BinMatrix,
    w_max: int,
    start_columns: Sequence[int] | None = None,
    node_budget: int = 10**10,
) -> int | None:
    """Minimum weight of ``v`` with ``H v = 0`` and ``v`` outside ``rowspace(G)``.

    Returns None when no such vector of weight ``<= w_max`` exists.  Pass
    ``start_columns`` as orbit representatives when the code is invariant
    under a column permutation group acting transitively on each orbit.
    """
    return _exhaustive(h, g, w_max, start_columns, node_budget)[0]


def _exhaustive(h, g, w_max, start_columns, node_budget):
    _check_orthogonal(h, g)
    if g.cols != h.cols:
        raise ValueError("H and G must have the same number of columns")
    var_ptr, var_chk, chk_ptr, chk_var = tanner(h)
    kgT = _nontrivial_test(g)
    if start_columns is None:
        starts, min_index = np.arange(h.cols, dtype=np.int64), True
    else:
        starts, min_index = np.asarray(start_columns, dtype=np.int64), False
    out = np.full((1, w_max + 1), -1, dtype=np.int64)
    best, _, nodes = _cluster_search(
        var_ptr, var_chk, chk_ptr, chk_var, kgT, starts, min_index, w_max, False, out, node_budget
    )
    if nodes > node_budget:
        raise BudgetExceeded(f"cluster search exceeded {node_budget} nodes")
    if best > w_max:
        return None, None
    return int(best), np.sort(out[0, :best])


def count_irreducible_codewords(
    h: BinMatrix, g: BinMatrix, w_max: int, node_budget: int = 10**11
) -> WeightSpectrum:
    """Count nontrivial codewords of weight ``<= w_max`` whose support contains no smaller codeword."""
    _check_orthogonal(h, g)
    var_ptr, var_chk, chk_ptr, chk_var = tanner(h)
    kgT = _nontrivial_test(g)
    starts = np.arange(h.cols, dtype=np.int64)
    cap = 1 << 16
    while True:
        out = np.empty((cap, w_max), dtype=np.int64)
        _, nout, nodes = _cluster_search(
            var_ptr, var_chk, chk_ptr, chk_var, kgT, starts, True, w_max, True, out, node_budget
        )
        if nodes > node_budget:
            raise BudgetExceeded(f"cluster search exceeded {node_budget} nodes")
        if nout <= cap:
            break
        cap = int(nout * 1.1) + 1
    found = np.unique(out[:nout], axis=0) if nout else out[:0]
    weights = (found >= 0).sum(axis=1)
    counts = {w: 0 for w in range(1, w_max + 1)}
    for w, c in zip(*np.unique(weights, return_counts=True)):
        counts[int(w)] = int(c)
    return WeightSpectrum(counts)


def min_weight_ris(h: BinMatrix, g: BinMatrix, iterations: int, rng, batch: int = 256) -> int | None:
    """Upper bound on the distance from random information sets.

    Each iteration row-reduces a generator matrix of ``ker H`` under a random
    column order and scores the nontrivial rows.  None means no bound found.
    """
    _check_orthogonal(h, g)
    if iterations <= 0:
        return None
    gen = gf2.right_kernel(h)
    if gen.rows == 0:
        return None
    kg = gf2.right_kernel(g) if g.rows else BinMatrix.identity(g.cols)
    best = h.cols + 1
    done = 0
    while done < iterations:
        nb = min(batch, iterations - done)
        perms = np.stack([rng.permutation(h.cols) for _ in range(nb)]).astype(np.int64)
        best = min(best, _ris_batch(gen.words, kg.words, perms, best))
        done += nb
    return None if best > h.cols else int(best)


@numba.njit(cache=True)
def _ris_batch(gen_words, kg_words, perms, best):
    nk = kg_words.shape[0]
    nw = gen_words.shape[1]
    for it in range(perms.shape[0]):
        words = gen_words.copy()
        piv = rref_inplace(words, perms[it])
        for r in range(piv.shape[0]):
            wt = 0
            for k in range(nw):
                wt += popcount64(words[r, k])
            if wt >= best:
                continue
            nontrivial = False
            for q in range(nk):
                acc = np.uint64(0)
                for k in range(nw):
                    acc ^= words[r, k] & kg_words[q, k]
                if popcount64(acc) & np.uint64(1):
                    nontrivial = True
                    break
            if nontrivial:
                best = wt
    return best


# --------------------------------------------------------------------------
# code-level helpers


def orbit_starts(code: CssCode) -> list[int]:
    """One column per block: group translations act transitively on each block."""
    return [0, code.ell]


def code_distance(code: CssCode, w_max: int | None = None) -> int | None:
    """Exact ``d_Z`` by cluster enumeration (uses the full ``H_X``; row removal keeps its kernel)."""
    if code.k == 0:
        return None
    key = ("d", w_max)
    if key not in code._cache:
        w_max = code.n if w_max is None else w_max
        code._cache[key] = min_distance_exhaustive(code.full_hx(), code.hz, w_max, orbit_starts(code))
    return code._cache[key]


def syndrome_distance(code: CssCode) -> int:
    """Distance of the code spanned by the syndromes ``H_X e`` (rows as positions)."""
    hx = code.hx
    meta = gf2.left_kernel(hx)
    colw = hx.col_weights()
    bound = int(colw[colw > 0].min()) if colw.any() else 1
    empty = BinMatrix.zeros(0, hx.rows)
    d = min_distance_exhaustive(meta, empty, bound)
    assert d is not None and d <= bound
    return d


def _column_ints(m: BinMatrix) -> list[int]:
    return [int("".join(map(str, col[::-1])), 2) if col.any() else 0 for col in m.dense().T]


def confinement_profile(code: CssCode, t_max: int = 3) -> ConfinementProfile:
    """Minimum syndrome weight over errors of irreducible weight ``t`` for ``t <= t_max``.

    The irreducible weight of ``e`` is the minimum weight in ``e + rowspace(H_Z)``;
    a weight-``t`` error counts when no lighter error is stabilizer-equivalent.
    """
    if t_max > 3:
        raise BudgetExceeded("exhaustive confinement profile is limited to t <= 3")
    synd = _column_ints(code.hx)
    # K v = 0 exactly for v in rowspace(H_Z), so K e labels the stabilizer coset of e.
    coset = _column_ints(gf2.right_kernel(code.hz))
    n = code.n
    lighter: set[int] = {0}
    entries = []
    for t in range(1, t_max + 1):
        best = None
        level: set[int] = set()
        for combo in itertools.combinations(range(n), t):
            key = 0
            for j in combo:
                key ^= coset[j]
            level.add(key)
            if key in lighter:
                continue
            s = 0
            for j in combo:
                s ^= synd[j]
            wt = bin(s).count("1")
            if best is None or wt < best:
                best = wt
        lighter |= level
        if best is None:
            break
        entries.append((t, best))
    return ConfinementProfile(tuple(entries))


# --------------------------------------------------------------------------
# code search


def _canonical(group: GroupSpec, a: BinPoly, b: BinPoly) -> tuple:
    """Canonical key under translation, inversion, generator swap and ``a <-> b``."""
    nx, ny = group.nx, group.ny

    def translates(p: BinPoly, maps) -> tuple:
        best = None
        for f in maps:
            img = [f(ex, ey) for ex, ey in p.terms]
            for ox, oy in img:
                key = tuple(sorted(((ex - ox) % nx, (ey - oy) % ny) for ex, ey in img))
                if best is None or key < best:
                    best = key
        return best

    maps = [lambda ex, ey: (ex, ey), lambda ex, ey: (-ex, -ey)]
    if nx == ny:
        maps += [lambda ex, ey: (ey, ex), lambda ex, ey: (-ey, -ex)]
    keys = []
    for f in maps:
        ka = translates(a, [f])
        kb = translates(b, [f])
        keys.append(min((ka, kb), (kb, ka)))
    return min(keys)


def _weight_polys(group: GroupSpec, w: int) -> list[BinPoly]:
    elems = [(ex, ey) for ex in range(group.nx) for ey in range(group.ny)]
    return [BinPoly(((0, 0),) + combo) for combo in itertools.combinations(elems[1:], w - 1)]


def _fast_k(group: GroupSpec, a: BinPoly, b: BinPoly) -> int:
    if group.is_cyclic:
        h = gf2.poly_gcd([a, b, BinPoly(((0, 0), (group.nx, 0)))])
        return 2 * h.degree
    from .codes import group_matrix

    hx = gf2.hstack([group_matrix(a, group), group_matrix(b, group)])
    return hx.cols - 2 * gf2.rank(hx)


def search_codes(
    groups: Iterable[GroupSpec],
    wa: int = 3,
    wb: int = 3,
    d_min: int = 3,
    ds_required: int | None = 3,
    d_cap: int = 12,
) -> list[tuple[str, int, int, int, int]]:
    """Exhaustive search; one representative per distinct ``(n, k, d, d_S)``.

    Polynomials are normalised to contain the identity (translation), and
    pairs equivalent under inversion, generator swap or ``a <-> b`` are
    skipped.  Distances above ``d_cap`` are not resolved and such codes are
    dropped.
    """
    from .codes import format_code_spec

    results: dict[tuple[int, int, int, int], str] = {}
    for group in groups:
        polys_a = _weight_polys(group, wa)
        polys_b = polys_a if wb == wa else _weight_polys(group, wb)
        seen: set = set()
        for a in polys_a:
            for b in polys_b:
                key = _canonical(group, a, b)
                if key in seen:
                    continue
                seen.add(key)
                k = _fast_k(group, a, b)
                if k == 0:
                    continue
                code = build_css(group, a, b)
                ds = syndrome_distance(code)
                if ds_required is not None and ds != ds_required:
                    continue
                d = code_distance(code, w_max=d_cap)
                if d is None or d < d_min:
                    continue
                params = (code.n, code.k, d, ds)
                if params not in results:
                    results[params] = format_code_spec(group, code.a, code.b)
    return sorted(((spec, *params) for params, spec in results.items()), key=lambda r: r[1:])

