"""Syndrome decoding: cluster predecoder, serial belief propagation, OSD and RIS.

All decoders solve ``H e = s`` over GF(2) and prefer low energy
``E(e) = sum_i e_i * llr_i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numba
import numpy as np

from . import gf2
from .analysis import tanner
from .gf2 import BinMatrix, rref_inplace

PRIOR_FLOOR = 1e-12
LLR_MODES = ("instantaneous", "averaged", "both")
TIE_BREAKS = ("index", "random")
JITTER = 1e-6
STAGES = ("predecoder", "bp", "osd", "ris")


class InconsistentSyndrome(ValueError):
    """The syndrome is not in the column space of the check matrix."""


@dataclass(frozen=True, eq=False)
class Channel:
    priors: np.ndarray
    llrs: np.ndarray

    @classmethod
    def from_priors(cls, priors) -> Channel:
        # priors of exactly 0 or 1 are pulled inside the open interval so the LLRs stay finite
        p = np.clip(np.asarray(priors, dtype=np.float64), PRIOR_FLOOR, 1.0 - PRIOR_FLOOR)
        p.setflags(write=False)
        llr = np.log1p(-p) - np.log(p)
        llr.setflags(write=False)
        return cls(p, llr)

    @classmethod
    def from_llrs(cls, llrs) -> Channel:
        llr = np.asarray(llrs, dtype=np.float64)
        return cls.from_priors(0.5 * (1.0 - np.tanh(0.5 * llr)))

    @classmethod
    def uniform(cls, n: int, p: float) -> Channel:
        return cls.from_priors(np.full(n, p))

    def __len__(self) -> int:
        return len(self.priors)

    def restrict(self, cols) -> Channel:
        return Channel.from_priors(self.priors[np.asarray(cols)])


@dataclass(frozen=True)
class DecoderConfig:
    bp_max_iters: int = 50
    llr_mode: str = "both"
    avg_window: int = 5
    osd_level: int = 1
    predecoder_weight: int = 1
    ris_iters: int = 0
    clamp: float = 25.0
    seed: int = 0
    tie_break: str = "index"

    def __post_init__(self):
        if self.bp_max_iters < 1:
            raise ValueError("bp_max_iters must be at least 1")
        if self.avg_window < 1:
            raise ValueError("averaging window must be at least 1")
        if self.llr_mode not in LLR_MODES:
            raise ValueError(f"llr_mode must be one of {LLR_MODES}")
        if self.osd_level not in (0, 1):
            raise ValueError("osd_level must be 0 or 1")
        if not 0 <= self.predecoder_weight <= 2:
            raise ValueError("predecoder_weight must be 0, 1 or 2")
        if self.ris_iters < 0:
            raise ValueError("ris_iters must be non-negative")
        if not self.clamp > 0:
            raise ValueError("clamp must be positive")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")

    @property
    def ident(self) -> str:
        """Short identifier used in simulation output."""
        s = f"pre{self.predecoder_weight}-bp{self.bp_max_iters}{self.llr_mode[0]}-osd{self.osd_level}"
        s += f"-ris{self.ris_iters}" if self.ris_iters else ""
        return s + ("-rt" if self.tie_break == "random" else "")


@dataclass
class DecodeOutcome:
    estimate: np.ndarray
    converged: bool
    stage: str
    energy: float
    iterations: int = 0
    soft: np.ndarray | None = field(default=None, repr=False)


def energy(e, ch: Channel | np.ndarray) -> float:
    llrs = ch.llrs if isinstance(ch, Channel) else np.asarray(ch, dtype=np.float64)
    e = np.asarray(e)
    if e.shape[-1] != llrs.shape[0]:
        raise ValueError("error and channel lengths differ")
    return float(np.asarray(e, dtype=np.float64) @ llrs)


# --------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _syndrome_ok(est, syn, chk_ptr, chk_var):
    for c in range(chk_ptr.shape[0] - 1):
        par = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            par ^= est[chk_var[e]]
        if par != syn[c]:
            return False
    return True


@numba.njit(cache=True)
def _bp_serial(chk_ptr, chk_var, edge_chk, var_ptr, var_edge, llr, syn, max_iter, mode, window, clamp, sched):
    """Sum-product BP with a serial schedule over variable nodes.

    ``mode``: 0 instantaneous posteriors, 1 averaged over the last ``window``
    iterations, 2 accept whichever of the two satisfies the syndrome first.
    Variables are updated in the order given by ``sched``.
    Returns ``(hard decision, converged, iterations, soft posteriors)``.
    """
    n = llr.shape[0]
    nedge = chk_var.shape[0]
    m_vc = np.empty(nedge)
    t_vc = np.empty(nedge)
    m_cv = np.zeros(nedge)
    for e in range(nedge):
        m_vc[e] = llr[chk_var[e]]
        t_vc[e] = np.tanh(0.5 * m_vc[e])
    post = llr.copy()
    hist = np.zeros((window, n))
    avg = llr.copy()
    est = np.zeros(n, dtype=np.uint8)
    lim = 1.0 - 1e-15
    for it in range(max_iter):
        for vv in range(n):
            v = sched[vv]
            total = llr[v]
            for p in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[p]
                c = edge_chk[e]
                prod = 1.0
                for e2 in range(chk_ptr[c], chk_ptr[c + 1]):
                    if e2 != e:
                        prod *= t_vc[e2]
                if prod > lim:
                    prod = lim
                elif prod < -lim:
                    prod = -lim
                val = 2.0 * np.arctanh(prod)
                if syn[c]:
                    val = -val
                if val > clamp:
                    val = clamp
                elif val < -clamp:
                    val = -clamp
                m_cv[e] = val
                total += val
            for p in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[p]
                msg = total - m_cv[e]
                if msg > clamp:
                    msg = clamp
                elif msg < -clamp:
                    msg = -clamp
                m_vc[e] = msg
                t_vc[e] = np.tanh(0.5 * msg)
            post[v] = total
        slot = it % window
        hist[slot, :] = post
        cnt = min(it + 1, window)
        for v in range(n):
            s = 0.0
            for w in range(cnt):
                s += hist[w, v]
            avg[v] = s / cnt
        if mode != 1:
            for v in range(n):
                est[v] = 1 if post[v] < 0 else 0
            if _syndrome_ok(est, syn, chk_ptr, chk_var):
                return est, True, it + 1, post
        if mode != 0:
            for v in range(n):
                est[v] = 1 if avg[v] < 0 else 0
            if _syndrome_ok(est, syn, chk_ptr, chk_var):
                return est, True, it + 1, avg
    soft = post if mode == 0 else avg
    for v in range(n):
        est[v] = 1 if soft[v] < 0 else 0
    return est, False, max_iter, soft


@numba.njit(cache=True)
def _eliminate(template, ncols, syn, order):
    """Copy ``template``, write ``syn`` into column ``ncols`` and row-reduce."""
    words = template.copy()
    wsyn = ncols >> 6
    bsyn = np.uint64(1) << np.uint64(ncols & 63)
    for r in range(words.shape[0]):
        if syn[r]:
            words[r, wsyn] |= bsyn
    piv = rref_inplace(words, order)
    ok = True
    for r in range(piv.shape[0], words.shape[0]):
        if words[r, wsyn] & bsyn:
            ok = False
    return words, piv, ok


@numba.njit(cache=True)
def _osd_solve(template, ncols, syn, order, llr, level):
    words, piv, ok = _eliminate(template, ncols, syn, order)
    est = np.zeros(ncols, dtype=np.uint8)
    if not ok:
        return est, False
    wsyn = ncols >> 6
    bsyn = np.uint64(1) << np.uint64(ncols & 63)
    rank = piv.shape[0]
    s = np.zeros(rank, dtype=np.uint8)
    for i in range(rank):
        if words[i, wsyn] & bsyn:
            s[i] = 1
            est[piv[i]] = 1
    if level == 0:
        return est, True
    is_piv = np.zeros(ncols, dtype=np.uint8)
    for i in range(rank):
        is_piv[piv[i]] = 1
    # flipping non-pivot j toggles every pivot bit in column j of the reduced rows
    best_j = -1
    best_delta = 0.0
    for jj in range(order.shape[0]):
        j = order[jj]
        if is_piv[j]:
            continue
        delta = llr[j]
        wj = j >> 6
        bj = np.uint64(1) << np.uint64(j & 63)
        for i in range(rank):
            if words[i, wj] & bj:
                if s[i]:
                    delta -= llr[piv[i]]
                else:
                    delta += llr[piv[i]]
        if delta < best_delta:
            best_delta = delta
            best_j = j
    if best_j >= 0:
        wj = best_j >> 6
        bj = np.uint64(1) << np.uint64(best_j & 63)
        est[best_j] = 1
        for i in range(rank):
            if words[i, wj] & bj:
                est[piv[i]] ^= 1
    return est, True


@numba.njit(cache=True)
def _ris_search(template, ncols, syn, perms, llr):
    best = np.zeros(ncols, dtype=np.uint8)
    best_e = np.inf
    for t in range(perms.shape[0]):
        est, ok = _osd_solve(template, ncols, syn, perms[t], llr, 0)
        if not ok:
            return best, False
        en = 0.0
        for j in range(ncols):
            if est[j]:
                en += llr[j]
        if en < best_e:
            best_e = en
            best = est
    return best, True


# --------------------------------------------------------------------------
# predecoder lookup


@dataclass(frozen=True, eq=False)
class ClusterLUT:
    """Map from a connected syndrome pattern to its lowest-energy small error."""

    weight: int
    table: dict
    check_nbrs: tuple


def _check_neighbours(h: BinMatrix) -> tuple:
    d = h.dense().astype(np.int64)
    adj = (d @ d.T) > 0
    np.fill_diagonal(adj, False)
    return tuple(np.flatnonzero(row) for row in adj)


def build_lut(h: BinMatrix, ch: Channel | None = None, weight: int = 1) -> ClusterLUT:
    """Lookup of the syndromes of all connected errors of weight ``<= weight``."""
    if weight > 2:
        raise ValueError("lookup depth above 2 is not supported")
    llr = np.zeros(h.cols) if ch is None else ch.llrs
    var_ptr, var_chk, chk_ptr, chk_var = tanner(h)
    table: dict[tuple, tuple[float, tuple[int, ...]]] = {}

    def offer(key, cols):
        if not key:
            return
        en = float(sum(llr[j] for j in cols))
        old = table.get(key)
        if old is None or en < old[0]:
            table[key] = (en, cols)

    supports = [frozenset(var_chk[var_ptr[j] : var_ptr[j + 1]].tolist()) for j in range(h.cols)]
    if weight >= 1:
        for j in range(h.cols):
            offer(tuple(sorted(supports[j])), (j,))
    if weight >= 2:
        for c in range(h.rows):
            vs = chk_var[chk_ptr[c] : chk_ptr[c + 1]]
            for a in range(len(vs)):
                for b in range(a + 1, len(vs)):
                    i, j = int(vs[a]), int(vs[b])
                    offer(tuple(sorted(supports[i] ^ supports[j])), (i, j))
    return ClusterLUT(weight, {k: v[1] for k, v in table.items()}, _check_neighbours(h))


def _clusters(lit: np.ndarray, nbrs: tuple) -> list[list[int]]:
    on = set(lit.tolist())
    out = []
    while on:
        seed = on.pop()
        comp = [seed]
        queue = deque([seed])
        while queue:
            c = queue.popleft()
            for x in nbrs[c]:
                x = int(x)
                if x in on:
                    on.remove(x)
                    comp.append(x)
                    queue.append(x)
        out.append(sorted(comp))
    return out


def cluster_predecode(h: BinMatrix, syn, lut: ClusterLUT) -> np.ndarray | None:
    """Match each connected cluster of lit checks against ``lut``; None if any misses."""
    syn = np.asarray(syn, dtype=np.uint8)
    if syn.shape[0] != h.rows:
        raise ValueError("syndrome length does not match check count")
    est = np.zeros(h.cols, dtype=np.uint8)
    lit = np.flatnonzero(syn)
    if len(lit) == 0:
        return est
    if lut.weight == 0:
        return None
    for comp in _clusters(lit, lut.check_nbrs):
        cols = lut.table.get(tuple(comp))
        if cols is None:
            return None
        est[list(cols)] ^= 1
    return est


# --------------------------------------------------------------------------
# decoder object


class Decoder:
    """Reusable pipeline for a fixed check matrix and channel.

    Stages: cluster lookup, serial BP, then OSD (and RIS when enabled) on BP
    failure.  Every returned estimate reproduces the syndrome.  With the
    default ``tie_break="index"`` each call is a pure function of the
    syndrome; with ``"random"`` the decoder owns a stream seeded by
    ``cfg.seed``, so a sequence of calls is reproducible but repeated calls
    on the same syndrome may return different equal-energy errors.
    """

    def __init__(self, h: BinMatrix, ch: Channel, cfg: DecoderConfig | None = None):
        if len(ch) != h.cols:
            raise ValueError("channel length does not match column count")
        self.h = h
        self.ch = ch
        self.cfg = cfg or DecoderConfig()
        d = h.dense()
        rows, cols = np.nonzero(d)
        self._chk_ptr = np.zeros(h.rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=h.rows), out=self._chk_ptr[1:])
        self._chk_var = cols.astype(np.int64)
        self._edge_chk = rows.astype(np.int64)
        self._var_edge = np.argsort(self._chk_var, kind="stable").astype(np.int64)
        self._var_ptr = np.zeros(h.cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=h.cols), out=self._var_ptr[1:])
        aug = np.zeros((h.rows, h.cols + 1), dtype=np.uint8)
        aug[:, : h.cols] = d
        self._template = gf2.pack_rows(aug) if h.rows else np.zeros((0, 1), dtype=np.uint64)
        self._llr = np.ascontiguousarray(ch.llrs, dtype=np.float64)
        self._mode = LLR_MODES.index(self.cfg.llr_mode)
        self.lut = build_lut(h, ch, self.cfg.predecoder_weight)
        self._sched = np.arange(h.cols, dtype=np.int64)
        self._rng = np.random.default_rng(self.cfg.seed)

    def _check(self, syn) -> np.ndarray:
        syn = np.ascontiguousarray(syn, dtype=np.uint8)
        if syn.shape != (self.h.rows,):
            raise ValueError(f"syndrome must have length {self.h.rows}")
        return syn

    def predecode(self, syn) -> np.ndarray | None:
        return cluster_predecode(self.h, self._check(syn), self.lut)

    def _variant(self) -> tuple[np.ndarray, np.ndarray]:
        """Serial order and working LLRs for one call.

        With ``tie_break="random"`` both are drawn from the decoder's stream:
        a random update order and a relative LLR jitter of ``JITTER``, which
        only decides between (near-)equal-energy candidates.
        """
        n = self.h.cols
        if self.cfg.tie_break == "index":
            return self._sched, self._llr
        sched = self._rng.permutation(n).astype(np.int64)
        return sched, self._llr * (1.0 + JITTER * self._rng.random(n))

    def bp(self, syn, variant=None) -> DecodeOutcome:
        syn = self._check(syn)
        cfg = self.cfg
        sched, llr = variant or self._variant()
        est, conv, iters, soft = _bp_serial(
            self._chk_ptr, self._chk_var, self._edge_chk, self._var_ptr, self._var_edge,
            llr, syn, cfg.bp_max_iters, self._mode, cfg.avg_window, cfg.clamp, sched,
        )
        return DecodeOutcome(est, bool(conv), "bp", energy(est, self._llr), int(iters), soft)

    def osd(self, syn, soft, level: int | None = None, variant=None) -> np.ndarray:
        syn = self._check(syn)
        level = self.cfg.osd_level if level is None else level
        _, llr = variant or self._variant()
        order = np.argsort(np.asarray(soft, dtype=np.float64), kind="stable").astype(np.int64)
        est, ok = _osd_solve(self._template, self.h.cols, syn, order, llr, level)
        if not ok:
            raise InconsistentSyndrome("syndrome outside the column space")
        return est

    def ris(self, syn, iters: int, rng=None) -> np.ndarray:
        syn = self._check(syn)
        rng = np.random.default_rng(self.cfg.seed) if rng is None else rng
        perms = np.argsort(rng.random((max(iters, 1), self.h.cols)), axis=1).astype(np.int64)
        est, ok = _ris_search(self._template, self.h.cols, syn, perms, self._llr)
        if not ok:
            raise InconsistentSyndrome("syndrome outside the column space")
        return est

    def decode(self, syn) -> DecodeOutcome:
        syn = self._check(syn)
        if not syn.any():
            return DecodeOutcome(np.zeros(self.h.cols, dtype=np.uint8), True, "predecoder", 0.0)
        est = self.predecode(syn)
        if est is not None:
            return DecodeOutcome(est, True, "predecoder", energy(est, self._llr))
        variant = self._variant()
        out = self.bp(syn, variant)
        if out.converged:
            return out
        est = self.osd(syn, out.soft, variant=variant)
        res = DecodeOutcome(est, False, "osd", energy(est, self._llr), out.iterations, out.soft)
        if self.cfg.ris_iters > 0:
            alt = self.ris(syn, self.cfg.ris_iters)
            e_alt = energy(alt, self._llr)
            if e_alt < res.energy:
                res = DecodeOutcome(alt, False, "ris", e_alt, out.iterations, out.soft)
        return res


# --------------------------------------------------------------------------
# functional interface


def bp_decode(h: BinMatrix, ch: Channel, syn, cfg: DecoderConfig | None = None) -> DecodeOutcome:
    return Decoder(h, ch, cfg).bp(syn)


def osd_postprocess(h: BinMatrix, syn, soft_llrs, level: int = 1, channel_llrs=None) -> np.ndarray:
    """OSD on columns sorted by ``soft_llrs``; candidates are scored with ``channel_llrs``
    (defaults to ``soft_llrs``)."""
    soft = np.asarray(soft_llrs, dtype=np.float64)
    score = soft if channel_llrs is None else np.asarray(channel_llrs, dtype=np.float64)
    ch = Channel.from_llrs(score)
    return Decoder(h, ch, DecoderConfig(osd_level=level, predecoder_weight=0)).osd(syn, soft, level)


def ris_min_weight_decode(h: BinMatrix, ch: Channel, syn, iters: int, rng) -> np.ndarray:
    return Decoder(h, ch, DecoderConfig(predecoder_weight=0)).ris(syn, iters, rng)


def decode_pipeline(h: BinMatrix, ch: Channel, syn, cfg: DecoderConfig | None = None) -> DecodeOutcome:
    return Decoder(h, ch, cfg).decode(syn)
