"""Spacetime code for ``N`` rounds of noisy X-generator measurement.

Columns are ordered as ``(e_1 .. e_N | eps_1 .. eps_{N-1})``: all data rounds
first, then the measurement-error rounds.  Check rows are ordered by round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .codes import CssCode
from .gf2 import BinMatrix, kron

DATA, SYNDROME = 0, 1


def repetition_check(N: int) -> BinMatrix:
    """``(N-1) x N`` check matrix of the repetition code, rows ``(.. 1 1 ..)``."""
    d = np.zeros((max(N - 1, 0), N), dtype=np.uint8)
    for i in range(N - 1):
        d[i, i] = d[i, i + 1] = 1
    return BinMatrix.from_dense(d) if N > 1 else BinMatrix.zeros(0, N)


@dataclass(frozen=True, eq=False)
class SpacetimeCode:
    code: CssCode
    N: int
    H: BinMatrix
    G: BinMatrix
    L: BinMatrix
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def r(self) -> int:
        return self.code.hx.rows

    @property
    def k(self) -> int:
        return self.code.k

    @property
    def ncols(self) -> int:
        return self.N * self.n + (self.N - 1) * self.r

    def data_cols(self, t: int) -> np.ndarray:
        """Columns of round ``t`` data errors (0-based round)."""
        return np.arange(t * self.n, (t + 1) * self.n)

    def syndrome_cols(self, t: int) -> np.ndarray:
        """Columns of round ``t`` measurement errors; empty for the last round."""
        if t >= self.N - 1:
            return np.arange(0)
        base = self.N * self.n + t * self.r
        return np.arange(base, base + self.r)

    def check_rows(self, t: int) -> np.ndarray:
        return np.arange(t * self.r, (t + 1) * self.r)

    @property
    def round_column_map(self) -> list[tuple[int, int]]:
        """``(round, kind)`` for every column, kind is ``DATA`` or ``SYNDROME``."""
        out = [(j // self.n, DATA) for j in range(self.N * self.n)]
        out += [(j // self.r, SYNDROME) for j in range((self.N - 1) * self.r)]
        return out

    def interleaved_order(self) -> np.ndarray:
        """Column permutation to the banded layout ``e_1, eps_1, e_2, eps_2, ..., e_N``."""
        parts = []
        for t in range(self.N):
            parts += [self.data_cols(t), self.syndrome_cols(t)]
        return np.concatenate(parts)

    @property
    def channel_split(self) -> int:
        """Index of the first syndrome column."""
        return self.N * self.n


def build_spacetime(code: CssCode, N: int) -> SpacetimeCode:
    if N < 1:
        raise ValueError("need at least one measurement round")
    hx, hz, r, n = code.hx, code.hz, code.hx.rows, code.n
    eye_n = BinMatrix.identity(N)
    R = repetition_check(N)
    H = kron(eye_n, hx)
    if N > 1:
        H = gf2.hstack([H, kron(R.T, BinMatrix.identity(r))])
        top = gf2.hstack([kron(R, BinMatrix.identity(n)), kron(BinMatrix.identity(N - 1), hx.T)])
        bottom = gf2.hstack([kron(eye_n, hz), BinMatrix.zeros(N * hz.rows, (N - 1) * r)])
        G = gf2.vstack([top, bottom])
        ones = BinMatrix.from_dense(np.ones((1, N), dtype=np.uint8))
        L = gf2.hstack([kron(ones, code.lx), BinMatrix.zeros(code.k, (N - 1) * r)])
    else:
        G = hz
        L = code.lx
    return SpacetimeCode(code, N, H, G, L)


def channel_priors(st: SpacetimeCode, p: float, q: float | None = None) -> np.ndarray:
    q = p if q is None else q
    pri = np.empty(st.ncols)
    pri[: st.channel_split] = p
    pri[st.channel_split :] = q
    return pri


def sample_errors(st: SpacetimeCode, p: float, q: float | None, rng, shots: int) -> np.ndarray:
    """``shots x ncols`` uint8 array of phenomenological errors.

    The data block is drawn before the syndrome block, so for a fixed stream
    the data errors do not depend on the number of measured checks.
    """
    q = p if q is None else q
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    data = rng.random((shots, st.channel_split)) < p
    syn = rng.random((shots, st.ncols - st.channel_split)) < q
    return np.hstack([data, syn]).astype(np.uint8)


def sample_error(st: SpacetimeCode, p: float, q: float | None, rng) -> np.ndarray:
    return sample_errors(st, p, q, rng, 1)[0]


def _apply(m: BinMatrix, e: np.ndarray) -> np.ndarray:
    e = np.asarray(e, dtype=np.uint8)
    if e.shape[-1] != m.cols:
        raise ValueError(f"error length {e.shape[-1]} does not match {m.cols} columns")
    if e.ndim == 1:
        return m.mul_vec(e)
    return m.mul_vec(e.T).T


def detectors(st: SpacetimeCode, e: np.ndarray) -> np.ndarray:
    """``sigma = e H^T`` (accepts a single error or a batch of rows)."""
    return _apply(st.H, e)


def observables(st: SpacetimeCode, e: np.ndarray) -> np.ndarray:
    """``tau = e L^T``: parities of the net data error under ``L_X``."""
    return _apply(st.L, e)
