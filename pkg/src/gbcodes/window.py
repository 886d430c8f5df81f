"""Sequential decoding over the spacetime code.

``SlidingWindow`` decodes ``T`` rounds at a time and then freezes the oldest
round; ``TwoStep`` repairs each round's syndrome with metachecks before
decoding the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CssCode, metacheck_matrices
from .decoder import Channel, Decoder, DecoderConfig
from .gf2 import BinMatrix
from .pheno import SpacetimeCode, channel_priors


@dataclass(frozen=True)
class WindowStep:
    rows: np.ndarray
    active: np.ndarray
    commit: np.ndarray


@dataclass(frozen=True)
class WindowPlan:
    T: int
    steps: tuple[WindowStep, ...]


def window_plan(st: SpacetimeCode, T: int) -> WindowPlan:
    """Windows start at rounds ``0 .. N-T``; each non-final step freezes its oldest round."""
    N = st.N
    if not 1 <= T <= N:
        raise ValueError(f"window size must lie in [1, {N}], got {T}")
    steps = []
    last = N - T
    for s in range(last + 1):
        rounds = range(s, s + T)
        rows = np.concatenate([st.check_rows(t) for t in rounds])
        data = [st.data_cols(t) for t in rounds]
        syn = [st.syndrome_cols(t) for t in rounds]
        active = np.concatenate(data + syn)
        if s < last:
            commit = np.concatenate([st.data_cols(s), st.syndrome_cols(s)])
        else:
            commit = active
        steps.append(WindowStep(rows, active, np.sort(commit)))
    return WindowPlan(T, tuple(steps))


class SlidingWindow:
    """Sliding-window decoder with per-structure decoder caching.

    Columns inside a window keep their global order, so ``T = N`` reduces to
    decoding the full spacetime matrix.
    """

    def __init__(self, st: SpacetimeCode, ch: Channel, T: int, cfg: DecoderConfig | None = None):
        if len(ch) != st.ncols:
            raise ValueError("channel length does not match the spacetime code")
        self.st = st
        self.ch = ch
        self.cfg = cfg or DecoderConfig()
        self.plan = window_plan(st, T)
        dense = st.H.dense()
        cache: dict[tuple[bytes, bytes], Decoder] = {}
        self._steps = []
        for step in self.plan.steps:
            sub = BinMatrix.from_dense(dense[np.ix_(step.rows, step.active)])
            pri = ch.priors[step.active]
            key = (sub.words.tobytes() + str(sub.shape).encode(), pri.tobytes())
            dec = cache.get(key)
            if dec is None:
                dec = cache[key] = Decoder(sub, Channel.from_priors(pri), self.cfg)
            # positions of the committed columns inside the window
            local = np.searchsorted(step.active, step.commit)
            self._steps.append((step, dec, dense[step.rows], local))
        self.n_decoders = len(cache)

    def decode(self, syn) -> tuple[np.ndarray, np.ndarray]:
        syn = np.asarray(syn, dtype=np.uint8)
        if syn.shape != (self.st.H.rows,):
            raise ValueError("syndrome length does not match the spacetime code")
        est = np.zeros(self.st.ncols, dtype=np.uint8)
        for step, dec, hrows, local in self._steps:
            resid = syn[step.rows] ^ ((hrows.astype(np.int64) @ est) & 1).astype(np.uint8)
            out = dec.decode(resid)
            est[step.commit] = out.estimate[local]
        return est, self.st.L.mul_vec(est)


def sw_decode(
    st: SpacetimeCode, syn, T: int, cfg: DecoderConfig | None = None, ch: Channel | None = None,
    p: float = 0.01, q: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Decode ``syn`` with windows of ``T`` rounds; returns ``(estimate, observables)``."""
    ch = ch or Channel.from_priors(channel_priors(st, p, q))
    return SlidingWindow(st, ch, T, cfg).decode(syn)


def full_decode(st: SpacetimeCode, syn, ch: Channel, cfg: DecoderConfig | None = None):
    out = Decoder(st.H, ch, cfg).decode(syn)
    return out.estimate, st.L.mul_vec(out.estimate)


class TwoStep:
    """Single-shot decoding: metacheck repair of every round, then data decoding.

    Round ``t`` works on the syndrome of the current residual error, i.e. the
    running sum of the differences ``sigma_1 .. sigma_t`` plus the syndrome
    of the corrections applied so far.  Its only measurement error is
    ``eps_t``, which the metacheck decoder estimates; the repaired syndrome is
    then decoded on ``H_X`` and the correction applied.
    """

    def __init__(self, code: CssCode, p: float, q: float | None = None, cfg: DecoderConfig | None = None):
        q = p if q is None else q
        mx, _ = metacheck_matrices(code)
        if mx.rows == 0:
            raise ValueError("code has no metachecks left; two-step decoding needs redundancy")
        self.code = code
        self.cfg = cfg or DecoderConfig()
        self.mx = mx
        self.meta = Decoder(mx, Channel.uniform(mx.cols, q), self.cfg)
        self.data = Decoder(code.hx, Channel.uniform(code.n, p), self.cfg)

    def repair(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.uint8)
        ms = self.mx.mul_vec(s)
        if not ms.any():
            return s
        return s ^ self.meta.decode(ms).estimate

    def decode(self, sigmas) -> tuple[np.ndarray, np.ndarray]:
        """``sigmas``: ``N x r`` per-round syndrome differences."""
        sigmas = np.atleast_2d(np.asarray(sigmas, dtype=np.uint8))
        if sigmas.shape[1] != self.code.hx.rows:
            raise ValueError("per-round syndrome length does not match H_X")
        total = np.zeros(self.code.n, dtype=np.uint8)
        measured = np.zeros(self.code.hx.rows, dtype=np.uint8)
        applied = np.zeros(self.code.hx.rows, dtype=np.uint8)
        for sigma_t in sigmas:
            measured ^= sigma_t
            fix = self.data.decode(self.repair(measured ^ applied)).estimate
            total ^= fix
            applied ^= self.code.hx.mul_vec(fix)
        return total, self.code.lx.mul_vec(total)


def two_step_decode(
    code: CssCode, sigmas, p: float, q: float | None = None, cfg: DecoderConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    return TwoStep(code, p, q, cfg).decode(sigmas)


def split_rounds(st: SpacetimeCode, syn) -> np.ndarray:
    """Reshape a spacetime syndrome into its ``N x r`` per-round blocks."""
    return np.asarray(syn, dtype=np.uint8).reshape(st.N, st.r)
