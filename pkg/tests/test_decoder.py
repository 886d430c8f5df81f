from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gbcodes import gf2
from gbcodes.decoder import (
    Channel,
    Decoder,
    DecoderConfig,
    InconsistentSyndrome,
    bp_decode,
    build_lut,
    cluster_predecode,
    decode_pipeline,
    energy,
    osd_postprocess,
    ris_min_weight_decode,
)
from gbcodes.gf2 import BinMatrix
from gbcodes.pheno import build_spacetime, channel_priors, detectors, sample_errors


def brute_min_energy(h: BinMatrix, syn, llr) -> float:
    best = np.inf
    for bits in itertools.product((0, 1), repeat=h.cols):
        e = np.array(bits, dtype=np.uint8)
        if np.array_equal(h.mul_vec(e), syn):
            best = min(best, float(e @ llr))
    return best


def random_error(n, w, rng):
    e = np.zeros(n, dtype=np.uint8)
    e[rng.choice(n, w, replace=False)] = 1
    return e


# --------------------------------------------------------------------------
# configuration and channel


def test_config_validation():
    for bad in (
        dict(bp_max_iters=0), dict(llr_mode="x"), dict(osd_level=2), dict(predecoder_weight=3),
        dict(avg_window=0), dict(ris_iters=-1), dict(clamp=0.0), dict(tie_break="coin"),
    ):
        with pytest.raises(ValueError):
            DecoderConfig(**bad)
    assert DecoderConfig().ident == "pre1-bp50b-osd1"
    assert DecoderConfig(ris_iters=10, tie_break="random").ident == "pre1-bp50b-osd1-ris10-rt"


def test_channel_llrs_and_clipping():
    ch = Channel.from_priors([0.1, 0.5, 0.0, 1.0])
    assert ch.llrs[0] == pytest.approx(np.log(9))
    assert ch.llrs[1] == pytest.approx(0.0)
    assert np.all(np.isfinite(ch.llrs))
    assert ch.llrs[2] > 20 and ch.llrs[3] < -20
    back = Channel.from_llrs(ch.llrs[:2])
    assert np.allclose(back.priors, [0.1, 0.5])
    assert len(ch.restrict([0, 1])) == 2


def test_energy():
    ch = Channel.from_priors([0.1, 0.01])
    assert energy([1, 1], ch) == pytest.approx(np.log(9) + np.log(99))
    assert energy([0, 0], ch) == 0.0
    with pytest.raises(ValueError):
        energy([1], ch)


# --------------------------------------------------------------------------
# predecoder


def test_lut_weight_one_examples(gb15):
    lut = build_lut(gb15.hx, weight=1)
    for j in (0, 17, 29):
        syn = gb15.hx.dense()[:, j]
        est = cluster_predecode(gb15.hx, syn, lut)
        assert est is not None and np.flatnonzero(est).tolist() == [j]


def test_lut_two_separated_errors(gb31):
    # data errors in rounds 0 and 2 light disjoint, non-adjacent check clusters
    st_code = build_spacetime(gb31, 3)
    lut = build_lut(st_code.H, weight=1)
    cols = [int(st_code.data_cols(0)[5]), int(st_code.data_cols(2)[40])]
    e = np.zeros(st_code.ncols, dtype=np.uint8)
    e[cols] = 1
    est = cluster_predecode(st_code.H, detectors(st_code, e), lut)
    assert est is not None and np.flatnonzero(est).tolist() == cols


def test_lut_misses_return_none(gb15):
    lut = build_lut(gb15.hx, weight=1)
    syn = np.zeros(15, dtype=np.uint8)
    syn[0] = 1
    assert cluster_predecode(gb15.hx, syn, lut) is None
    assert cluster_predecode(gb15.hx, np.zeros(15, dtype=np.uint8), lut).sum() == 0
    with pytest.raises(ValueError):
        build_lut(gb15.hx, weight=3)


def test_lut_weight_two_prefers_lower_energy(gb15):
    lut = build_lut(gb15.hx, weight=2)
    h = gb15.hx.dense()
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = rng.integers(15)
        i, j = rng.choice(np.flatnonzero(h[c]), 2, replace=False)
        syn = (h[:, i] ^ h[:, j]).astype(np.uint8)
        est = cluster_predecode(gb15.hx, syn, lut)
        assert est is not None
        assert np.array_equal(gb15.hx.mul_vec(est), syn)
        assert est.sum() <= 2


# --------------------------------------------------------------------------
# belief propagation


def test_bp_exact_on_tree():
    # a path graph is a tree, so BP finds the most likely error
    h = BinMatrix.from_dense([[1, 1, 0, 0, 0], [0, 1, 1, 0, 0], [0, 0, 1, 1, 0], [0, 0, 0, 1, 1]])
    ch = Channel.from_priors([0.05, 0.2, 0.05, 0.1, 0.3])
    for bits in itertools.product((0, 1), repeat=4):
        syn = np.array(bits, dtype=np.uint8)
        out = bp_decode(h, ch, syn, DecoderConfig(llr_mode="instantaneous"))
        assert out.converged
        assert np.array_equal(h.mul_vec(out.estimate), syn)
        assert out.energy == pytest.approx(brute_min_energy(h, syn, ch.llrs))


@pytest.mark.parametrize("mode", ["instantaneous", "averaged", "both"])
def test_bp_modes_single_errors(gb15, mode):
    ch = Channel.uniform(30, 0.01)
    cfg = DecoderConfig(llr_mode=mode)
    for j in range(30):
        syn = gb15.hx.dense()[:, j].astype(np.uint8)
        out = bp_decode(gb15.hx, ch, syn, cfg)
        assert out.converged and out.iterations >= 1
        assert np.flatnonzero(out.estimate).tolist() == [j]


def test_bp_zero_syndrome(gb15):
    out = bp_decode(gb15.hx, Channel.uniform(30, 0.01), np.zeros(15, dtype=np.uint8))
    assert out.converged and not out.estimate.any()


# --------------------------------------------------------------------------
# OSD and RIS


@settings(max_examples=30)
@given(arrays(np.uint8, (5, 10), elements=st.integers(0, 1)), st.data())
def test_osd_solves_and_level1_not_worse(hd, data):
    h = BinMatrix.from_dense(hd)
    x = data.draw(arrays(np.uint8, 10, elements=st.integers(0, 1)))
    syn = h.mul_vec(x)
    pri = data.draw(arrays(np.float64, 10, elements=st.floats(0.01, 0.4)))
    llr = Channel.from_priors(pri).llrs
    soft = llr + data.draw(arrays(np.float64, 10, elements=st.floats(-1, 1)))
    e0 = osd_postprocess(h, syn, soft, level=0, channel_llrs=llr)
    e1 = osd_postprocess(h, syn, soft, level=1, channel_llrs=llr)
    for e in (e0, e1):
        assert np.array_equal(h.mul_vec(e), syn)
    assert float(e1 @ llr) <= float(e0 @ llr) + 1e-9


def test_osd_rejects_inconsistent_syndrome():
    h = BinMatrix.from_dense([[1, 1], [1, 1]])
    with pytest.raises(InconsistentSyndrome):
        osd_postprocess(h, np.array([1, 0], dtype=np.uint8), np.zeros(2))


@settings(max_examples=20)
@given(arrays(np.uint8, (4, 9), elements=st.integers(0, 1)), st.data())
def test_ris_finds_minimum_energy(hd, data):
    h = BinMatrix.from_dense(hd)
    x = data.draw(arrays(np.uint8, 9, elements=st.integers(0, 1)))
    syn = h.mul_vec(x)
    ch = Channel.from_priors(data.draw(arrays(np.float64, 9, elements=st.floats(0.01, 0.4))))
    est = ris_min_weight_decode(h, ch, syn, 400, np.random.default_rng(0))
    assert np.array_equal(h.mul_vec(est), syn)
    assert energy(est, ch) == pytest.approx(brute_min_energy(h, syn, ch.llrs))


# --------------------------------------------------------------------------
# full pipeline


def test_pipeline_always_matches_syndrome(gb15):
    st_code = build_spacetime(gb15, 3)
    ch = Channel.from_priors(channel_priors(st_code, 0.03))
    dec = Decoder(st_code.H, ch)
    errs = sample_errors(st_code, 0.03, None, np.random.default_rng(4), 200)
    stages = set()
    for e in errs:
        syn = detectors(st_code, e)
        out = dec.decode(syn)
        stages.add(out.stage)
        assert np.array_equal(st_code.H.mul_vec(out.estimate), syn)
        assert out.energy == pytest.approx(energy(out.estimate, ch))
    assert {"predecoder", "bp"} <= stages


def test_pipeline_deterministic_with_index_ties(gb31):
    ch = Channel.uniform(62, 0.02)
    rng = np.random.default_rng(9)
    syns = [gb31.hx.mul_vec(random_error(62, 4, rng)) for _ in range(30)]
    a = [decode_pipeline(gb31.hx, ch, s).estimate for s in syns]
    dec = Decoder(gb31.hx, ch)
    b = [dec.decode(s).estimate for s in syns]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_random_ties_reproducible_per_seed(gb31):
    ch = Channel.uniform(62, 0.02)
    rng = np.random.default_rng(2)
    syns = [gb31.hx.mul_vec(random_error(62, 3, rng)) for _ in range(30)]
    cfg = DecoderConfig(tie_break="random", seed=5)
    a = [Decoder(gb31.hx, ch, cfg).decode(s).estimate for s in syns]
    dec1, dec2 = Decoder(gb31.hx, ch, cfg), Decoder(gb31.hx, ch, cfg)
    seq1 = [dec1.decode(s).estimate for s in syns]
    seq2 = [dec2.decode(s).estimate for s in syns]
    assert all(np.array_equal(x, y) for x, y in zip(seq1, seq2))
    for s, e in zip(syns, a):
        assert np.array_equal(gb31.hx.mul_vec(e), s)


def test_predecoder_does_not_change_weight_one_results(gb15):
    ch = Channel.uniform(30, 0.01)
    with_pre = Decoder(gb15.hx, ch, DecoderConfig(predecoder_weight=1))
    without = Decoder(gb15.hx, ch, DecoderConfig(predecoder_weight=0))
    for j in range(30):
        syn = gb15.hx.dense()[:, j].astype(np.uint8)
        a, b = with_pre.decode(syn), without.decode(syn)
        assert a.stage == "predecoder" and b.stage != "predecoder"
        assert np.array_equal(a.estimate, b.estimate)


def test_ris_stage_never_worse(gb15):
    st_code = build_spacetime(gb15, 2)
    ch = Channel.from_priors(channel_priors(st_code, 0.06))
    base = Decoder(st_code.H, ch, DecoderConfig(bp_max_iters=2, predecoder_weight=0))
    ris = Decoder(st_code.H, ch, DecoderConfig(bp_max_iters=2, predecoder_weight=0, ris_iters=50))
    for e in sample_errors(st_code, 0.06, None, np.random.default_rng(1), 40):
        syn = detectors(st_code, e)
        assert ris.decode(syn).energy <= base.decode(syn).energy + 1e-9


def test_wrong_lengths_rejected(gb15):
    with pytest.raises(ValueError):
        Decoder(gb15.hx, Channel.uniform(10, 0.1))
    dec = Decoder(gb15.hx, Channel.uniform(30, 0.1))
    with pytest.raises(ValueError):
        dec.decode(np.zeros(3, dtype=np.uint8))


def test_gf2_solution_consistency(gb15):
    # every syndrome in the column space decodes; one outside raises in OSD
    dec = Decoder(gb15.hx, Channel.uniform(30, 0.05), DecoderConfig(bp_max_iters=1, predecoder_weight=0))
    meta = gf2.left_kernel(gb15.hx).dense()
    bad = np.zeros(15, dtype=np.uint8)
    bad[np.flatnonzero(meta[0])[0]] = 1
    with pytest.raises(InconsistentSyndrome):
        dec.decode(bad)
