import math
from fractions import Fraction

import numpy as np
import pytest

from prckit import channels, f2, models, stats, watermark, zero
from prckit.errors import NotPrefixFree, ZeroProbabilityToken

WM = zero.PrcParams(n=512, g=81, t=3, r=410, eta=0.0, zeta=0.12)


@pytest.fixture(scope="module")
def key():
    return watermark.wm_setup(WM, 3 * WM.n, f2.random_source("wm"))


def test_setup_pad_count():
    k = watermark.wm_setup(WM, 3 * WM.n + 1, f2.random_source(0))
    assert k.pads.shape == (4, WM.n)
    assert k == watermark.wm_setup(WM, 3 * WM.n + 1, f2.random_source(0))
    flat = k.pads.ravel()
    assert stats.frequency(flat)[1] >= 0.001


def test_half_model_tokens_equal_codeword_bits(key, rng):
    rng2 = f2.random_source(rng.integers(1 << 30))
    state = rng2.bit_generator.state
    resp = watermark.wm_generate(key, "p", models.ConstantModel(0.5), rng2)
    rng2.bit_generator.state = state
    L = resp.tokens.size
    x = np.concatenate([watermark.padded_codewords(key, b, 1, rng2)[0] for b in range(3)])[:L]
    assert np.array_equal(resp.tokens, x)


def test_zero_phat_gives_zero_tokens(key, rng):
    resp = watermark.wm_generate(key, "p", models.ConstantModel(0.0), rng)
    assert not resp.tokens.any()


def test_embed_probability():
    assert watermark.embed_probability(0.5, 1) == 1 and watermark.embed_probability(0.5, 0) == 0
    assert watermark.embed_probability(0.3, 1) == pytest.approx(0.6)
    assert watermark.embed_probability(0.8, 0) == pytest.approx(0.6)
    # averaging over a uniform bit recovers p-hat
    for p in (0.0, 0.1, 0.5, 0.77, 1.0):
        assert (watermark.embed_probability(p, 0) + watermark.embed_probability(p, 1)) / 2 == pytest.approx(p)


def test_marginal_law_fixed_prefix(key, rng):
    model = models.HashModel(0.3, 0.7, seed=5)
    prefix = models.sample_plain(model, "q", rng, 100)[0]
    ph = model.phat("q", prefix)
    X = zero.encode(key.zero_key.pk, rng, size=100_000)[:, 100] ^ key.pads[0][100]
    ones = (rng.random(X.size) < watermark.embed_probability(ph, X)).sum()
    assert abs(ones - 1e5 * ph) <= 3 * math.sqrt(1e5 * ph * (1 - ph))


def test_detect_codeword_itself(key, rng):
    t = watermark.wm_generate(key, "p", models.ConstantModel(0.5), rng).tokens
    rep = watermark.wm_detect(key, t)
    assert rep.detected and rep.start == 0 and rep.pad == 0


def test_detect_uniform_negative(key, rng):
    hits = sum(watermark.wm_detect_fast(key, f2.random_bits(rng, 4 * WM.n)).detected for _ in range(300))
    assert hits == 0


def test_detect_after_bsc(key, rng):
    model = models.HashModel(0.3, 0.7, seed=1)
    tokens, _ = watermark.wm_generate_batch(key, "p", model, rng, 100, 2 * WM.n)
    hits = sum(watermark.wm_detect_fast(key, channels.apply(channels.BSC(0.05), t, rng)).detected for t in tokens)
    assert hits >= 99


def test_fast_agrees_with_literal(key, rng):
    model = models.HashModel(0.3, 0.7, seed=2)
    tokens, _ = watermark.wm_generate_batch(key, "a", model, rng, 50, 2 * WM.n)
    cases = []
    for t in tokens:
        lo = int(rng.integers(0, WM.n))
        cases.append(channels.apply(channels.BSC(0.05), t[lo: lo + WM.n + 40], rng))
    cases += [f2.random_bits(rng, WM.n + 40) for _ in range(50)]
    for c in cases:
        fast, slow = watermark.wm_detect_fast(key, c), watermark.wm_detect(key, c)
        assert fast == slow


def test_fast_edge_cases(key, rng):
    assert not watermark.wm_detect_fast(key, np.zeros(0, np.uint8))
    t = watermark.wm_generate(key, "p", models.ConstantModel(0.5), rng).tokens
    crop = np.concatenate([f2.random_bits(rng, 77), t[WM.n: 2 * WM.n], f2.random_bits(rng, 30)])
    rep = watermark.wm_detect_fast(key, crop)
    assert rep.detected and rep.start == 77 and rep.pad == 1


def test_scan_unsat_matches_decoder(key, rng):
    sk = key.zero_key.sk
    T = f2.random_bits(rng, WM.n + 20)
    U = watermark.scan_unsat(T, sk.P.idx, watermark._pad_constants(sk, key.pads), WM.n)
    for s in (0, 7, 20):
        for ell, pad in enumerate(key.pads):
            assert U[ell, s] == zero.unsat_counts(sk, T[s: s + WM.n] ^ pad)


def test_deletion_watermark(rng):
    p = zero.PrcParams(n=256, g=64, t=2, r=192, eta=0.0, zeta=0.1)
    k = watermark.wm_setup(p, p.n * 129, rng, majority_width=129)
    assert k.deletion and k.block == p.n * 129
    t = watermark.wm_generate(k, "d", models.ConstantModel(0.5), rng).tokens
    assert watermark.wm_detect(k, channels.apply(channels.BDC(0.1), t, rng)).detected
    assert not watermark.wm_detect(k, f2.random_bits(rng, k.block // 2), stride=k.block // 8).detected


def test_sign_model_embedding_is_symmetric(rng):
    m = models.SignModel(seed=3, magnitude=0.1)
    assert m.context_free
    assert set(np.unique(m.phat_positions("x", 1000)).round(6).tolist()) == {0.4, 0.6}
    for bit in (0, 1):
        x = np.full((1, 100_000), bit, np.uint8)
        tok, _ = watermark.sample_tokens(m, "x", x, rng)
        assert abs((tok != bit).mean() - 0.1) < 0.005


def test_entropy():
    half = models.ConstantModel(0.5)
    t = np.array([1, 0, 1, 1, 0], np.uint8)
    assert watermark.empirical_entropy(half, "p", t, 2, 4) == 3
    det = models.BurstyModel(spans=(0, 10), seed=1)
    toks = (det.phat_positions("p", 10) > 0.5).astype(np.uint8)
    assert watermark.empirical_entropy(det, "p", toks, 1, 10) == 0
    with pytest.raises(ZeroProbabilityToken):
        watermark.empirical_entropy(det, "p", 1 - toks, 1, 10)
    rep = watermark.entropy_report(half, "p", t)
    assert rep.window(1, 5) == 5 and rep.truncated_window(1, 5) == 5


def test_truncated_surprisal_relation(rng):
    model = models.HashModel(0.02, 0.98, seed=4, context=4)
    toks = models.sample_plain(model, "e", rng, 4000)[0]
    rep = watermark.entropy_report(model, "e", toks)
    c, w = 0.6, 64
    checked = 0
    for _ in range(1000):
        i = int(rng.integers(1, toks.size - w + 2))
        j = i + w - 1
        if rep.window(i, j) > c * w:
            checked += 1
            assert rep.truncated_window(i, j) > c * c * w / 2
    assert checked > 100


def test_model_determinism():
    a, b = models.HashModel(0.3, 0.7, seed=9), models.HashModel(0.3, 0.7, seed=9)
    pre = np.array([1, 0, 1], np.uint8)
    assert a.phat("p", pre) == b.phat("p", pre)
    assert 0.3 <= a.phat("p", pre) <= 0.7
    assert a.phat("p", pre) != models.HashModel(0.3, 0.7, seed=10).phat("p", pre)


def test_bursty_deterministic_spans_zero_entropy():
    m = models.BurstyModel(spans=(8, 8), seed=2)
    ph = m.phat_positions("p", 32)
    assert np.all(ph[:8] == 0.5) and set(ph[8:16].tolist()) <= {0.0, 1.0}
    toks = (ph > 0.5).astype(np.uint8)
    assert watermark.empirical_entropy(m, "p", toks, 9, 16) == 0


def test_parse_model():
    assert models.parse_model("const:0.5") == models.ConstantModel(0.5)
    assert isinstance(models.parse_model("hash:0.3:0.7:4"), models.HashModel)
    assert models.parse_model("sign:0.05").magnitude == 0.05
    assert models.parse_model("bursty:4,4").spans == (4, 4)
    with pytest.raises(ValueError):
        models.parse_model("gpt:4")


def test_binarize_two_tokens():
    bm = models.binarize_model(lambda prompt, toks: {"a": 0.3, "b": 0.7}, {"a": "0", "b": "1"})
    assert bm.phat("p", np.zeros(0, np.uint8)) == pytest.approx(0.7)


def test_binarize_three_tokens():
    tm = lambda prompt, toks: {"A": Fraction(1, 2), "B": Fraction(1, 4), "C": Fraction(1, 4)}
    bm = models.binarize_model(tm, {"A": "0", "B": "10", "C": "11"})
    assert 1 - bm.phat("p", np.zeros(0, np.uint8)) == Fraction(1, 2)
    assert 1 - bm.phat("p", np.array([1], np.uint8)) == Fraction(1, 2)
    assert bm.decode_tokens(f2.bits_from_str("01011")) == ["A", "B", "C"]
    assert np.array_equal(bm.encode_tokens(["C", "A"]), f2.bits_from_str("110"))
    with pytest.raises(NotPrefixFree):
        models.binarize_model(tm, {"A": "0", "B": "01", "C": "11"})
