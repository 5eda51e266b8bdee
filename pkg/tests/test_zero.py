import math

import numpy as np
import pytest

from prckit import channels, f2, zero
from prckit.errors import BadParams


@pytest.fixture(scope="module")
def small_key():
    p = zero.PrcParams(n=512, g=81, t=3, r=400, eta=0.0, zeta=0.15)
    return zero.keygen(p, f2.random_source("zero-small"))


def test_keygen_pg_zero(small_key):
    assert not f2.syndrome(small_key.sk.P, small_key.pk.G.T).any()
    assert small_key.pk.G.shape == (512, 81)


def test_keygen_r_zero(rng):
    key = zero.keygen(zero.PrcParams(n=256, g=200, t=2, r=0), rng)
    assert key.sk.P.r == 0
    assert abs(key.pk.G.mean() - 0.5) < 0.03


def test_keygen_full_rank_rate():
    rng = f2.random_source("rank")
    p = zero.PrcParams(n=64, g=8, t=4, r=48)
    full = sum(f2.rank(zero.keygen(p, rng).sk.P) == 48 for _ in range(200))
    assert full >= 190


def test_keygen_deterministic():
    p = zero.PrcParams(n=128, g=16, t=3, r=100)
    a, b = zero.keygen(p, f2.random_source(3)), zero.keygen(p, f2.random_source(3))
    assert a.sk.P == b.sk.P and a.pk == b.pk


def test_encode_noiseless(small_key, rng):
    x = zero.encode(small_key.pk, rng)
    assert not f2.syndrome(small_key.sk.P, x ^ small_key.pk.z).any()
    out = zero.decode(small_key.sk, x)
    assert out.detected and out.unsat_count == 0


def test_decode_of_pad_is_detected(small_key):
    out = zero.decode(small_key.sk, small_key.sk.z)
    assert out.unsat_count == 0 and out.detected


def test_decode_uniform_bot(small_key, rng):
    assert not zero.detect_batch(small_key.sk, f2.random_bits(rng, (2000, 512))).any()


def test_decode_robust_small(small_key, rng):
    X = zero.encode(small_key.pk, rng, size=300)
    Y = channels.apply(channels.AdvBounded(0.05), X, rng)
    assert zero.detect_batch(small_key.sk, Y).mean() >= 0.99


def test_threshold_rule():
    p = zero.PrcParams(n=100, g=4, t=3, r=80, zeta=0.1)
    assert p.threshold == math.ceil(0.4 * 80)


def test_mean_unsat_matches_piling_up():
    p = zero.PrcParams(n=16384, g=196, t=4, r=16220, eta=0.05, zeta=16220 ** -0.25)
    rng = f2.random_source("piling-up")
    key = zero.keygen(p, rng)
    frac = zero.unsat_counts(key.sk, zero.encode(key.pk, rng, size=500)).mean() / p.r
    assert abs(frac - 0.1720) < 0.01


def test_presets():
    p = zero.preset_lpn(16384)
    assert p.r == 16220 and abs(p.zeta - 0.0886) < 1e-4 and p.g == 196
    assert zero.preset_lpn(64).g == 36
    for n in (64, 1000, 4096, 16384, 100_000):
        p = zero.preset_lpn(n)
        assert p.t <= zero.max_sparsity_for(p.r, 0.35)
    x = zero.preset_xor(4096, 0.5)
    assert x.g == x.r == 64
    assert x.zeta == pytest.approx(4096 ** -0.125)
    with pytest.raises(BadParams):
        zero.preset_xor(4096, 0.9999)


def test_expected_unsat_fraction(rng):
    for t in (1, 3, 7):
        assert zero.expected_unsat_fraction(t, 0) == 0
        assert zero.expected_unsat_fraction(t, 0.5) == 0.5
    assert zero.expected_unsat_fraction(4, 0.14) == pytest.approx(0.36565, abs=1e-4)
    flips = f2.bernoulli(rng, 0.14, (1_000_000, 4))
    mc = np.bitwise_xor.reduce(flips, axis=1).mean()
    assert abs(mc - zero.expected_unsat_fraction(4, 0.14)) < 0.005


def test_max_sparsity_for():
    assert zero.max_sparsity_for(16220, 0.35) == 5
    # the bound only collapses to the floor as alpha -> 0; near 1/2 it grows without limit
    assert zero.max_sparsity_for(1000, 1e-9) == 1
    assert zero.max_sparsity_for(1000, 0.4999) > zero.max_sparsity_for(1000, 0.45)
    vals = [zero.max_sparsity_for(r, 0.3) for r in range(2, 5000, 37)]
    assert vals == sorted(vals)


def test_planted_xor(rng):
    px = zero.sample_planted_xor(30, 20, 3, True, rng)
    assert all(f2.sparse_dot(px.s, col) == 0 for col in px.G.T)
    full = zero.sample_planted_xor(6, 5, 6, True, rng)
    assert full.s.tolist() == list(range(6))
    assert not (full.G.sum(axis=0) % 2).any()
    assert zero.sample_planted_xor(10, 4, 2, False, rng).s is None


def test_params_validation():
    with pytest.raises(BadParams):
        zero.PrcParams(n=10, g=2, t=11, r=5)
    with pytest.raises(BadParams):
        zero.PrcParams(n=10, g=2, t=2, r=5, zeta=0.5)
    with pytest.raises(BadParams):
        zero.PrcParams(n=10, g=2, t=2, r=5, eta=0.5)
