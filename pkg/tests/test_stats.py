import math

import numpy as np
import pytest

from prckit import f2, stats, zero
from prckit.errors import BudgetExceeded, TooFewSamples


def test_battery_uniform_passes(rng):
    reports = stats.battery(f2.random_bits(rng, (500, 256)))
    assert [r.name for r in reports] == [name for name, _ in stats.BATTERY]
    assert stats.battery_passed(reports)
    assert all(r.significance == pytest.approx(0.001 / 5) for r in reports)


def test_battery_calibration():
    # each test at the full 0.001 level rejects about 0.1% of uniform batches
    rng = f2.random_source("calibration")
    rejections = 0
    for _ in range(200):
        rejections += not stats.battery_passed(stats.battery(f2.random_bits(rng, (100, 64)), 0.001))
    assert rejections <= 3


def test_battery_constant_fails():
    reports = {r.name: r for r in stats.battery(np.zeros((200, 64), np.uint8))}
    assert not reports["frequency"].passed


def test_battery_repetition_code_fails_serial(rng):
    base = f2.random_bits(rng, (200, 32))
    X = np.repeat(base, 3, axis=1)  # 000111000...
    reports = {r.name: r for r in stats.battery(X)}
    assert not reports["serial"].passed and reports["serial"].p_value < 1e-10


def test_battery_needs_samples(rng):
    with pytest.raises(TooFewSamples):
        stats.battery(f2.random_bits(rng, (99, 32)))


def test_report_line():
    r = stats.TestReport("frequency", 1.5, 0.2, 0.001, 100)
    assert r.as_line().startswith("test=frequency ") and "result=pass" in r.as_line()


def test_attack_recovers_planted(rng):
    px = zero.sample_planted_xor(24, 12, 2, True, rng)
    res = stats.sparse_parity_attack(px.G.T, 2)
    assert tuple(px.s.tolist()) in [s for s, _ in res.found]


def test_attack_uniform_finds_nothing(rng):
    res = stats.sparse_parity_attack(f2.random_bits(rng, (200, 24)), 2)
    assert not res and res.candidates == 24 + 276
    assert res.threshold == pytest.approx(4 / math.sqrt(200))


def test_attack_finds_true_row_of_sparse_code(rng):
    p = zero.PrcParams(n=64, g=36, t=2, r=16, eta=0.05, zeta=0.25)
    key = zero.keygen(p, rng)
    res = stats.sparse_parity_attack(zero.encode(key.pk, rng, size=500), 2)
    rows = {tuple(r) for r in key.sk.P.idx.tolist()}
    assert any(s in rows for s, _ in res.found)


def test_attack_weight_three(rng):
    X = f2.random_bits(rng, (300, 12))
    X[:, 7] = X[:, 1] ^ X[:, 4]
    res = stats.sparse_parity_attack(X, 3)
    assert (1, 4, 7) in [s for s, _ in res.found]


def test_attack_budget(rng):
    with pytest.raises(BudgetExceeded):
        stats.sparse_parity_attack(f2.random_bits(rng, (10, 200)), 4, budget=1000)


def test_wilson_and_estimate_rate(rng):
    est = stats.estimate_rate(lambda r: True, 50, rng)
    assert est.rate == 1.0 and est.low <= 1.0 <= est.high and est.high == pytest.approx(1.0)
    covered = 0
    for _ in range(200):
        e = stats.estimate_rate(lambda r: r.random() < 0.5, 1000, rng)
        covered += e.low <= 0.5 <= e.high
    assert 0.90 <= covered / 200 <= 0.99
    assert "ci95=" in est.as_line()


def test_ngrams_and_chisquare(rng):
    X = f2.random_bits(rng, (100, 50))
    assert stats.ngram_counts(X, 2).sum() == 100 * 49
    assert stats.ngram_counts(np.array([[0, 1, 1, 0]]), 2).tolist() == [0, 1, 1, 1]
    a = stats.ngram_counts(X, 3)
    assert stats.two_sample_chisquare(a, stats.ngram_counts(f2.random_bits(rng, (100, 50)), 3)).passed
    assert not stats.two_sample_chisquare(a, stats.ngram_counts(np.ones((100, 50), np.uint8), 3)).passed
    assert stats.goodness_of_fit([250, 250, 250, 250], [0.25] * 4).p_value == pytest.approx(1.0)
