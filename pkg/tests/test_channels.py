import math

import numpy as np
import pytest

from prckit import channels, f2
from prckit.errors import NotLengthPreserving


def test_bsc_zero_identity(rng):
    x = f2.random_bits(rng, 1000)
    assert np.array_equal(channels.apply(channels.BSC(0), x, rng), x)


def test_bdc_length(rng):
    n, q = 200, 0.3
    lens = np.array([channels.apply(channels.BDC(q), np.ones(n, np.uint8), rng).size for _ in range(10_000)])
    sigma = math.sqrt(n * q * (1 - q) / lens.size)
    assert abs(lens.mean() - n * (1 - q)) < 3 * sigma


def test_adv_bounded_exact(rng):
    x = f2.random_bits(rng, 1000)
    for strat in channels.Strategy:
        y = channels.apply(channels.AdvBounded(0.1, strat), x, rng)
        assert f2.hamming_weight(x ^ y) == 100
    y = channels.apply(channels.AdvBounded(0.1, channels.Strategy.PREFIX_BURST), x, rng)
    assert np.flatnonzero(x ^ y).tolist() == list(range(100))


def test_compose_order(rng):
    ch = channels.parse("bsc:0.1|bdc:0.3")
    assert ch == channels.Compose(channels.BSC(0.1), channels.BDC(0.3))
    assert channels.format_spec(ch) == "bsc:0.1|bdc:0.3"
    assert not channels.is_length_preserving(ch)
    assert channels.is_length_preserving(channels.parse("adv:0.1:prefix|bsc:0.2"))


def test_parse_errors():
    for bad in ("", "bsc", "bsc:2", "foo:0.1", "adv:0.1:sideways"):
        with pytest.raises(ValueError):
            channels.parse(bad)


def test_p_bounded_witness(rng):
    assert channels.is_p_bounded_witness(channels.BSC(0.05), 0.10, 1000, rng).violations == 0
    assert channels.is_p_bounded_witness(channels.AdvBounded(0.10), 0.10, 200, rng).violations == 0
    assert channels.is_p_bounded_witness(channels.BSC(0.2), 0.10, 50, rng, n=2048).violation_fraction == 1.0
    with pytest.raises(NotLengthPreserving):
        channels.is_p_bounded_witness(channels.BDC(0.1), 0.1, 1, rng)
