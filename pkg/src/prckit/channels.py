"""Corruption channels acting on bit vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from . import f2
from .errors import NotLengthPreserving


class Strategy(Enum):
    RANDOM_SUBSET = "subset"
    PREFIX_BURST = "prefix"


@dataclass(frozen=True)
class BSC:
    p: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("flip probability must lie in [0, 1)")


@dataclass(frozen=True)
class BDC:
    q: float

    def __post_init__(self):
        if not 0 <= self.q < 1:
            raise ValueError("deletion probability must lie in [0, 1)")


@dataclass(frozen=True)
class AdvBounded:
    """Flips exactly ``floor(p * len)`` distinct positions."""

    p: float
    strategy: Strategy = Strategy.RANDOM_SUBSET

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("flip fraction must lie in [0, 1)")


@dataclass(frozen=True)
class Compose:
    """``outer`` after ``inner``: the inner channel is applied first."""

    outer: "ChannelSpec"
    inner: "ChannelSpec"


ChannelSpec = Union[BSC, BDC, AdvBounded, Compose]


def apply(ch: ChannelSpec, x, rng) -> np.ndarray:
    rng = f2.random_source(rng)
    x = f2.as_bits(x)
    if isinstance(ch, BSC):
        return x ^ f2.bernoulli(rng, ch.p, x.shape)
    if isinstance(ch, BDC):
        if x.ndim != 1:
            raise ValueError("deletion channel acts on a single vector")
        return x[rng.random(x.size) >= ch.q]
    if isinstance(ch, AdvBounded):
        if x.ndim != 1:
            return np.stack([apply(ch, row, rng) for row in x])
        k = math.floor(ch.p * x.size)
        if ch.strategy is Strategy.PREFIX_BURST:
            pos = np.arange(k)
        else:
            pos = rng.choice(x.size, size=k, replace=False)
        out = x.copy()
        out[pos] ^= 1
        return out
    if isinstance(ch, Compose):
        return apply(ch.outer, apply(ch.inner, x, rng), rng)
    raise TypeError(f"unknown channel {ch!r}")


def is_length_preserving(ch: ChannelSpec) -> bool:
    if isinstance(ch, BDC):
        return ch.q == 0
    if isinstance(ch, Compose):
        return is_length_preserving(ch.outer) and is_length_preserving(ch.inner)
    return True


@dataclass(frozen=True)
class BoundednessReport:
    p: float
    n: int
    trials: int
    violations: int

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.trials


def is_p_bounded_witness(ch: ChannelSpec, p: float, trials: int, rng, n: int = 16384) -> BoundednessReport:
    """Fraction of uniform inputs on which the channel flips more than ``p n`` bits."""
    if not is_length_preserving(ch):
        raise NotLengthPreserving("p-boundedness is only defined for length-preserving channels")
    rng = f2.random_source(rng)
    violations = 0
    for _ in range(trials):
        x = f2.random_bits(rng, n)
        if f2.hamming_weight(apply(ch, x, rng) ^ x) > p * n:
            violations += 1
    return BoundednessReport(p, n, trials, violations)


def parse(spec: str) -> ChannelSpec:
    """Parse ``bsc:0.1``, ``bdc:0.3``, ``adv:0.1:subset|prefix`` joined by ``|``.

    ``"a|b"`` means ``a`` after ``b``: the rightmost channel acts first.
    """
    parts = [s.strip() for s in spec.split("|") if s.strip()]
    if not parts:
        raise ValueError("empty channel spec")
    chans = [_parse_one(s) for s in parts]
    out = chans[-1]
    for ch in reversed(chans[:-1]):
        out = Compose(ch, out)
    return out


def _parse_one(s: str) -> ChannelSpec:
    kind, _, rest = s.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "bsc" and len(args) == 1:
            return BSC(float(args[0]))
        if kind == "bdc" and len(args) == 1:
            return BDC(float(args[0]))
        if kind == "adv" and len(args) in (1, 2):
            strat = Strategy(args[1]) if len(args) == 2 else Strategy.RANDOM_SUBSET
            return AdvBounded(float(args[0]), strat)
    except ValueError as exc:
        raise ValueError(f"bad channel {s!r}: {exc}") from None
    raise ValueError(f"bad channel {s!r}")


def format_spec(ch: ChannelSpec) -> str:
    if isinstance(ch, BSC):
        return f"bsc:{ch.p:g}"
    if isinstance(ch, BDC):
        return f"bdc:{ch.q:g}"
    if isinstance(ch, AdvBounded):
        return f"adv:{ch.p:g}:{ch.strategy.value}"
    return f"{format_spec(ch.outer)}|{format_spec(ch.inner)}"
