"""Stateless steganography by rejection sampling against a PRC codeword.

Each codeword bit ``x_i`` is hidden in one document: up to ``kappa`` documents
are drawn from the covertext channel given the history, and the first whose
hash ``f`` equals ``x_i`` is emitted (otherwise the last draw).  Decoding hashes
every document and PRC-decodes the resulting bit string.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

import numpy as np

from . import f2, multi

StegoPrc = Union[multi.MultiBitKey, multi.ConstRateKey]


class CovertextChannel(Protocol):
    k: int
    memoryless: bool

    def sample(self, history: Sequence[int], rng, size: Optional[int] = None): ...

    def distribution(self, history: Sequence[int]) -> np.ndarray: ...


@dataclass(frozen=True)
class SymbolChannel:
    """Memoryless channel over symbols ``0..k-1`` with fixed weights."""

    weights: tuple

    memoryless = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2 or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("weights must be a probability vector over at least two symbols")

    @property
    def k(self) -> int:
        return len(self.weights)

    def distribution(self, history=()) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def sample(self, history, rng, size=None):
        return f2.random_source(rng).choice(self.k, size=size, p=self.distribution())


def uniform_symbols(k: int) -> SymbolChannel:
    return SymbolChannel(tuple([1.0 / k] * k))


def skewed_symbols(weights: Sequence[float]) -> SymbolChannel:
    return SymbolChannel(tuple(float(w) for w in weights))


@dataclass(frozen=True)
class MarkovChannel:
    """Documents are symbols; the next symbol depends on the previous one.

    The first document is drawn from the stationary distribution.
    """

    table: tuple  # row-stochastic k x k, as nested tuples

    memoryless = False

    def __post_init__(self):
        T = self.matrix
        if T.ndim != 2 or T.shape[0] != T.shape[1] or np.any(T < 0) or not np.allclose(T.sum(axis=1), 1.0):
            raise ValueError("bigram table must be a square row-stochastic matrix")

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.float64)

    @property
    def k(self) -> int:
        return len(self.table)

    def stationary(self) -> np.ndarray:
        vals, vecs = np.linalg.eig(self.matrix.T)
        v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
        return v / v.sum()

    def distribution(self, history=()) -> np.ndarray:
        return self.stationary() if len(history) == 0 else self.matrix[history[-1]]

    def sample(self, history, rng, size=None):
        return f2.random_source(rng).choice(self.k, size=size, p=self.distribution(history))


def markov_text(table) -> MarkovChannel:
    return MarkovChannel(tuple(tuple(float(x) for x in row) for row in table))


def parse_channel(spec: str):
    """``uniform:4``, ``skew:0.5,0.25,0.25``, ``markov:FILE`` (whitespace-separated rows)."""
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        return uniform_symbols(int(arg))
    if kind == "skew":
        return skewed_symbols([float(w) for w in arg.split(",")])
    if kind == "markov":
        return markov_text(np.loadtxt(arg, ndmin=2))
    raise ValueError(f"bad covertext channel {spec!r}")


# --------------------------------------------------------------------------
# document hashes
# --------------------------------------------------------------------------

DocHash = Callable[[np.ndarray], np.ndarray]


def parity_hash(docs) -> np.ndarray:
    return (np.asarray(docs) & 1).astype(np.uint8)


def notfirst_hash(docs) -> np.ndarray:
    return (np.asarray(docs) != 0).astype(np.uint8)


HASHES = {"parity": parity_hash, "notfirst": notfirst_hash}


def hash_bias(channel, f: DocHash, history=()) -> float:
    """Exact ``Pr[f(d) = 1]`` for a document drawn given ``history``."""
    p = channel.distribution(history)
    return float(p[f(np.arange(channel.k)) == 1].sum())


def min_entropy_alpha(channel, f: DocHash, history=()) -> float:
    """``min_b Pr[f(d) = b]``."""
    p1 = hash_bias(channel, f, history)
    return min(p1, 1 - p1)


def is_unbiased(channel, f: DocHash, history=()) -> bool:
    return bool(np.isclose(hash_bias(channel, f, history), 0.5))


# --------------------------------------------------------------------------
# encoder / decoder
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StegoKey:
    prc: StegoPrc
    kappa: int = 128

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1")

    def __eq__(self, other):
        return isinstance(other, StegoKey) and self.kappa == other.kappa and self.prc == other.prc

    @property
    def n(self) -> int:
        return self.prc.n

    @property
    def message_bits(self) -> int:
        return self.prc.k if isinstance(self.prc, multi.ConstRateKey) else self.prc.ell

    @property
    def rate(self) -> float:
        """Hidden bits per document, equal to the PRC's rate."""
        return self.message_bits / self.n


def rs_sample(channel, history, f: DocHash, target_bit: int, kappa: int, rng) -> int:
    """First of up to ``kappa`` draws with ``f(d) = target_bit``, else the last draw."""
    rng = f2.random_source(rng)
    for _ in range(kappa):
        d = int(channel.sample(history, rng))
        if f(d) == target_bit:
            return d
    return d


def rs_sample_batch(channel, f: DocHash, targets, kappa: int, rng) -> np.ndarray:
    """Independent rejection samples for a memoryless channel, one per target bit."""
    rng = f2.random_source(rng)
    targets = f2.as_bits(targets)
    draws = channel.sample((), rng, size=(targets.size, kappa))
    match = f(draws) == targets[:, None]
    first = np.where(match.any(axis=1), match.argmax(axis=1), kappa - 1)
    return draws[np.arange(targets.size), first]


@dataclass(frozen=True)
class Stegotext:
    documents: np.ndarray
    # codeword bits the encoder aimed for (test-only trace)
    targets: Optional[np.ndarray] = None

    def flip_rate(self, f: DocHash) -> float:
        """Fraction of documents whose hash missed its target bit."""
        return float(np.mean(f(self.documents) != self.targets))


def prc_encode(prc: StegoPrc, message, rng) -> np.ndarray:
    if isinstance(prc, multi.ConstRateKey):
        return multi.constrate_encode(prc, message, rng)
    return multi.multibit_encode(prc, message, rng)


def prc_decode(prc: StegoPrc, bits):
    if isinstance(prc, multi.ConstRateKey):
        return multi.constrate_decode(prc, bits)
    return multi.multibit_decode(prc, bits)


def embed_bits(channel, f: DocHash, x, kappa: int, history=(), rng=None) -> np.ndarray:
    """One document per bit of ``x``, threading the emitted history."""
    rng = f2.random_source(rng)
    x = f2.as_bits(x)
    if channel.memoryless:
        return rs_sample_batch(channel, f, x, kappa, rng)
    hist = list(history)
    out = np.empty(x.size, dtype=np.int64)
    for i, b in enumerate(x.tolist()):
        out[i] = rs_sample(channel, hist, f, b, kappa, rng)
        hist.append(int(out[i]))
    return out


def steg_encode(key: StegoKey, channel, f: DocHash, message, history=(), rng=None) -> Stegotext:
    rng = f2.random_source(rng)
    x = prc_encode(key.prc, message, rng)
    return Stegotext(embed_bits(channel, f, x, key.kappa, history, rng), x)


def steg_decode(key: StegoKey, f: DocHash, stegotext):
    docs = stegotext.documents if isinstance(stegotext, Stegotext) else np.asarray(stegotext)
    if docs.size != key.n:
        return None
    return prc_decode(key.prc, f(docs))


def resample_flip(channel, f: DocHash, docs, p: float, rng) -> np.ndarray:
    """Replace each document w.p. ``p`` by a fresh draw whose hash is flipped.

    Under a memoryless channel this realizes ``f o E' = BSC_p o f``.
    """
    rng = f2.random_source(rng)
    docs = np.array(docs)
    hit = np.flatnonzero(rng.random(docs.size) < p)
    for i in hit:
        want = 1 - int(f(docs[i]))
        history = docs[:i].tolist()
        while True:
            d = int(channel.sample(history, rng))
            if f(d) == want:
                docs[i] = d
                break
    return docs


def substitute_documents(channel, docs, p: float, rng) -> np.ndarray:
    """Replace each document w.p. ``p`` by a fresh channel draw."""
    rng = f2.random_source(rng)
    docs = np.array(docs)
    hit = rng.random(docs.size) < p
    docs[hit] = channel.sample((), rng, size=int(hit.sum()))
    return docs
