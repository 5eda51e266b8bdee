"""Boosting transforms built on top of a zero-bit code.

* multi-bit codes: one zero-bit block per message bit plus a sentinel block,
  all shuffled by a secret permutation;
* constant-rate codes: a multi-bit encoding of a fresh seed followed by an
  error-correcting encoding of the message masked with ``PRG(seed)``;
* the majority code and the deletion-robust wrapper built from it;
* the heuristic permuted code (secret permutation over a noisy ECC codeword).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Protocol, Union

import numpy as np
from scipy import optimize, stats

from . import f2, zero
from .errors import EvenWidth, LengthMismatch, TooShort


# --------------------------------------------------------------------------
# pluggable ECC and PRG
# --------------------------------------------------------------------------

class EccInterface(Protocol):
    k: int
    n: int

    def encode(self, message) -> np.ndarray: ...

    def decode(self, block) -> Optional[np.ndarray]: ...

    @property
    def rate(self) -> float: ...

    @property
    def tolerated_rate(self) -> float: ...


@lru_cache(maxsize=None)
def _repetition_tolerance(T: int, failure: float) -> float:
    def tail(p):
        return stats.binom.sf(T // 2, T, p) - failure

    return float(optimize.brentq(tail, 1e-9, 0.5))


@dataclass(frozen=True)
class RepetitionCode:
    """Each bit repeated ``T`` times (T odd), decoded by majority."""

    k: int
    T: int = 15

    def __post_init__(self):
        if self.T < 1 or self.T % 2 == 0:
            raise EvenWidth("repetition factor must be odd")

    @property
    def n(self) -> int:
        return self.k * self.T

    @property
    def rate(self) -> float:
        return 1 / self.T

    @property
    def tolerated_rate(self) -> float:
        """Random flip rate at which a single bit fails w.p. 1e-3."""
        return _repetition_tolerance(self.T, 1e-3)

    def encode(self, message) -> np.ndarray:
        m = f2.as_bits(message)
        if m.shape[-1] != self.k:
            raise LengthMismatch(f"repetition code expects {self.k} bits")
        return np.repeat(m, self.T, axis=-1)

    def decode(self, block) -> np.ndarray:
        b = f2.as_bits(block)
        if b.shape[-1] != self.n:
            raise LengthMismatch(f"repetition code expects {self.n} bits")
        votes = b.reshape(b.shape[:-1] + (self.k, self.T)).sum(axis=-1)
        return (2 * votes > self.T).astype(np.uint8)


class PrgInterface(Protocol):
    def expand(self, seed, out_len: int) -> np.ndarray: ...


class ShakePrg:
    """SHAKE-256 stream keyed by the packed seed bits."""

    def expand(self, seed, out_len: int) -> np.ndarray:
        seed = f2.as_bits(seed)
        data = hashlib.shake_256(len(seed).to_bytes(4, "little") + f2.pack_bits(seed))
        return f2.unpack_bits(data.digest((out_len + 7) // 8), out_len)


# --------------------------------------------------------------------------
# multi-bit code
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiBitKey:
    inner: zero.ZeroBitKey
    ell: int
    pi: f2.Permutation

    def __post_init__(self):
        if self.pi.n != self.inner.n * (self.ell + 1):
            raise LengthMismatch("permutation size must be n * (ell + 1)")

    @property
    def block(self) -> int:
        return self.inner.n

    @property
    def n(self) -> int:
        return self.inner.n * (self.ell + 1)

    def __eq__(self, other):
        return (
            isinstance(other, MultiBitKey)
            and self.ell == other.ell
            and self.inner.sk == other.inner.sk
            and self.inner.pk == other.inner.pk
            and self.pi == other.pi
        )


def multibit_keygen(ell: int, inner_params: zero.PrcParams, rng) -> MultiBitKey:
    if ell < 1:
        raise ValueError("ell must be at least 1")
    rng = f2.random_source(rng)
    inner = zero.keygen(inner_params, rng)
    pi = f2.random_permutation(inner_params.n * (ell + 1), rng)
    return MultiBitKey(inner, ell, pi)


def multibit_encode(key: MultiBitKey, m, rng) -> np.ndarray:
    rng = f2.random_source(rng)
    m = f2.as_bits(m)
    if m.shape != (key.ell,):
        raise LengthMismatch(f"message must have {key.ell} bits")
    n = key.block
    blocks = f2.random_bits(rng, (key.ell + 1, n))
    marked = np.flatnonzero(np.append(m, 1))
    blocks[marked] = zero.encode(key.inner.pk, rng, size=marked.size)
    return key.pi.apply(blocks.ravel())


def multibit_blocks(key: MultiBitKey, x) -> np.ndarray:
    x = f2.as_bits(x)
    if x.shape[-1] != key.n:
        raise LengthMismatch(f"multi-bit decode expects length {key.n}, got {x.shape[-1]}")
    return key.pi.apply_inverse(x).reshape(key.ell + 1, key.block)


def multibit_decode(key: MultiBitKey, x) -> Optional[np.ndarray]:
    """Message bits, or ``None`` when the sentinel block is rejected."""
    verdicts = zero.detect_batch(key.inner.sk, multibit_blocks(key, x))
    if not verdicts[-1]:
        return None
    return verdicts[:-1].astype(np.uint8)


# --------------------------------------------------------------------------
# constant-rate code
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstRateKey:
    inner: MultiBitKey
    ecc: EccInterface
    pi: f2.Permutation
    lam: int
    prg: PrgInterface = field(default_factory=ShakePrg)

    def __post_init__(self):
        if self.inner.ell != self.lam:
            raise ValueError("inner multi-bit code must carry lam-bit seeds")
        if self.pi.n != self.inner.n + self.ecc.n:
            raise LengthMismatch("permutation size must be n' + n_ecc")

    @property
    def k(self) -> int:
        return self.ecc.k

    @property
    def n(self) -> int:
        return self.inner.n + self.ecc.n

    @property
    def rate(self) -> float:
        return self.k / self.n

    def __eq__(self, other):
        return (
            isinstance(other, ConstRateKey)
            and self.inner == other.inner
            and self.ecc == other.ecc
            and self.pi == other.pi
            and self.lam == other.lam
        )


def constrate_keygen(
    k: int,
    inner_params: zero.PrcParams,
    rng,
    *,
    ecc: Optional[EccInterface] = None,
    lam: int = 128,
    prg: Optional[PrgInterface] = None,
) -> ConstRateKey:
    rng = f2.random_source(rng)
    ecc = RepetitionCode(k) if ecc is None else ecc
    inner = multibit_keygen(lam, inner_params, rng)
    pi = f2.random_permutation(inner.n + ecc.n, rng)
    return ConstRateKey(inner, ecc, pi, lam, prg or ShakePrg())


def constrate_encode(key: ConstRateKey, m, rng) -> np.ndarray:
    rng = f2.random_source(rng)
    m = f2.as_bits(m)
    if m.shape != (key.k,):
        raise LengthMismatch(f"message must have {key.k} bits")
    seed = f2.random_bits(rng, key.lam)
    head = multibit_encode(key.inner, seed, rng)
    tail = key.prg.expand(seed, key.ecc.n) ^ key.ecc.encode(m)
    return key.pi.apply(np.concatenate([head, tail]))


def constrate_decode(key: ConstRateKey, c) -> Optional[np.ndarray]:
    c = f2.as_bits(c)
    if c.shape != (key.n,):
        raise LengthMismatch(f"constant-rate decode expects length {key.n}")
    y = key.pi.apply_inverse(c)
    seed = multibit_decode(key.inner, y[: key.inner.n])
    if seed is None:
        return None
    return key.ecc.decode(key.prg.expand(seed, key.ecc.n) ^ y[key.inner.n:])


# --------------------------------------------------------------------------
# majority code
# --------------------------------------------------------------------------

def majenc(x, m: int, rng) -> np.ndarray:
    """Each bit becomes a uniform m-bit block whose majority is that bit."""
    if m < 1 or m % 2 == 0:
        raise EvenWidth("majority width must be odd")
    rng = f2.random_source(rng)
    x = f2.as_bits(x)
    out = np.empty((x.size, m), dtype=np.uint8)
    todo = np.arange(x.size)
    while todo.size:
        cand = f2.random_bits(rng, (todo.size, m))
        ok = (2 * cand.sum(axis=1, dtype=np.int64) > m) == x[todo].astype(bool)
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return out.ravel()


def block_sizes(length: int, n: int) -> np.ndarray:
    """Near-equal partition sizes; the first ``length % n`` blocks get the extra bit."""
    sizes = np.full(n, length // n, dtype=np.int64)
    sizes[: length % n] += 1
    return sizes


def majdec(z, n: int, rng) -> np.ndarray:
    z = f2.as_bits(z)
    if n < 1 or z.size < n:
        raise TooShort(f"cannot split {z.size} bits into {n} blocks")
    rng = f2.random_source(rng)
    sizes = block_sizes(z.size, n)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    ones = np.add.reduceat(z.astype(np.int64), starts)
    out = (2 * ones > sizes).astype(np.uint8)
    tie = 2 * ones == sizes
    if tie.any():
        out[tie] = f2.random_bits(rng, int(tie.sum()))
    return out


# --------------------------------------------------------------------------
# deletion-robust wrapper
# --------------------------------------------------------------------------

InnerKey = Union[zero.ZeroBitKey, MultiBitKey]


@dataclass(frozen=True, eq=False)
class DeletionKey:
    inner: InnerKey
    m: int

    def __post_init__(self):
        if self.m < 1 or self.m % 2 == 0:
            raise EvenWidth("majority width must be odd")

    @property
    def block(self) -> int:
        return self.inner.n

    @property
    def n(self) -> int:
        return self.inner.n * self.m

    def __eq__(self, other):
        return isinstance(other, DeletionKey) and self.m == other.m and _inner_eq(self.inner, other.inner)


def _inner_eq(a, b) -> bool:
    if isinstance(a, zero.ZeroBitKey) and isinstance(b, zero.ZeroBitKey):
        return a.sk == b.sk and a.pk == b.pk
    return a == b


def inner_encode(inner: InnerKey, message, rng) -> np.ndarray:
    if isinstance(inner, MultiBitKey):
        return multibit_encode(inner, message, rng)
    return zero.encode(inner.pk, rng)


def inner_decode(inner: InnerKey, x):
    """Multi-bit message / ``None``, or a zero-bit :class:`DecodeOutcome`."""
    if isinstance(inner, MultiBitKey):
        return multibit_decode(inner, x)
    return zero.decode(inner.sk, x)


def deletion_encode(key: DeletionKey, message=None, rng=None) -> np.ndarray:
    rng = f2.random_source(rng)
    return majenc(inner_encode(key.inner, message, rng), key.m, rng)


def deletion_decode(key: DeletionKey, z, rng=None):
    """Inner decode of the majority-decoded string; too-short input is rejected."""
    rng = f2.random_source(rng)
    z = f2.as_bits(z)
    if z.size < key.block:
        if isinstance(key.inner, MultiBitKey):
            return None
        return zero.DecodeOutcome(zero.Verdict.BOT, key.inner.params.r, key.inner.params.threshold)
    return inner_decode(key.inner, majdec(z, key.block, rng))


# --------------------------------------------------------------------------
# heuristic permuted code
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PermutedCodeKey:
    pi: f2.Permutation
    ecc: EccInterface
    eta: float
    lam: int

    @property
    def k(self) -> int:
        return self.ecc.k - self.lam

    @property
    def n(self) -> int:
        return self.ecc.n

    def __eq__(self, other):
        return (
            isinstance(other, PermutedCodeKey)
            and self.pi == other.pi
            and self.ecc == other.ecc
            and self.eta == other.eta
            and self.lam == other.lam
        )


def permuted_keygen(k: int, rng, *, ecc: Optional[EccInterface] = None, eta: float = 0.05, lam: int = 128) -> PermutedCodeKey:
    rng = f2.random_source(rng)
    ecc = RepetitionCode(k + lam) if ecc is None else ecc
    if ecc.k != k + lam:
        raise LengthMismatch("ECC must carry k + lam message bits")
    return PermutedCodeKey(f2.random_permutation(ecc.n, rng), ecc, eta, lam)


def permuted_encode(key: PermutedCodeKey, m, rng) -> np.ndarray:
    rng = f2.random_source(rng)
    m = f2.as_bits(m)
    if m.shape != (key.k,):
        raise LengthMismatch(f"message must have {key.k} bits")
    prefix = f2.random_bits(rng, key.lam)
    c = key.ecc.encode(np.concatenate([prefix, m])) ^ f2.bernoulli(rng, key.eta, key.n)
    return key.pi.apply(c)


def permuted_decode(key: PermutedCodeKey, x) -> Optional[np.ndarray]:
    x = f2.as_bits(x)
    if x.shape != (key.n,):
        raise LengthMismatch(f"permuted decode expects length {key.n}")
    decoded = key.ecc.decode(key.pi.apply_inverse(x))
    if decoded is None:
        return None
    return decoded[-key.k:] if key.k else decoded[:0]
