"""Publicly attributable watermarking: signatures embedded with a multi-bit PRC.

The PRC secret key is *public* here.  Block 0 of a response carries the
message ``0^ell``; block ``b >= 1`` carries a signature over exactly the
tokens ``t[0 : b*N]`` that precede it, where ``N = n (ell + 1)`` is the
multi-bit codeword length.  Every block is one-time padded with ``a_b``.
"""
from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from . import f2, multi, watermark, zero
from .errors import CapacityTooSmall
from .models import BinaryModel


class SignatureScheme(Protocol):
    sig_len: int

    def keygen(self, rng) -> tuple[bytes, bytes]: ...

    def sign(self, sk: bytes, message) -> np.ndarray: ...

    def verify(self, vk: bytes, message, sig) -> bool: ...


@dataclass(frozen=True)
class HmacTagScheme:
    """Truncated HMAC-SHA256 tag standing in for a signature.

    Verification needs the tag key, so the "verify key" equals the signing
    key; this is a desk-scale stand-in, not a public-key signature.
    """

    sig_len: int = 64

    def keygen(self, rng) -> tuple[bytes, bytes]:
        key = f2.random_source(rng).bytes(32)
        return key, key

    def sign(self, sk: bytes, message) -> np.ndarray:
        m = f2.as_bits(message)
        mac = hmac.new(sk, m.size.to_bytes(8, "little") + f2.pack_bits(m), hashlib.sha256)
        stream = hashlib.shake_256(mac.digest()).digest((self.sig_len + 7) // 8)
        return f2.unpack_bits(stream, self.sig_len)

    def verify(self, vk: bytes, message, sig) -> bool:
        sig = f2.as_bits(sig)
        return sig.size == self.sig_len and hmac.compare_digest(
            f2.pack_bits(self.sign(vk, message)), f2.pack_bits(sig)
        )


@dataclass(frozen=True, eq=False)
class AttrPublicKey:
    prc: multi.MultiBitKey
    sig_vk: bytes
    pads: np.ndarray  # (count, N)
    Lstar: int
    scheme: SignatureScheme

    @property
    def block(self) -> int:
        return self.prc.n

    def __eq__(self, other):
        return (
            isinstance(other, AttrPublicKey)
            and self.prc == other.prc
            and self.sig_vk == other.sig_vk
            and np.array_equal(self.pads, other.pads)
            and self.Lstar == other.Lstar
            and self.scheme == other.scheme
        )


@dataclass(frozen=True)
class AttrSecretKey:
    sig_sk: bytes


@dataclass(frozen=True)
class AttrReport:
    verified: bool
    prefix_len: int = -1
    block: int = -1
    pad: int = -1

    def __bool__(self):
        return self.verified

    def as_line(self) -> str:
        return (
            f"verdict={'attributed' if self.verified else 'bot'} prefix_len={self.prefix_len} "
            f"block={self.block} pad={self.pad}"
        )


def attr_setup(
    prc_params: zero.PrcParams,
    Lstar: int,
    sig_scheme: Optional[SignatureScheme] = None,
    rng=None,
    *,
    ell: Optional[int] = None,
) -> tuple[AttrPublicKey, AttrSecretKey]:
    """Multi-bit PRC keys with ``ell`` message bits (default: signature length)."""
    rng = f2.random_source(rng)
    scheme = sig_scheme or HmacTagScheme()
    ell = scheme.sig_len if ell is None else ell
    if ell < scheme.sig_len:
        raise CapacityTooSmall(f"PRC carries {ell} bits but signatures have {scheme.sig_len}")
    sig_sk, sig_vk = scheme.keygen(rng)
    prc = multi.multibit_keygen(ell, prc_params, rng)
    if Lstar < prc.n:
        raise ValueError(f"Lstar={Lstar} is shorter than one block ({prc.n})")
    pads = f2.random_bits(rng, (math.ceil(Lstar / prc.n), prc.n))
    return AttrPublicKey(prc, sig_vk, pads, Lstar, scheme), AttrSecretKey(sig_sk)


def _payload(pk: AttrPublicKey, sig) -> np.ndarray:
    out = np.zeros(pk.prc.ell, dtype=np.uint8)
    out[: pk.scheme.sig_len] = sig
    return out


def attr_generate_batch(
    pk: AttrPublicKey,
    sk: AttrSecretKey,
    prompt: str,
    model: BinaryModel,
    rng,
    count: int,
    length: Optional[int] = None,
) -> np.ndarray:
    """``(count, L)`` attributed responses."""
    rng = f2.random_source(rng)
    L = min(pk.Lstar if length is None else length, pk.Lstar, model.max_length)
    N = pk.block
    tokens = np.zeros((count, 0), dtype=np.uint8)
    for b in range(math.ceil(L / N)):
        x = np.empty((count, N), dtype=np.uint8)
        for c in range(count):
            msg = np.zeros(pk.prc.ell, dtype=np.uint8) if b == 0 else _payload(pk, pk.scheme.sign(sk.sig_sk, tokens[c]))
            x[c] = multi.multibit_encode(pk.prc, msg, rng) ^ pk.pads[b]
        w = min(N, L - b * N)
        new, _ = watermark.sample_tokens(model, prompt, x[:, :w], rng, prefix=tokens)
        tokens = np.concatenate([tokens, new], axis=1)
    return tokens


def attr_generate(pk, sk, prompt, model, rng, length=None) -> watermark.Response:
    return watermark.Response(attr_generate_batch(pk, sk, prompt, model, rng, 1, length)[0])


# --------------------------------------------------------------------------
# scanning
# --------------------------------------------------------------------------

def _sentinel_system(pk: AttrPublicKey) -> tuple[np.ndarray, np.ndarray]:
    """Window offsets of the sentinel block's parity checks and per-pad constants."""
    key = pk.prc
    sk = key.inner.sk
    offsets = key.pi.inverse[key.ell * key.block + sk.P.idx]
    consts = (pk.pads[:, offsets].sum(axis=-1) & 1).astype(np.uint8) ^ sk.pz
    return offsets, consts


def sentinel_hits(pk: AttrPublicKey, tokens) -> list[tuple[int, int]]:
    """``(start, pad)`` pairs whose window passes the sentinel check, in scan order."""
    tokens = f2.as_bits(tokens)
    if tokens.size < pk.block:
        return []
    offsets, consts = _sentinel_system(pk)
    unsat = watermark.scan_unsat(tokens, offsets, consts, pk.block)
    pads, starts = np.nonzero(unsat < pk.prc.inner.params.threshold)
    return sorted(zip(starts.tolist(), pads.tolist()))


def attr_detect(pk: AttrPublicKey, tokens) -> watermark.DetectReport:
    """Watermark detection with the public PRC key: any window whose decode is not ⊥."""
    tokens = f2.as_bits(tokens)
    hits = sentinel_hits(pk, tokens)
    if not hits:
        return watermark.NOT_DETECTED
    i, ell = hits[0]
    blocks = multi.multibit_blocks(pk.prc, tokens[i: i + pk.block] ^ pk.pads[ell])
    unsat = zero.unsat_counts(pk.prc.inner.sk, blocks[-1])
    return watermark.DetectReport(True, i, i + pk.block, ell, unsat, pk.prc.inner.params.threshold)


def attr_text(pk: AttrPublicKey, tokens) -> tuple[Optional[np.ndarray], bool, AttrReport]:
    """First window whose decoded signature verifies over the tokens before it."""
    tokens = f2.as_bits(tokens)
    for i, ell in sentinel_hits(pk, tokens):
        msg = multi.multibit_decode(pk.prc, tokens[i: i + pk.block] ^ pk.pads[ell])
        if msg is None:
            continue
        prefix = tokens[:i]
        if pk.scheme.verify(pk.sig_vk, prefix, msg[: pk.scheme.sig_len]):
            return prefix, True, AttrReport(True, i, i // pk.block, ell)
    return None, False, AttrReport(False)


def attr_text_literal(pk: AttrPublicKey, tokens) -> tuple[Optional[np.ndarray], bool]:
    """Reference scan: full multi-bit decode of every window and pad."""
    tokens = f2.as_bits(tokens)
    for i in range(tokens.size - pk.block + 1):
        for ell, pad in enumerate(pk.pads):
            msg = multi.multibit_decode(pk.prc, tokens[i: i + pk.block] ^ pad)
            if msg is not None and pk.scheme.verify(pk.sig_vk, tokens[:i], msg[: pk.scheme.sig_len]):
                return tokens[:i], True
    return None, False


# --------------------------------------------------------------------------
# forgery experiment
# --------------------------------------------------------------------------

Oracle = Callable[[str], np.ndarray]
Adversary = Callable[[AttrPublicKey, Oracle, np.random.Generator], np.ndarray]


def _contains(haystack: np.ndarray, needle: np.ndarray) -> bool:
    return f2.bits_to_str(needle) in f2.bits_to_str(haystack)


def attr_forge_experiment(
    adversary: Adversary,
    pk: AttrPublicKey,
    sk: AttrSecretKey,
    trials: int,
    model: BinaryModel,
    rng,
    *,
    length: Optional[int] = None,
) -> float:
    """Fraction of trials where the adversary's text attributes to an unqueried prefix."""
    rng = f2.random_source(rng)
    wins = 0
    for _ in range(trials):
        queries: list[np.ndarray] = []

        def oracle(prompt: str) -> np.ndarray:
            out = attr_generate_batch(pk, sk, prompt, model, rng, 1, length)[0]
            queries.append(out)
            return out

        forged = adversary(pk, oracle, rng)
        prefix, ok, _ = attr_text(pk, forged)
        if ok and not any(_contains(q, prefix) for q in queries):
            wins += 1
    return wins / trials


def splice_adversary(pk, oracle, rng) -> np.ndarray:
    a, b = oracle("splice-a"), oracle("splice-b")
    return np.concatenate([a[: a.size // 2], b[b.size // 2:]])


def flip_adversary(pk, oracle, rng) -> np.ndarray:
    """Flips one bit inside the signed prefix of an honest response."""
    t = oracle("flip").copy()
    t[int(rng.integers(0, min(t.size, pk.block)))] ^= 1
    return t


def replay_adversary(pk, oracle, rng) -> np.ndarray:
    return oracle("replay")
