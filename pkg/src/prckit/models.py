"""Deterministic binary language-model stand-ins.

A model maps ``(prompt, prefix bits)`` to the probability that the next bit
is 1.  :meth:`BinaryModel.phat_batch` evaluates many equal-length prefixes at
once; mock models implement it natively so generation can run over whole
corpora at numpy speed.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import f2
from .errors import NotPrefixFree


def _splitmix(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps; numpy only warns about it on scalars
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _prompt_word(seed: int, prompt: str) -> np.uint64:
    h = hashlib.blake2b(f"{seed}\0{prompt}".encode(), digest_size=8).digest()
    return np.uint64(int.from_bytes(h, "little"))


class BinaryModel:
    """Base class; subclasses override :meth:`phat` or :meth:`phat_batch`."""

    max_length: int = 1 << 30
    # True when p-hat depends only on (prompt, position)
    context_free: bool = False

    def phat(self, prompt: str, prefix) -> float:
        prefix = f2.as_bits(prefix)
        return float(self.phat_batch(prompt, prefix[None, :])[0])

    def phat_batch(self, prompt: str, prefixes) -> np.ndarray:
        prefixes = f2.as_bits(prefixes)
        return np.array([self.phat(prompt, p) for p in prefixes], dtype=np.float64)

    def phat_positions(self, prompt: str, length: int) -> np.ndarray:
        """p-hat for every position; only valid for context-free models."""
        raise NotImplementedError


@dataclass
class ConstantModel(BinaryModel):
    c: float = 0.5
    max_length: int = 1 << 30
    context_free = True

    def phat_batch(self, prompt, prefixes):
        return np.full(np.shape(prefixes)[0], self.c)

    def phat_positions(self, prompt, length):
        return np.full(length, self.c)


@dataclass
class HashModel(BinaryModel):
    """p-hat in ``[lo, hi]`` from a keyed hash of prompt, position and recent bits."""

    lo: float = 0.3
    hi: float = 0.7
    seed: int = 0
    context: int = 8
    max_length: int = 1 << 30

    @property
    def context_free(self) -> bool:
        return self.context == 0

    def _mix(self, prompt, position, ctx):
        word = _prompt_word(self.seed, prompt)
        h = _splitmix(word ^ _splitmix(np.uint64(position) + np.uint64(self.context << 40)))
        h = _splitmix(h ^ ctx)
        u = (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
        return self.lo + (self.hi - self.lo) * u

    def phat_batch(self, prompt, prefixes):
        prefixes = f2.as_bits(prefixes)
        if prefixes.ndim == 1:
            prefixes = prefixes[None, :]
        i = prefixes.shape[1]
        k = min(self.context, i)
        ctx = np.zeros(prefixes.shape[0], dtype=np.uint64)
        for j in range(i - k, i):
            ctx = (ctx << np.uint64(1)) | prefixes[:, j].astype(np.uint64)
        return self._mix(prompt, i, ctx)

    def phat_positions(self, prompt, length):
        if self.context:
            raise NotImplementedError("model depends on the prefix")
        return self._mix(prompt, np.arange(length, dtype=np.uint64), np.uint64(0))


@dataclass
class SignModel(HashModel):
    """p-hat = 1/2 +- ``magnitude``, the sign drawn from the keyed hash.

    Biased sampling then flips an embedded bit with probability ``magnitude``
    whichever its value, so the embedding channel is exactly BSC(magnitude).
    """

    magnitude: float = 0.05
    context: int = 0
    _memo: object = field(default=None, repr=False, compare=False)

    def _mix(self, prompt, position, ctx):
        u = HashModel(0.0, 1.0, self.seed, self.context)._mix(prompt, position, ctx)
        return np.where(u < 0.5, 0.5 - self.magnitude, 0.5 + self.magnitude)

    def phat_positions(self, prompt, length):
        # one-entry memo: deletion-scale responses reuse one ~10^7-long table
        if self._memo is None or self._memo[0] != (prompt, length):
            ph = super().phat_positions(prompt, length)
            ph.flags.writeable = False
            self._memo = ((prompt, length), ph)
        return self._memo[1]


@dataclass
class BurstyModel(BinaryModel):
    """Alternates high-entropy spans (p-hat = ``high``) with deterministic spans.

    ``spans`` lists span lengths, starting with a high-entropy span; the
    pattern repeats.  Deterministic positions carry p-hat 0 or 1 chosen by a
    keyed hash of the position.
    """

    spans: Sequence[int] = (64, 64)
    high: float = 0.5
    seed: int = 0
    max_length: int = 1 << 30
    context_free = True

    def phat_positions(self, prompt, length):
        pos = np.arange(length)
        period = int(sum(self.spans))
        edges = np.cumsum(self.spans)
        span_ix = np.searchsorted(edges, pos % period, side="right")
        det = span_ix % 2 == 1
        coin = _splitmix(_prompt_word(self.seed, prompt) ^ pos.astype(np.uint64)) & np.uint64(1)
        return np.where(det, coin.astype(np.float64), self.high)

    def phat_batch(self, prompt, prefixes):
        i = np.shape(prefixes)[1]
        return np.full(np.shape(prefixes)[0], self.phat_positions(prompt, i + 1)[i])


def sample_plain(model: BinaryModel, prompt: str, rng, length: int, count: int = 1) -> np.ndarray:
    """Unwatermarked responses: ``(count, length)`` bits drawn from the model."""
    rng = f2.random_source(rng)
    if model.context_free:
        ph = model.phat_positions(prompt, length)
        return (rng.random((count, length)) < ph).astype(np.uint8)
    out = np.zeros((count, length), dtype=np.uint8)
    for i in range(length):
        ph = model.phat_batch(prompt, out[:, :i])
        out[:, i] = rng.random(count) < ph
    return out


def parse_model(spec: str) -> BinaryModel:
    """``const:0.5``, ``hash:0.3:0.7[:seed]``, ``sign:0.05[:seed]``, ``bursty:64,64[:high]``."""
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    if kind == "const" and len(args) == 1:
        return ConstantModel(float(args[0]))
    if kind == "hash" and len(args) in (2, 3):
        seed = int(args[2]) if len(args) == 3 else 0
        return HashModel(float(args[0]), float(args[1]), seed)
    if kind == "sign" and len(args) in (1, 2):
        return SignModel(seed=int(args[1]) if len(args) == 2 else 0, magnitude=float(args[0]))
    if kind == "bursty" and len(args) in (1, 2):
        spans = tuple(int(s) for s in args[0].split(","))
        high = float(args[1]) if len(args) == 2 else 0.5
        return BurstyModel(spans, high)
    raise ValueError(f"bad model spec {spec!r}")


# --------------------------------------------------------------------------
# token-to-bit transform
# --------------------------------------------------------------------------

TokenModel = Callable[[str, Sequence], Mapping]


def check_prefix_free(code: Mapping) -> None:
    words = list(code.values())
    if len(set(words)) != len(words) or any(not w for w in words):
        raise NotPrefixFree("codewords must be distinct and non-empty")
    for a, b in itertools.permutations(words, 2):
        if b.startswith(a):
            raise NotPrefixFree(f"{a!r} is a prefix of {b!r}")


class BinarizedModel(BinaryModel):
    """Binary view of a token model under a prefix-free token encoding.

    The next-bit probability conditions on the bits already emitted inside the
    current token: ``P(1 | s) = sum_{Enc(t) starts with s+'1'} p(t) / sum_{Enc(t) starts with s} p(t)``.
    """

    def __init__(self, token_model: TokenModel, code: Mapping):
        check_prefix_free(code)
        self.token_model = token_model
        self.code = dict(code)
        self._decode = {w: t for t, w in self.code.items()}

    def split(self, bits) -> tuple[list, str]:
        """Completed tokens and the pending partial codeword."""
        tokens, cur = [], ""
        for b in f2.as_bits(bits).tolist():
            cur += "1" if b else "0"
            if cur in self._decode:
                tokens.append(self._decode[cur])
                cur = ""
        return tokens, cur

    def decode_tokens(self, bits) -> list:
        tokens, pending = self.split(bits)
        if pending:
            raise ValueError("bit string ends inside a token")
        return tokens

    def encode_tokens(self, tokens) -> np.ndarray:
        return f2.bits_from_str("".join(self.code[t] for t in tokens))

    def phat(self, prompt, prefix) -> float:
        tokens, s = self.split(prefix)
        probs = self.token_model(prompt, tokens)
        total = sum(p for t, p in probs.items() if self.code[t].startswith(s))
        if total <= 0:
            raise ValueError("prefix has zero probability")
        ones = sum(p for t, p in probs.items() if self.code[t].startswith(s + "1"))
        return ones / total


def binarize_model(token_model: TokenModel, code: Mapping) -> BinarizedModel:
    return BinarizedModel(token_model, code)
