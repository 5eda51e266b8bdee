"""Zero-bit public-key LDPC pseudorandom code.

Keys are sampled from a random LDPC ensemble: ``P`` has i.i.d. ``t``-sparse
rows, ``G`` has columns drawn uniformly from ``ker P`` and ``z`` is a uniform
one-time pad.  Codewords are ``G u + z + e`` with Bernoulli(eta) noise ``e``;
a string is accepted when fewer than ``ceil((1/2 - zeta) r)`` parity checks
of ``P`` fail on ``x + z``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from . import f2
from .errors import BadParams, DegenerateKernel, LengthMismatch

logger = logging.getLogger(__name__)

KEYGEN_RETRIES = 16
DEFAULT_ALPHA_TARGET = 0.35
DEFAULT_SPARSITY_SCALE = 1.0 / 3.0


@dataclass(frozen=True)
class PrcParams:
    n: int
    g: int
    t: int
    r: int
    eta: float = 0.05
    zeta: float = 0.1

    def __post_init__(self):
        if self.n < 1:
            raise BadParams("n must be positive")
        if not 1 <= self.t <= self.n:
            raise BadParams(f"t={self.t} must lie in [1, n]")
        if self.r < 0:
            raise BadParams("r must be non-negative")
        if not 1 <= self.g <= self.n:
            raise BadParams(f"g={self.g} must lie in [1, n]")
        if not 0 <= self.eta < 0.5:
            raise BadParams("eta must lie in [0, 1/2)")
        if not 0 < self.zeta < 0.5:
            raise BadParams("zeta must lie in (0, 1/2)")

    @property
    def threshold(self) -> int:
        """Detected iff the unsatisfied-check count is strictly below this."""
        return math.ceil((0.5 - self.zeta) * self.r)


@dataclass(frozen=True, eq=False)
class ZeroBitSecretKey:
    P: f2.SparseMatrix
    z: np.ndarray
    params: PrcParams

    @cached_property
    def pz(self) -> np.ndarray:
        return f2.syndrome(self.P, self.z)

    def __eq__(self, other):
        return (
            isinstance(other, ZeroBitSecretKey)
            and self.params == other.params
            and self.P == other.P
            and np.array_equal(self.z, other.z)
        )


@dataclass(frozen=True, eq=False)
class ZeroBitPublicKey:
    G: np.ndarray
    z: np.ndarray
    params: PrcParams
    kernel_dim: Optional[int] = field(default=None, compare=False)

    def __eq__(self, other):
        return (
            isinstance(other, ZeroBitPublicKey)
            and self.params == other.params
            and np.array_equal(self.G, other.G)
            and np.array_equal(self.z, other.z)
        )


class ZeroBitKey(NamedTuple):
    sk: ZeroBitSecretKey
    pk: ZeroBitPublicKey

    @property
    def params(self) -> PrcParams:
        return self.sk.params

    @property
    def n(self) -> int:
        return self.sk.params.n


class Verdict(Enum):
    DETECTED = "detected"
    BOT = "bot"


@dataclass(frozen=True)
class DecodeOutcome:
    verdict: Verdict
    unsat_count: int
    threshold: int

    @property
    def detected(self) -> bool:
        return self.verdict is Verdict.DETECTED

    def __bool__(self):
        return self.detected


def keygen(params: PrcParams, rng) -> ZeroBitKey:
    """Sample ``(sk, pk)``; retries when ``ker P`` is trivial."""
    rng = f2.random_source(rng)
    n = params.n
    for attempt in range(KEYGEN_RETRIES):
        P = f2.sample_sparse_matrix(n, params.t, params.r, rng)
        basis = f2.kernel_basis(P)
        if basis.shape[1] > 0:
            break
        logger.warning("keygen attempt %d: kernel of P is trivial, resampling", attempt + 1)
    else:
        raise DegenerateKernel(f"ker P was trivial in {KEYGEN_RETRIES} attempts")
    G = f2.combine_columns(basis, params.g, rng)
    z = f2.random_bits(rng, n)
    logger.debug("keygen n=%d r=%d t=%d: kernel dimension %d", n, params.r, params.t, basis.shape[1])
    sk = ZeroBitSecretKey(P, z, params)
    pk = ZeroBitPublicKey(G, z, params, kernel_dim=basis.shape[1])
    return ZeroBitKey(sk, pk)


def encode(pk: ZeroBitPublicKey, rng, size: Optional[int] = None) -> np.ndarray:
    """One codeword, or a ``(size, n)`` batch when ``size`` is given."""
    rng = f2.random_source(rng)
    p = pk.params
    shape = (p.n,) if size is None else (size, p.n)
    u = f2.random_bits(rng, shape[:-1] + (p.g,))
    e = f2.bernoulli(rng, p.eta, shape)
    return f2.mat_vec(pk.G, u) ^ pk.z ^ e


def unsat_counts(sk: ZeroBitSecretKey, x) -> np.ndarray | int:
    """``wt(Px + Pz)`` for one string or each row of a batch."""
    x = f2.as_bits(x)
    if x.shape[-1] != sk.params.n:
        raise LengthMismatch(f"decode expects length {sk.params.n}, got {x.shape[-1]}")
    s = f2.syndrome(sk.P, x) ^ sk.pz
    counts = s.sum(axis=-1, dtype=np.int64)
    return int(counts) if x.ndim == 1 else counts


def decode(sk: ZeroBitSecretKey, x) -> DecodeOutcome:
    count = unsat_counts(sk, x)
    thr = sk.params.threshold
    verdict = Verdict.DETECTED if count < thr else Verdict.BOT
    return DecodeOutcome(verdict, count, thr)


def detect_batch(sk: ZeroBitSecretKey, X) -> np.ndarray:
    """Boolean verdicts for each row of ``X``."""
    return unsat_counts(sk, np.atleast_2d(X)) < sk.params.threshold


# --------------------------------------------------------------------------
# parameter helpers
# --------------------------------------------------------------------------

def expected_unsat_fraction(t: int, delta: float) -> float:
    """Probability that a weight-t parity check fails under iid flips at rate delta."""
    if not 0 <= delta <= 0.5:
        raise BadParams("delta must lie in [0, 1/2]")
    return 0.5 - (1 - 2 * delta) ** t / 2


def max_sparsity_for(r: int, alpha: float) -> int:
    """Largest ``t`` with ``t <= (1/5) log_{1/(2 alpha)} r``, floored at 1."""
    if not 0 < alpha < 0.5:
        raise BadParams("alpha must lie in (0, 1/2)")
    if r < 2:
        raise BadParams("r must be at least 2")
    return max(1, math.floor(0.2 * math.log(r) / math.log(1 / (2 * alpha))))


def _preset_sparsity(n: int, r: int, sparsity_scale: float, alpha_target: float) -> int:
    t = min(math.floor(sparsity_scale * math.log2(n)), max_sparsity_for(r, alpha_target))
    return max(1, t)


def preset_lpn(
    n: int,
    eta: float = 0.05,
    sparsity_scale: float = DEFAULT_SPARSITY_SCALE,
    *,
    c_g: float = 1.0,
    alpha_target: float = DEFAULT_ALPHA_TARGET,
) -> PrcParams:
    """``r = 0.99 n``, ``zeta = r^(-1/4)``, ``g = c_g log2(n)^2``, ``t = Theta(log n)``."""
    if n < 64:
        raise BadParams("LPN preset needs n >= 64")
    r = math.floor(0.99 * n)
    g = min(n, math.ceil(c_g * math.log2(n) ** 2))
    t = _preset_sparsity(n, r, sparsity_scale, alpha_target)
    return PrcParams(n=n, g=g, t=t, r=r, eta=eta, zeta=r ** -0.25)


def preset_xor(
    n: int,
    epsilon: float,
    eta: float = 0.05,
    sparsity_scale: float = DEFAULT_SPARSITY_SCALE,
    *,
    alpha_target: float = DEFAULT_ALPHA_TARGET,
) -> PrcParams:
    """``g = r = n^epsilon`` and ``zeta = n^(-epsilon/4)``."""
    if not 0 < epsilon < 1:
        raise BadParams("epsilon must lie in (0, 1)")
    r = math.ceil(n ** epsilon - 1e-9)
    if r > 0.99 * n:
        raise BadParams(f"n^epsilon = {r} exceeds 0.99 n")
    if r < 2:
        raise BadParams("n^epsilon must be at least 2")
    t = _preset_sparsity(n, r, sparsity_scale, alpha_target)
    return PrcParams(n=n, g=r, t=t, r=r, eta=eta, zeta=n ** (-epsilon / 4))


# --------------------------------------------------------------------------
# planted XOR instances
# --------------------------------------------------------------------------

class PlantedXor(NamedTuple):
    G: np.ndarray
    s: Optional[np.ndarray]


def sample_planted_xor(n: int, m: int, t: int, planted: bool, rng) -> PlantedXor:
    """Uniform ``(n, m)`` matrix, or one with a hidden t-sparse ``s`` with ``s^T G = 0``."""
    if m > n:
        raise BadParams("planted XOR needs m <= n")
    rng = f2.random_source(rng)
    G = f2.random_bits(rng, (n, m))
    if not planted:
        return PlantedXor(G, None)
    s = f2.sample_sparse_row(n, t, rng)
    # adding column parity at one support position is a 2-to-1 map onto s-perp
    parity = np.bitwise_xor.reduce(G[s], axis=0)
    G[s[0]] ^= parity
    return PlantedXor(G, s)
