"""Bit-packed GF(2) linear algebra.

Bit vectors are plain ``numpy.uint8`` arrays holding 0/1 values; a batch of
vectors is a 2-D array with one vector per row.  The canonical *packed* form
(used for hashing, serialization and equality across processes) stores bit
``i`` at byte ``i // 8``, position ``i % 8``, little-endian within the byte,
with zero padding in the final byte.

Dense matrices are 2-D ``uint8`` arrays.  Sparse parity-check matrices are
:class:`SparseMatrix` instances holding an ``(r, t)`` index array.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit

from .errors import BadSparsity, LengthMismatch

SeedLike = Union[None, int, bytes, str, np.random.Generator]


# --------------------------------------------------------------------------
# randomness
# --------------------------------------------------------------------------

def random_source(seed: SeedLike = None) -> np.random.Generator:
    """Return a deterministic ``numpy.random.Generator``.

    ``seed`` may be an int, a 32-byte seed, a string (hashed to 32 bytes),
    an existing generator (returned unchanged) or ``None`` for OS entropy.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, str):
        seed = hashlib.sha256(seed.encode()).digest()
    if isinstance(seed, (bytes, bytearray)):
        words = np.frombuffer(bytes(seed).ljust(32, b"\0")[:32], dtype="<u4")
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words.tolist())))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def random_bits(rng: np.random.Generator, size) -> np.ndarray:
    return rng.integers(0, 2, size=size, dtype=np.uint8)


def bernoulli(rng: np.random.Generator, p: float, size) -> np.ndarray:
    if p <= 0:
        return np.zeros(size, dtype=np.uint8)
    return (rng.random(size) < p).astype(np.uint8)


# --------------------------------------------------------------------------
# bit vectors
# --------------------------------------------------------------------------

def as_bits(v) -> np.ndarray:
    """Coerce ``v`` to a uint8 0/1 array (1-D or 2-D)."""
    a = np.asarray(v)
    if a.dtype == np.bool_:
        return a.astype(np.uint8)
    if a.dtype != np.uint8:
        a = a.astype(np.uint8)
    return a


def bits_from_str(s: str) -> np.ndarray:
    s = s.strip()
    if s and set(s) - {"0", "1"}:
        raise ValueError("bit string may only contain '0' and '1'")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def bits_to_str(v) -> str:
    return (as_bits(v) + ord("0")).tobytes().decode()


def pack_bits(v) -> bytes:
    return np.packbits(as_bits(v), bitorder="little").tobytes()


def unpack_bits(data: bytes, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < n:
        raise LengthMismatch(f"need {n} bits, got {bits.size}")
    return bits[:n].copy()


def to_hex(v) -> str:
    return pack_bits(v).hex()


def from_hex(s: str, n: int) -> np.ndarray:
    return unpack_bits(bytes.fromhex(s.strip()), n)


def hamming_weight(v) -> int:
    return int(np.count_nonzero(as_bits(v)))


def xor(v, w) -> np.ndarray:
    v, w = as_bits(v), as_bits(w)
    if v.shape != w.shape:
        raise LengthMismatch(f"xor of lengths {v.shape} and {w.shape}")
    return v ^ w


# --------------------------------------------------------------------------
# sparse matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """``r`` rows over ``n`` columns, each row given by ``t`` sorted indices."""

    n: int
    idx: np.ndarray  # shape (r, t), int64, rows sorted

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64)
        if idx.ndim != 2:
            raise ValueError("idx must be 2-D (rows, sparsity)")
        object.__setattr__(self, "idx", idx)

    @property
    def r(self) -> int:
        return self.idx.shape[0]

    @property
    def t(self) -> int:
        return self.idx.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.idx[i]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.r, self.n), dtype=np.uint8)
        rows = np.repeat(np.arange(self.r), self.t)
        np.add.at(out, (rows, self.idx.ravel()), 1)
        return out & 1

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.n == other.n
            and np.array_equal(self.idx, other.idx)
        )


def sparse_dot(row, v) -> int:
    """Parity of ``v`` on the positions listed in ``row``."""
    v = as_bits(v)
    row = np.asarray(row, dtype=np.int64)
    if row.size and row.max() >= v.shape[-1]:
        raise LengthMismatch("sparse row index exceeds vector length")
    return int(np.bitwise_xor.reduce(v[row])) if row.size else 0


def syndrome(P: SparseMatrix, x) -> np.ndarray:
    """``P x`` over GF(2); ``x`` may be one vector or a batch (rows)."""
    x = as_bits(x)
    if x.shape[-1] != P.n:
        raise LengthMismatch(f"syndrome needs length {P.n}, got {x.shape[-1]}")
    if P.r == 0:
        return np.zeros(x.shape[:-1] + (0,), dtype=np.uint8)
    if x.ndim == 1:
        return np.bitwise_xor.reduce(x[P.idx], axis=-1)
    out = np.empty((x.shape[0], P.r), dtype=np.uint8)
    step = max(1, (1 << 22) // max(1, P.r * P.t))
    for lo in range(0, x.shape[0], step):
        out[lo:lo + step] = np.bitwise_xor.reduce(x[lo:lo + step][:, P.idx], axis=-1)
    return out


def mat_vec(G: np.ndarray, u) -> np.ndarray:
    """``G u`` for a dense ``(rows, cols)`` matrix; ``u`` may be a batch."""
    G, u = as_bits(G), as_bits(u)
    if u.shape[-1] != G.shape[1]:
        raise LengthMismatch(f"mat_vec needs {G.shape[1]} columns, got {u.shape[-1]}")
    # float32 BLAS is exact for sums below 2**24
    prod = u.astype(np.float32) @ G.T.astype(np.float32)
    return (prod.astype(np.int64) & 1).astype(np.uint8)


# --------------------------------------------------------------------------
# Gaussian elimination
# --------------------------------------------------------------------------

@njit(cache=True)
def _rref_inplace(rows, ncols):
    nrows, nwords = rows.shape
    pivots = np.empty(min(nrows, ncols), dtype=np.int64)
    prow = 0
    for c in range(ncols):
        if prow >= nrows:
            break
        w = c >> 6
        b = np.uint64(1) << np.uint64(c & 63)
        piv = -1
        for i in range(prow, nrows):
            if rows[i, w] & b:
                piv = i
                break
        if piv < 0:
            continue
        if piv != prow:
            for k in range(nwords):
                tmp = rows[piv, k]
                rows[piv, k] = rows[prow, k]
                rows[prow, k] = tmp
        for i in range(nrows):
            if i != prow and (rows[i, w] & b):
                for k in range(w, nwords):
                    rows[i, k] ^= rows[prow, k]
        pivots[prow] = c
        prow += 1
    return pivots[:prow]


def _packed_rows(M) -> tuple[np.ndarray, int]:
    if isinstance(M, SparseMatrix):
        n = M.n
        nwords = max(1, (n + 63) // 64)
        rows = np.zeros((M.r, nwords), dtype=np.uint64)
        if M.r:
            r_ix = np.repeat(np.arange(M.r), M.t)
            cols = M.idx.ravel()
            bits = np.left_shift(np.uint64(1), (cols & 63).astype(np.uint64))
            np.bitwise_xor.at(rows, (r_ix, cols >> 6), bits)
        return rows, n
    dense = as_bits(M)
    if dense.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n = dense.shape[1]
    nwords = max(1, (n + 63) // 64)
    packed = np.packbits(dense, axis=1, bitorder="little")
    packed = np.pad(packed, ((0, 0), (0, nwords * 8 - packed.shape[1])))
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64), n


def _rref(M):
    rows, n = _packed_rows(M)
    pivots = _rref_inplace(rows, n) if rows.shape[0] else np.empty(0, dtype=np.int64)
    return rows, pivots, n


def rank(M) -> int:
    """GF(2) rank of a dense 0/1 matrix or a :class:`SparseMatrix`."""
    return len(_rref(M)[1])


def kernel_basis(P) -> np.ndarray:
    """Basis of ``ker P`` as the columns of an ``(n, n - rank)`` matrix."""
    rows, pivots, n = _rref(P)
    free = np.setdiff1d(np.arange(n), pivots)
    basis = np.zeros((n, free.size), dtype=np.uint8)
    basis[free, np.arange(free.size)] = 1
    if pivots.size and free.size:
        words = rows[: pivots.size][:, free >> 6]
        sub = (words >> (free & 63).astype(np.uint64)) & np.uint64(1)
        basis[pivots] = sub.astype(np.uint8)
    return basis


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------

def _partial_fisher_yates(n: int, t: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniform t-subsets of ``range(n)``, one per row.

    Runs t steps of Fisher-Yates on a virtual identity array per row, only
    remembering the swapped-in values, so memory is O(count * t).
    """
    chosen = np.empty((count, t), dtype=np.int64)
    targets = np.empty((count, t), dtype=np.int64)
    stored = np.empty((count, t), dtype=np.int64)
    for i in range(t):
        j = rng.integers(i, n, size=count)
        at_j = j.copy()
        at_i = np.full(count, i, dtype=np.int64)
        for k in range(i):
            hit = targets[:, k] == j
            at_j[hit] = stored[hit, k]
            hit = targets[:, k] == i
            at_i[hit] = stored[hit, k]
        chosen[:, i] = at_j
        targets[:, i] = j
        stored[:, i] = at_i
    chosen.sort(axis=1)
    return chosen


def sample_sparse_row(n: int, t: int, rng: np.random.Generator) -> np.ndarray:
    if not 1 <= t <= n:
        raise BadSparsity(f"sparsity {t} outside [1, {n}]")
    return _partial_fisher_yates(n, t, 1, rng)[0]


def sample_sparse_matrix(n: int, t: int, r: int, rng: np.random.Generator) -> SparseMatrix:
    if not 1 <= t <= n:
        raise BadSparsity(f"sparsity {t} outside [1, {n}]")
    return SparseMatrix(n, _partial_fisher_yates(n, t, r, rng))


def combine_columns(basis: np.ndarray, g: int, rng: np.random.Generator) -> np.ndarray:
    """``g`` independent uniform elements of the column span of ``basis``."""
    n, k = basis.shape
    if k == 0:
        return np.zeros((n, g), dtype=np.uint8)
    coeffs = random_bits(rng, (k, g))
    return mat_vec(basis, coeffs.T).T.copy()


def sample_kernel_matrix(P: SparseMatrix, g: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``(n, g)`` matrix whose columns are uniform in ``ker P``."""
    if g < 1:
        raise ValueError("g must be at least 1")
    return combine_columns(kernel_basis(P), g, rng)


# --------------------------------------------------------------------------
# permutations
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Permutation:
    """``apply`` maps ``y`` to ``x`` with ``x[i] = y[forward[i]]``."""

    forward: np.ndarray
    inverse: np.ndarray = field(default=None)

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.int64)
        object.__setattr__(self, "forward", fwd)
        if self.inverse is None:
            inv = np.empty_like(fwd)
            inv[fwd] = np.arange(fwd.size)
            object.__setattr__(self, "inverse", inv)

    @property
    def n(self) -> int:
        return self.forward.size

    def apply(self, v) -> np.ndarray:
        v = as_bits(v)
        if v.shape[-1] != self.n:
            raise LengthMismatch(f"permutation of size {self.n} applied to {v.shape[-1]}")
        return v[..., self.forward]

    def apply_inverse(self, v) -> np.ndarray:
        v = as_bits(v)
        if v.shape[-1] != self.n:
            raise LengthMismatch(f"permutation of size {self.n} applied to {v.shape[-1]}")
        return v[..., self.inverse]

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.forward, other.forward)


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    # Generator.permutation is a Fisher-Yates shuffle
    return Permutation(rng.permutation(n))


def apply(pi: Permutation, v) -> np.ndarray:
    return pi.apply(v)


def apply_inverse(pi: Permutation, v) -> np.ndarray:
    return pi.apply_inverse(v)
