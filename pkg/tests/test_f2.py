import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from prckit import f2
from prckit.errors import BadSparsity, LengthMismatch

from conftest import chi2_uniform_p

bitvecs = hnp.arrays(np.uint8, st.integers(0, 200), elements=st.integers(0, 1))


def test_hamming_weight_edges():
    assert f2.hamming_weight(np.zeros(37, np.uint8)) == 0
    assert f2.hamming_weight(np.ones(8, np.uint8)) == 8


def test_hamming_weight_matches_bit_loop(rng):
    V = f2.random_bits(rng, (10_000, 50))
    for v in V:
        assert f2.hamming_weight(v) == sum(int(b) for b in v)


@given(bitvecs)
def test_xor_self_inverse_and_identity(v):
    assert not f2.xor(v, v).any()
    assert np.array_equal(f2.xor(v, np.zeros_like(v)), v)


def test_xor_matches_per_bit(rng):
    v, w = f2.random_bits(rng, 300), f2.random_bits(rng, 300)
    assert f2.xor(v, w).tolist() == [a ^ b for a, b in zip(v.tolist(), w.tolist())]
    with pytest.raises(LengthMismatch):
        f2.xor(v, w[:-1])


def test_sparse_dot():
    v = np.zeros(8, np.uint8)
    assert f2.sparse_dot([], v) == 0
    v[3] = 1
    assert f2.sparse_dot([3], v) == 1
    with pytest.raises(LengthMismatch):
        f2.sparse_dot([8], v)


def test_sparse_dot_matches_dense(rng):
    for _ in range(200):
        v = f2.random_bits(rng, 40)
        row = f2.sample_sparse_row(40, int(rng.integers(1, 8)), rng)
        dense = np.zeros(40, np.uint8)
        dense[row] = 1
        assert f2.sparse_dot(row, v) == int(dense @ v) % 2


def test_syndrome(rng):
    P = f2.sample_sparse_matrix(60, 4, 30, rng)
    assert not f2.syndrome(P, np.zeros(60, np.uint8)).any()
    B = f2.kernel_basis(P)
    assert not f2.syndrome(P, B.T).any()
    X = f2.random_bits(rng, (50, 60))
    oracle = np.array([[f2.sparse_dot(P.row(i), x) for i in range(P.r)] for x in X])
    assert np.array_equal(f2.syndrome(P, X), oracle)
    assert np.array_equal(f2.syndrome(P, X[0]), oracle[0])


def test_mat_vec(rng):
    G = f2.random_bits(rng, (30, 12))
    assert not f2.mat_vec(G, np.zeros(12, np.uint8)).any()
    for j in range(12):
        e = np.zeros(12, np.uint8)
        e[j] = 1
        assert np.array_equal(f2.mat_vec(G, e), G[:, j])
    u = f2.random_bits(rng, 12)
    oracle = [sum(int(G[i, j]) * int(u[j]) for j in range(12)) % 2 for i in range(30)]
    assert f2.mat_vec(G, u).tolist() == oracle


def _span_size(M):
    rows = {tuple(np.zeros(M.shape[1], np.uint8))}
    for r in M:
        rows |= {tuple(np.array(x, np.uint8) ^ r) for x in rows}
    return len(rows)


def test_rank(rng):
    assert f2.rank(np.eye(7, dtype=np.uint8)) == 7
    assert f2.rank(np.zeros((5, 9), np.uint8)) == 0
    for _ in range(5):
        M = f2.random_bits(rng, (20, 30))
        M[5] = M[0] ^ M[1]  # force a dependency now and then
        assert 2 ** f2.rank(M) == _span_size(M)


def test_rank_wide_matrix(rng):
    # more than one 64-bit word per row
    M = f2.random_bits(rng, (10, 200))
    assert f2.rank(M) == 10
    assert f2.rank(np.vstack([M, M[:3] ^ M[3:6]])) == 10


def test_kernel_basis_single_row():
    P = f2.SparseMatrix(4, np.array([[0, 1]]))
    B = f2.kernel_basis(P)
    assert B.shape == (4, 3)
    assert np.all((B[0] ^ B[1]) == 0)
    assert f2.rank(B.T) == 3


def test_kernel_basis_rank_nullity(rng):
    for n, t, r in [(50, 3, 20), (64, 4, 48), (130, 3, 100)]:
        P = f2.sample_sparse_matrix(n, t, r, rng)
        B = f2.kernel_basis(P)
        assert B.shape[1] == n - f2.rank(P)
        assert f2.rank(B.T) == B.shape[1]
        assert not f2.syndrome(P, B.T).any()


def test_sample_sparse_row_uniform(rng):
    assert f2.sample_sparse_row(6, 6, rng).tolist() == list(range(6))
    draws = [f2.sample_sparse_row(2, 1, rng)[0] for _ in range(10_000)]
    assert chi2_uniform_p(np.bincount(draws, minlength=2)) >= 0.001
    idx = f2._partial_fisher_yates(5, 2, 100_000, rng)
    subsets = {s: i for i, s in enumerate(itertools.combinations(range(5), 2))}
    codes = [subsets[tuple(r)] for r in idx.tolist()]
    assert chi2_uniform_p(np.bincount(codes, minlength=10)) >= 0.001
    with pytest.raises(BadSparsity):
        f2.sample_sparse_row(3, 4, rng)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_sparse_rows_distinct_sorted(n, seed):
    rng = f2.random_source(seed)
    t = int(rng.integers(1, n + 1))
    row = f2.sample_sparse_row(n, t, rng)
    assert row.tolist() == sorted(set(row.tolist()))
    assert row.size == t and row.max() < n


def test_sample_kernel_matrix(rng):
    P = f2.sample_sparse_matrix(40, 3, 25, rng)
    G = f2.sample_kernel_matrix(P, 16, rng)
    assert G.shape == (40, 16) and not f2.syndrome(P, G.T).any()
    empty = f2.SparseMatrix(8, np.zeros((0, 2), np.int64))
    cols = f2.sample_kernel_matrix(empty, 20_000, rng)
    assert abs(cols.mean() - 0.5) < 0.01


def test_sample_kernel_matrix_uniform_over_kernel(rng):
    P = f2.SparseMatrix(6, np.array([[1, 4]]))
    cols = f2.sample_kernel_matrix(P, 100_000, rng)
    codes = (cols.T.astype(np.int64) << np.arange(6)).sum(axis=1)
    kernel = [c for c in range(64) if ((c >> 1) ^ (c >> 4)) & 1 == 0]
    assert set(np.unique(codes).tolist()) <= set(kernel)
    counts = np.bincount(codes, minlength=64)[kernel]
    assert len(kernel) == 32 and chi2_uniform_p(counts) >= 0.001


def test_permutation(rng):
    pi = f2.random_permutation(1, rng)
    assert pi.forward.tolist() == [0]
    pi = f2.random_permutation(500, rng)
    v = f2.random_bits(rng, 500)
    assert np.array_equal(f2.apply_inverse(pi, f2.apply(pi, v)), v)
    assert np.array_equal(f2.apply(pi, f2.apply_inverse(pi, v)), v)
    with pytest.raises(LengthMismatch):
        pi.apply(v[:-1])


def test_permutation_uniform(rng):
    perms = {p: i for i, p in enumerate(itertools.permutations(range(4)))}
    codes = [perms[tuple(rng.permutation(4).tolist())] for _ in range(100_000)]
    assert chi2_uniform_p(np.bincount(codes, minlength=24)) >= 0.001
    codes = [perms[tuple(f2.random_permutation(4, rng).forward.tolist())] for _ in range(20_000)]
    assert chi2_uniform_p(np.bincount(codes, minlength=24)) >= 0.001


@given(bitvecs)
def test_hex_round_trip(v):
    assert np.array_equal(f2.from_hex(f2.to_hex(v), v.size), v)


def test_packing_is_little_endian():
    assert f2.to_hex(f2.bits_from_str("10000000")) == "01"
    assert f2.to_hex(f2.bits_from_str("0000000011")) == "0003"


def test_random_source_determinism():
    a = f2.random_bits(f2.random_source("seed"), 64)
    b = f2.random_bits(f2.random_source("seed"), 64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, f2.random_bits(f2.random_source("other"), 64))
