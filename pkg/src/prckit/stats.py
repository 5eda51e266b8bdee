"""Statistical harness: a small randomness battery, the brute-force sparse
parity attack, and Monte Carlo rate estimates with Wilson intervals."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special, stats as sps

from . import f2
from .errors import BudgetExceeded, TooFewSamples

SIGNIFICANCE = 0.001
MIN_SAMPLES = 100


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float
    significance: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.p_value >= self.significance

    def as_line(self) -> str:
        return (
            f"test={self.name} statistic={self.statistic:.6g} p_value={self.p_value:.6g} "
            f"significance={self.significance:g} samples={self.samples} "
            f"result={'pass' if self.passed else 'fail'}"
        )


def _two_sided_normal(z) -> np.ndarray:
    return special.erfc(np.abs(z) / math.sqrt(2))


def _bonferroni_min(p: np.ndarray) -> float:
    return float(min(1.0, p.min() * p.size))


def monobit_per_position(X: np.ndarray) -> tuple[float, float]:
    """Worst column of ``(#ones - N/2) / sqrt(N/4)``; Bonferroni over columns."""
    N = X.shape[0]
    z = (X.sum(axis=0, dtype=np.int64) - N / 2) / math.sqrt(N / 4)
    return float(np.abs(z).max()), _bonferroni_min(_two_sided_normal(z))


def frequency(bits: np.ndarray) -> tuple[float, float]:
    m = bits.size
    s = (2 * int(bits.sum(dtype=np.int64)) - m) / math.sqrt(m)
    return s, float(_two_sided_normal(s))


def serial(bits: np.ndarray, m: int = 2) -> tuple[float, float]:
    """Serial test over overlapping m-bit patterns of the (cyclic) sequence."""

    def psi2(k):
        if k <= 0:
            return 0.0
        ext = np.concatenate([bits, bits[: k - 1]]).astype(np.int64)
        code = np.zeros(bits.size, dtype=np.int64)
        for j in range(k):
            code = (code << 1) | ext[j: j + bits.size]
        counts = np.bincount(code, minlength=1 << k)
        return (1 << k) / bits.size * float((counts.astype(np.float64) ** 2).sum()) - bits.size

    p0, p1, p2 = psi2(m), psi2(m - 1), psi2(m - 2)
    d1, d2 = p0 - p1, p0 - 2 * p1 + p2
    pv1 = sps.chi2.sf(d1, 2 ** (m - 1))
    pv2 = sps.chi2.sf(d2, 2 ** (m - 2))
    return d1, float(min(1.0, 2 * min(pv1, pv2)))


def runs(bits: np.ndarray) -> tuple[float, float]:
    """Number of runs versus its expectation given the observed ones-fraction."""
    n = bits.size
    pi = bits.mean()
    if pi in (0.0, 1.0):
        return float(n), 0.0
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    stat = abs(v - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi))
    return float(v), float(special.erfc(stat))


def column_correlation(X: np.ndarray) -> tuple[float, float]:
    """Agreement of adjacent columns across samples; Bonferroni over column pairs."""
    N = X.shape[0]
    agree = (X[:, 1:] == X[:, :-1]).sum(axis=0, dtype=np.int64)
    z = (agree - N / 2) / math.sqrt(N / 4)
    return float(np.abs(z).max()), _bonferroni_min(_two_sided_normal(z))


BATTERY = (
    ("monobit_per_position", lambda X, flat: monobit_per_position(X)),
    ("frequency", lambda X, flat: frequency(flat)),
    ("serial", lambda X, flat: serial(flat)),
    ("runs", lambda X, flat: runs(flat)),
    ("column_correlation", lambda X, flat: column_correlation(X)),
)


def battery(samples, significance: float = SIGNIFICANCE) -> list[TestReport]:
    """Run every test; each is judged at ``significance / len(BATTERY)``."""
    X = f2.as_bits(samples)
    if X.ndim != 2 or X.shape[0] < MIN_SAMPLES:
        raise TooFewSamples(f"battery needs at least {MIN_SAMPLES} samples")
    flat = X.ravel()
    level = significance / len(BATTERY)
    return [TestReport(name, *fn(X, flat), level, X.shape[0]) for name, fn in BATTERY]


def battery_passed(reports) -> bool:
    return all(r.passed for r in reports)


# --------------------------------------------------------------------------
# n-gram comparison
# --------------------------------------------------------------------------

def ngram_counts(X, k: int) -> np.ndarray:
    """Counts of each k-bit pattern over all overlapping windows of every row."""
    X = f2.as_bits(X)
    X = np.atleast_2d(X)
    L = X.shape[1] - k + 1
    code = np.zeros((X.shape[0], L), dtype=np.int64)
    for j in range(k):
        code = (code << 1) | X[:, j: j + L]
    return np.bincount(code.ravel(), minlength=1 << k)


def two_sample_chisquare(a, b, name: str = "two_sample", significance: float = SIGNIFICANCE) -> TestReport:
    """Homogeneity of two count vectors over the same categories."""
    table = np.vstack([a, b]).astype(np.float64)
    table = table[:, table.sum(axis=0) > 0]
    stat, p, _, _ = sps.chi2_contingency(table, correction=False)
    return TestReport(name, float(stat), float(p), significance, int(table.sum()))


def goodness_of_fit(counts, probs, name: str = "goodness_of_fit", significance: float = SIGNIFICANCE) -> TestReport:
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(probs, dtype=np.float64) * counts.sum()
    stat, p = sps.chisquare(counts, expected)
    return TestReport(name, float(stat), float(p), significance, int(counts.sum()))


# --------------------------------------------------------------------------
# sparse parity attack
# --------------------------------------------------------------------------

DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class AttackResult:
    samples: int
    threshold: float
    candidates: int
    found: list = field(default_factory=list)  # (support tuple, Pr[s.x = 0])

    @property
    def best(self) -> Optional[tuple]:
        if not self.found:
            return None
        return max(self.found, key=lambda f: abs(f[1] - 0.5))[0]

    def __bool__(self):
        return bool(self.found)


def sparse_parity_attack(samples, t_max: int, *, budget: int = DEFAULT_BUDGET, threshold: Optional[float] = None) -> AttackResult:
    """Try every support of size ``1..t_max``; report those with a biased parity.

    A support ``s`` is reported when its parity is constant over all samples
    or when ``|Pr[s.x = 0] - 1/2| >= threshold`` (default ``4 / sqrt(samples)``).
    The absolute value catches checks that a one-time pad turns into ``s.x = 1``.
    """
    X = f2.as_bits(samples)
    N, n = X.shape
    total = sum(math.comb(n, w) for w in range(1, t_max + 1))
    if total > budget:
        raise BudgetExceeded(f"{total} candidate supports exceed the budget of {budget}")
    thr = 4 / math.sqrt(N) if threshold is None else threshold
    Y = 1.0 - 2.0 * X.astype(np.float64)  # (-1)^x
    found = []

    def report(supports, corr):
        # corr = E[(-1)^{s.x}] = 2 Pr[s.x = 0] - 1
        corr = np.asarray(corr)
        for i in np.flatnonzero((np.abs(corr) / 2 >= thr) | (np.abs(corr) > 1 - 1e-9)):
            found.append((tuple(int(j) for j in supports[i]), float((1 + corr[i]) / 2)))

    if t_max >= 1:
        report(np.arange(n)[:, None], Y.mean(axis=0))
    if t_max >= 2:
        C = Y.T @ Y / N
        iu = np.triu_indices(n, 1)
        report(np.column_stack(iu), C[iu])
    for w in range(3, t_max + 1):
        combos = itertools.combinations(range(n), w)
        while True:
            chunk = np.array(list(itertools.islice(combos, 4096)), dtype=np.int64)
            if chunk.size == 0:
                break
            report(chunk, np.prod(Y[:, chunk], axis=2).mean(axis=0))
    return AttackResult(N, thr, total, found)


# --------------------------------------------------------------------------
# Monte Carlo rates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def as_line(self) -> str:
        return f"rate={self.rate:.4f} successes={self.successes} trials={self.trials} ci95=[{self.low:.4f},{self.high:.4f}]"


def wilson(successes: int, trials: int, confidence: float = 0.95) -> RateEstimate:
    ci = sps.binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return RateEstimate(successes, trials, float(ci.low), float(ci.high))


def estimate_rate(experiment: Callable[[np.random.Generator], bool], trials: int, rng) -> RateEstimate:
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = f2.random_source(rng)
    wins = sum(bool(experiment(rng)) for _ in range(trials))
    return wilson(wins, trials)
