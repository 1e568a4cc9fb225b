"""GRAND decoders (GRAND, SGRAND, ORBGRAND) over random binary linear codes.

Conventions: hard decision ``sgn(t) = +1`` for ``t >= 0``; channel input +1
corresponds to bit 1 and -1 to bit 0. Positions are 0-based, ranks 1-based.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from math import log
from typing import Iterator, Optional

import numpy as np

from ._orbgrand_kernel import orbgrand_search, split_words
from .llr_channel import BitChannel, random_inputs, seed_sequence
from .rates import delta_log_mgf_estimator

WEIGHTINGS = ("unit", "abs_llr", "rank_over_n")
MAX_N = 128


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Systematic binary linear code ``G = [I_k | P]``, ``H = [P^T | I_{n-k}]``."""

    n: int
    k: int
    parity_check: np.ndarray
    generator: np.ndarray
    _columns: tuple = field(init=False, repr=False)

    def __post_init__(self):
        # syndrome contribution of each position, packed into a Python int
        weights = 1 << np.arange(self.n - self.k, dtype=object)
        cols = tuple(int((self.parity_check[:, j].astype(object) * weights).sum()) for j in range(self.n))
        object.__setattr__(self, "_columns", cols)

    @property
    def columns(self) -> tuple:
        return self._columns

    def encode(self, message) -> np.ndarray:
        return (np.asarray(message, dtype=np.int64) @ self.generator % 2).astype(np.uint8)

    def syndrome(self, bits) -> int:
        s = 0
        for j in np.flatnonzero(np.asarray(bits)):
            s ^= self._columns[j]
        return s

    def is_codeword(self, bits) -> bool:
        return self.syndrome(bits) == 0

    def codewords(self) -> np.ndarray:
        """All 2^k codewords (exhaustive; small k only)."""
        if self.k > 20:
            raise ValueError("refusing to enumerate more than 2^20 codewords")
        msgs = (np.arange(2**self.k)[:, None] >> np.arange(self.k - 1, -1, -1)) & 1
        return (msgs @ self.generator % 2).astype(np.uint8)


def random_linear_code(n: int, k: int, seed=0) -> LinearCode:
    if not (1 <= k < n <= MAX_N):
        raise ValueError(f"need 1 <= k < n <= {MAX_N}, got n={n}, k={k}")
    rng = np.random.default_rng(seed_sequence(seed))
    p = rng.integers(0, 2, size=(k, n - k), dtype=np.uint8)
    g = np.concatenate([np.eye(k, dtype=np.uint8), p], axis=1)
    h = np.concatenate([p.T, np.eye(n - k, dtype=np.uint8)], axis=1)
    return LinearCode(n, k, h, g)


def code_dimension_for_rate(n: int, rate_nats: float) -> int:
    """Dimension k with ``k/n * ln2`` closest to ``rate_nats``."""
    return int(round(n * rate_nats / log(2.0)))


@dataclass(frozen=True)
class QueryPlan:
    weighting: str = "rank_over_n"
    max_queries: int = 10**6

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.max_queries < 1:
            raise ValueError("max_queries must be >= 1")


@dataclass
class DecodeOutcome:
    bits: Optional[np.ndarray]
    queries: int
    metric_value: float = float("nan")
    pattern: tuple = ()

    @property
    def abandoned(self) -> bool:
        return self.bits is None


def hard_decision(llrs) -> np.ndarray:
    return (np.asarray(llrs) >= 0).astype(np.uint8)


def rank_reliabilities(abs_llrs) -> np.ndarray:
    """Rank 1 for the smallest value; ties go to the lower position."""
    a = np.asarray(abs_llrs, dtype=float)
    if a.size == 0:
        raise ValueError("empty reliability vector")
    ranks = np.empty(a.size, dtype=np.int64)
    ranks[np.argsort(a, kind="stable")] = np.arange(1, a.size + 1)
    return ranks


def _distinct_parts(w: int, j: int, lo: int, hi: int) -> Iterator[tuple]:
    """Ascending tuples of ``j`` distinct integers in ``[lo, hi]`` summing to ``w``, in lex order."""
    if j == 1:
        if lo <= w <= hi:
            yield (w,)
        return
    span = (j - 1) * (j - 2) // 2
    for p in range(lo, hi + 1):
        rest = w - p
        if rest < (j - 1) * (p + 1) + span:
            break
        if rest > (j - 1) * hi - span:
            continue
        for tail in _distinct_parts(rest, j - 1, p + 1, hi):
            yield (p,) + tail


def rank_sum_sets(n: int) -> Iterator[tuple]:
    """All subsets of ranks ``1..n`` in nondecreasing rank sum.

    Within one rank sum: fewer elements first, then lexicographic on the
    ascending rank tuple.
    """
    yield ()
    for w in range(1, n * (n + 1) // 2 + 1):
        j = 1
        while j * (j + 1) // 2 <= w and j <= n:
            yield from _distinct_parts(w, j, 1, n)
            j += 1


def rank_sum_patterns(ranks) -> Iterator[tuple]:
    """ORBGRAND error patterns as position tuples, ordered by rank sum."""
    ranks = np.asarray(ranks)
    position_of = np.empty(ranks.size + 1, dtype=np.int64)
    position_of[ranks] = np.arange(ranks.size)
    for parts in rank_sum_sets(ranks.size):
        yield tuple(int(position_of[r]) for r in parts)


def hamming_patterns(n: int) -> Iterator[tuple]:
    for w in range(n + 1):
        yield from itertools.combinations(range(n), w)


def soft_patterns(abs_llrs) -> Iterator[tuple]:
    """Patterns in nondecreasing total ``|llr|`` of the flipped positions."""
    a = np.asarray(abs_llrs, dtype=float)
    order = np.argsort(a, kind="stable")
    s = a[order]
    n = a.size
    yield ()
    if n == 0:
        return
    # heap entries: (cost, sorted-index tuple); each subset is reached exactly once
    heap = [(s[0], (0,))]
    while heap:
        cost, idx = heapq.heappop(heap)
        yield tuple(int(order[i]) for i in idx)
        last = idx[-1]
        if last + 1 < n:
            heapq.heappush(heap, (cost + s[last + 1], idx + (last + 1,)))
            heapq.heappush(heap, (cost - s[last] + s[last + 1], idx[:-1] + (last + 1,)))


def pattern_stream(llrs, weighting: str) -> Iterator[tuple]:
    llrs = np.asarray(llrs, dtype=float)
    if weighting == "unit":
        return hamming_patterns(llrs.size)
    if weighting == "abs_llr":
        return soft_patterns(np.abs(llrs))
    if weighting == "rank_over_n":
        return rank_sum_patterns(rank_reliabilities(np.abs(llrs)))
    raise ValueError(f"unknown weighting {weighting!r}")


def metric_weights(llrs, weighting: str) -> np.ndarray:
    llrs = np.asarray(llrs, dtype=float)
    if weighting == "unit":
        return np.ones(llrs.size)
    if weighting == "abs_llr":
        return np.abs(llrs)
    if weighting == "rank_over_n":
        return rank_reliabilities(np.abs(llrs)) / llrs.size
    raise ValueError(f"unknown weighting {weighting!r}")


def metric_eval(candidate_bits, llrs, weighting: str) -> float:
    """``(1/N) sum_n gamma_n 1(sgn(t_n) x_n < 0)`` for a candidate word."""
    bits = np.asarray(candidate_bits)
    llrs = np.asarray(llrs, dtype=float)
    if bits.shape != llrs.shape:
        raise ValueError("candidate and llrs differ in length")
    disagree = bits != hard_decision(llrs)
    return float(metric_weights(llrs, weighting) @ disagree / llrs.size)


def grand_decode(llrs, code: LinearCode, plan: QueryPlan = QueryPlan()) -> DecodeOutcome:
    """Query error patterns in the plan's order until a codeword is hit."""
    llrs = np.asarray(llrs, dtype=float)
    if llrs.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got shape {llrs.shape}")
    hard = hard_decision(llrs)
    s0 = code.syndrome(hard)
    if plan.weighting == "rank_over_n":
        return _orbgrand_decode(llrs, hard, s0, code, plan)
    cols = code.columns
    q = 0
    for pattern in pattern_stream(llrs, plan.weighting):
        q += 1
        s = s0
        for j in pattern:
            s ^= cols[j]
        if s == 0:
            word = hard.copy()
            word[list(pattern)] ^= 1
            return DecodeOutcome(word, q, metric_eval(word, llrs, plan.weighting), pattern)
        if q >= plan.max_queries:
            break
    return DecodeOutcome(None, q)


def _orbgrand_decode(llrs, hard, s0, code, plan):
    ranks = rank_reliabilities(np.abs(llrs))
    position_of = np.empty(code.n + 1, dtype=np.int64)
    position_of[ranks] = np.arange(code.n)
    cols = [0] + [code.columns[position_of[r]] for r in range(1, code.n + 1)]
    cols_lo, cols_hi = split_words(cols)
    s_lo, s_hi = split_words([s0])
    parts = np.zeros(code.n, dtype=np.int64)
    q, size = orbgrand_search(s_lo[0], s_hi[0], cols_lo, cols_hi, code.n, plan.max_queries, parts)
    if size < 0:
        return DecodeOutcome(None, int(q))
    pattern = tuple(int(position_of[r]) for r in parts[:size])
    word = hard.copy()
    word[list(pattern)] ^= 1
    return DecodeOutcome(word, int(q), metric_eval(word, llrs, plan.weighting), pattern)


@dataclass
class MetricStatistics:
    n: int
    trials: int
    mean: float
    var: float
    std_error: float
    delta_hat: dict


def simulate_metric_statistics(ch: BitChannel, n: int, trials: int, thetas=(-1.0, -5.0, -20.0), seed=0) -> MetricStatistics:
    """Statistics of D(1) for the transmitted codeword under i.i.d. uniform inputs."""
    rng = np.random.default_rng(seed_sequence(seed))
    d1 = np.empty(trials)
    delta = {float(th): np.empty(trials) for th in thetas}
    for i in range(trials):
        x = random_inputs(rng, n)
        t = ch.sample_llr(x, rng)
        ranks = rank_reliabilities(np.abs(t))
        d1[i] = metric_eval((x > 0).astype(np.uint8), t, "rank_over_n")
        for th in delta:
            delta[th][i] = delta_log_mgf_estimator(ranks, th)
    return MetricStatistics(
        n=n,
        trials=trials,
        mean=float(d1.mean()),
        var=float(d1.var(ddof=1)),
        std_error=float(d1.std(ddof=1) / np.sqrt(trials)),
        delta_hat=delta,
    )


@dataclass
class BlerResult:
    trials: int
    errors: int
    abandoned: int
    undetected: int
    mean_queries: float

    @property
    def bler(self) -> float:
        return self.errors / self.trials

    @property
    def std_error(self) -> float:
        p = self.bler
        return float(np.sqrt(p * (1 - p) / self.trials))


def simulate_bler(code: LinearCode, ch: BitChannel, plan: QueryPlan, trials: int, seed=0) -> BlerResult:
    """Block error rate; abandonments count as block errors and are reported separately."""
    rng = np.random.default_rng(seed_sequence(seed))
    errors = abandoned = undetected = 0
    queries = 0
    for _ in range(trials):
        word = code.encode(rng.integers(0, 2, size=code.k))
        t = ch.sample_llr(2.0 * word - 1.0, rng)
        out = grand_decode(t, code, plan)
        queries += out.queries
        if out.abandoned:
            abandoned += 1
            errors += 1
        elif not np.array_equal(out.bits, word):
            undetected += 1
            errors += 1
    return BlerResult(trials, errors, abandoned, undetected, queries / trials)
