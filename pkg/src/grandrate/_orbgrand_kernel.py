"""Compiled ORBGRAND query loop.

Enumerates rank sets in exactly the order of :func:`grand.rank_sum_sets` and
tests each against the syndrome, with syndromes packed into two uint64 words
(``n - k <= 128``).
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1


def split_words(values):
    lo = np.array([v & MASK64 for v in values], dtype=np.uint64)
    hi = np.array([(v >> 64) & MASK64 for v in values], dtype=np.uint64)
    return lo, hi


@njit(cache=True)
def _fill(parts, i, j, remaining, n):
    # lex-smallest completion of parts[i:j] summing to `remaining`, all > parts[i-1]
    prev = parts[i - 1] if i > 0 else 0
    for pos in range(i, j):
        c = j - pos - 1
        if c == 0:
            if remaining <= prev or remaining > n:
                return False
            parts[pos] = remaining
            return True
        mx = c * n - c * (c - 1) // 2
        v = max(prev + 1, remaining - mx)
        if remaining - v < c * (v + 1) + c * (c - 1) // 2:
            return False
        parts[pos] = v
        remaining -= v
        prev = v
    return True


@njit(cache=True)
def _advance(parts, j, w, n):
    # next rank set of the same size and sum in lex order
    for i in range(j - 2, -1, -1):
        head = 0
        for a in range(i):
            head += parts[a]
        v = parts[i] + 1
        c = j - i - 1
        rest = w - head - v
        if rest < c * (v + 1) + c * (c - 1) // 2:
            continue
        parts[i] = v
        if _fill(parts, i + 1, j, rest, n):
            return True
    return False


@njit(cache=True)
def orbgrand_search(s0_lo, s0_hi, cols_lo, cols_hi, n, max_queries, parts):
    """Return ``(queries, size)``; ``size < 0`` means abandoned.

    ``cols_*[r]`` is the syndrome column of the position with rank ``r``.
    On success the winning rank set is in ``parts[:size]``.
    """
    q = 1
    if s0_lo == 0 and s0_hi == 0:
        return q, 0
    if q >= max_queries:
        return q, -1
    wmax = n * (n + 1) // 2
    for w in range(1, wmax + 1):
        j = 1
        while j * (j + 1) // 2 <= w and j <= n:
            ok = _fill(parts, 0, j, w, n)
            while ok:
                q += 1
                lo = s0_lo
                hi = s0_hi
                for a in range(j):
                    lo ^= cols_lo[parts[a]]
                    hi ^= cols_hi[parts[a]]
                if lo == 0 and hi == 0:
                    return q, j
                if q >= max_queries:
                    return q, -1
                ok = _advance(parts, j, w, n)
            j += 1
    return q, -1
