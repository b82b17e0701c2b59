"""Matrix permanents: factorial-time oracle, Gray-code Ryser kernel, and a
parallel segment decomposition.

Every multi-photon transition probability in this package reduces to the
permanent of a complex sub-matrix, so this module is the hot path.  The
Ryser kernel iterates column subsets in binary-reflected Gray-code order,
updating the running row sums by a single column per step; the update
stream is evaluated as a vectorized cumulative sum over fixed-size chunks,
and each chunk (or parallel segment) re-seeds its row sums exactly from its
starting subset so rounding error cannot accumulate across chunks.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ContractError, DimensionError, ResourceLimitError
from .linalg import as_complex_matrix

__all__ = ["permanent_naive", "permanent_ryser", "permanent_parallel"]

NAIVE_LIMIT = 10
RYSER_LIMIT = 30

_CHUNK = 1 << 14

# Permutation index tables are tiny up to 8! and reused heavily by tests.
_PERM_CACHE_LIMIT = 8
_perm_cache: dict[int, np.ndarray] = {}


def _square(matrix) -> np.ndarray:
    a = as_complex_matrix(matrix)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got {a.shape[0]}x{a.shape[1]}")
    return a


def permanent_naive(matrix) -> complex:
    """Permanent by explicit sum over all permutations.

    This is the independent oracle for the Ryser kernel; it shares no code
    with it.  Guarded at n <= 10 because the term count grows factorially;
    use :func:`permanent_ryser` beyond that.
    """
    a = _square(matrix)
    n = a.shape[0]
    if n > NAIVE_LIMIT:
        raise ResourceLimitError(
            f"permanent_naive is limited to n <= {NAIVE_LIMIT} (got n={n}); "
            "use permanent_ryser for larger matrices"
        )
    if n == 0:
        return 1.0 + 0.0j
    rows = np.arange(n)
    if n <= _PERM_CACHE_LIMIT:
        if n not in _perm_cache:
            _perm_cache[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
        perms = _perm_cache[n]
        return complex(a[rows, perms].prod(axis=1).sum())
    total = 0.0 + 0.0j
    stream = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(stream, 20000))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        total += a[rows, idx].prod(axis=1).sum()
    return complex(total)


def _popcount(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values)


def _gray(ranks: np.ndarray) -> np.ndarray:
    return ranks ^ (ranks >> np.uint64(1))


def _row_sums_at(a: np.ndarray, subset: int) -> np.ndarray:
    """Row sums over the columns named by the bits of ``subset``."""
    n = a.shape[0]
    cols = [j for j in range(n) if (subset >> j) & 1]
    if not cols:
        return np.zeros(n, dtype=complex)
    return a[:, cols].sum(axis=1)


def _ryser_segment(a: np.ndarray, start: int, stop: int) -> complex:
    """Signed inclusion-exclusion sum over subset ranks [start, stop).

    Ranks are positions in the binary-reflected Gray sequence; rank k maps
    to the subset k ^ (k >> 1).  The final (-1)^n factor is applied by the
    caller.
    """
    n = a.shape[0]
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    for lo in range(start, stop, _CHUNK):
        hi = min(lo + _CHUNK, stop)
        ranks = np.arange(lo, hi, dtype=np.uint64)
        grays = _gray(ranks)
        sums = np.empty((n, hi - lo), dtype=complex)
        sums[:, 0] = _row_sums_at(a, int(grays[0]))
        if hi - lo > 1:
            # Between consecutive Gray codes exactly one column toggles: the
            # bit at the trailing-zero count of the rank, turning on when it
            # is set in the new code.
            tail = ranks[1:]
            low_bit = tail & (~tail + np.uint64(1))
            flips = _popcount(low_bit - np.uint64(1)).astype(np.intp)
            turned_on = (grays[1:] & low_bit).astype(bool)
            direction = np.where(turned_on, 1.0, -1.0)
            sums[:, 1:] = a[:, flips] * direction
            np.cumsum(sums, axis=1, out=sums)
        products = sums.prod(axis=0)
        signs = 1.0 - 2.0 * (_popcount(grays) & np.uint64(1)).astype(np.float64)
        partial = complex((signs * products).sum())
        # Kahan update keeps the outer inclusion-exclusion sum compensated.
        y = partial - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def permanent_ryser(matrix) -> complex:
    """Permanent via Ryser's inclusion-exclusion formula in O(2^n * n).

    Guarded at n <= 30 as a resource limit: 2^30 subsets is roughly the
    largest workload that finishes in reasonable time on one machine.
    """
    a = _square(matrix)
    n = a.shape[0]
    if n > RYSER_LIMIT:
        raise ResourceLimitError(f"permanent_ryser is limited to n <= {RYSER_LIMIT} (got n={n})")
    if n == 0:
        return 1.0 + 0.0j
    sign = -1.0 if n % 2 else 1.0
    return complex(sign * _ryser_segment(a, 1, 1 << n))


def permanent_parallel(matrix, threads: int) -> complex:
    """Ryser permanent with the subset space split into contiguous segments.

    Each segment re-seeds its row sums from its starting subset, so results
    are independent of the segment a term lands in; partial sums are reduced
    in segment order, which makes the value bit-stable for a fixed thread
    count and equal across thread counts to well below 1e-9 relative.
    """
    if threads < 1:
        raise ContractError("thread count must be at least 1")
    a = _square(matrix)
    n = a.shape[0]
    if n > RYSER_LIMIT:
        raise ResourceLimitError(f"permanent_parallel is limited to n <= {RYSER_LIMIT} (got n={n})")
    if n == 0:
        return 1.0 + 0.0j
    total_ranks = (1 << n) - 1
    segments = 1
    while segments < threads:
        segments *= 2
    segments = min(segments, total_ranks)
    bounds = np.linspace(1, 1 << n, segments + 1, dtype=np.int64)
    jobs = [(int(bounds[i]), int(bounds[i + 1])) for i in range(segments)]
    if threads == 1:
        partials = [_ryser_segment(a, lo, hi) for lo, hi in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda job: _ryser_segment(a, *job), jobs))
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    for partial in partials:
        y = partial - comp
        t = total + y
        comp = (t - total) - y
        total = t
    sign = -1.0 if n % 2 else 1.0
    return complex(sign * total)
