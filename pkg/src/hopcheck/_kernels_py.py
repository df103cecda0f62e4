"""Pure-Python twin of the compiled kernels in _kernels.pyx.

Same contracts, bit-identical results: hashes are exact integers and the
float work is IEEE-754 doubles applied in the same order as the compiled
loops. Used automatically when the extension is unavailable, or when
HOPCHECK_PURE_PYTHON=1 forces it.
"""

import numpy as np

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def ngram_bins(tokens: list, num_bins: int) -> list:
    """Hash every unigram and adjacent bigram into [0, num_bins)."""
    bins = [fnv1a64(t.encode("utf-8")) % num_bins for t in tokens]
    bins.extend(
        fnv1a64((tokens[i] + " " + tokens[i + 1]).encode("utf-8")) % num_bins
        for i in range(len(tokens) - 1)
    )
    return bins


def accumulate_scores(scores, ordinals, weights, query_weight: float) -> None:
    """scores[ordinals[i]] += query_weight * weights[i] for one postings list.

    Ordinals within one postings list are unique, so fancy indexing is a
    faithful (and fast) stand-in for the element-by-element loop.
    """
    scores[ordinals] += query_weight * np.asarray(weights)


def best_span(p_start, p_end, lo: int, hi: int) -> tuple:
    """Argmax of p_start[i] * p_end[j] over lo <= i <= j <= hi.

    Ties break toward the smallest i, then the smallest j. Inputs must be
    non-negative (probability vectors).
    """
    ps = [float(x) for x in p_start]
    pe = [float(x) for x in p_end]
    best_i = best_j = arg = lo
    best_v = ps[lo] * pe[lo]
    for j in range(lo + 1, hi + 1):
        if ps[j] > ps[arg]:
            arg = j
        v = ps[arg] * pe[j]
        if v > best_v or (v == best_v and arg < best_i):
            best_v = v
            best_i = arg
            best_j = j
    return best_i, best_j
