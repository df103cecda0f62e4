# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: n-gram hashing, postings scoring, span argmax.

hopcheck._kernels_py is the pure-Python twin; both must produce
bit-identical results (integer hashes, IEEE-754 double arithmetic in the
same order). hopcheck.kernels picks one of the two at import time.
"""

from libc.stdint cimport int32_t, uint64_t

cdef uint64_t FNV_OFFSET = 14695981039346656037ULL
cdef uint64_t FNV_PRIME = 1099511628211ULL


cpdef uint64_t fnv1a64(bytes data):
    """64-bit FNV-1a over a byte string."""
    cdef uint64_t h = FNV_OFFSET
    cdef const unsigned char* buf = data
    cdef Py_ssize_t i, n = len(data)
    for i in range(n):
        h ^= buf[i]
        h *= FNV_PRIME
    return h


cpdef list ngram_bins(list tokens, long num_bins):
    """Hash every unigram and adjacent bigram into [0, num_bins).

    Bigrams are the two tokens joined by a single space. Output order is
    all unigrams in token order, then all bigrams in token order.
    """
    cdef list bins = []
    cdef Py_ssize_t i, n = len(tokens)
    cdef uint64_t nb = <uint64_t>num_bins
    for i in range(n):
        bins.append(fnv1a64((<str>tokens[i]).encode("utf-8")) % nb)
    for i in range(n - 1):
        bins.append(
            fnv1a64((<str>tokens[i] + " " + <str>tokens[i + 1]).encode("utf-8")) % nb
        )
    return bins


cpdef void accumulate_scores(
    double[::1] scores,
    const int32_t[::1] ordinals,
    const double[::1] weights,
    double query_weight,
):
    """scores[ordinals[i]] += query_weight * weights[i] for one postings list."""
    cdef Py_ssize_t i, n = ordinals.shape[0]
    for i in range(n):
        scores[ordinals[i]] += query_weight * weights[i]


cpdef tuple best_span(
    const double[::1] p_start,
    const double[::1] p_end,
    Py_ssize_t lo,
    Py_ssize_t hi,
):
    """Argmax of p_start[i] * p_end[j] over lo <= i <= j <= hi.

    Ties break toward the smallest i, then the smallest j. Single O(L)
    pass keeping the running argmax of p_start. Inputs must be
    non-negative (probability vectors).
    """
    cdef Py_ssize_t best_i = lo, best_j = lo, arg = lo, j
    cdef double best_v = p_start[lo] * p_end[lo]
    cdef double v
    for j in range(lo + 1, hi + 1):
        if p_start[j] > p_start[arg]:
            arg = j
        v = p_start[arg] * p_end[j]
        if v > best_v or (v == best_v and arg < best_i):
            best_v = v
            best_i = arg
            best_j = j
    return best_i, best_j
