# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Hamming kernels: word-wise popcount over XOR-ed packed codes.

Hot inner loop of the retrieval engine.  The pure-numpy fallback with the
same interface lives in ``_hamming_np``.
"""

from libc.stdint cimport int64_t, uint64_t

import numpy as np


cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #  define TAGHASH_POPCNT64(x) __builtin_popcountll(x)
    #else
    static inline int TAGHASH_POPCNT64(unsigned long long v) {
        v = v - ((v >> 1) & 0x5555555555555555ULL);
        v = (v & 0x3333333333333333ULL) + ((v >> 2) & 0x3333333333333333ULL);
        v = (v + (v >> 4)) & 0x0F0F0F0F0F0F0F0FULL;
        return (int)((v * 0x0101010101010101ULL) >> 56);
    }
    #endif
    """
    int TAGHASH_POPCNT64(uint64_t x) nogil


def distances_one(const uint64_t[:, ::1] db_words, const uint64_t[::1] q_words):
    """Hamming distances from one query to every database code, (n,)."""
    cdef Py_ssize_t n = db_words.shape[0]
    cdef Py_ssize_t w = db_words.shape[1]
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i, j
    cdef int64_t acc
    with nogil:
        for i in range(n):
            acc = 0
            for j in range(w):
                acc += TAGHASH_POPCNT64(db_words[i, j] ^ q_words[j])
            o[i] = acc
    return out


def distances_many(const uint64_t[:, ::1] db_words, const uint64_t[:, ::1] q_words):
    """Hamming distances for a query batch, (n_queries, n)."""
    cdef Py_ssize_t nq = q_words.shape[0]
    cdef Py_ssize_t n = db_words.shape[0]
    cdef Py_ssize_t w = db_words.shape[1]
    out = np.empty((nq, n), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef Py_ssize_t q, i, j
    cdef int64_t acc
    with nogil:
        for q in range(nq):
            for i in range(n):
                acc = 0
                for j in range(w):
                    acc += TAGHASH_POPCNT64(db_words[i, j] ^ q_words[q, j])
                o[q, i] = acc
    return out
