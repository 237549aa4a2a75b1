# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled decoder kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, int8_t, uint8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef uint64_t BLOCK = 0xD6E8FEB86659FD93ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def concat_symbols(seed, cols, int d, int q):
    cdef const int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0], i
    cdef int b
    out = np.empty((n, d), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef uint64_t s = <uint64_t>int(seed), h1
    with nogil:
        for i in range(n):
            h1 = mix64(s + (<uint64_t>c[i] + 1) * GOLDEN)
            for b in range(d):
                o[i, b] = <int64_t>(mix64(h1 ^ ((<uint64_t>(b + 1)) * BLOCK)) % <uint64_t>q)
    return out


def concat_filter(seed, cols, int d, int q, negative):
    cdef const int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef const uint8_t[::1] neg = np.ascontiguousarray(negative, dtype=np.uint8)
    cdef Py_ssize_t n = c.shape[0], i
    cdef int b
    out = np.ones(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef uint64_t s = <uint64_t>int(seed), h1
    cdef int64_t row
    with nogil:
        for i in range(n):
            h1 = mix64(s + (<uint64_t>c[i] + 1) * GOLDEN)
            for b in range(d):
                row = <int64_t>b * q + <int64_t>(mix64(h1 ^ ((<uint64_t>(b + 1)) * BLOCK)) % <uint64_t>q)
                if neg[row]:
                    o[i] = 0
                    break
    return out.view(bool)


def csr_survivors(col_ptr, col_idx, negative, cols):
    cdef const int64_t[::1] ptr = np.ascontiguousarray(col_ptr, dtype=np.int64)
    cdef const int64_t[::1] idx = np.ascontiguousarray(col_idx, dtype=np.int64)
    cdef const uint8_t[::1] neg = np.ascontiguousarray(negative, dtype=np.uint8)
    cdef const int64_t[::1] c = np.ascontiguousarray(cols, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0], i
    cdef int64_t p, j
    out = np.ones(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    with nogil:
        for i in range(n):
            j = c[i]
            for p in range(ptr[j], ptr[j + 1]):
                if neg[idx[p]]:
                    o[i] = 0
                    break
    return out.view(bool)


def agreement_counts(y, bucket, sign, cands):
    cdef const int8_t[:, :, ::1] yy = np.ascontiguousarray(y, dtype=np.int8)
    cdef const int32_t[:, :, ::1] bk = np.ascontiguousarray(bucket, dtype=np.int32)
    cdef const int8_t[:, :, ::1] sg = np.ascontiguousarray(sign, dtype=np.int8)
    cdef const int64_t[::1] c = np.ascontiguousarray(cands, dtype=np.int64)
    cdef Py_ssize_t M = bk.shape[0], T = bk.shape[1], n = c.shape[0]
    cdef Py_ssize_t m, t, i
    cdef int64_t a
    out = np.zeros((M, n), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    with nogil:
        for m in range(M):
            for t in range(T):
                for i in range(n):
                    a = c[i]
                    if yy[m, t, bk[m, t, a]] == sg[m, t, a]:
                        o[m, i] += 1
    return out


def score_level(y, bucket, sign, cands, double lo, double hi):
    cnt = agreement_counts(y, bucket, sign, cands)
    good = (cnt > hi) | (cnt < lo)
    return good.sum(axis=0).astype(np.int64)
