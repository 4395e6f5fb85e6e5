# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pure.py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint32_t, uint8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef int64_t SAFE_PRODUCT = 1LL << 62


cdef inline uint64_t _mix(uint64_t seed, uint64_t n) nogil:
    cdef uint64_t z = seed + GOLDEN * (n + 1)
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def mix64(seed, n):
    return int(_mix(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF), <uint64_t>n))


def seeded_bits(seed, int64_t start, int64_t stop):
    if stop <= start:
        return np.zeros(0, dtype=np.uint8)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    out = np.empty(stop - start, dtype=np.uint8)
    cdef uint8_t[::1] view = out
    cdef int64_t i
    with nogil:
        for i in range(stop - start):
            view[i] = <uint8_t>(_mix(s, <uint64_t>(start + i)) & 1)
    return out


def seeded_bits_at(seed, positions):
    cdef int64_t[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    out = np.empty(pos.shape[0], dtype=np.uint8)
    cdef uint8_t[::1] view = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(pos.shape[0]):
            view[i] = <uint8_t>(_mix(s, <uint64_t>pos[i]) & 1)
    return out


def walk_hits(bits):
    cdef uint8_t[::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t i, m = 0
    cdef int64_t ones = 0
    out = np.empty(b.shape[0], dtype=np.int64)
    cdef int64_t[::1] view = out
    for i in range(b.shape[0]):
        ones += b[i]
        if 2 * ones == i + 1:
            view[m] = i + 1
            m += 1
    return out[:m]


cdef bint _has_hit(uint64_t s, int64_t[::1] pos) nogil:
    cdef Py_ssize_t i
    cdef int64_t ones = 0
    for i in range(pos.shape[0]):
        ones += <int64_t>(_mix(s, <uint64_t>pos[i]) & 1)
        if 2 * ones == i + 1:
            return True
    return False


def recurrence_trials(seed, positions, int64_t trials):
    cdef int64_t[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t t, successes = 0
    with nogil:
        for t in range(trials):
            if _has_hit(_mix(s, <uint64_t>t), pos):
                successes += 1
    return successes


def lln_trials(seed, positions, int64_t trials, eps_num, eps_den):
    cdef int64_t[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t i, k = pos.shape[0]
    cdef int64_t t, c, successes = 0
    cdef uint64_t ts
    # the final comparison stays in Python ints: eps may carry large terms
    for t in range(trials):
        ts = _mix(s, <uint64_t>t)
        c = 0
        with nogil:
            for i in range(k):
                c += <int64_t>(_mix(ts, <uint64_t>pos[i]) & 1)
        if abs(2 * c - k) * eps_den < 2 * k * eps_num:
            successes += 1
    return successes


def fail_trials(seed, int64_t k_total, int64_t k_min, int64_t n, int64_t trials):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ts
    cdef int64_t t, k, ones, successes = 0
    with nogil:
        for t in range(trials):
            ts = _mix(s, <uint64_t>t)
            ones = 0
            for k in range(1, k_total + 1):
                ones += <int64_t>(_mix(ts, <uint64_t>(k - 1)) & 1)
                if k >= k_min and n * (2 * ones - k) > k:
                    successes += 1
                    break
    return successes


def d5_first_violation(sig, uint32_t mask, uint32_t val, int64_t d, num, den,
                       int64_t lo, int64_t hi):
    cdef uint32_t[::1] sg = np.ascontiguousarray(sig, dtype=np.uint32)
    cdef int64_t scale = 1LL << d
    cdef int64_t c = 0, i, j, diff
    cdef int64_t inum, iden, found = -1
    if (hi + 1) * scale * max(num, den, 1) >= SAFE_PRODUCT:
        from halving_lab import _pure
        return _pure.d5_first_violation(np.asarray(sig), mask, val, d, num, den, lo, hi)
    inum = num
    iden = den
    with nogil:
        for j in range(lo):
            if (sg[j] & mask) == val:
                c += 1
        for i in range(lo, hi + 1):
            diff = c * scale - i
            if diff < 0:
                diff = -diff
            if diff * iden >= inum * i * scale:
                found = i
                break
            if i < hi and (sg[i] & mask) == val:
                c += 1
    return found
