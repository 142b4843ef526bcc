# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tableau row kernels (bit-packed, 64 qubits per word)."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, uint8_t

cnp.import_array()


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int _pc(uint64_t v) nogil:
    return __builtin_popcountll(v)


cdef inline int _phase(const uint64_t* x1, const uint64_t* z1,
                       const uint64_t* x2, const uint64_t* z2,
                       Py_ssize_t W) nogil:
    cdef Py_ssize_t w
    cdef uint64_t a, b, c, d, y1, xo, zo, pos, neg
    cdef int acc = 0
    for w in range(W):
        a = x1[w]; b = z1[w]; c = x2[w]; d = z2[w]
        y1 = a & b
        xo = a & ~b
        zo = (~a) & b
        pos = (y1 & d & ~c) | (xo & d & c) | (zo & c & ~d)
        neg = (y1 & c & ~d) | (xo & d & ~c) | (zo & c & d)
        acc += _pc(pos) - _pc(neg)
    return acc


cdef inline int _anti(const uint64_t* x1, const uint64_t* z1,
                      const uint64_t* x2, const uint64_t* z2,
                      Py_ssize_t W) nogil:
    cdef Py_ssize_t w
    cdef int acc = 0
    for w in range(W):
        acc ^= _pc((x1[w] & z2[w]) ^ (z1[w] & x2[w])) & 1
    return acc


cdef inline void _rowmul(uint64_t* xh, uint64_t* zh, uint8_t* rh,
                         const uint64_t* xi, const uint64_t* zi, uint8_t ri,
                         Py_ssize_t W) nogil:
    # row h := row i * row h
    cdef int tot = 2 * rh[0] + 2 * ri + _phase(xi, zi, xh, zh, W)
    cdef Py_ssize_t w
    rh[0] = <uint8_t>(((tot % 4) + 4) % 4 >= 2)
    for w in range(W):
        xh[w] ^= xi[w]
        zh[w] ^= zi[w]


def rowmul(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
           Py_ssize_t h, Py_ssize_t i):
    _rowmul(&xs[h, 0], &zs[h, 0], &r[h], &xs[i, 0], &zs[i, 0], r[i], xs.shape[1])


def peek(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
         Py_ssize_t n, uint64_t[::1] px, uint64_t[::1] pz, int psign):
    """Outcome bit if the measurement is deterministic, else -1."""
    cdef Py_ssize_t W = xs.shape[1], i, w
    for i in range(n, 2 * n):
        if _anti(&xs[i, 0], &zs[i, 0], &px[0], &pz[0], W):
            return -1
    cdef uint64_t[::1] sx = np.zeros(W, dtype=np.uint64)
    cdef uint64_t[::1] sz = np.zeros(W, dtype=np.uint64)
    cdef uint8_t sr = 0
    for i in range(n):
        if _anti(&xs[i, 0], &zs[i, 0], &px[0], &pz[0], W):
            _rowmul(&sx[0], &sz[0], &sr, &xs[i + n, 0], &zs[i + n, 0], r[i + n], W)
    return (sr ^ psign) & 1


def measure(uint64_t[:, ::1] xs, uint64_t[:, ::1] zs, uint8_t[::1] r,
            Py_ssize_t n, uint64_t[::1] px, uint64_t[::1] pz, int psign,
            int rbit):
    """Measure a Pauli; returns (outcome, deterministic)."""
    cdef Py_ssize_t W = xs.shape[1], i, w, p = -1
    for i in range(n, 2 * n):
        if _anti(&xs[i, 0], &zs[i, 0], &px[0], &pz[0], W):
            p = i
            break
    if p < 0:
        return peek(xs, zs, r, n, px, pz, psign), True
    for i in range(2 * n):
        if i != p and _anti(&xs[i, 0], &zs[i, 0], &px[0], &pz[0], W):
            _rowmul(&xs[i, 0], &zs[i, 0], &r[i], &xs[p, 0], &zs[p, 0], r[p], W)
    for w in range(W):
        xs[p - n, w] = xs[p, w]
        zs[p - n, w] = zs[p, w]
        xs[p, w] = px[w]
        zs[p, w] = pz[w]
    r[p - n] = r[p]
    r[p] = <uint8_t>((psign ^ rbit) & 1)
    return rbit & 1, False
