# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled join kernels: C inner loops for the brute-force and grid joins.

Grid preprocessing (cell keys, neighbor deltas, bucket CSR) is shared with
the pure-numpy twin so both backends scan the identical candidate multiset;
distances accumulate squared diffs sequentially over dimensions, matching
the numpy accumulation order bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

from . import _joinkern_py as _prep

cnp.import_array()

BACKEND = "cython"

KEY_MULT = _prep.KEY_MULT


cdef inline Py_ssize_t _lower_bound(const cnp.uint64_t* a, Py_ssize_t n,
                                    cnp.uint64_t v) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef class _PairBuf:
    """Growable (xi, yi, dist) triple buffer."""
    cdef cnp.ndarray xs, ys, ds
    cdef cnp.int64_t[::1] xv, yv
    cdef double[::1] dv
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.xs = np.empty(self.cap, dtype=np.int64)
        self.ys = np.empty(self.cap, dtype=np.int64)
        self.ds = np.empty(self.cap, dtype=np.float64)
        self._rebind()

    cdef void _rebind(self) noexcept:
        self.xv = self.xs
        self.yv = self.ys
        self.dv = self.ds

    cdef void _grow(self) except *:
        self.cap *= 2
        xs = np.empty(self.cap, dtype=np.int64)
        ys = np.empty(self.cap, dtype=np.int64)
        ds = np.empty(self.cap, dtype=np.float64)
        xs[: self.n] = self.xs[: self.n]
        ys[: self.n] = self.ys[: self.n]
        ds[: self.n] = self.ds[: self.n]
        self.xs, self.ys, self.ds = xs, ys, ds
        self._rebind()

    cdef inline void push(self, Py_ssize_t i, Py_ssize_t j, double dist) except *:
        if self.n == self.cap:
            self._grow()
        self.xv[self.n] = i
        self.yv[self.n] = j
        self.dv[self.n] = dist
        self.n += 1

    cdef tuple take(self):
        return (
            self.xs[: self.n].copy(),
            self.ys[: self.n].copy(),
            self.ds[: self.n].copy(),
        )


def brute_pairs(X, Y, double eps):
    """All (i, j) with ||X[i] - Y[j]|| <= eps, plus the distance-eval count."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t nx = xv.shape[0], ny = yv.shape[0], d = xv.shape[1]
    cdef double eps2 = eps * eps
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    cdef _PairBuf buf = _PairBuf()
    for i in range(nx):
        for j in range(ny):
            acc = 0.0
            for k in range(d):
                diff = xv[i, k] - yv[j, k]
                acc += diff * diff
            if acc <= eps2:
                buf.push(i, j, sqrt(acc))
    xi, yi, dist = buf.take()
    return xi, yi, dist, nx * ny


def grid_pairs(X, Y, double eps):
    """Grid-bucketed join; identical candidate set to the numpy twin."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t nx = X.shape[0], ny = Y.shape[0], d = X.shape[1]
    if nx == 0 or ny == 0:
        return (
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.float64),
            0,
        )

    with np.errstate(over="ignore"):
        mults = _prep.cell_multipliers(d)
        ky = _prep.cell_keys(np.floor(Y / eps).astype(np.int64), mults)
        kx = _prep.cell_keys(np.floor(X / eps).astype(np.int64), mults)
        deltas = _prep.offset_key_deltas(d, mults)
        order = np.argsort(ky, kind="stable").astype(np.int64)
        ukeys, ustarts, ucounts = np.unique(
            ky[order], return_index=True, return_counts=True
        )

    cdef const double[:, ::1] xv = X
    cdef const double[:, ::1] yv = Y
    cdef cnp.uint64_t[::1] kxv = kx
    cdef cnp.uint64_t[::1] dlt = deltas
    cdef cnp.uint64_t[::1] ukv = ukeys
    cdef cnp.int64_t[::1] stv = ustarts.astype(np.int64)
    cdef cnp.int64_t[::1] ctv = ucounts.astype(np.int64)
    cdef cnp.int64_t[::1] orderv = order

    cdef double eps2 = eps * eps
    cdef Py_ssize_t n_groups = ukv.shape[0], n_deltas = dlt.shape[0]
    cdef Py_ssize_t i, m, g, t, j, k, start, count
    cdef cnp.uint64_t target
    cdef double acc, diff
    cdef long long n_evals = 0
    cdef _PairBuf buf = _PairBuf()

    for i in range(nx):
        for m in range(n_deltas):
            target = kxv[i] + dlt[m]
            g = _lower_bound(&ukv[0], n_groups, target)
            if g == n_groups or ukv[g] != target:
                continue
            start = stv[g]
            count = ctv[g]
            for t in range(start, start + count):
                j = orderv[t]
                acc = 0.0
                for k in range(d):
                    diff = xv[i, k] - yv[j, k]
                    acc += diff * diff
                n_evals += 1
                if acc <= eps2:
                    buf.push(i, j, sqrt(acc))
    xi, yi, dist = buf.take()
    return xi, yi, dist, int(n_evals)
