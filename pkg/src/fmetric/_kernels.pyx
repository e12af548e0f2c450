# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Semantics and floating-point evaluation order mirror ``_kernels_py``; see
that module for the storage convention (strict upper triangle).  Inner
loops are written branch-free so the C compiler can vectorise them.
"""

from libc.math cimport INFINITY as INF

import numpy as np

VIOLATING, DISCONNECTED, ZERO_LOWER, MAXIMAL = 0, 1, 2, 3

BACKEND = "compiled"


ctypedef struct ScanState:
    double threshold
    long long nv
    long long nd
    long long nz
    long long best_bits
    long long nb
    Py_ssize_t first_k
    Py_ssize_t first_l


cdef inline double ratio_of(double x, double y) noexcept nogil:
    if x == y:
        return 1.0
    if x == 0.0:
        return INF
    return y / x


cdef inline double dmax(double x, double y) noexcept nogil:
    return x if x > y else y


cdef void lower_row(double* arow, double* brow, Py_ssize_t k, Py_ssize_t n,
                    const double* f, const double* g, const double* bi, const double* bj) noexcept nogil:
    cdef Py_ssize_t l
    cdef double fk = f[k], gk = g[k], bik = bi[k], bjk = bj[k]
    cdef double t1, t2, lb, x, y
    for l in range(k + 1, n):
        t1 = f[l] - bik
        t2 = g[l] - bjk
        lb = t1 if t1 > t2 else t2
        t1 = fk - bi[l]
        t2 = gk - bj[l]
        t1 = t1 if t1 > t2 else t2
        lb = lb if lb > t1 else t1
        x = brow[l]
        lb = x if lb > x else lb
        y = arow[l]
        y = lb if lb > y else y
        arow[l] = y
        # rounding can leave an old lower bound an ulp above a new path length
        brow[l] = y if y > x else x


cdef void gather(const double* m, Py_ssize_t n, Py_ssize_t i, double* out) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(i):
        out[k] = m[k * n + i]
    out[i] = 0.0
    for k in range(i + 1, n):
        out[k] = m[i * n + k]


cdef void relax_upper(double* d, Py_ssize_t n, const double* di, const double* dj, double w,
                      const unsigned char* known) noexcept nogil:
    cdef Py_ssize_t k, l
    cdef double cik, cjk, t1, t2, t, x, nx
    cdef double* row
    cdef const unsigned char* kn
    for k in range(n - 1):
        if di[k] == INF and dj[k] == INF:
            continue
        cik = di[k] + w
        cjk = dj[k] + w
        row = d + k * n
        if known != NULL:
            kn = known + k * n
            for l in range(k + 1, n):
                t1 = cik + dj[l]
                t2 = cjk + di[l]
                t = t1 if t1 < t2 else t2
                x = row[l]
                nx = t if t < x else x
                row[l] = x if kn[l] else nx
        else:
            for l in range(k + 1, n):
                t1 = cik + dj[l]
                t2 = cjk + di[l]
                t = t1 if t1 < t2 else t2
                x = row[l]
                row[l] = t if t < x else x


cdef void ratio_row(const double* arow, const double* brow, Py_ssize_t k, Py_ssize_t n,
                    double* rbuf) noexcept nogil:
    cdef Py_ssize_t l
    cdef double x, y, q, r
    for l in range(k + 1, n):
        x = arow[l]
        y = brow[l]
        q = y / x
        r = q if x != 0.0 else INF
        rbuf[l] = 1.0 if x == y else r


cdef void scan_row(const double* arow, const double* brow, Py_ssize_t k, Py_ssize_t n,
                   double* rbuf, ScanState* st) noexcept nogil:
    cdef Py_ssize_t l
    cdef double r, thr = st.threshold
    cdef long long nv = 0, nd = 0, nz = 0, nb = 0, m, viol
    cdef long long* rb = <long long*> rbuf
    if k + 1 >= n:
        return
    ratio_row(arow, brow, k, n, rbuf)
    for l in range(k + 1, n):
        r = rbuf[l]
        viol = r > thr
        nv += viol
        nd += viol & (brow[l] == INF)
        nz += viol & (arow[l] == 0.0)
    st.nv += nv
    st.nd += nd
    st.nz += nz
    # ratios are non-negative, so their bit patterns order like the values
    m = rb[k + 1]
    for l in range(k + 2, n):
        m = rb[l] if rb[l] > m else m
    if m < st.best_bits:
        return
    for l in range(k + 1, n):
        nb += rb[l] == m
    if m > st.best_bits:
        st.best_bits = m
        st.nb = nb
        for l in range(k + 1, n):
            if rb[l] == m:
                st.first_k = k
                st.first_l = l
                break
    else:
        st.nb += nb


cdef tuple finish(ScanState* st):
    cdef double best
    if st.nv == 0:
        return (0, 0, 0, -1.0, 0, -1, -1)
    best = (<double*> &st.best_bits)[0]
    return (st.nv, st.nd, st.nz, best, st.nb, st.first_k, st.first_l)


cdef void init_state(ScanState* st, double threshold) noexcept nogil:
    st.threshold = threshold
    st.nv = 0
    st.nd = 0
    st.nz = 0
    st.best_bits = -1
    st.nb = 0
    st.first_k = -1
    st.first_l = -1


def relax_through_edge(double[:, ::1] d, Py_ssize_t i, Py_ssize_t j, double w):
    """Shortest-path update of upper-triangle matrix ``d`` after edge ``(i, j, w)``."""
    cdef Py_ssize_t n = d.shape[0]
    if i > j:
        i, j = j, i
    if w < d[i, j]:
        d[i, j] = w
    cdef double[::1] di = np.empty(n)
    cdef double[::1] dj = np.empty(n)
    cdef double* D = &d[0, 0]
    with nogil:
        gather(D, n, i, &di[0])
        gather(D, n, j, &dj[0])
        relax_upper(D, n, &di[0], &dj[0], w, NULL)


def update_bounds(double[:, ::1] a, double[:, ::1] b, known,
                  Py_ssize_t i, Py_ssize_t j, double v, double threshold):
    cdef const unsigned char[:, ::1] kn = np.ascontiguousarray(known).view(np.uint8)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k, l
    if i > j:
        i, j = j, i
    a[i, j] = v
    b[i, j] = v
    cdef double[::1] bi = np.empty(n)
    cdef double[::1] bj = np.empty(n)
    cdef double[::1] ai = np.empty(n)
    cdef double[::1] aj = np.empty(n)
    cdef double[::1] f = np.empty(n)
    cdef double[::1] g = np.empty(n)
    cdef double[::1] rbuf = np.empty(n)
    cdef double* A = &a[0, 0]
    cdef double* B = &b[0, 0]
    cdef double* pbi = &bi[0]
    cdef double* pbj = &bj[0]
    cdef double* pai = &ai[0]
    cdef double* paj = &aj[0]
    cdef double* pf = &f[0]
    cdef double* pg = &g[0]
    cdef ScanState st
    init_state(&st, threshold)
    with nogil:
        gather(B, n, i, pbi)
        gather(B, n, j, pbj)
        relax_upper(B, n, pbi, pbj, v, &kn[0, 0])

        gather(B, n, i, pbi)
        gather(B, n, j, pbj)
        gather(A, n, i, pai)
        gather(A, n, j, paj)
        for k in range(n):
            pf[k] = dmax(v - pbj[k], paj[k] - v)
            pg[k] = dmax(v - pbi[k], pai[k] - v)
        for k in range(n):
            if not (pbi[k] == INF and pbj[k] == INF and pf[k] <= 0.0 and pg[k] <= 0.0):
                lower_row(A + k * n, B + k * n, k, n, pf, pg, pbi, pbj)
            scan_row(A + k * n, B + k * n, k, n, &rbuf[0], &st)
    return finish(&st)


def scan_pairs(double[:, ::1] a, double[:, ::1] b, double threshold):
    """Return ``(nv, nd, nz, best, nb, first_k, first_l)`` over pairs ``k < l``."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k
    cdef double[::1] rbuf = np.empty(max(n, 1))
    cdef ScanState st
    init_state(&st, threshold)
    with nogil:
        for k in range(n):
            scan_row(&a[k, 0], &b[k, 0], k, n, &rbuf[0], &st)
    return finish(&st)


cdef long long count_class(const double* arow, const double* brow, const double* rbuf,
                           Py_ssize_t k, Py_ssize_t n, double thr, int cls,
                           double best) noexcept nogil:
    cdef Py_ssize_t l
    cdef long long c = 0
    if cls == 1:
        for l in range(k + 1, n):
            c += (rbuf[l] > thr) & (brow[l] == INF)
    elif cls == 2:
        for l in range(k + 1, n):
            c += (rbuf[l] > thr) & (arow[l] == 0.0)
    elif cls == 3:
        for l in range(k + 1, n):
            c += (rbuf[l] > thr) & (rbuf[l] == best)
    else:
        for l in range(k + 1, n):
            c += rbuf[l] > thr
    return c


def pick_pair(const double[:, ::1] a, const double[:, ::1] b, double threshold,
              int cls, double best, Py_ssize_t rank):
    """Return the ``rank``-th pair (row-major over ``k < l``) of class ``cls``."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k, l, fk = -1, fl = -1
    cdef long long seen = 0, c
    cdef double[::1] buf = np.empty(max(n, 1))
    cdef double* rbuf = &buf[0]
    cdef const double* arow
    cdef const double* brow
    cdef double r
    cdef bint hit
    if rank < 0:
        raise IndexError(f"rank {rank} out of range")
    with nogil:
        for k in range(n - 1):
            arow = &a[k, 0]
            brow = &b[k, 0]
            ratio_row(arow, brow, k, n, rbuf)
            c = count_class(arow, brow, rbuf, k, n, threshold, cls, best)
            if seen + c <= rank:
                seen += c
                continue
            for l in range(k + 1, n):
                r = rbuf[l]
                if not r > threshold:
                    continue
                if cls == 1:
                    hit = brow[l] == INF
                elif cls == 2:
                    hit = arow[l] == 0.0
                elif cls == 3:
                    hit = r == best
                else:
                    hit = True
                if hit:
                    if seen == rank:
                        fk = k
                        fl = l
                        break
                    seen += 1
            break
    if fk < 0:
        raise IndexError(f"rank {rank} out of range for {seen} candidates")
    return int(fk), int(fl)


def pair_ratio(const double[:, ::1] a, const double[:, ::1] b, Py_ssize_t i, Py_ssize_t j):
    if i > j:
        i, j = j, i
    return ratio_of(a[i, j], b[i, j])
