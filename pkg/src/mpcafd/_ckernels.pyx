# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``."""
import numpy as np

from libc.math cimport sqrt, fabs


def jacobi_eigh(a_in, double tol=1e-15, int max_sweeps=64):
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n)
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef double total = 0.0, off, apq, theta, t, c, s, x1, x2
    cdef int sweeps = 0
    for p in range(n):
        for q in range(n):
            total += a[p, q] * a[p, q]
    for sweeps in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off <= tol * tol * total or off == 0.0 or sweeps == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x1 = a[k, p]
                    x2 = a[k, q]
                    a[k, p] = c * x1 - s * x2
                    a[k, q] = s * x1 + c * x2
                for k in range(n):
                    x1 = a[p, k]
                    x2 = a[q, k]
                    a[p, k] = c * x1 - s * x2
                    a[q, k] = s * x1 + c * x2
                for k in range(n):
                    x1 = v[k, p]
                    x2 = v[k, q]
                    v[k, p] = c * x1 - s * x2
                    v[k, q] = s * x1 + c * x2
    diag = np.empty(n)
    for p in range(n):
        diag[p] = a[p, p]
    return diag, v_arr, sweeps


def nearest_centroid(x_in, centroids):
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], kc = c.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    dist_arr = np.empty(n)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, k
    cdef double best, d, diff
    cdef long long arg
    for i in range(n):
        best = 0.0
        arg = -1
        for k in range(kc):
            d = 0.0
            for j in range(m):
                diff = x[i, j] - c[k, j]
                d = d + diff * diff
            # NaN distances never win
            if arg < 0 or d < best:
                if d == d:
                    best = d
                    arg = k
        if arg < 0:
            arg = 0
            best = float("nan")
        labels[i] = arg
        dist[i] = best
    return labels_arr, dist_arr


def score_indices(z_in, loadings, inv_lam_in, double t2_limit, double spe_limit):
    cdef double[:, ::1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef double[:, ::1] p = np.ascontiguousarray(loadings, dtype=np.float64)
    cdef double[::1] inv_lam = np.ascontiguousarray(inv_lam_in, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], m = z.shape[1], l = p.shape[1]
    t2_arr = np.empty(n)
    spe_arr = np.empty(n)
    phi_arr = np.empty(n)
    cdef double[::1] t2 = t2_arr
    cdef double[::1] spe = spe_arr
    cdef double[::1] phi = phi_arr
    score_buf = np.empty(l)
    cdef double[::1] score = score_buf
    cdef Py_ssize_t i, j, k
    cdef double acc, r
    for i in range(n):
        acc = 0.0
        for k in range(l):
            score[k] = 0.0
            for j in range(m):
                score[k] += z[i, j] * p[j, k]
            acc += score[k] * score[k] * inv_lam[k]
        t2[i] = acc
        acc = 0.0
        for j in range(m):
            r = z[i, j]
            for k in range(l):
                r -= p[j, k] * score[k]
            acc += r * r
        spe[i] = acc
        phi[i] = acc / spe_limit + t2[i] / t2_limit
    return t2_arr, spe_arr, phi_arr
