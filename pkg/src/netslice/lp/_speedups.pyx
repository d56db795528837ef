# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex hot-loop kernels; twin of ``_kernels_py``."""

from libc.math cimport INFINITY, fabs

COMPILED = True


def reduced_costs(int[::1] indptr, int[::1] indices, double[::1] data,
                  long[::1] col_ids, double[::1] y, double[::1] c,
                  double[::1] out):
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t j, p
    cdef double acc
    for j in range(n):
        acc = 0.0
        for p in range(indptr[j], indptr[j + 1]):
            acc += data[p] * y[indices[p]]
        out[j] = c[j] - acc


def ftran(double[:, ::1] binv, int[::1] col_indices, double[::1] col_values,
          double[::1] out):
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t nnz = col_indices.shape[0]
    cdef Py_ssize_t i, p
    cdef double acc
    for i in range(m):
        acc = 0.0
        for p in range(nnz):
            acc += binv[i, col_indices[p]] * col_values[p]
        out[i] = acc


def eta_update(double[:, ::1] binv, double[::1] w, Py_ssize_t r):
    cdef Py_ssize_t m = binv.shape[0]
    cdef double piv = w[r]
    cdef Py_ssize_t i, j
    cdef double f
    for j in range(m):
        binv[r, j] /= piv
    for i in range(m):
        if i == r:
            continue
        f = w[i]
        if f == 0.0:
            continue
        for j in range(m):
            binv[i, j] -= f * binv[r, j]


def ratio_test(double[::1] w, double[::1] x_b, double[::1] lb_b,
               double[::1] ub_b, double direction, double own_range,
               double pivot_tol, bint bland, long[::1] basis):
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t i
    cdef double coef, num, ratio
    cdef double row_min = INFINITY
    for i in range(m):
        coef = direction * w[i]
        if coef > pivot_tol:
            num = x_b[i] - lb_b[i]
            if num < 0.0:
                num = 0.0
            ratio = num / coef
        elif coef < -pivot_tol:
            num = ub_b[i] - x_b[i]
            if num < 0.0:
                num = 0.0
            ratio = num / (-coef)
        else:
            continue
        if ratio < row_min:
            row_min = ratio
    if own_range <= row_min:
        if own_range == INFINITY:
            return INFINITY, -2
        return own_range, -1
    if row_min == INFINITY:
        return INFINITY, -2
    cdef double cutoff = row_min + 1e-10 * (1.0 + row_min)
    cdef Py_ssize_t best = -1
    cdef double best_score = -1.0
    cdef long best_col = 0
    for i in range(m):
        coef = direction * w[i]
        if coef > pivot_tol:
            num = x_b[i] - lb_b[i]
            if num < 0.0:
                num = 0.0
            ratio = num / coef
        elif coef < -pivot_tol:
            num = ub_b[i] - x_b[i]
            if num < 0.0:
                num = 0.0
            ratio = num / (-coef)
        else:
            continue
        if ratio <= cutoff:
            if bland:
                if best < 0 or basis[i] < best_col:
                    best = i
                    best_col = basis[i]
            else:
                if fabs(coef) > best_score:
                    best = i
                    best_score = fabs(coef)
    ratio = x_b[best] - lb_b[best]
    coef = direction * w[best]
    if coef > 0.0:
        num = x_b[best] - lb_b[best]
        if num < 0.0:
            num = 0.0
        ratio = num / coef
    else:
        num = ub_b[best] - x_b[best]
        if num < 0.0:
            num = 0.0
        ratio = num / (-coef)
    return ratio, best
