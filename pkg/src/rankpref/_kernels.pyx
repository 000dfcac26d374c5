# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: additive row/column balancing and bipartite union-find."""

import numpy as np

from libc.math cimport fabs


cdef double _row_residual(const long long[:] row_ptr, const long long[:] row_items,
                          const double[:] row_vals, double[:] alpha,
                          double[:] beta) noexcept nogil:
    cdef Py_ssize_t u, p, n = alpha.shape[0]
    cdef long long start, stop
    cdef double acc, worst = 0.0
    for u in range(n):
        start = row_ptr[u]
        stop = row_ptr[u + 1]
        if stop == start:
            continue
        acc = 0.0
        for p in range(start, stop):
            acc += row_vals[p] - alpha[u] - beta[row_items[p]]
        acc = fabs(acc / (stop - start))
        if acc > worst:
            worst = acc
    return worst


def balance_additive(const long long[:] row_ptr, const long long[:] row_items,
                     const double[:] row_vals, const long long[:] col_ptr,
                     const long long[:] col_users, const double[:] col_vals,
                     double tol, long long max_iter):
    """Alternate row-mean and column-mean updates of ``v ~ alpha[u] + beta[i]``.

    Returns ``(alpha, beta, sweeps, residual)`` where residual is the largest
    absolute mean residual over all nonempty rows and columns at exit.
    """
    cdef Py_ssize_t n_users = row_ptr.shape[0] - 1
    cdef Py_ssize_t n_items = col_ptr.shape[0] - 1
    alpha_arr = np.zeros(n_users, dtype=np.float64)
    beta_arr = np.zeros(n_items, dtype=np.float64)
    cdef double[:] alpha = alpha_arr
    cdef double[:] beta = beta_arr
    cdef Py_ssize_t u, i, p
    cdef long long start, stop, sweeps = 0
    cdef double acc, mean, rmax, cmax, residual

    with nogil:
        while sweeps < max_iter:
            sweeps += 1
            rmax = 0.0
            for u in range(n_users):
                start = row_ptr[u]
                stop = row_ptr[u + 1]
                if stop == start:
                    continue
                acc = 0.0
                for p in range(start, stop):
                    acc += row_vals[p] - beta[row_items[p]]
                mean = acc / (stop - start)
                if fabs(mean - alpha[u]) > rmax:
                    rmax = fabs(mean - alpha[u])
                alpha[u] = mean
            cmax = 0.0
            for i in range(n_items):
                start = col_ptr[i]
                stop = col_ptr[i + 1]
                if stop == start:
                    continue
                acc = 0.0
                for p in range(start, stop):
                    acc += col_vals[p] - alpha[col_users[p]]
                mean = acc / (stop - start)
                if fabs(mean - beta[i]) > cmax:
                    cmax = fabs(mean - beta[i])
                beta[i] = mean
            if rmax <= tol and cmax <= tol:
                break
        # columns were updated last, so their mean residual is zero up to rounding
        residual = _row_residual(row_ptr, row_items, row_vals, alpha, beta)
    return alpha_arr, beta_arr, int(sweeps), float(residual)


cdef inline long long _find(long long[:] parent, long long x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(long long n_users, long long n_items,
                     const long long[:] users, const long long[:] items):
    """Connected components of the bipartite user-item graph.

    Nodes are users ``0..n_users-1`` followed by items. Component ids are
    assigned in order of each component's lowest node.
    """
    cdef long long n = n_users + n_items
    parent_arr = np.arange(n, dtype=np.int64)
    size_arr = np.ones(n, dtype=np.int64)
    labels_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[:] parent = parent_arr
    cdef long long[:] size = size_arr
    cdef long long[:] labels = labels_arr
    cdef Py_ssize_t e, m = users.shape[0]
    cdef long long a, b, x, next_label = 0

    with nogil:
        for e in range(m):
            a = _find(parent, users[e])
            b = _find(parent, n_users + items[e])
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
        for x in range(n):
            a = _find(parent, x)
            if labels[a] < 0:
                labels[a] = next_label
                next_label += 1
            labels[x] = labels[a]
    return labels_arr, int(next_label)
