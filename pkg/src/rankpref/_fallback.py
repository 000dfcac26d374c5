"""Pure numpy/Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and same update order, so both backends converge to the
same fixed point in the same number of sweeps (up to summation rounding).
"""

import numpy as np


def balance_additive(row_ptr, row_items, row_vals, col_ptr, col_users, col_vals,
                     tol, max_iter):
    row_ptr = np.asarray(row_ptr, dtype=np.int64)
    col_ptr = np.asarray(col_ptr, dtype=np.int64)
    row_items = np.asarray(row_items, dtype=np.int64)
    col_users = np.asarray(col_users, dtype=np.int64)
    row_vals = np.asarray(row_vals, dtype=np.float64)
    col_vals = np.asarray(col_vals, dtype=np.float64)
    n_users, n_items = len(row_ptr) - 1, len(col_ptr) - 1

    row_count = np.diff(row_ptr)
    col_count = np.diff(col_ptr)
    row_of = np.repeat(np.arange(n_users), row_count)
    col_of = np.repeat(np.arange(n_items), col_count)
    row_live = row_count > 0
    col_live = col_count > 0
    row_div = np.maximum(row_count, 1)
    col_div = np.maximum(col_count, 1)

    alpha = np.zeros(n_users)
    beta = np.zeros(n_items)
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        mean = np.bincount(row_of, row_vals - beta[row_items], minlength=n_users) / row_div
        rmax = np.abs(mean - alpha)[row_live].max(initial=0.0)
        alpha = np.where(row_live, mean, alpha)
        mean = np.bincount(col_of, col_vals - alpha[col_users], minlength=n_items) / col_div
        cmax = np.abs(mean - beta)[col_live].max(initial=0.0)
        beta = np.where(col_live, mean, beta)
        if rmax <= tol and cmax <= tol:
            break

    resid = np.bincount(row_of, row_vals - alpha[row_of] - beta[row_items],
                        minlength=n_users) / row_div
    residual = float(np.abs(resid)[row_live].max(initial=0.0))
    return alpha, beta, sweeps, residual


def label_components(n_users, n_items, users, items):
    n = int(n_users) + int(n_items)
    parent = list(range(n))
    size = [1] * n

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, i in zip(np.asarray(users).tolist(), np.asarray(items).tolist()):
        a = find(u)
        b = find(n_users + i)
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]

    labels = [-1] * n
    next_label = 0
    for x in range(n):
        root = find(x)
        if labels[root] < 0:
            labels[root] = next_label
            next_label += 1
        labels[x] = labels[root]
    return np.asarray(labels, dtype=np.int64), next_label
