"""Truncated-SVD completion baseline.

The sparse rating matrix is first explained by a damped bias model
(global mean + user bias + item bias). The residuals on filled cells, with
zeros elsewhere, are decomposed by randomized subspace iteration and the
top ``k`` singular triplets are kept. A prediction is the bias baseline plus
the rank-``k`` reconstruction of the residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from rankpref.ratings import DataError

DEFAULT_FRACTIONS = (0.1, 0.3, 0.6)
DAMPING = 5.0
OVERSAMPLE = 10
POWER_ITERATIONS = 4

FORMAT_TAG = "rankpref-svd-model"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Baseline:
    global_mean: float
    row_bias: np.ndarray
    col_bias: np.ndarray

    def __call__(self, users, items):
        return self.global_mean + self.row_bias[users] + self.col_bias[items]


@dataclass(frozen=True, eq=False)
class SvdModel:
    rank: int
    left_factors: np.ndarray  # n_users x k, orthonormal columns
    right_factors: np.ndarray  # n_items x k, orthonormal columns
    singular_values: np.ndarray
    baseline: Baseline

    def predict(self, u, i, clamp=False, scale=None):
        return predict_svd(self, u, i, clamp=clamp, scale=scale)

    def predict_many(self, users, items):
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        low_rank = np.einsum("nk,nk->n", self.left_factors[users] * self.singular_values,
                             self.right_factors[items])
        return self.baseline(users, items) + low_rank

    def reconstruct(self):
        """Dense rank-k approximation of the residual table."""
        return (self.left_factors * self.singular_values) @ self.right_factors.T


def impute_baseline(matrix, damping=DAMPING):
    """Damped bias model and the sparse table of residuals it leaves.

    ``row_bias[u] = sum(r - mean) / (n_u + damping)`` over the user's ratings;
    ``col_bias[i] = sum(r - mean - row_bias[u]) / (n_i + damping)`` over the
    item's ratings. The returned CSR table holds ``r - baseline`` on filled
    cells and zero everywhere else.
    """
    if matrix.nnz == 0:
        raise DataError("cannot impute an empty matrix")
    r = matrix.ratings
    u, i = matrix.users, matrix.items
    mean = float(r.mean())
    row_bias = np.bincount(u, r - mean, minlength=matrix.n_users) / (
        matrix.row_counts() + damping)
    col_bias = np.bincount(i, r - mean - row_bias[u], minlength=matrix.n_items) / (
        matrix.col_counts() + damping)
    baseline = Baseline(mean, row_bias, col_bias)
    resid = r - baseline(u, i)
    table = sp.csr_matrix((resid, (u, i)), shape=matrix.shape)
    return table, baseline


def _orthonormalize(y):
    q, _ = np.linalg.qr(y)
    return q


def randomized_svd(a, k, oversample=OVERSAMPLE, n_iter=POWER_ITERATIONS, seed=0):
    """Top-``k`` singular triplets of ``a`` by randomized subspace iteration.

    Each power step re-orthonormalizes, so accuracy does not degrade with
    ``n_iter``. When ``k + oversample`` reaches ``min(a.shape)`` the sketch
    spans the whole range of ``a`` and the result is exact.
    """
    n_rows, n_cols = a.shape
    width = min(k + oversample, n_rows, n_cols)
    rng = np.random.default_rng(seed)
    q = _orthonormalize(a @ rng.standard_normal((n_cols, width)))
    for _ in range(n_iter):
        z = _orthonormalize(a.T @ q)
        q = _orthonormalize(a @ z)
    b = np.asarray((a.T @ q).T)  # width x n_cols
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    return q @ ub[:, :k], s[:k], vt[:k].T


def rank_for_fraction(fraction, n_users, n_items):
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # half-up rounding: 0.25 * 3706 -> 927
    return max(1, int(np.floor(fraction * min(n_users, n_items) + 0.5)))


def fit_svd(matrix, fraction, seed=0, damping=DAMPING, oversample=OVERSAMPLE,
            n_iter=POWER_ITERATIONS):
    """Fit a rank-k model keeping ``fraction`` of ``min(n_users, n_items)`` singular values."""
    k = rank_for_fraction(fraction, matrix.n_users, matrix.n_items)
    table, baseline = impute_baseline(matrix, damping=damping)
    left, s, right = randomized_svd(table, k, oversample=oversample, n_iter=n_iter, seed=seed)
    return SvdModel(rank=k, left_factors=left, right_factors=right, singular_values=s,
                    baseline=baseline)


def predict_svd(model, u, i, clamp=False, scale=None):
    n_users, n_items = len(model.left_factors), len(model.right_factors)
    if not (0 <= u < n_users and 0 <= i < n_items):
        raise IndexError(f"({u}, {i}) out of bounds for {n_users}x{n_items}")
    value = float(model.baseline(u, i)
                  + np.dot(model.left_factors[u] * model.singular_values, model.right_factors[i]))
    if clamp and scale is not None:
        value = min(max(value, scale.min_rating), scale.max_rating)
    return value


def save_model(model, path):
    n_users, n_items = len(model.left_factors), len(model.right_factors)
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"n_users {n_users}",
        f"n_items {n_items}",
        f"k {model.rank}",
        f"global_mean {model.baseline.global_mean!r}",
        "singular_values",
        *(repr(float(x)) for x in model.singular_values),
        "row_bias",
        *(repr(float(x)) for x in model.baseline.row_bias),
        "col_bias",
        *(repr(float(x)) for x in model.baseline.col_bias),
        "left_factors",
        *(" ".join(repr(float(x)) for x in row) for row in model.left_factors),
        "right_factors",
        *(" ".join(repr(float(x)) for x in row) for row in model.right_factors),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    tag, _, version = lines[0].partition(" ")
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise DataError(f"{path}: not a version-{FORMAT_VERSION} svd model")
    head = dict(line.split(" ", 1) for line in lines[1:5])
    n_users, n_items, k = int(head["n_users"]), int(head["n_items"]), int(head["k"])
    pos = 5

    def block(name, count):
        nonlocal pos
        if lines[pos] != name:
            raise DataError(f"{path}: expected section {name!r}")
        rows = lines[pos + 1:pos + 1 + count]
        pos += 1 + count
        return np.array([[float(x) for x in row.split()] for row in rows]).reshape(count, -1)

    s = block("singular_values", k).ravel()
    row_bias = block("row_bias", n_users).ravel()
    col_bias = block("col_bias", n_items).ravel()
    left = block("left_factors", n_users).reshape(n_users, k)
    right = block("right_factors", n_items).reshape(n_items, k)
    return SvdModel(rank=k, left_factors=left, right_factors=right, singular_values=s,
                    baseline=Baseline(float(head["global_mean"]), row_bias, col_bias))
