"""Sparse user-item rating storage, ingestion and connectivity."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rankpref import _backend


class DataError(ValueError):
    """Malformed, out-of-range or otherwise unusable rating data."""


@dataclass(frozen=True)
class RatingScale:
    min_rating: float = 1.0
    max_rating: float = 5.0

    def __post_init__(self):
        if not self.min_rating < self.max_rating:
            raise ValueError(
                f"min_rating ({self.min_rating}) must be below max_rating ({self.max_rating})"
            )

    def contains(self, values):
        values = np.asarray(values, dtype=np.float64)
        return (values >= self.min_rating) & (values <= self.max_rating)


@dataclass(frozen=True)
class ComponentLabeling:
    component_of_user: np.ndarray
    component_of_item: np.ndarray
    n_components: int


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


class SparseRatingMatrix:
    """Immutable users x items rating matrix.

    Entries are stored as triples sorted by ``(user, item)``, so the row index
    is a plain CSR pointer into the entry arrays. The column index keeps, for
    each item, its users in ascending order together with the offset of each
    entry in the triple arrays.

    Build instances with :meth:`from_triples` or the loaders below; the
    constructor itself trusts its inputs.
    """

    __slots__ = (
        "n_users", "n_items", "users", "items", "ratings", "scale",
        "user_ids", "item_ids", "row_ptr", "col_ptr", "col_users", "col_entry",
        "_user_lookup", "_item_lookup",
    )

    def __init__(self, n_users, n_items, users, items, ratings, scale, user_ids, item_ids):
        self.n_users = int(n_users)
        self.n_items = int(n_items)
        self.users = _frozen(users, np.int64)
        self.items = _frozen(items, np.int64)
        self.ratings = _frozen(ratings, np.float64)
        self.scale = scale
        self.user_ids = _frozen(user_ids, None)
        self.item_ids = _frozen(item_ids, None)
        self.row_ptr = _frozen(
            np.concatenate([[0], np.cumsum(np.bincount(self.users, minlength=self.n_users))]),
            np.int64,
        )
        order = np.lexsort((self.users, self.items))
        self.col_entry = _frozen(order, np.int64)
        self.col_users = _frozen(self.users[order], np.int64)
        self.col_ptr = _frozen(
            np.concatenate([[0], np.cumsum(np.bincount(self.items, minlength=self.n_items))]),
            np.int64,
        )
        self._user_lookup = None
        self._item_lookup = None

    @classmethod
    def from_triples(cls, users, items, ratings, scale=None, user_ids=None, item_ids=None,
                     shape=None):
        """Build from dense 0-based index triples.

        ``shape`` defaults to one past the largest index seen; ``user_ids`` and
        ``item_ids`` default to the dense indices themselves.
        """
        scale = scale or RatingScale()
        users = np.asarray(users, dtype=np.int64).ravel()
        items = np.asarray(items, dtype=np.int64).ravel()
        ratings = np.asarray(ratings, dtype=np.float64).ravel()
        if not (len(users) == len(items) == len(ratings)):
            raise DataError("users, items and ratings must have equal length")
        if shape is None:
            shape = (
                int(users.max()) + 1 if len(users) else 0,
                int(items.max()) + 1 if len(items) else 0,
            )
        n_users, n_items = shape
        if len(users) and (users.min() < 0 or items.min() < 0
                           or users.max() >= n_users or items.max() >= n_items):
            raise DataError("index out of bounds for matrix shape")
        if not np.all(np.isfinite(ratings)):
            raise DataError("ratings must be finite")
        bad = ~scale.contains(ratings)
        if bad.any():
            k = int(np.argmax(bad))
            raise DataError(
                f"rating outside scale: {ratings[k]} not in "
                f"[{scale.min_rating}, {scale.max_rating}] at ({users[k]}, {items[k]})"
            )
        order = np.lexsort((items, users))
        users, items, ratings = users[order], items[order], ratings[order]
        dup = (users[1:] == users[:-1]) & (items[1:] == items[:-1])
        if dup.any():
            k = int(np.argmax(dup))
            raise DataError(f"duplicate pair ({users[k]}, {items[k]})")
        if user_ids is None:
            user_ids = np.arange(n_users)
        if item_ids is None:
            item_ids = np.arange(n_items)
        if len(user_ids) != n_users or len(item_ids) != n_items:
            raise DataError("id maps do not match matrix shape")
        return cls(n_users, n_items, users, items, ratings, scale, user_ids, item_ids)

    @classmethod
    def from_dense(cls, table, scale=None):
        """Build from a 2-D array where NaN marks a missing rating."""
        table = np.asarray(table, dtype=np.float64)
        users, items = np.nonzero(~np.isnan(table))
        return cls.from_triples(users, items, table[users, items], scale=scale,
                                shape=table.shape)

    @property
    def nnz(self):
        return len(self.ratings)

    @property
    def shape(self):
        return (self.n_users, self.n_items)

    @property
    def sparsity(self):
        return 1.0 - self.nnz / (self.n_users * self.n_items)

    def row(self, u):
        """Items and entry offsets for user ``u``."""
        lo, hi = self.row_ptr[u], self.row_ptr[u + 1]
        return self.items[lo:hi], np.arange(lo, hi)

    def col(self, i):
        """Users and entry offsets for item ``i``."""
        lo, hi = self.col_ptr[i], self.col_ptr[i + 1]
        return self.col_users[lo:hi], self.col_entry[lo:hi]

    def row_counts(self):
        return np.diff(self.row_ptr)

    def col_counts(self):
        return np.diff(self.col_ptr)

    def entry_offset(self, u, i):
        """Offset of entry ``(u, i)`` in the triple arrays, or -1 when missing."""
        lo, hi = self.row_ptr[u], self.row_ptr[u + 1]
        k = lo + np.searchsorted(self.items[lo:hi], i)
        if k < hi and self.items[k] == i:
            return int(k)
        return -1

    def rating(self, u, i):
        k = self.entry_offset(u, i)
        return None if k < 0 else float(self.ratings[k])

    def to_dense(self, fill=np.nan):
        out = np.full(self.shape, fill, dtype=np.float64)
        out[self.users, self.items] = self.ratings
        return out

    def user_index(self, user_id):
        if self._user_lookup is None:
            self._user_lookup = {v: k for k, v in enumerate(self.user_ids.tolist())}
        return self._user_lookup[user_id]

    def item_index(self, item_id):
        if self._item_lookup is None:
            self._item_lookup = {v: k for k, v in enumerate(self.item_ids.tolist())}
        return self._item_lookup[item_id]

    def triple_set(self):
        """Set of ``(user_id, item_id, rating)`` using external ids."""
        uid = self.user_ids[self.users].tolist()
        iid = self.item_ids[self.items].tolist()
        return set(zip(uid, iid, self.ratings.tolist()))

    def with_values(self, values, scale):
        """Same sparsity pattern and ids, different entry values."""
        return SparseRatingMatrix(self.n_users, self.n_items, self.users, self.items,
                                  values, scale, self.user_ids, self.item_ids)

    def __repr__(self):
        return (f"SparseRatingMatrix(n_users={self.n_users}, n_items={self.n_items}, "
                f"nnz={self.nnz})")


def _dense_ids(raw):
    """Map external ids to dense indices in sorted-id order."""
    ids, inverse = np.unique(np.asarray(raw), return_inverse=True)
    return ids, inverse.astype(np.int64)


def _assemble(raw_users, raw_items, ratings, line_numbers, scale, path):
    if not ratings:
        raise DataError(f"{path}: no entries")
    ratings = np.asarray(ratings, dtype=np.float64)
    bad = ~scale.contains(ratings)
    if bad.any():
        k = int(np.argmax(bad))
        raise DataError(
            f"{path}:{line_numbers[k]}: rating outside scale "
            f"({ratings[k]:g} not in [{scale.min_rating:g}, {scale.max_rating:g}])"
        )
    user_ids, users = _dense_ids(raw_users)
    item_ids, items = _dense_ids(raw_items)
    order = np.lexsort((items, users))
    su, si = users[order], items[order]
    dup = np.nonzero((su[1:] == su[:-1]) & (si[1:] == si[:-1]))[0]
    if len(dup):
        first, second = sorted((order[dup[0]], order[dup[0] + 1]))
        raise DataError(
            f"{path}:{line_numbers[second]}: duplicate pair "
            f"(user {raw_users[second]}, item {raw_items[second]}) first seen on line "
            f"{line_numbers[first]}"
        )
    return SparseRatingMatrix(len(user_ids), len(item_ids), su, si, ratings[order], scale,
                              user_ids, item_ids)


def load_movielens(path, scale=None):
    """Read a MovieLens ``UserID::MovieID::Rating::Timestamp`` file.

    Timestamps are validated as integers and discarded.
    """
    scale = scale or RatingScale()
    path = Path(path)
    users, items, ratings, lines = [], [], [], []
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: malformed line, expected 4 '::' fields")
            try:
                u, i, r, _ = (int(p) for p in parts)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed line, non-integer field") from None
            users.append(u)
            items.append(i)
            ratings.append(r)
            lines.append(lineno)
    return _assemble(users, items, ratings, lines, scale, path)


def _maybe_int(values):
    try:
        return [int(v) for v in values]
    except ValueError:
        return values


def load_csv(path, has_header=False, scale=None):
    """Read ``user_id,item_id,rating`` rows.

    Ids that all parse as integers are treated as integers, otherwise as
    strings.
    """
    scale = scale or RatingScale()
    path = Path(path)
    users, items, ratings, lines = [], [], [], []
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            lineno = reader.line_num
            if has_header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: malformed line, expected 3 fields")
            u, i, r = (c.strip() for c in row)
            try:
                r = float(r)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed line, bad rating {r!r}") from None
            if not np.isfinite(r):
                raise DataError(f"{path}:{lineno}: malformed line, bad rating {r!r}")
            if not u or not i:
                raise DataError(f"{path}:{lineno}: malformed line, empty id")
            users.append(u)
            items.append(i)
            ratings.append(r)
            lines.append(lineno)
    return _assemble(_maybe_int(users), _maybe_int(items), ratings, lines, scale, path)


def load_dataset(path, fmt=None, scale=None, has_header=None):
    """Dispatch on ``fmt`` (``movielens`` or ``csv``), guessing from the suffix."""
    path = Path(path)
    if fmt is None:
        fmt = "movielens" if path.suffix == ".dat" else "csv"
    if fmt == "movielens":
        return load_movielens(path, scale=scale)
    if fmt == "csv":
        if has_header is None:
            has_header = _sniff_header(path)
        return load_csv(path, has_header=has_header, scale=scale)
    raise ValueError(f"unknown dataset format {fmt!r}")


def _sniff_header(path):
    with open(path, encoding="utf-8-sig", newline="") as fh:
        first = next(csv.reader(fh), None)
    if not first or len(first) < 3:
        return False
    try:
        float(first[2])
    except ValueError:
        return True
    return False


def write_csv(matrix, path, header=True):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(["user_id", "item_id", "rating"])
        uid = matrix.user_ids[matrix.users].tolist()
        iid = matrix.item_ids[matrix.items].tolist()
        for u, i, r in zip(uid, iid, matrix.ratings.tolist()):
            writer.writerow([u, i, repr(r)])


def remove_entries(matrix, removals):
    """Copy of ``matrix`` without the ``(user_index, item_index)`` pairs listed."""
    removals = np.asarray(removals, dtype=np.int64).reshape(-1, 2)
    drop = np.zeros(matrix.nnz, dtype=bool)
    for u, i in removals.tolist():
        if not (0 <= u < matrix.n_users and 0 <= i < matrix.n_items):
            raise DataError(f"removal ({u}, {i}) out of bounds")
        k = matrix.entry_offset(u, i)
        if k < 0 or drop[k]:
            raise DataError(f"cannot remove absent entry ({u}, {i})")
        drop[k] = True
    keep = ~drop
    return SparseRatingMatrix(matrix.n_users, matrix.n_items, matrix.users[keep],
                              matrix.items[keep], matrix.ratings[keep], matrix.scale,
                              matrix.user_ids, matrix.item_ids)


def subsample(matrix, max_users=None, max_items=None):
    """Restrict to the first ``max_users`` users and ``max_items`` items by index.

    Users and items left without ratings are dropped and the rest re-indexed
    in their original order.
    """
    keep = np.ones(matrix.nnz, dtype=bool)
    if max_users is not None:
        keep &= matrix.users < max_users
    if max_items is not None:
        keep &= matrix.items < max_items
    users, items = matrix.users[keep], matrix.items[keep]
    live_u = np.unique(users)
    live_i = np.unique(items)
    return SparseRatingMatrix.from_triples(
        np.searchsorted(live_u, users), np.searchsorted(live_i, items), matrix.ratings[keep],
        scale=matrix.scale, user_ids=matrix.user_ids[live_u], item_ids=matrix.item_ids[live_i],
        shape=(len(live_u), len(live_i)),
    )


def connected_components(matrix):
    labels, n = _backend.label_components(matrix.n_users, matrix.n_items,
                                          matrix.users, matrix.items)
    return ComponentLabeling(
        component_of_user=_frozen(labels[:matrix.n_users], np.int64),
        component_of_item=_frozen(labels[matrix.n_users:], np.int64),
        n_components=int(n),
    )


def summarize(matrix):
    """Dataset statistics in the shape of a dataset summary table."""
    values, counts = np.unique(matrix.ratings, return_counts=True)
    return {
        "n_users": matrix.n_users,
        "n_items": matrix.n_items,
        "nnz": matrix.nnz,
        "sparsity": matrix.sparsity,
        "histogram": dict(zip(values.tolist(), counts.tolist())),
        "n_components": connected_components(matrix).n_components,
    }
