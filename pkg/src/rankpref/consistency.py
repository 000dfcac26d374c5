"""Shift-consistent (SC) and unit-consistent (UC) matrix completion.

SC models a rating as a user shift plus an item shift, ``alpha[u] + beta[i]``,
fitted to the filled entries by least squares. UC is the same fit on log
ratings, so its completion is ``exp(lam[u] + mu[i])``: a user scale factor
times an item scale factor. Both fits are unique per connected component of
the rating graph up to a constant moved between users and items, which is
pinned by making the user parameters of each component average to zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from rankpref import _backend
from rankpref.ratings import ComponentLabeling, DataError, RatingScale, connected_components

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000

FORMAT_TAG = "rankpref-consistency-model"
FORMAT_VERSION = 1

OK, COLD_START, CROSS_COMPONENT = 0, 1, 2


class ColdStartError(LookupError):
    """User or item has no training ratings."""


class CrossComponentError(LookupError):
    """User and item are not linked by any chain of ratings."""


@dataclass(frozen=True)
class FitStats:
    iterations: int
    final_residual: float
    converged: bool


@dataclass(frozen=True, eq=False)
class ConsistencyModel:
    kind: str  # "shift" or "unit"
    row_param: np.ndarray
    col_param: np.ndarray
    components: ComponentLabeling
    fit_stats: FitStats
    tolerance: float
    user_active: np.ndarray
    item_active: np.ndarray
    scale: RatingScale | None = None

    @property
    def n_users(self):
        return len(self.row_param)

    @property
    def n_items(self):
        return len(self.col_param)

    def status(self, u, i):
        if not (self.user_active[u] and self.item_active[i]):
            return COLD_START
        if self.components.component_of_user[u] != self.components.component_of_item[i]:
            return CROSS_COMPONENT
        return OK

    def predict(self, u, i, clamp=False):
        return predict(self, u, i, clamp=clamp)

    def predict_many(self, users, items, clamp=False):
        """Vectorised predictions; NaN where no prediction is defined."""
        result = complete_all(self, np.column_stack([users, items]), clamp=clamp)
        return result.values


@dataclass(frozen=True)
class Completion:
    values: np.ndarray  # NaN where status != OK
    status: np.ndarray  # OK, COLD_START or CROSS_COMPONENT per request

    @property
    def ok(self):
        return self.status == OK


def _fit_additive(matrix, values, tol, max_iter):
    if matrix.nnz == 0:
        raise DataError("cannot fit an empty matrix")
    if not tol > 0:
        raise ValueError("tol must be positive")
    values = np.asarray(values, dtype=np.float64)
    alpha, beta, sweeps, residual = _backend.balance_additive(
        matrix.row_ptr, matrix.items, values,
        matrix.col_ptr, matrix.col_users, np.ascontiguousarray(values[matrix.col_entry]),
        float(tol), int(max_iter),
    )
    comps = connected_components(matrix)
    # gauge: user parameters average to zero within each component
    n_c = comps.n_components
    shift = (np.bincount(comps.component_of_user, alpha, minlength=n_c)
             / np.maximum(np.bincount(comps.component_of_user, minlength=n_c), 1))
    alpha = alpha - shift[comps.component_of_user]
    beta = beta + shift[comps.component_of_item]
    converged = residual <= tol
    if not converged:
        log.warning("balancing stopped after %d sweeps with residual %.3g > tol %.3g",
                    sweeps, residual, tol)
    return alpha, beta, comps, FitStats(sweeps, residual, converged)


def _build(kind, matrix, values, tol, max_iter):
    alpha, beta, comps, stats = _fit_additive(matrix, values, tol, max_iter)
    return ConsistencyModel(
        kind=kind, row_param=alpha, col_param=beta, components=comps, fit_stats=stats,
        tolerance=tol, user_active=matrix.row_counts() > 0,
        item_active=matrix.col_counts() > 0, scale=matrix.scale,
    )


def fit_sc(matrix, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fit per-user and per-item shifts by alternating row/column means."""
    return _build("shift", matrix, matrix.ratings, tol, max_iter)


def fit_uc(matrix, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fit per-user and per-item log scale factors; requires positive ratings."""
    if np.any(matrix.ratings <= 0):
        raise DataError("unit-consistent fit requires strictly positive ratings")
    return _build("unit", matrix, np.log(matrix.ratings), tol, max_iter)


def _clamp(x, model):
    if model.scale is None:
        return x
    return np.clip(x, model.scale.min_rating, model.scale.max_rating)


def predict(model, u, i, clamp=False):
    if not (0 <= u < model.n_users and 0 <= i < model.n_items):
        raise IndexError(f"({u}, {i}) out of bounds for {model.n_users}x{model.n_items}")
    status = model.status(u, i)
    if status == COLD_START:
        raise ColdStartError(f"no training ratings for user {u} or item {i}")
    if status == CROSS_COMPONENT:
        raise CrossComponentError(f"user {u} and item {i} lie in different components")
    value = model.row_param[u] + model.col_param[i]
    if model.kind == "unit":
        value = np.exp(value)
    value = float(value)
    return float(_clamp(value, model)) if clamp else value


def complete_all(model, requests, clamp=False):
    """Predict every ``(u, i)`` in ``requests``; failures are flagged, not raised."""
    req = np.asarray(requests, dtype=np.int64).reshape(-1, 2)
    u, i = req[:, 0], req[:, 1]
    if len(req) and (u.min() < 0 or i.min() < 0 or u.max() >= model.n_users
                     or i.max() >= model.n_items):
        raise IndexError("request out of bounds")
    status = np.full(len(req), OK, dtype=np.int8)
    status[model.components.component_of_user[u] != model.components.component_of_item[i]] = \
        CROSS_COMPONENT
    status[~(model.user_active[u] & model.item_active[i])] = COLD_START
    values = model.row_param[u] + model.col_param[i]
    if model.kind == "unit":
        values = np.exp(values)
    if clamp:
        values = _clamp(values, model)
    values = np.where(status == OK, values, np.nan)
    return Completion(values=values, status=status)


def save_model(model, path):
    """Write a versioned plain-text model file.

    Parameters are written with ``repr`` so they reload bit-exactly. Cold-start
    rows and columns are written as ``nan``; component ids follow the
    parameters so a reloaded model keeps its cross-component checks.
    """
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"kind {model.kind}",
        f"n_users {model.n_users}",
        f"n_items {model.n_items}",
        f"tolerance {model.tolerance!r}",
        f"iterations {model.fit_stats.iterations}",
        f"final_residual {model.fit_stats.final_residual!r}",
    ]
    if model.scale is not None:
        lines.append(f"scale {model.scale.min_rating!r} {model.scale.max_rating!r}")
    lines.append("row_param")
    rows = np.where(model.user_active, model.row_param, np.nan)
    lines.extend(repr(float(x)) for x in rows)
    lines.append("col_param")
    cols = np.where(model.item_active, model.col_param, np.nan)
    lines.extend(repr(float(x)) for x in cols)
    lines.append("user_component")
    lines.extend(str(int(c)) for c in model.components.component_of_user)
    lines.append("item_component")
    lines.extend(str(int(c)) for c in model.components.component_of_item)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    tag, _, version = lines[0].partition(" ")
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise DataError(f"{path}: not a version-{FORMAT_VERSION} consistency model")
    header = {}
    pos = 1
    while lines[pos] != "row_param":
        key, _, value = lines[pos].partition(" ")
        header[key] = value
        pos += 1
    n_users, n_items = int(header["n_users"]), int(header["n_items"])

    def block(name, count, conv):
        nonlocal pos
        if lines[pos] != name:
            raise DataError(f"{path}: expected section {name!r}")
        out = [conv(x) for x in lines[pos + 1:pos + 1 + count]]
        pos += 1 + count
        return np.asarray(out)

    rows = block("row_param", n_users, float)
    cols = block("col_param", n_items, float)
    cu = block("user_component", n_users, int).astype(np.int64)
    ci = block("item_component", n_items, int).astype(np.int64)
    n_comp = int(max(cu.max(initial=-1), ci.max(initial=-1)) + 1)
    scale = None
    if "scale" in header:
        lo, hi = header["scale"].split()
        scale = RatingScale(float(lo), float(hi))
    tol = float(header["tolerance"])
    residual = float(header.get("final_residual", "nan"))
    return ConsistencyModel(
        kind=header["kind"],
        row_param=np.nan_to_num(rows, nan=0.0),
        col_param=np.nan_to_num(cols, nan=0.0),
        components=ComponentLabeling(cu, ci, n_comp),
        fit_stats=FitStats(int(header["iterations"]), residual, residual <= tol),
        tolerance=tol,
        user_active=~np.isnan(rows),
        item_active=~np.isnan(cols),
        scale=scale,
    )
