"""Pair-withholding evaluation of rank-preference consistency.

For a rating gap ``(r_hi, r_lo)`` every eligible user contributes one item
they rated ``r_hi`` and one they rated ``r_lo``. Both ratings are removed,
each method is fitted on the reduced matrix, and a pair counts as
discordant when the method predicts the ``r_lo`` item above the ``r_hi``
item.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rankpref import consistency, svd
from rankpref.ratings import (DataError, RatingScale, SparseRatingMatrix, load_dataset,
                              remove_entries, subsample)

log = logging.getLogger(__name__)

DEFAULT_GAPS = ((5, 1), (5, 2), (5, 3), (5, 4))
TIE_EPS = 1e-12


def derive_seed(master, *parts):
    """Stable 64-bit seed from a master seed and any labels."""
    text = "|".join(str(p) for p in (master, *parts)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")


# -- methods -----------------------------------------------------------------

@dataclass(frozen=True)
class MethodSpec:
    kind: str  # "uc", "sc", "svd" or a registered predictor name
    fraction: float | None = None

    @property
    def name(self):
        if self.kind == "svd":
            return f"SVD-{self.fraction:g}"
        return self.kind.upper()


def _fit_uc(matrix, spec, *, tol, max_iter, seed):
    return consistency.fit_uc(matrix, tol=tol, max_iter=max_iter)


def _fit_sc(matrix, spec, *, tol, max_iter, seed):
    return consistency.fit_sc(matrix, tol=tol, max_iter=max_iter)


def _fit_svd(matrix, spec, *, tol, max_iter, seed):
    return svd.fit_svd(matrix, spec.fraction, seed=seed)


# Factories take (matrix, spec, *, tol, max_iter, seed) and return an object
# whose predict_many(users, items) gives NaN where it declines to predict.
PREDICTORS = {"uc": _fit_uc, "sc": _fit_sc, "svd": _fit_svd}


def register_predictor(name, factory):
    """Plug in another completion method under ``name``."""
    PREDICTORS[name.lower()] = factory


def fit_method(spec, matrix, *, tol=consistency.DEFAULT_TOL,
               max_iter=consistency.DEFAULT_MAX_ITER, seed=0):
    try:
        factory = PREDICTORS[spec.kind]
    except KeyError:
        raise ValueError(f"unknown method {spec.kind!r}") from None
    return factory(matrix, spec, tol=tol, max_iter=max_iter, seed=seed)


def parse_methods(text, svd_fractions=svd.DEFAULT_FRACTIONS):
    """``"uc,sc,svd"`` -> specs; bare ``svd`` expands to every fraction, ``svd:0.3`` to one."""
    specs = []
    for token in (t.strip().lower() for t in text.replace(";", ",").split(",")):
        if not token:
            continue
        kind, _, arg = token.partition(":")
        if kind == "svd":
            fractions = [float(arg)] if arg else list(svd_fractions)
            for f in fractions:
                svd.rank_for_fraction(f, 1, 1)
                specs.append(MethodSpec("svd", f))
        elif kind in PREDICTORS:
            specs.append(MethodSpec(kind))
        else:
            raise ValueError(f"unknown method {token!r}")
    if not specs:
        raise ValueError("empty method list")
    return specs


# -- withholding -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WithholdingPlan:
    r_hi: float
    r_lo: float
    triples: np.ndarray  # (K, 3) rows of (user, item_hi, item_lo)
    seed: int
    max_users: int | None = None

    def __len__(self):
        return len(self.triples)

    def removals(self):
        t = self.triples
        return np.concatenate([t[:, [0, 1]], t[:, [0, 2]]])

    def __eq__(self, other):
        return (isinstance(other, WithholdingPlan) and self.r_hi == other.r_hi
                and self.r_lo == other.r_lo and np.array_equal(self.triples, other.triples))


def select_pairs(matrix, r_hi, r_lo, seed, max_users=None):
    """One ``(user, item rated r_hi, item rated r_lo)`` triple per eligible user.

    A seeded subsample of ``max_users`` eligible users is taken first, then
    one item is drawn uniformly from each of the user's two rating groups.
    """
    if not r_hi > r_lo:
        raise ValueError(f"r_hi ({r_hi}) must exceed r_lo ({r_lo})")
    scale = matrix.scale
    if not (scale.contains(r_hi) and scale.contains(r_lo)):
        raise ValueError(f"gap ({r_hi}, {r_lo}) outside rating scale")
    is_hi = matrix.ratings == r_hi
    is_lo = matrix.ratings == r_lo
    has_hi = np.bincount(matrix.users[is_hi], minlength=matrix.n_users) > 0
    has_lo = np.bincount(matrix.users[is_lo], minlength=matrix.n_users) > 0
    eligible = np.nonzero(has_hi & has_lo)[0]
    if len(eligible) == 0:
        raise DataError(f"no user has ratings of both {r_hi:g} and {r_lo:g}")
    rng = np.random.default_rng(seed)
    if max_users is not None and max_users < len(eligible):
        eligible = np.sort(rng.choice(eligible, size=max_users, replace=False))
    triples = np.empty((len(eligible), 3), dtype=np.int64)
    for row, u in enumerate(eligible.tolist()):
        lo, hi = matrix.row_ptr[u], matrix.row_ptr[u + 1]
        items, vals = matrix.items[lo:hi], matrix.ratings[lo:hi]
        triples[row] = (u, rng.choice(items[vals == r_hi]), rng.choice(items[vals == r_lo]))
    return WithholdingPlan(r_hi, r_lo, triples, seed, max_users)


# -- metric ------------------------------------------------------------------

@dataclass(frozen=True)
class DiscordanceReport:
    method: str
    r_hi: float
    r_lo: float
    n_pairs: int
    discordant: int
    concordant: int
    ties: int
    skipped: int
    kendall_tau: float
    rmse_withheld: float
    dataset: str = ""


def count_discordant(predictions, plan, method="", dataset=""):
    """Tally concordant, discordant and tied predicted pairs.

    ``predictions`` is aligned with ``plan.triples`` as ``(pred_hi, pred_lo)``
    rows; a NaN in either slot marks a pair that could not be predicted.
    """
    pred = np.asarray(predictions, dtype=np.float64).reshape(-1, 2)
    if len(pred) != len(plan):
        raise ValueError(f"{len(pred)} predictions for {len(plan)} withheld pairs")
    skip = np.isnan(pred).any(axis=1)
    diff = pred[~skip, 0] - pred[~skip, 1]
    ties = np.abs(diff) <= TIE_EPS
    discordant = int(np.sum(~ties & (diff < 0)))
    concordant = int(np.sum(~ties & (diff > 0)))
    n_ties = int(ties.sum())
    total = discordant + concordant + n_ties
    tau = (concordant - discordant) / total if total else 0.0
    kept = pred[~skip]
    if len(kept):
        err = np.concatenate([kept[:, 0] - plan.r_hi, kept[:, 1] - plan.r_lo])
        rmse = float(np.sqrt(np.mean(err ** 2)))
    else:
        rmse = float("nan")
    return DiscordanceReport(
        method=method, r_hi=plan.r_hi, r_lo=plan.r_lo, n_pairs=len(plan),
        discordant=discordant, concordant=concordant, ties=n_ties, skipped=int(skip.sum()),
        kendall_tau=float(tau), rmse_withheld=rmse, dataset=dataset,
    )


# -- experiment --------------------------------------------------------------

@dataclass
class ExperimentConfig:
    dataset: str | None = None
    format: str | None = None
    methods: list = field(default_factory=lambda: parse_methods("uc,sc,svd"))
    gaps: tuple = DEFAULT_GAPS
    seed: int = 42
    max_users: int | None = None  # K: withheld pairs per gap, None for all eligible
    subsample_users: int | None = None
    subsample_items: int | None = None
    tol: float = consistency.DEFAULT_TOL
    max_iter: int = consistency.DEFAULT_MAX_ITER
    workers: int = 1
    out_csv: str | None = None
    out_svg: str | None = None
    dataset_name: str | None = None

    def load(self):
        if self.dataset is None:
            raise ValueError("config names no dataset")
        matrix = load_dataset(self.dataset, self.format)
        if self.subsample_users is not None or self.subsample_items is not None:
            matrix = subsample(matrix, self.subsample_users, self.subsample_items)
        return matrix


@dataclass
class ExperimentResult:
    reports: list
    unconverged: list  # (method, gap) cells whose balancing fit hit max_iter
    predictions: dict = field(default_factory=dict)  # (method, gap) -> (K, 2) array
    plans: dict = field(default_factory=dict)  # gap -> WithholdingPlan


def _predict_plan(model, plan):
    t = plan.triples
    users = np.concatenate([t[:, 0], t[:, 0]])
    items = np.concatenate([t[:, 1], t[:, 2]])
    values = np.asarray(model.predict_many(users, items), dtype=np.float64)
    return values.reshape(2, -1).T


def run_experiment(config, matrix=None):
    """Run every (gap, method) cell and return one report per cell.

    Within a gap all methods are fitted on the same reduced matrix and scored
    on the same withheld pairs. Reports are ordered by gap, then method.
    """
    if not config.methods:
        raise ValueError("empty method list")
    if matrix is None:
        matrix = config.load()
    name = config.dataset_name or (str(config.dataset) if config.dataset else "")
    result = ExperimentResult([], [])
    for r_hi, r_lo in config.gaps:
        plan = select_pairs(matrix, r_hi, r_lo, seed=derive_seed(config.seed, "plan", r_hi, r_lo),
                            max_users=config.max_users)
        train = remove_entries(matrix, plan.removals())
        result.plans[(r_hi, r_lo)] = plan

        def cell(spec, r_hi=r_hi, r_lo=r_lo, plan=plan, train=train):
            model = fit_method(spec, train, tol=config.tol, max_iter=config.max_iter,
                               seed=derive_seed(config.seed, spec.name, r_hi, r_lo))
            pred = _predict_plan(model, plan)
            return model, pred, count_discordant(pred, plan, spec.name, name)

        if config.workers > 1:
            with ThreadPoolExecutor(config.workers) as pool:
                cells = list(pool.map(cell, config.methods))
        else:
            cells = [cell(spec) for spec in config.methods]
        for spec, (model, pred, report) in zip(config.methods, cells):
            stats = getattr(model, "fit_stats", None)
            if stats is not None and not stats.converged:
                result.unconverged.append((spec.name, (r_hi, r_lo)))
            if report.skipped:
                log.info("%s gap %g/%g: %d of %d pairs skipped", spec.name, r_hi, r_lo,
                         report.skipped, report.n_pairs)
            result.predictions[(spec.name, (r_hi, r_lo))] = pred
            result.reports.append(report)
    return result


# -- consensus-order audit ---------------------------------------------------

@dataclass(frozen=True)
class AuditResult:
    method: str
    trials: int
    violations: int
    resampled: int


def _unanimous_trial(rng, scale):
    values = np.arange(int(np.ceil(scale.min_rating)), int(np.floor(scale.max_rating)) + 1)
    n, m = rng.integers(3, 9, size=2)
    fill = rng.uniform(0.5, 1.0)
    mask = rng.random((n, m)) < fill
    table = rng.choice(values, size=(n, m)).astype(np.float64)
    a, b = rng.choice(m, size=2, replace=False)
    holdout = int(rng.integers(n))
    # every user who rated A or B rated both, and preferred A
    raters = mask[:, a] | mask[:, b]
    mask[:, a] = mask[:, b] = raters
    for u in np.nonzero(raters)[0]:
        hi, lo = np.sort(rng.choice(values, size=2, replace=False))[::-1]
        table[u, a], table[u, b] = hi, lo
    mask[holdout, a] = mask[holdout, b] = False
    table[~mask] = np.nan
    return table, holdout, int(a), int(b)


def audit_consensus_order(method, trials=1000, seed=0, scale=None, tol=consistency.DEFAULT_TOL,
                          max_iter=consistency.DEFAULT_MAX_ITER):
    """Count trials in which a held-out user gets item B ranked above item A.

    Each trial draws a 3x3 to 8x8 matrix, 50-100% filled, in which every user
    who rated A or B rated both and rated A strictly higher. One user's A and
    B ratings are hidden. Draws where that user cannot be predicted for A or
    B (no rater of A/B left, cold start, disconnected) are resampled.
    ``method`` is a :class:`MethodSpec` or a callable ``matrix -> predictor``.
    """
    scale = scale or RatingScale()
    if isinstance(method, MethodSpec):
        spec = method

        def fit(matrix, s=spec):
            return fit_method(s, matrix, tol=tol, max_iter=max_iter, seed=seed)
        label = spec.name
    else:
        fit = method
        label = getattr(method, "__name__", "custom")
    rng = np.random.default_rng(seed)
    violations = resampled = done = 0
    while done < trials:
        table, h, a, b = _unanimous_trial(rng, scale)
        if np.all(np.isnan(table[:, a])) or np.all(np.isnan(table[h])):
            resampled += 1
            continue
        matrix = SparseRatingMatrix.from_dense(table, scale=scale)
        pred_a, pred_b = fit(matrix).predict_many(np.array([h, h]), np.array([a, b]))
        if np.isnan(pred_a) or np.isnan(pred_b):
            resampled += 1
            continue
        done += 1
        if pred_b > pred_a:
            violations += 1
    return AuditResult(label, trials, violations, resampled)
