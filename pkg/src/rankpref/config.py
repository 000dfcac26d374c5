"""Experiment configuration files.

Plain ``key = value`` lines; ``#`` starts a comment. Recognised keys::

    dataset          path to ratings file
    format           movielens | csv (default: guessed from suffix)
    methods          e.g. ``uc, sc, svd`` or ``svd:0.25``
    svd_fractions    fractions that a bare ``svd`` expands to
    gaps             rating pairs, e.g. ``5,1; 5,2``
    seed             master seed
    max_users        withheld pairs per gap (``all`` for every eligible user)
    subsample_users  keep only the first N users by index
    subsample_items  keep only the first N items by index
    tol, max_iter    balancing tolerance and sweep cap
    workers          threads for (method, gap) cells
    out_csv, out_svg report paths
    scale            rating scale, e.g. ``1,5``
"""

from __future__ import annotations

import re

from rankpref import svd
from rankpref.harness import ExperimentConfig, parse_methods
from rankpref.ratings import RatingScale

KEYS = {"dataset", "format", "methods", "svd_fractions", "gaps", "seed", "max_users",
        "subsample_users", "subsample_items", "tol", "max_iter", "workers", "out_csv",
        "out_svg", "scale", "dataset_name"}


class ConfigError(ValueError):
    pass


def _numbers(text):
    try:
        return [float(x) for x in re.split(r"[\s,;:]+", text.strip()) if x]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}") from None


def parse_gaps(text, scale=None):
    scale = scale or RatingScale()
    nums = _numbers(text)
    if not nums or len(nums) % 2:
        raise ConfigError(f"gaps must be rating pairs, got {text!r}")
    gaps = []
    for hi, lo in zip(nums[::2], nums[1::2]):
        if not (scale.contains(hi) and scale.contains(lo)):
            raise ConfigError(f"gap ({hi:g}, {lo:g}): rating outside scale "
                              f"[{scale.min_rating:g}, {scale.max_rating:g}]")
        if not hi > lo:
            raise ConfigError(f"gap ({hi:g}, {lo:g}): first rating must be the higher")
        gaps.append((hi, lo))
    return tuple(gaps)


def _optional_int(text):
    text = text.strip().lower()
    if text in ("all", "none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer or 'all', got {text!r}") from None


def build_config(values):
    """ExperimentConfig from a ``{key: raw string}`` mapping."""
    unknown = set(values) - KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = ExperimentConfig()
    scale = RatingScale()
    if "scale" in values:
        nums = _numbers(values["scale"])
        if len(nums) != 2:
            raise ConfigError("scale needs two numbers")
        try:
            scale = RatingScale(*nums)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    fractions = svd.DEFAULT_FRACTIONS
    try:
        if "svd_fractions" in values:
            fractions = tuple(_numbers(values["svd_fractions"]))
            for f in fractions:
                svd.rank_for_fraction(f, 1, 1)
        if "methods" in values:
            cfg.methods = parse_methods(values["methods"], fractions)
        else:
            cfg.methods = parse_methods("uc,sc,svd", fractions)
        if "tol" in values:
            cfg.tol = float(values["tol"])
            if not cfg.tol > 0:
                raise ConfigError("tol must be positive")
        if "max_iter" in values:
            cfg.max_iter = int(values["max_iter"])
        if "seed" in values:
            cfg.seed = int(values["seed"])
        if "workers" in values:
            cfg.workers = int(values["workers"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "gaps" in values:
        cfg.gaps = parse_gaps(values["gaps"], scale)
    for key in ("max_users", "subsample_users", "subsample_items"):
        if key in values:
            setattr(cfg, key, _optional_int(values[key]))
    for key in ("dataset", "format", "out_csv", "out_svg", "dataset_name"):
        if key in values and values[key].strip():
            setattr(cfg, key, values[key].strip())
    if cfg.format not in (None, "movielens", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg


def read_config_values(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip().lower()] = value.strip()
    return values


def load_config(path):
    return build_config(read_config_values(path))
