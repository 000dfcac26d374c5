"""Consistency-based matrix completion and rank-preference evaluation."""

from rankpref._backend import BACKEND
from rankpref.consistency import (ColdStartError, ConsistencyModel, CrossComponentError,
                                  complete_all, fit_sc, fit_uc, predict)
from rankpref.harness import (DiscordanceReport, ExperimentConfig, WithholdingPlan,
                              audit_consensus_order, count_discordant, run_experiment,
                              select_pairs)
from rankpref.ratings import (ComponentLabeling, DataError, RatingScale, SparseRatingMatrix,
                              connected_components, load_csv, load_dataset, load_movielens,
                              remove_entries)
from rankpref.svd import SvdModel, fit_svd, impute_baseline, predict_svd

__version__ = "0.1.0"
