"""Componentwise boosting with gradient-free singular iterations and column measures."""

from .boosting import (
    BoostConfig,
    FitTrace,
    IterationRecord,
    LinearModel,
    coefficient_paths,
    corr_min_report,
    fit_generic,
    fit_l2boost,
    fit_singboost,
)
from .data import Dataset, Standardization, SyntheticSpec, load_csv, simulate_gaussian_linear, standardize
from .errors import ConfigError, DataError, DesignError, LossError, MeasureError, SingBoostError
from .estimators import expected_one_step, influence_eval, k_step, one_step, reduced_one_step
from .losses import LossSpec, hard_rank_loss_fast, neg_gradient, parse_loss, risk
from .measures import (
    ColumnMeasure,
    RowMeasure,
    column_measure_from_trace,
    dominates,
    equivalent,
    implied_law,
    induced_column_measure,
    reject_init,
    reject_next,
    reject_sample,
    singular_part,
    total_variation,
)

__version__ = "0.1.0"

__all__ = [
    "BoostConfig",
    "coefficient_paths",
    "column_measure_from_trace",
    "ColumnMeasure",
    "ConfigError",
    "corr_min_report",
    "DataError",
    "Dataset",
    "DesignError",
    "dominates",
    "equivalent",
    "expected_one_step",
    "fit_generic",
    "fit_l2boost",
    "fit_singboost",
    "FitTrace",
    "hard_rank_loss_fast",
    "implied_law",
    "induced_column_measure",
    "influence_eval",
    "IterationRecord",
    "k_step",
    "LinearModel",
    "load_csv",
    "LossError",
    "LossSpec",
    "MeasureError",
    "neg_gradient",
    "one_step",
    "parse_loss",
    "reduced_one_step",
    "reject_init",
    "reject_next",
    "reject_sample",
    "risk",
    "RowMeasure",
    "simulate_gaussian_linear",
    "SingBoostError",
    "singular_part",
    "Standardization",
    "standardize",
    "SyntheticSpec",
    "total_variation",
]
