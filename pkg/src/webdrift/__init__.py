"""Temporal clustering of web usage navigations for drift detection."""

__version__ = "0.1.0"

from .core import ClusteringConfig, Partition, Prototypes, allocate, best_of, represent, run
from .evaluation import contingency, corrected_rand, cr_pair_counting_oracle, f_measure
from .features import FeatureVector, assign_sub_period, compute_features, standardize
from .ingest import Navigation, RawRequest, filter_navigations, parse_log, sessionize
from .report import compare_strategies
from .strategies import (StrategyResult, TemporalDataset, dependent_local_strategy, global_strategy,
                         independent_local_strategy, previous_local_strategy)
from .synth import DriftScenario, generate
