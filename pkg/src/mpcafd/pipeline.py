"""Offline training pipeline: clean, partition, refine, fit."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .condition_bank import (
    PRIOR_TAGS,
    ModelBank,
    PriorKey,
    derive_prior_conditions,
    fit_bank,
    kmeans_refine,
)
from .config import GlobalConfig
from .dataset_io import TimeSeriesDataset
from .errors import EmptyDatasetError, ParameterError
from .preprocess import (
    CleaningReport,
    apply_standardization,
    chauvenet_filter,
    fit_standardization,
    transient_filter,
    wavelet_denoise,
)

log = logging.getLogger(__name__)


@dataclass
class TrainSummary:
    cleaning: CleaningReport
    tagged_transients: int = 0
    kmeans_iterations: int = 0
    relabelled: int = 0
    merged: dict = field(default_factory=dict)


def clean(data: TimeSeriesDataset, config: GlobalConfig) -> tuple[TimeSeriesDataset, TrainSummary]:
    """Drop tagged transitions, then apply the configured filters."""
    tagged = 0
    if "transient" in data.meta:
        keep = np.array([v not in ("1", "true") for v in data.meta["transient"]])
        tagged = int((~keep).sum())
        data = data.subset(keep)
    report = CleaningReport(rows_in=data.n, rows_out=data.n)
    if config.chauvenet:
        data, step = chauvenet_filter(data)
        report = report.merge(step)
    if config.transient_k > 0:
        data, step = transient_filter(data, config.transient_k)
        report = report.merge(step)
    if config.denoise_levels:
        data = wavelet_denoise(data, config.denoise_levels)
    if data.n == 0:
        raise EmptyDatasetError("no samples left after cleaning")
    return data, TrainSummary(cleaning=report, tagged_transients=tagged)


def train_bank(
    data: TimeSeriesDataset, config: GlobalConfig, k_override: Optional[int] = None
) -> tuple[ModelBank, TrainSummary]:
    """Build a model bank from raw training data.

    ``k_override=1`` ignores prior knowledge and fits one global PCA
    model, the single-model baseline.
    """
    if k_override not in (None, 1):
        raise ParameterError("only --k-override 1 (single global PCA) is supported")
    data, summary = clean(data, config)
    global_params = fit_standardization(data)
    z = apply_standardization(data, global_params)
    if k_override == 1:
        labels = np.ones(data.n, dtype=np.int64)
        keys = [_common_key(data)]
    else:
        partition = derive_prior_conditions(data, config.min_samples_for(data.m), z)
        labels, keys = partition.labels, partition.keys
        summary.merged = {str(k): str(v) for k, v in partition.merged.items()}
    assignment = kmeans_refine(z, labels, config.kmeans_max_iter, config.match_slack)
    summary.kmeans_iterations = assignment.n_iter
    summary.relabelled = int(np.sum(assignment.labels != labels))
    log.info("k-means: %d iterations, %d samples relabelled", assignment.n_iter, summary.relabelled)
    bank = fit_bank(data, assignment, config, keys, global_params)
    return bank, summary


def _common_key(data: TimeSeriesDataset) -> Optional[PriorKey]:
    if not all(t in data.meta for t in PRIOR_TAGS) or data.n == 0:
        return None
    first = tuple(data.meta[t][0] for t in PRIOR_TAGS)
    if all(tuple(data.meta[t][i] for t in PRIOR_TAGS) == first for i in range(data.n)):
        return PriorKey(*first)
    return None
