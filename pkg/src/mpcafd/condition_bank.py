"""Operating-condition partitioning, the submodel bank and online routing.

The number of conditions K is fixed by the distinct prior-knowledge
tuples in the training data; k-means only moves the boundaries between
them, starting from the per-label centroids.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .config import GlobalConfig
from .dataset_io import FORMAT_VERSION, TimeSeriesDataset
from .errors import InsufficientSamplesError, PriorKnowledgeError, SchemaError
from .pca_core import PcaSubmodel, fit_submodel
from .preprocess import StandardizationParams, apply_standardization, fit_standardization

PRIOR_TAGS = ("units_running", "climate", "occupancy")
CLIMATES = ("rainy", "dry", "monsoon_alternating")
OCCUPANCIES = ("working_time", "rest_time")

#: label used by :meth:`ModelBank.match_many` for samples outside every condition
UNMATCHED = 0


@dataclass(frozen=True, order=True)
class PriorKey:
    units_running: str
    climate: str
    occupancy: str

    def __post_init__(self):
        for name in PRIOR_TAGS:
            if not getattr(self, name):
                raise PriorKnowledgeError(f"empty prior-knowledge tag {name!r}")
        if self.climate not in CLIMATES:
            raise PriorKnowledgeError(f"climate must be one of {CLIMATES}, got {self.climate!r}")
        if self.occupancy not in OCCUPANCIES:
            raise PriorKnowledgeError(
                f"occupancy must be one of {OCCUPANCIES}, got {self.occupancy!r}"
            )

    def to_dict(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in PRIOR_TAGS}

    def __str__(self) -> str:
        return f"{self.units_running} | {self.climate} | {self.occupancy}"


@dataclass
class PriorPartition:
    k: int
    labels: np.ndarray  # 1..K per sample
    keys: list[PriorKey]  # keys[k - 1] describes condition k
    merged: dict[PriorKey, PriorKey] = field(default_factory=dict)


@dataclass
class ConditionAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    max_match_distance: np.ndarray
    n_iter: int = 0
    objective: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _label_centroids(z: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.array([z[labels == c].mean(axis=0) for c in range(1, k + 1)])


def derive_prior_conditions(
    data: TimeSeriesDataset,
    min_samples_per_condition: Optional[int] = None,
    z: Optional[np.ndarray] = None,
) -> PriorPartition:
    """Label each sample by its (units_running, climate, occupancy) tuple.

    Conditions are numbered in order of first appearance. A condition with
    fewer than ``min_samples_per_condition`` samples (default ``10 * m``)
    is merged, with a warning, into the condition whose centroid in the
    global standardized space ``z`` is nearest.
    """
    missing = [t for t in PRIOR_TAGS if t not in data.meta]
    if missing:
        raise PriorKnowledgeError(f"dataset lacks prior-knowledge tags: {missing}")
    keys_per_sample = [
        PriorKey(*(data.meta[t][i] for t in PRIOR_TAGS)) for i in range(data.n)
    ]
    order: dict[PriorKey, int] = {}
    for key in keys_per_sample:
        order.setdefault(key, len(order) + 1)
    labels = np.array([order[key] for key in keys_per_sample], dtype=np.int64)
    keys = list(order)

    threshold = 10 * data.m if min_samples_per_condition is None else min_samples_per_condition
    if z is None:
        z = apply_standardization(data, fit_standardization(data))
    merged: dict[PriorKey, PriorKey] = {}
    while len(keys) > 1:
        counts = np.bincount(labels, minlength=len(keys) + 1)[1:]
        small = int(np.argmin(counts)) + 1
        if counts[small - 1] >= threshold:
            break
        cents = _label_centroids(z, labels, len(keys))
        dist = np.sum((cents - cents[small - 1]) ** 2, axis=1)
        dist[small - 1] = np.inf
        target = int(np.argmin(dist)) + 1
        warnings.warn(
            f"condition {keys[small - 1]} has {counts[small - 1]} samples "
            f"(< {threshold}); merged into {keys[target - 1]}",
            stacklevel=2,
        )
        merged[keys[small - 1]] = keys[target - 1]
        labels[labels == small] = target
        labels[labels > small] -= 1
        del keys[small - 1]
    for src, dst in list(merged.items()):
        while dst in merged:
            dst = merged[dst]
        merged[src] = dst
    return PriorPartition(k=len(keys), labels=labels, keys=keys, merged=merged)


def kmeans_refine(
    z: np.ndarray,
    initial_labels: np.ndarray,
    max_iter: int = 100,
    match_slack: float = 1.5,
    match_quantile: float = 99.0,
) -> ConditionAssignment:
    """Lloyd iterations seeded with the centroid of each prior label.

    Distances are Euclidean in the global standardized space; ties go to
    the lowest condition id. A cluster that empties is re-seeded with the
    sample farthest from its current centroid. The routing gate of each
    condition is the ``match_quantile`` percentile of its members'
    distances times ``match_slack``.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    labels = np.asarray(initial_labels, dtype=np.int64).copy()
    k = int(labels.max())
    if labels.min() < 1 or set(np.unique(labels)) != set(range(1, k + 1)):
        raise SchemaError("initial labels must cover 1..K")
    centroids = _label_centroids(z, labels, k)
    objective: list[float] = []
    n_iter = 0
    for n_iter in range(max_iter):
        idx, d2 = kernels.nearest_centroid(z, centroids)
        new_labels = idx + 1
        objective.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _reseeded_centroids(z, labels, centroids, d2)
    else:
        n_iter = max_iter
    centroids = _label_centroids(z, labels, k)
    dist = np.sqrt(np.sum((z - centroids[labels - 1]) ** 2, axis=1))
    gate = np.array(
        [np.percentile(dist[labels == c], match_quantile) * match_slack for c in range(1, k + 1)]
    )
    return ConditionAssignment(
        labels=labels, centroids=centroids, max_match_distance=gate,
        n_iter=n_iter, objective=objective,
    )


def _reseeded_centroids(z, labels, old, d2):
    k = old.shape[0]
    counts = np.bincount(labels, minlength=k + 1)[1:]
    cents = old.copy()
    for c in range(1, k + 1):
        if counts[c - 1]:
            cents[c - 1] = z[labels == c].mean(axis=0)
    taken: set[int] = set()
    for c in np.flatnonzero(counts == 0) + 1:
        order = np.argsort(-d2, kind="stable")
        pick = next(int(i) for i in order if int(i) not in taken)
        taken.add(pick)
        cents[c - 1] = z[pick]
    return cents


@dataclass
class ModelBank:
    """The stored group of per-condition submodels."""

    config: GlobalConfig
    submodels: list[PcaSubmodel]
    global_standardization: StandardizationParams
    variable_names: list[str]
    format_version: int = FORMAT_VERSION

    @property
    def k(self) -> int:
        return len(self.submodels)

    @property
    def m(self) -> int:
        return self.global_standardization.m

    def submodel(self, condition_id: int) -> PcaSubmodel:
        for sm in self.submodels:
            if sm.condition_id == condition_id:
                return sm
        raise KeyError(condition_id)

    def validate(self) -> None:
        if self.k < 1:
            raise SchemaError("model bank holds no submodels")
        ids = [sm.condition_id for sm in self.submodels]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"duplicate condition ids {ids}")
        if len(self.variable_names) != self.m:
            raise SchemaError("variable names do not match global standardization")
        for sm in self.submodels:
            if sm.m != self.m or sm.standardization.m != self.m:
                raise SchemaError(f"condition {sm.condition_id} has {sm.m} variables, bank has {self.m}")
            if sm.centroid is None or sm.centroid.shape != (self.m,):
                raise SchemaError(f"condition {sm.condition_id} lacks a centroid")
            sm.check_invariants()

    # -- routing ------------------------------------------------------------

    def _centroid_matrix(self) -> np.ndarray:
        return np.array([sm.centroid for sm in self.submodels])

    def match_many(self, x_raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Condition id per row (``UNMATCHED`` when outside every gate) and
        the distance to the nearest centroid."""
        x_raw = np.atleast_2d(np.asarray(x_raw, dtype=np.float64))
        z = apply_standardization(x_raw, self.global_standardization)
        # order by condition id so ties resolve to the lowest id
        order = sorted(range(self.k), key=lambda i: self.submodels[i].condition_id)
        cents = self._centroid_matrix()[order]
        idx, d2 = kernels.nearest_centroid(z, cents)
        dist = np.sqrt(d2)
        ids = np.array([self.submodels[order[i]].condition_id for i in idx], dtype=np.int64)
        gates = np.array([self.submodels[order[i]].max_match_distance for i in idx])
        ids[~(dist <= gates)] = UNMATCHED
        return ids, dist

    def to_dict(self) -> dict:
        g = self.global_standardization
        return {
            "format_version": self.format_version,
            "config": self.config.to_dict(),
            "variable_names": list(self.variable_names),
            "global_standardization": {"mu": g.mu.tolist(), "sigma": g.sigma.tolist()},
            "submodels": [_submodel_to_dict(sm) for sm in self.submodels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBank":
        g = d["global_standardization"]
        return cls(
            config=GlobalConfig.from_dict(d["config"]),
            submodels=[_submodel_from_dict(s) for s in d["submodels"]],
            global_standardization=StandardizationParams(mu=g["mu"], sigma=g["sigma"]),
            variable_names=list(d["variable_names"]),
            format_version=d["format_version"],
        )


def _submodel_to_dict(sm: PcaSubmodel) -> dict:
    return {
        "condition_id": sm.condition_id,
        "prior_key": sm.prior_key.to_dict() if sm.prior_key is not None else None,
        "mu": sm.standardization.mu.tolist(),
        "sigma": sm.standardization.sigma.tolist(),
        "centroid": sm.centroid.tolist(),
        "loadings": sm.loadings.tolist(),
        "eigenvalues": sm.eigenvalues.tolist(),
        "l": sm.l,
        "n_train": sm.n_train,
        "t2_limit": sm.t2_limit,
        "spe_limit": sm.spe_limit,
        "phi_limit": sm.phi_limit,
        "max_match_distance": sm.max_match_distance,
    }


def _submodel_from_dict(d: dict) -> PcaSubmodel:
    pk = d.get("prior_key")
    return PcaSubmodel(
        condition_id=int(d["condition_id"]),
        prior_key=PriorKey(**pk) if pk is not None else None,
        standardization=StandardizationParams(mu=d["mu"], sigma=d["sigma"]),
        loadings=np.array(d["loadings"], dtype=np.float64).reshape(len(d["mu"]), int(d["l"])),
        eigenvalues=np.array(d["eigenvalues"], dtype=np.float64),
        l=int(d["l"]),
        n_train=int(d["n_train"]),
        t2_limit=float(d["t2_limit"]),
        spe_limit=float(d["spe_limit"]),
        phi_limit=float(d["phi_limit"]),
        centroid=np.array(d["centroid"], dtype=np.float64),
        max_match_distance=float(d["max_match_distance"]),
    )


def fit_bank(
    data: TimeSeriesDataset,
    assignment: ConditionAssignment,
    config: GlobalConfig,
    keys: Sequence[Optional[PriorKey]],
    global_params: StandardizationParams,
) -> ModelBank:
    """Fit one submodel per condition of ``assignment``."""
    submodels = []
    for c in range(1, assignment.k + 1):
        members = data.values[assignment.labels == c]
        if members.shape[0] <= data.m:
            raise InsufficientSamplesError(
                f"condition {c} ({keys[c - 1]}): {members.shape[0]} samples for "
                f"{data.m} variables (need n > m)"
            )
        submodels.append(
            fit_submodel(
                members,
                config,
                condition_id=c,
                prior_key=keys[c - 1],
                centroid=assignment.centroids[c - 1],
                max_match_distance=float(assignment.max_match_distance[c - 1]),
            )
        )
    return ModelBank(
        config=config,
        submodels=submodels,
        global_standardization=global_params,
        variable_names=list(data.variable_names),
    )


def match_condition(x_raw, bank: ModelBank) -> Optional[int]:
    """Condition id of the nearest centroid, or ``None`` if the sample
    lies beyond that condition's gate."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.shape != (bank.m,):
        raise SchemaError(f"expected a length-{bank.m} sample")
    ids, _ = bank.match_many(x_raw[None, :])
    return None if ids[0] == UNMATCHED else int(ids[0])
