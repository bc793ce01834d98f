"""The four temporal clustering strategies over ordered sub-periods.

* global: one clustering of all data, then restricted to each sub-period
* independent: a fresh clustering per sub-period
* previous: the first sub-period is clustered; later ones only get an
  allocation phase against the prototypes carried from the period before
* dependent: like previous, but each sub-period runs the full algorithm
  to convergence starting from the carried prototypes
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (ClusteringConfig, Partition, Prototypes, allocate, best_of,
                   represent, run, squared_distances)
from .features import FeatureVector

STRATEGIES = ("global", "independent", "previous", "dependent")
CARRY_MODES = ("recomputed", "first")


class UndersizedPeriodError(ValueError):
    pass


@dataclass
class TemporalDataset:
    labels: list[str]
    matrices: dict[str, np.ndarray]
    ids: dict[str, np.ndarray]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError("sub-period labels must be strictly increasing")
        seen = set()
        for label in self.labels:
            ids = self.ids[label]
            if self.matrices[label].shape[0] != len(ids):
                raise ValueError(f"sub-period {label}: ids and rows differ in length")
            if seen.intersection(ids.tolist()):
                raise ValueError(f"sub-period {label}: navigation ids repeat across sub-periods")
            seen.update(ids.tolist())

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "TemporalDataset":
        groups: dict[str, list[FeatureVector]] = {}
        for v in vectors:
            groups.setdefault(v.sub_period, []).append(v)
        labels = sorted(groups)
        return cls(
            labels,
            {g: np.array([v.values for v in groups[g]], dtype=np.float64) for g in labels},
            {g: np.array([v.nav_id for v in groups[g]]) for g in labels},
        )

    @classmethod
    def from_arrays(cls, labels: Sequence[str], matrices: Sequence, ids: Sequence | None = None
                    ) -> "TemporalDataset":
        if ids is None:
            ids, start = [], 0
            for m in matrices:
                ids.append(np.arange(start, start + len(m)))
                start += len(m)
        return cls(list(labels),
                   {g: np.asarray(m, dtype=np.float64) for g, m in zip(labels, matrices)},
                   {g: np.asarray(i) for g, i in zip(labels, ids)})

    def __len__(self) -> int:
        return sum(len(v) for v in self.ids.values())

    @property
    def dim(self) -> int:
        return next(iter(self.matrices.values())).shape[1]

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All points in sub-period order, with their ids and sub-period labels."""
        x = np.vstack([self.matrices[g] for g in self.labels])
        ids = np.concatenate([self.ids[g] for g in self.labels])
        periods = np.concatenate([np.full(len(self.ids[g]), g, dtype=object) for g in self.labels])
        return x, ids, periods


@dataclass
class PeriodResult:
    partition: Partition
    prototypes: Prototypes
    n_iter: int


@dataclass
class StrategyResult:
    name: str
    periods: dict[str, PeriodResult] = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return list(self.periods)


def _check_size(data: TemporalDataset, label: str, k: int):
    n = len(data.ids[label])
    if n < k:
        raise UndersizedPeriodError(f"sub-period {label} has {n} navigations, fewer than k={k}")


def _inertia(x: np.ndarray, protos: Prototypes, labels: np.ndarray) -> float:
    if x.shape[0] == 0:
        return 0.0
    return float(squared_distances(x, protos.centers)[np.arange(x.shape[0]), labels].sum())


def global_strategy(data: TemporalDataset, cfg: ClusteringConfig) -> StrategyResult:
    """Cluster the union of all sub-periods, then restrict the assignment per sub-period.

    Each restricted partition keeps the global cluster indices (clusters with
    no member in a sub-period are simply absent) and the global prototypes.
    """
    x, ids, periods = data.stacked()
    if x.shape[0] < cfg.k:
        raise UndersizedPeriodError(f"dataset has {x.shape[0]} navigations, fewer than k={cfg.k}")
    res = best_of(x, cfg, ids=ids)
    out = StrategyResult("global")
    for label in data.labels:
        mask = periods == label
        sub = res.partition.restrict(mask)
        sub = Partition(sub.labels, sub.k, sub.ids, _inertia(x[mask], res.prototypes, sub.labels))
        out.periods[label] = PeriodResult(sub, res.prototypes, res.n_iter)
    return out


def independent_local_strategy(data: TemporalDataset, cfg: ClusteringConfig) -> StrategyResult:
    """Fresh best-of clustering in every sub-period.

    Every sub-period uses the same seed, so a result depends only on that
    sub-period's data and not on its position in the sequence.
    """
    for label in data.labels:
        _check_size(data, label, cfg.k)
    out = StrategyResult("independent")
    for label in data.labels:
        res = best_of(data.matrices[label], cfg, ids=data.ids[label])
        out.periods[label] = PeriodResult(res.partition, res.prototypes, res.n_iter)
    return out


def previous_local_strategy(data: TemporalDataset, cfg: ClusteringConfig,
                            carry: str = "recomputed") -> StrategyResult:
    """Allocation-only follow-up of the first sub-period's clustering.

    With ``carry="recomputed"`` the means of sub-period t's allocation are
    carried into t+1; with ``carry="first"`` the first sub-period's prototypes
    are reused unchanged throughout. A later sub-period's partition inertia is
    measured against the prototypes it was allocated to, while its stored
    prototypes are its own cluster means (empty clusters keep the carried one).
    """
    if carry not in CARRY_MODES:
        raise ValueError(f"unknown carry mode {carry!r}; expected one of {CARRY_MODES}")
    first = data.labels[0]
    _check_size(data, first, cfg.k)
    out = StrategyResult("previous", params={"carry": carry})
    res = best_of(data.matrices[first], cfg, ids=data.ids[first])
    out.periods[first] = PeriodResult(res.partition, res.prototypes, res.n_iter)
    initial = carried = res.prototypes
    for label in data.labels[1:]:
        x = data.matrices[label]
        part = allocate(x, carried, ids=data.ids[label])
        means = represent(x, part, carried)
        out.periods[label] = PeriodResult(part, means, 0)
        carried = means if carry == "recomputed" else initial
    return out


def dependent_local_strategy(data: TemporalDataset, cfg: ClusteringConfig) -> StrategyResult:
    """Full clustering per sub-period, initialised with the previous sub-period's prototypes."""
    first = data.labels[0]
    _check_size(data, first, cfg.k)
    out = StrategyResult("dependent")
    res = best_of(data.matrices[first], cfg, ids=data.ids[first])
    out.periods[first] = PeriodResult(res.partition, res.prototypes, res.n_iter)
    carried = res.prototypes
    for label in data.labels[1:]:
        res = run(data.matrices[label], cfg, init=Prototypes(carried.centers), ids=data.ids[label])
        out.periods[label] = PeriodResult(res.partition, res.prototypes, res.n_iter)
        carried = res.prototypes
    return out


def run_strategy(name: str, data: TemporalDataset, cfg: ClusteringConfig,
                 carry: str = "recomputed") -> StrategyResult:
    if name == "global":
        return global_strategy(data, cfg)
    if name == "independent":
        return independent_local_strategy(data, cfg)
    if name == "previous":
        return previous_local_strategy(data, cfg, carry=carry)
    if name == "dependent":
        return dependent_local_strategy(data, cfg)
    raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")
