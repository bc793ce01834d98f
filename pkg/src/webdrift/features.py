"""Navigation descriptors, standardization and sub-period labelling."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ingest import Navigation

VARIABLES = (
    "NbRequests_OK",
    "NbRequests_BAD",
    "PRequests_OK",
    "NbRepetitions",
    "PRepetitions",
    "TotalDuration",
    "AvDuration",
    "AvDuration_OK",
    "NbRequests_SEM",
    "PRequests_SEM",
    "TotalSize",
    "AvTotalSize",
    "MaxDuration_OK",
)
GRANULARITIES = ("month", "week", "day")
SCOPES = ("global", "per-sub-period")
NO_OK_REQUESTS = "no_ok_requests"


@dataclass(frozen=True)
class FeatureVector:
    nav_id: int
    sub_period: str
    values: tuple[float, ...]
    flags: tuple[str, ...] = ()

    def __getitem__(self, name: str) -> float:
        return self.values[VARIABLES.index(name)]

    @property
    def nb_requests(self) -> float:
        return self["NbRequests_OK"] + self["NbRequests_BAD"]


def sub_period_of(timestamp: float, granularity: str = "month") -> str:
    """UTC calendar label; lexical order of labels follows chronology."""
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    if granularity == "month":
        return f"{dt.year:04d}-{dt.month:02d}"
    if granularity == "day":
        return f"{dt.year:04d}-{dt.month:02d}-{dt.day:02d}"
    if granularity == "week":
        year, week, _ = dt.isocalendar()
        return f"{year:04d}-W{week:02d}"
    raise ValueError(f"unknown granularity {granularity!r}; expected one of {GRANULARITIES}")


def assign_sub_period(nav: Navigation, granularity: str = "month") -> str:
    return sub_period_of(nav.start, granularity)


def load_semantic_patterns(path: str | Path | None) -> tuple[str, ...]:
    """Glob patterns, one per line; blank lines and ``#`` comments ignored."""
    if path is None:
        return ()
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(s for s in (line.strip() for line in lines) if s and not s.startswith("#"))


def is_semantic(resource: str, patterns: Iterable[str]) -> bool:
    return any(fnmatchcase(resource, p) for p in patterns)


def compute_features(nav: Navigation, semantic_pages: Iterable[str] = (),
                     granularity: str = "month") -> FeatureVector:
    """The 13 navigation descriptors.

    A request lasts until the next request of the navigation; the last one
    lasts 0 s, so the durations sum to end - start. Repetitions count requests
    to an already-visited resource. With no successful request the two
    per-OK averages are 0 and the vector is flagged.
    """
    reqs = nav.requests
    if not reqs:
        raise ValueError(f"navigation {nav.id} has no requests")
    patterns = tuple(semantic_pages)
    n = len(reqs)
    times = [r.timestamp for r in reqs]
    durations = [b - a for a, b in zip(times, times[1:])] + [0]
    ok = [r.status == 200 for r in reqs]

    n_ok = sum(ok)
    n_bad = n - n_ok
    n_rep = n - len({r.resource for r in reqs})
    total_duration = times[-1] - times[0]
    ok_durations = [d for d, good in zip(durations, ok) if good]
    n_sem = sum(1 for r in reqs if is_semantic(r.resource, patterns)) if patterns else 0
    total_size = sum(r.bytes for r in reqs)

    flags = ()
    if n_ok:
        av_duration_ok = sum(ok_durations) / n_ok
        av_size = total_size / n_ok
    else:
        av_duration_ok = av_size = 0.0
        flags = (NO_OK_REQUESTS,)

    values = (
        n_ok, n_bad, n_ok / n,
        n_rep, n_rep / n,
        total_duration, total_duration / n, av_duration_ok,
        n_sem, n_sem / n,
        total_size, av_size,
        max(ok_durations, default=0),
    )
    return FeatureVector(nav.id, assign_sub_period(nav, granularity),
                         tuple(float(v) for v in values), flags)


@dataclass
class StandardizationStats:
    scope: str
    # group label -> (mean, std); global scope uses the single group "*"
    groups: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def constant(self, group: str) -> np.ndarray:
        return self.groups[group][1] == 0

    def to_dict(self, names: Sequence[str] = VARIABLES) -> dict:
        return {
            "scope": self.scope,
            "ddof": 0,
            "groups": {
                g: {
                    "mean": dict(zip(names, map(float, mean))),
                    "std": dict(zip(names, map(float, std))),
                    "constant": [nm for nm, s in zip(names, std) if s == 0],
                }
                for g, (mean, std) in sorted(self.groups.items())
            },
        }


def zscore(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column z-scores with the population std; constant columns map to 0."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    out = np.where(std > 0, (matrix - mean) / safe, 0.0)
    return out, mean, std


def standardize(vectors: Sequence[FeatureVector], scope: str = "global"
                ) -> tuple[list[FeatureVector], StandardizationStats]:
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")
    if scope == "global":
        groups = {"*": list(range(len(vectors)))}
    else:
        groups = {}
        for i, v in enumerate(vectors):
            groups.setdefault(v.sub_period, []).append(i)

    stats = StandardizationStats(scope)
    out = list(vectors)
    for label, idx in groups.items():
        if len(idx) < 2:
            raise ValueError(f"standardization group {label!r} has {len(idx)} vector(s); need at least 2")
        z, mean, std = zscore(np.array([vectors[i].values for i in idx], dtype=np.float64))
        stats.groups[label] = (mean, std)
        for row, i in zip(z, idx):
            out[i] = replace(vectors[i], values=tuple(float(x) for x in row))
    return out, stats
