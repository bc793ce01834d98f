"""Dynamic clustering (k-means family) with seeded random restarts.

The algorithm alternates an allocation phase (nearest prototype by
Euclidean distance) and a representation phase (prototype = mean of its
members) until the assignment stops changing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DISTANCE = "euclidean"
CONVERGENCE_RULE = "assignments-unchanged"

# rows per block when building the n x K distance matrix
_CHUNK = 4096


@dataclass(frozen=True)
class ClusteringConfig:
    k: int = 10
    max_iterations: int = 100
    n_initializations: int = 100
    seed: int = 0
    convergence: str = CONVERGENCE_RULE

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.n_initializations < 1:
            raise ValueError(f"n_initializations must be >= 1, got {self.n_initializations}")
        if self.convergence != CONVERGENCE_RULE:
            raise ValueError(f"unsupported convergence rule {self.convergence!r}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "max_iterations": self.max_iterations,
            "n_initializations": self.n_initializations,
            "seed": self.seed,
            "convergence": self.convergence,
            "distance": DISTANCE,
        }


@dataclass(frozen=True)
class Prototypes:
    """K centroids; ``empty[k]`` marks a centroid carried over from an empty cluster."""

    centers: np.ndarray
    empty: np.ndarray = None

    def __post_init__(self):
        centers = np.array(self.centers, dtype=np.float64, ndmin=2)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("prototypes must be a non-empty K x d matrix")
        empty = (np.zeros(centers.shape[0], dtype=bool) if self.empty is None
                 else np.asarray(self.empty, dtype=bool))
        if empty.shape != (centers.shape[0],):
            raise ValueError("empty flags must have one entry per prototype")
        centers.flags.writeable = False
        empty.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "empty", empty)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class Partition:
    """Assignment of items to clusters ``0..k-1``."""

    labels: np.ndarray
    k: int
    ids: np.ndarray = None
    inertia: float = 0.0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        ids = np.arange(labels.size) if self.ids is None else np.asarray(self.ids)
        if ids.shape != labels.shape:
            raise ValueError("ids and labels differ in length")
        if self.inertia < 0:
            raise ValueError("inertia must be non-negative")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "inertia", float(self.inertia))

    @classmethod
    def from_labels(cls, labels, ids=None) -> "Partition":
        """Wrap arbitrary hashable labels, re-indexed to ``0..k-1`` in sorted order."""
        uniq, codes = np.unique(np.asarray(labels), return_inverse=True)
        return cls(labels=codes, k=max(len(uniq), 1), ids=ids)

    def __len__(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def restrict(self, mask: np.ndarray, inertia: float = 0.0) -> "Partition":
        return Partition(self.labels[mask], self.k, self.ids[mask], inertia)


@dataclass
class RunResult:
    partition: Partition
    prototypes: Prototypes
    n_iter: int
    converged: bool
    inertia_history: list = field(default_factory=list)


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """n x K matrix of squared Euclidean distances, computed from explicit differences."""
    points = np.asarray(points, dtype=np.float64)
    out = np.empty((points.shape[0], centers.shape[0]))
    for start in range(0, points.shape[0], _CHUNK):
        block = points[start:start + _CHUNK]
        diff = block[:, None, :] - centers[None, :, :]
        out[start:start + _CHUNK] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def _as_matrix(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must be an n x d matrix")
    return x


def allocate(points, protos: Prototypes, ids=None) -> Partition:
    """Assign every point to its nearest prototype (ties go to the lowest index)."""
    x = _as_matrix(points)
    if x.shape[1] != protos.dim:
        raise ValueError(f"dimension mismatch: points have {x.shape[1]} columns, "
                         f"prototypes have {protos.dim}")
    if x.shape[0] == 0:
        return Partition(np.empty(0, dtype=np.int64), protos.k, ids, 0.0)
    d2 = squared_distances(x, protos.centers)
    # argmin returns the first minimum, which is the tie rule we want
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(x.shape[0]), labels].sum())
    return Partition(labels, protos.k, ids, inertia)


def represent(points, part: Partition, previous: Prototypes) -> Prototypes:
    """Recompute prototypes as cluster means.

    An empty cluster keeps its prototype from ``previous`` and is flagged.
    """
    x = _as_matrix(points)
    if x.shape[0] != len(part):
        raise ValueError("partition does not cover the points")
    sums = np.column_stack([np.bincount(part.labels, weights=col, minlength=part.k) for col in x.T])
    sizes = part.sizes
    empty = sizes == 0
    centers = np.array(previous.centers, dtype=np.float64)
    centers[~empty] = sums[~empty] / sizes[~empty, None]
    return Prototypes(centers, empty)


def inertia_of(points, protos: Prototypes, labels) -> float:
    x = _as_matrix(points)
    diff = x - protos.centers[np.asarray(labels)]
    return float(np.einsum("nd,nd->", diff, diff))


def random_prototypes(points, k: int, rng: np.random.Generator) -> Prototypes:
    """Forgy initialisation: k distinct data points drawn without replacement."""
    x = _as_matrix(points)
    if x.shape[0] < k:
        raise ValueError(f"need at least k={k} points for random initialisation, got {x.shape[0]}")
    idx = rng.choice(x.shape[0], size=k, replace=False)
    return Prototypes(x[idx])


def run(points, config: ClusteringConfig, init: Prototypes | None = None,
        rng: np.random.Generator | None = None, ids=None) -> RunResult:
    """One clustering run from ``init`` (or a seeded random draw when ``init`` is None).

    ``n_iter`` counts representation+allocation rounds. The returned prototypes
    are the ones the final partition was allocated against.
    """
    x = _as_matrix(points)
    if init is None:
        if rng is None:
            rng = np.random.default_rng(config.seed)
        protos = random_prototypes(x, config.k, rng)
    else:
        protos = init
        if protos.k != config.k:
            raise ValueError(f"initial prototypes have k={protos.k}, config says k={config.k}")

    part = allocate(x, protos, ids)
    history = [part.inertia]
    converged = False
    n_iter = 0
    while n_iter < config.max_iterations:
        n_iter += 1
        new_protos = represent(x, part, protos)
        new_part = allocate(x, new_protos, ids)
        history.append(new_part.inertia)
        protos = new_protos
        same = np.array_equal(new_part.labels, part.labels)
        part = new_part
        if same:
            converged = True
            break
    return RunResult(part, protos, n_iter, converged, history)


def best_of(points, config: ClusteringConfig, ids=None) -> RunResult:
    """Best of ``n_initializations`` seeded random runs by final inertia.

    Each initialisation draws from its own child of ``SeedSequence(seed)``, so
    initialisation ``i`` is the same whatever the total number of runs; ties go
    to the lowest initialisation index.
    """
    x = _as_matrix(points)
    if x.shape[0] < config.k:
        raise ValueError(f"need at least k={config.k} points, got {x.shape[0]}")
    children = np.random.SeedSequence(config.seed).spawn(config.n_initializations)
    best = None
    for child in children:
        result = run(x, config, rng=np.random.default_rng(child), ids=ids)
        if best is None or result.partition.inertia < best.partition.inertia:
            best = result
    return best
