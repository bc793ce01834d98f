"""External validity indices: F-measure and corrected (adjusted) Rand.

Both work on the contingency table of two partitions of the same items.
Rows are the a priori partition V (C clusters), columns the reached
partition U (Q clusters).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Partition


class ItemMismatchError(ValueError):
    pass


class DegenerateIndexError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray        # C x Q, n_ij
    row_labels: np.ndarray    # cluster index in V for each row
    col_labels: np.ndarray    # cluster index in U for each column

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _aligned_labels(a: Partition, b: Partition) -> tuple[np.ndarray, np.ndarray]:
    if len(a) == len(b) and np.array_equal(a.ids, b.ids):
        return a.labels, b.labels
    ids_a = a.ids.tolist()
    pos_b = {item: i for i, item in enumerate(b.ids.tolist())}
    if len(pos_b) != len(b) or len(set(ids_a)) != len(a):
        raise ItemMismatchError("partitions contain duplicate item ids")
    missing = [item for item in ids_a if item not in pos_b]
    extra = set(pos_b).difference(ids_a)
    if missing or extra:
        sample = sorted(map(str, missing))[:5] + sorted(map(str, extra))[:5]
        raise ItemMismatchError(
            f"partitions cover different items ({len(missing)} only in first, "
            f"{len(extra)} only in second); e.g. {', '.join(sample)}")
    order = np.fromiter((pos_b[item] for item in ids_a), dtype=np.int64, count=len(ids_a))
    return a.labels, b.labels[order]


def contingency(a: Partition, b: Partition) -> ContingencyTable:
    """Cross-tabulate ``a`` (rows) against ``b`` (columns); empty clusters are dropped."""
    la, lb = _aligned_labels(a, b)
    rows, ri = np.unique(la, return_inverse=True)
    cols, ci = np.unique(lb, return_inverse=True)
    counts = np.zeros((rows.size, cols.size), dtype=np.int64)
    np.add.at(counts, (ri, ci), 1)
    return ContingencyTable(counts, rows, cols)


@dataclass(frozen=True)
class ClusterMatch:
    cluster: int      # cluster of the a priori partition
    size: int         # n_i
    f: float          # max_j F(i, j)
    match: int        # argmax_j, lowest cluster index on ties


def f_measure(apriori: Partition, reached: Partition) -> tuple[float, list[ClusterMatch]]:
    """Overall F = sum_i (n_i / n) max_j F(i, j), plus the best match of every a priori cluster.

    Recall is n_ij / n_i (a priori cluster size), precision n_ij / n_.j.
    Not symmetric in its arguments.
    """
    table = contingency(apriori, reached)
    if table.n == 0:
        raise ValueError("cannot compute the F-measure of empty partitions")
    nij = table.counts.astype(np.float64)
    recall = nij / table.row_sums[:, None]
    precision = nij / table.col_sums[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(nij > 0, 2 * precision * recall / (precision + recall), 0.0)
    best_col = np.argmax(f, axis=1)
    best = f[np.arange(f.shape[0]), best_col]
    sizes = table.row_sums
    overall = float(np.sum(sizes * best) / table.n)
    matches = [
        ClusterMatch(int(table.row_labels[i]), int(sizes[i]), float(best[i]),
                     int(table.col_labels[best_col[i]]))
        for i in range(f.shape[0])
    ]
    return min(overall, 1.0), matches


def _pairs(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def _identical_up_to_relabeling(table: ContingencyTable) -> bool:
    c = table.counts
    return c.shape[0] == c.shape[1] and np.count_nonzero(c) == c.shape[0] \
        and np.all((c > 0).sum(axis=0) == 1)


def corrected_rand(a: Partition, b: Partition) -> float:
    """Corrected Rand index (Hubert & Arabie) from the contingency table."""
    table = contingency(a, b)
    n = table.n
    if n < 2:
        raise ValueError("the corrected Rand index needs at least 2 items")
    sum_cells = _pairs(table.counts).sum()
    sum_rows = _pairs(table.row_sums).sum()
    sum_cols = _pairs(table.col_sums).sum()
    expected = sum_rows * sum_cols / _pairs(n)
    denom = 0.5 * (sum_rows + sum_cols) - expected
    if denom == 0:
        if _identical_up_to_relabeling(table):
            return 1.0
        raise DegenerateIndexError("corrected Rand denominator is zero for non-identical partitions")
    return float((sum_cells - expected) / denom)


def cr_pair_counting_oracle(a: Partition, b: Partition, max_items: int = 5000) -> float:
    """Corrected Rand from explicit agreement counts over all n(n-1)/2 item pairs.

    Independent of the contingency route; meant for tests at small n.
    """
    la, lb = _aligned_labels(a, b)
    n = la.size
    if n > max_items:
        raise ValueError(f"oracle limited to {max_items} items, got {n}")
    if n < 2:
        raise ValueError("need at least 2 items")
    iu = np.triu_indices(n, k=1)
    same_a = (la[:, None] == la[None, :])[iu]
    same_b = (lb[:, None] == lb[None, :])[iu]
    n11 = int(np.count_nonzero(same_a & same_b))
    n10 = int(np.count_nonzero(same_a & ~same_b))
    n01 = int(np.count_nonzero(~same_a & same_b))
    n00 = int(np.count_nonzero(~same_a & ~same_b))
    denom = (n11 + n01) * (n01 + n00) + (n11 + n10) * (n10 + n00)
    if denom == 0:
        if n10 == 0 and n01 == 0:
            return 1.0
        raise DegenerateIndexError("degenerate pair counts for non-identical partitions")
    return 2.0 * (n11 * n00 - n01 * n10) / denom
