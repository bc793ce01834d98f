"""CSV/JSON file formats shared by the CLI commands.

navigations.csv   nav_id, user_key, start, end, n_requests   (start/end: UTC epoch seconds)
requests.csv      nav_id, seq, timestamp, resource, status, bytes
features.csv      nav_id, sub_period, <13 variables>
*.partition.csv   nav_id, sub_period, cluster
*.prototypes.csv  header of variable names, one row per cluster (row r = cluster r)

Floats are written with ``repr`` so that files round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Partition, Prototypes
from .features import VARIABLES, FeatureVector
from .ingest import Navigation, RawRequest
from .strategies import PeriodResult, StrategyResult, TemporalDataset

NAV_COLUMNS = ("nav_id", "user_key", "start", "end", "n_requests")
REQUEST_COLUMNS = ("nav_id", "seq", "timestamp", "resource", "status", "bytes")
PARTITION_COLUMNS = ("nav_id", "sub_period", "cluster")
MANIFEST = "manifest.json"


def _num(x: float) -> str:
    x = float(x)
    return repr(0.0 if x == 0 else x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def dump_json(obj, path: str | Path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def variable_names(dim: int) -> tuple[str, ...]:
    return VARIABLES if dim == len(VARIABLES) else tuple(f"x{i + 1}" for i in range(dim))


# navigations ---------------------------------------------------------------

def write_navigations(navs: Iterable[Navigation], nav_path: str | Path, req_path: str | Path):
    with open(nav_path, "w", newline="", encoding="utf-8") as nf, \
            open(req_path, "w", newline="", encoding="utf-8") as rf:
        nw, rw = _writer(nf), _writer(rf)
        nw.writerow(NAV_COLUMNS)
        rw.writerow(REQUEST_COLUMNS)
        for nav in navs:
            nw.writerow((nav.id, nav.user_key, nav.start, nav.end, len(nav)))
            for seq, r in enumerate(nav.requests):
                rw.writerow((nav.id, seq, r.timestamp, r.resource, r.status, r.bytes))


def read_navigations(nav_path: str | Path, req_path: str | Path) -> list[Navigation]:
    with open(nav_path, newline="", encoding="utf-8") as fh:
        users = {int(row["nav_id"]): row["user_key"] for row in csv.DictReader(fh)}
    requests: dict[int, list[tuple[int, RawRequest]]] = defaultdict(list)
    with open(req_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            nav_id = int(row["nav_id"])
            if nav_id not in users:
                raise ValueError(f"request sidecar refers to unknown navigation {nav_id}")
            requests[nav_id].append((int(row["seq"]), RawRequest(
                int(row["timestamp"]), users[nav_id], row["resource"],
                int(row["status"]), int(row["bytes"]))))
    return [Navigation(nav_id, user, tuple(r for _, r in sorted(requests[nav_id], key=lambda p: p[0])))
            for nav_id, user in users.items()]


# feature tables --------------------------------------------------------------

def write_feature_table(vectors: Sequence[FeatureVector], path: str | Path,
                        names: Sequence[str] | None = None):
    dim = len(vectors[0].values) if vectors else len(VARIABLES)
    names = names or variable_names(dim)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(("nav_id", "sub_period", *names))
        for v in vectors:
            w.writerow((v.nav_id, v.sub_period, *map(_num, v.values)))


def read_feature_table(path: str | Path) -> tuple[list[FeatureVector], tuple[str, ...]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["nav_id", "sub_period"] or len(header) < 3:
            raise ValueError(f"{path}: not a feature table (expected nav_id, sub_period, variables...)")
        vectors = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            vectors.append(FeatureVector(int(row[0]), row[1], tuple(float(x) for x in row[2:])))
    return vectors, tuple(header[2:])


def dataset_from_table(path: str | Path) -> tuple[TemporalDataset, tuple[str, ...]]:
    vectors, names = read_feature_table(path)
    if not vectors:
        raise ValueError(f"{path}: feature table is empty")
    return TemporalDataset.from_vectors(vectors), names


def stats_path(table: str | Path) -> Path:
    table = Path(table)
    return table.with_name(table.stem + ".stats.json")


# partitions and prototypes ---------------------------------------------------

def write_partition(path: str | Path, part: Partition, sub_period: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(PARTITION_COLUMNS)
        for item, label in zip(part.ids.tolist(), part.labels.tolist()):
            w.writerow((item, sub_period, label))


def write_labeled_partitions(path: str | Path, parts: dict[str, Partition]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(PARTITION_COLUMNS)
        for label in sorted(parts):
            for item, c in zip(parts[label].ids.tolist(), parts[label].labels.tolist()):
                w.writerow((item, label, c))


def read_partitions(path: str | Path, k: int | None = None) -> dict[str, Partition]:
    """Partitions keyed by sub-period from one file or every ``*.partition.csv`` in a directory."""
    path = Path(path)
    files = sorted(path.glob("*.partition.csv")) if path.is_dir() else [path]
    if not files:
        raise ValueError(f"{path}: no partition files found")
    rows: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    for f in files:
        with open(f, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != PARTITION_COLUMNS:
                raise ValueError(f"{f}: expected columns {', '.join(PARTITION_COLUMNS)}")
            for row in reader:
                ids, labels = rows[row["sub_period"]]
                ids.append(int(row["nav_id"]))
                labels.append(int(row["cluster"]))
    out = {}
    for label in sorted(rows):
        ids, labels = rows[label]
        kk = k if k is not None else max(labels) + 1
        out[label] = Partition(np.array(labels), kk, np.array(ids))
    return out


def write_prototypes(path: str | Path, protos: Prototypes, names: Sequence[str] | None = None):
    names = names or variable_names(protos.dim)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(names)
        for row in protos.centers:
            w.writerow(map(_num, row))


def read_prototypes(path: str | Path) -> Prototypes:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return Prototypes(np.array([[float(x) for x in row] for row in reader]))


# results directories -----------------------------------------------------------

def write_strategy(outdir: str | Path, result: StrategyResult,
                   names: Sequence[str] | None = None) -> dict:
    """Write one strategy's files; returns its manifest entry."""
    sdir = Path(outdir) / result.name
    sdir.mkdir(parents=True, exist_ok=True)
    periods = {}
    for label, pr in result.periods.items():
        write_partition(sdir / f"{label}.partition.csv", pr.partition, label)
        write_prototypes(sdir / f"{label}.prototypes.csv", pr.prototypes, names)
        periods[label] = {
            "n_items": len(pr.partition),
            "inertia": pr.partition.inertia,
            "n_iter": pr.n_iter,
            "cluster_sizes": pr.partition.sizes.tolist(),
            "empty_prototypes": np.flatnonzero(pr.prototypes.empty).tolist(),
        }
    return {"params": result.params, "periods": periods}


def read_manifest(results_dir: str | Path) -> dict:
    path = Path(results_dir) / MANIFEST
    if not path.exists():
        raise ValueError(f"{results_dir}: no {MANIFEST}; not a results directory")
    return json.loads(path.read_text(encoding="utf-8"))


def load_results(results_dir: str | Path) -> list[StrategyResult]:
    """Rebuild strategy results from a results directory (partitions and prototypes)."""
    from .strategies import STRATEGIES

    results_dir = Path(results_dir)
    manifest = read_manifest(results_dir)
    k = manifest["config"]["k"]
    out = []
    for name in sorted(manifest["strategies"], key=STRATEGIES.index):
        entry = manifest["strategies"][name]
        parts = read_partitions(results_dir / name, k=k)
        res = StrategyResult(name, params=entry.get("params", {}))
        for label in sorted(entry["periods"]):
            meta = entry["periods"][label]
            if label not in parts:
                raise ValueError(f"{results_dir / name}: missing partition for sub-period {label}")
            part = Partition(parts[label].labels, k, parts[label].ids, meta["inertia"])
            protos = read_prototypes(results_dir / name / f"{label}.prototypes.csv")
            empty = np.zeros(protos.k, dtype=bool)
            empty[meta["empty_prototypes"]] = True
            protos = Prototypes(protos.centers, empty)
            res.periods[label] = PeriodResult(part, protos, meta["n_iter"])
        out.append(res)
    return out
