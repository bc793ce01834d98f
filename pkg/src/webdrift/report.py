"""Pairwise comparison of strategy results, sub-period by sub-period."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations, permutations
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import corrected_rand, f_measure
from .storage import _num, dump_json
from .strategies import StrategyResult


@dataclass
class ReportBundle:
    strategies: list[str]
    sub_periods: list[str]
    # (strategy_a, strategy_b, sub_period, cr), unordered pairs a < b in input order
    cr: list[tuple[str, str, str, float]] = field(default_factory=list)
    # (apriori, reached, sub_period, cluster, size, f, match), ordered pairs
    f: list[tuple[str, str, str, int, int, float, int]] = field(default_factory=list)
    # (apriori, reached, sub_period) -> overall F
    f_overall: dict[tuple[str, str, str], float] = field(default_factory=dict)

    def cr_value(self, a: str, b: str, sub_period: str) -> float:
        for sa, sb, p, v in self.cr:
            if p == sub_period and {sa, sb} == {a, b}:
                return v
        raise KeyError((a, b, sub_period))

    def f_values(self, apriori: str, reached: str, sub_period: str) -> list[float]:
        return [v for a, r, p, _, _, v, _ in self.f if (a, r, p) == (apriori, reached, sub_period)]

    def summary(self) -> dict:
        cr_summary = {}
        for a, b in combinations(self.strategies, 2):
            values = {p: self.cr_value(a, b, p) for p in self.sub_periods}
            cr_summary[f"{a}~{b}"] = {"by_sub_period": values, **describe(list(values.values()))}
        f_summary = {}
        for a, b in permutations(self.strategies, 2):
            f_summary[f"{a}->{b}"] = {
                p: {"overall": self.f_overall[(a, b, p)], **describe(self.f_values(a, b, p))}
                for p in self.sub_periods
            }
        return {
            "strategies": self.strategies,
            "sub_periods": self.sub_periods,
            "corrected_rand": cr_summary,
            "f_measure": f_summary,
        }


def describe(values: Sequence[float]) -> dict:
    """Five-number summary (boxplot inputs)."""
    if not values:
        return {"n": 0}
    q = np.quantile(np.asarray(values, dtype=np.float64), [0, 0.25, 0.5, 0.75, 1])
    return {"n": len(values), "min": float(q[0]), "q1": float(q[1]), "median": float(q[2]),
            "q3": float(q[3]), "max": float(q[4]), "mean": float(np.mean(values))}


def compare_strategies(results: Sequence[StrategyResult]) -> ReportBundle:
    """Corrected Rand for every unordered strategy pair, per-cluster F for every ordered pair."""
    if not results:
        raise ValueError("nothing to compare")
    names = [r.name for r in results]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate strategy names: {names}")
    periods = sorted(results[0].periods)
    for r in results[1:]:
        if sorted(r.periods) != periods:
            raise ValueError(f"sub-periods of {r.name!r} differ from those of {results[0].name!r}")

    bundle = ReportBundle(names, periods)
    by_name = {r.name: r for r in results}
    for p in periods:
        for a, b in combinations(names, 2):
            cr = corrected_rand(by_name[a].periods[p].partition, by_name[b].periods[p].partition)
            bundle.cr.append((a, b, p, cr))
        for a, b in permutations(names, 2):
            overall, matches = f_measure(by_name[a].periods[p].partition, by_name[b].periods[p].partition)
            bundle.f_overall[(a, b, p)] = overall
            bundle.f.extend((a, b, p, m.cluster, m.size, m.f, m.match) for m in matches)
    return bundle


def write_report(bundle: ReportBundle, outdir: str | Path):
    """cr.csv, fmeasure.csv and summary.json under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "cr.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sub_period", "strategy_a", "strategy_b", "corrected_rand"))
        for a, b, p, v in sorted(bundle.cr, key=lambda row: row[2]):
            w.writerow((p, a, b, _num(v)))
    with open(outdir / "fmeasure.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sub_period", "apriori", "reached", "cluster", "size", "f_measure", "best_match"))
        for a, b, p, c, size, v, match in sorted(bundle.f, key=lambda row: row[2]):
            w.writerow((p, a, b, c, size, _num(v), match))
    dump_json(bundle.summary(), outdir / "summary.json")
