"""Seeded Gaussian-mixture streams with scripted drift events.

Events (periods are 1-based):

* ``move``: shift a component's mean by ``displacement`` from that period on
* ``birth``: a new component becomes active from that period on
* ``death``: a component is inactive from that period on
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .core import Partition
from .strategies import TemporalDataset

EVENT_TYPES = ("move", "birth", "death")


class ScenarioError(ValueError):
    pass


@dataclass
class Component:
    name: str
    mean: list[float]
    spread: float = 1.0
    weight: float = 1.0


@dataclass
class DriftEvent:
    type: str
    period: int
    component: str | Component
    displacement: list[float] | None = None


@dataclass
class DriftScenario:
    n_periods: int
    components: list[Component]
    events: list[DriftEvent] = field(default_factory=list)
    points_per_period: int = 1000
    seed: int = 0
    dim: int | None = None
    start_period: str = "2002-07"

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, cfg: dict) -> "DriftScenario":
        try:
            comps = [Component(**c) for c in cfg["components"]]
            events = []
            for e in cfg.get("events", []):
                e = dict(e)
                if isinstance(e.get("component"), dict):
                    e["component"] = Component(**e["component"])
                events.append(DriftEvent(**e))
            rest = {k: v for k, v in cfg.items() if k not in ("components", "events")}
            return cls(components=comps, events=events, **rest)
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "DriftScenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def validate(self):
        if self.n_periods < 1:
            raise ScenarioError("n_periods must be >= 1")
        if self.points_per_period < 1:
            raise ScenarioError("points_per_period must be >= 1")
        if not self.components:
            raise ScenarioError("scenario needs at least one component")
        try:
            year, month = map(int, self.start_period.split("-"))
            if not 1 <= month <= 12:
                raise ValueError
        except ValueError:
            raise ScenarioError(f"start_period must look like YYYY-MM, got {self.start_period!r}")
        everything = list(self.components) + [e.component for e in self.events
                                              if e.type == "birth" and isinstance(e.component, Component)]
        dim = self.dim or len(self.components[0].mean)
        names = set()
        for c in everything:
            if len(c.mean) != dim:
                raise ScenarioError(f"component {c.name!r} has dimension {len(c.mean)}, expected {dim}")
            if c.spread <= 0 or c.weight <= 0:
                raise ScenarioError(f"component {c.name!r} needs positive spread and weight")
            if c.name in names:
                raise ScenarioError(f"duplicate component name {c.name!r}")
            names.add(c.name)
        self.dim = dim
        for e in self.events:
            if e.type not in EVENT_TYPES:
                raise ScenarioError(f"unknown event type {e.type!r}")
            if not 1 <= e.period <= self.n_periods:
                raise ScenarioError(f"event period {e.period} outside 1..{self.n_periods}")
            if e.type == "birth":
                if not isinstance(e.component, Component):
                    raise ScenarioError("a birth event needs a full component definition")
            elif e.component not in names:
                raise ScenarioError(f"{e.type} event refers to unknown component {e.component!r}")
            if e.type == "move" and (e.displacement is None or len(e.displacement) != dim):
                raise ScenarioError(f"move of {e.component!r} needs a {dim}-d displacement")
        for t in range(1, self.n_periods + 1):
            if not self.active(t):
                raise ScenarioError(f"no active component in period {t}")

    @property
    def all_components(self) -> list[Component]:
        born = [e.component for e in self.events if e.type == "birth"]
        return list(self.components) + born

    def period_labels(self) -> list[str]:
        year, month = map(int, self.start_period.split("-"))
        labels = []
        for t in range(self.n_periods):
            y, m = divmod(month - 1 + t, 12)
            labels.append(f"{year + y:04d}-{m + 1:02d}")
        return labels

    def active(self, period: int) -> list[tuple[int, np.ndarray, float, float]]:
        """(component index, mean, spread, weight) of every component live in ``period``."""
        out = []
        for idx, comp in enumerate(self.all_components):
            mean = np.asarray(comp.mean, dtype=np.float64)
            alive = True
            for e in self.events:
                target = e.component.name if isinstance(e.component, Component) else e.component
                if target != comp.name or e.period > period:
                    continue
                if e.type == "birth":
                    continue
                if e.type == "death":
                    alive = False
                elif e.type == "move":
                    mean = mean + np.asarray(e.displacement, dtype=np.float64)
            born = next((e.period for e in self.events if e.type == "birth" and e.component is comp), 1)
            if alive and born <= period:
                out.append((idx, mean, comp.spread, comp.weight))
        return out


def generate(scenario: DriftScenario) -> tuple[TemporalDataset, dict[str, Partition]]:
    """Sample every period; ground-truth labels are indices into ``scenario.all_components``.

    Period t draws from its own child of ``SeedSequence(seed)``. Item ids run
    consecutively across periods.
    """
    labels = scenario.period_labels()
    seeds = np.random.SeedSequence(scenario.seed).spawn(scenario.n_periods)
    matrices, id_arrays, truth = [], [], {}
    next_id = 1
    for t, (label, seed) in enumerate(zip(labels, seeds), 1):
        rng = np.random.default_rng(seed)
        comps = scenario.active(t)
        weights = np.array([w for *_, w in comps])
        counts = rng.multinomial(scenario.points_per_period, weights / weights.sum())
        xs, ys = [], []
        for (idx, mean, spread, _), count in zip(comps, counts):
            xs.append(mean + spread * rng.standard_normal((count, scenario.dim)))
            ys.append(np.full(count, idx))
        x = np.vstack(xs)
        y = np.concatenate(ys)
        order = rng.permutation(x.shape[0])
        ids = np.arange(next_id, next_id + x.shape[0])
        next_id += x.shape[0]
        matrices.append(x[order])
        id_arrays.append(ids)
        truth[label] = Partition(y[order], len(scenario.all_components), ids)
    return TemporalDataset.from_arrays(labels, matrices, id_arrays), truth


def separated_means(n: int, dim: int, distance: float) -> list[list[float]]:
    """``n`` means on scaled coordinate axes, pairwise ``distance`` apart."""
    if n > dim:
        raise ScenarioError(f"cannot place {n} axis-aligned means in {dim} dimensions")
    step = distance / np.sqrt(2)
    return [[step if j == i else 0.0 for j in range(dim)] for i in range(n)]


def birth_scenario(seed: int = 0, points_per_period: int = 1000, dim: int = 13) -> DriftScenario:
    """Six months, five components, a sixth born in month four.

    The newborn sits 9 spreads from component ``A`` while ``B`` and ``C`` are
    8 apart; all other means are further apart. With K=5, a single month
    after the birth is cheapest to summarise by merging ``B`` and ``C``, while
    over the whole stream (where the newborn carries less mass) merging the
    newborn into ``A`` is cheaper. Light components ``D`` and ``E`` sit far
    from everything.
    """
    def at(**coords):
        v = [0.0] * dim
        for axis, value in coords.items():
            v[int(axis[1:])] = value
        return v

    comps = [
        Component("A", at(a1=10.0), 1.0, 1.0),
        Component("B", at(a0=4.0), 1.0, 1.0),
        Component("C", at(a0=-4.0), 1.0, 1.0),
        Component("D", at(a3=30.0), 1.0, 0.3),
        Component("E", at(a4=30.0), 1.0, 0.3),
    ]
    newborn = Component("N", at(a1=10.0, a2=9.0), 1.0, 1.0)
    return DriftScenario(
        n_periods=6,
        components=comps,
        events=[DriftEvent("birth", 4, newborn)],
        points_per_period=points_per_period,
        seed=seed,
        dim=dim,
    )
