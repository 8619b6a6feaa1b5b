"""Aggregate epidemics of independent, time-shifted subpopulations.

Each subpopulation is simulated on its own, aligned so that its day 0 is
the first day its prevalence reaches the plotting threshold, shifted by its
start offset and then summed day by day.  Before its shifted start a
subpopulation contributes its full size as susceptible; after its run ends
it contributes its final state.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .distributions import derive_stream, make_rng
from .engine import GROUP_COLUMNS, Trajectory, align_to_threshold, run
from .model import ConfigError, ScenarioConfig, scenario_to_raw, validate_scenario

__all__ = [
    "PlanError",
    "Subpopulation",
    "SubpopulationPlan",
    "AggregateTrajectory",
    "compose",
    "compose_replicate",
    "peak_prevalence",
    "set_path",
]


class PlanError(ConfigError):
    pass


@dataclass(frozen=True)
class Subpopulation:
    name: str
    size: int
    start_offset_days: int = 0
    overrides: Mapping[str, Any] = field(default_factory=dict)


def set_path(raw: dict, path: str, value) -> None:
    """Set ``value`` at a dotted ``path`` in a nested dict/list structure.

    Integer segments index lists; an index equal to the list length appends.
    """
    parts = path.split(".")
    node = raw
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            idx = int(part)
            if idx == len(node):
                node.append({})
            if last:
                node[idx] = value
            else:
                node = node[idx]
        else:
            if last:
                node[part] = value
            else:
                nxt = parts[i + 1]
                if part not in node or node[part] is None:
                    node[part] = [] if nxt.isdigit() else {}
                node = node[part]


@dataclass(frozen=True)
class SubpopulationPlan:
    """A base scenario split into subpopulations.

    The base scenario supplies the shared disease parameters and run
    settings; each subpopulation replaces the population size and may
    override any other field by dotted path.
    """

    base: ScenarioConfig
    subpopulations: tuple[Subpopulation, ...]

    def __post_init__(self):
        problems = []
        if not self.subpopulations:
            problems.append("plan needs at least one subpopulation")
        names = [s.name for s in self.subpopulations]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            problems.append(f"duplicate subpopulation names: {', '.join(dupes)}")
        for s in self.subpopulations:
            if s.size <= 0:
                problems.append(f"subpopulation {s.name!r} must have a positive size")
            if s.start_offset_days < 0:
                problems.append(f"subpopulation {s.name!r} has a negative start offset")
        if problems:
            raise PlanError("; ".join(problems))

    @property
    def n_total(self) -> int:
        return sum(s.size for s in self.subpopulations)

    def scenarios(self) -> list[ScenarioConfig]:
        out = []
        for s in self.subpopulations:
            raw = copy.deepcopy(scenario_to_raw(self.base))
            raw["population"]["n_total"] = s.size
            for path, value in s.overrides.items():
                set_path(raw, path, value)
            out.append(validate_scenario(raw))
        return out


@dataclass
class AggregateTrajectory(Trajectory):
    components: list = field(default_factory=list, repr=False)
    offsets: tuple = ()


def _component_on_grid(comp: Trajectory, raw: Trajectory, offset: int, length: int) -> dict:
    n_g, n_o = raw.n_g, raw.n_other
    out = {}
    if not comp.threshold_reached:
        # never took off: its final state for the whole horizon
        for c in GROUP_COLUMNS:
            fill = 0 if c.startswith("new_inf") else raw.data[c][-1]
            out[c] = np.full(length, fill, dtype=raw.data[c].dtype)
        return out
    comp = comp.extended(length - offset)
    for c in GROUP_COLUMNS:
        v = comp.data[c]
        pre = n_g if c == "S_G" else n_o if c == "S_O" else 0
        out[c] = np.concatenate([np.full(offset, pre, dtype=v.dtype), v[: length - offset]])
    return out


def aggregate(components: Sequence[Trajectory], raws: Sequence[Trajectory], offsets: Sequence[int]) -> AggregateTrajectory:
    length = max(
        off + (len(c) if c.threshold_reached else 1) for c, off in zip(components, offsets)
    )
    grids = [_component_on_grid(c, r, off, length) for c, r, off in zip(components, raws, offsets)]
    data = {}
    for c in GROUP_COLUMNS:
        stack = np.vstack([g[c] for g in grids])
        data[c] = stack.max(axis=0) if c == "phase" else stack.sum(axis=0)
    return AggregateTrajectory(
        n_total=sum(r.n_total for r in raws),
        n_g=sum(r.n_g for r in raws),
        data=data,
        deterministic=all(r.deterministic for r in raws),
        components=list(components),
        offsets=tuple(offsets),
    )


def compose_replicate(plan: SubpopulationPlan, stream, scenarios: Optional[list] = None, *, simulate=run) -> AggregateTrajectory:
    """One aggregate sample; subpopulation m uses ``derive_stream(stream, m)``."""
    scenarios = scenarios or plan.scenarios()
    raws, comps = [], []
    for m, cfg in enumerate(scenarios):
        raw = simulate(cfg, derive_stream(stream, m))
        raws.append(raw)
        comps.append(align_to_threshold(raw, cfg.plot_threshold_fraction))
    offsets = [s.start_offset_days for s in plan.subpopulations]
    return aggregate(comps, raws, offsets)


def _compose_task(args):
    plan, scenarios, seed, r = args
    return compose_replicate(plan, derive_stream(make_rng(seed), r), scenarios)


def compose(plan: SubpopulationPlan, base_seed: int, replicates: int, workers: int = 1) -> list[AggregateTrajectory]:
    """Aggregate ensemble; replicate r of subpopulation m uses stream (seed, r, m)."""
    scenarios = plan.scenarios()
    tasks = [(plan, scenarios, base_seed, r) for r in range(replicates)]
    if workers > 1 and replicates > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_compose_task, tasks))
    return [_compose_task(t) for t in tasks]


def peak_prevalence(series) -> tuple[int, float]:
    """(day, value) of the maximum of I(t)/N; the first day wins ties.

    Accepts a :class:`Trajectory` or a plain sequence of prevalence values.
    """
    values = series.prevalence() if isinstance(series, Trajectory) else np.asarray(series, dtype=float)
    if len(values) == 0:
        raise ValueError("peak of an empty series is undefined")
    day = int(np.argmax(values))
    return day, float(values[day])
