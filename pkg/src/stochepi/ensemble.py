"""Replicate ensembles, the Erlang-shape sensitivity ensemble and sweeps.

Replicate ``i`` of an ensemble always uses ``derive_stream(root, i)``, and
results are gathered in index order, so an ensemble is the same whether it
runs sequentially or on a process pool.
"""
from __future__ import annotations

import copy
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from .distributions import RngStream, derive_stream, make_rng
from .engine import GROUP_COLUMNS, Trajectory, align_to_threshold, run
from .model import ConfigValidationError, ScenarioConfig, Violation, scenario_to_raw, validate_scenario

__all__ = [
    "Ensemble",
    "summarize",
    "run_replicates",
    "sensitivity_k",
    "SweepGrid",
    "run_sweep",
    "stack_aligned",
]


@dataclass
class Ensemble:
    """Replicate trajectories with per-day summary bands.

    ``mean``, ``p05`` and ``p95`` are real-valued trajectories of the
    per-day mean and 5th/95th percentiles of every column, taken over the
    replicates that reached the plotting threshold (after aligning them to
    it when ``aligned`` is set).
    """

    scenario: ScenarioConfig
    trajectories: Optional[list]
    mean: Trajectory
    p05: Trajectory
    p95: Trajectory
    peak_prevalence: np.ndarray
    peak_prevalence_g: np.ndarray
    peak_day: np.ndarray
    attack_rate: np.ndarray
    aligned: bool = True
    replicates: int = 0
    not_reached: int = 0
    k_values: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def mean_peak(self) -> float:
        return float(self.peak_prevalence.mean())

    def mean_peak_g(self) -> float:
        return float(self.peak_prevalence_g.mean())


def stack_aligned(trajectories: Sequence[Trajectory], threshold: Optional[float], length: Optional[int] = None):
    """Align (when ``threshold`` is given) and pad trajectories to one length.

    Returns the list of processed trajectories that reached the threshold
    and the number that did not.
    """
    kept, missed = [], 0
    for tr in trajectories:
        a = align_to_threshold(tr, threshold) if threshold is not None else tr
        if not a.threshold_reached or len(a) == 0:
            missed += 1
            continue
        kept.append(a)
    if kept:
        n = length or max(len(a) for a in kept)
        kept = [a.extended(n).slice(0, n) for a in kept]
    return kept, missed


def _band(stack: list, fn, template: Trajectory, deterministic=False) -> Trajectory:
    data = {}
    for c in GROUP_COLUMNS:
        arr = np.vstack([t.data[c] for t in stack]).astype(float)
        data[c] = fn(arr)
    data["phase"] = np.rint(np.median(np.vstack([t.data["phase"] for t in stack]), axis=0)).astype(np.int64)
    return Trajectory(template.n_total, template.n_g, data, deterministic=deterministic, scenario=template.scenario)


def summarize(scenario: ScenarioConfig, trajectories: Sequence[Trajectory], aligned: bool = True,
              keep: bool = True) -> Ensemble:
    threshold = scenario.plot_threshold_fraction if aligned else None
    stack, missed = stack_aligned(trajectories, threshold)
    if not stack:
        raise ValueError("no replicate reached the plotting threshold")
    mean = _band(stack, lambda a: a.mean(axis=0), stack[0])
    p05 = _band(stack, lambda a: np.percentile(a, 5, axis=0), stack[0])
    p95 = _band(stack, lambda a: np.percentile(a, 95, axis=0), stack[0])
    peaks = np.array([t.prevalence().max() for t in trajectories])
    peaks_g = np.array([t.prevalence_g().max() for t in trajectories])
    peak_day = np.array([int(np.argmax(t.prevalence())) for t in trajectories])
    attack = np.array([1.0 - t.S[-1] / t.n_total for t in trajectories])
    return Ensemble(
        scenario=scenario,
        trajectories=list(trajectories) if keep else None,
        mean=mean, p05=p05, p95=p95,
        peak_prevalence=peaks, peak_prevalence_g=peaks_g, peak_day=peak_day, attack_rate=attack,
        aligned=aligned, replicates=len(trajectories), not_reached=missed,
    )


def _run_task(args):
    scenario, stream = args
    return run(scenario, stream)


def _map(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_replicates(scenario: ScenarioConfig, count: Optional[int] = None, base_seed: Optional[int] = None, *,
                   root: Optional[RngStream] = None, workers: int = 1, aligned: bool = True,
                   keep: bool = True) -> Ensemble:
    """Run ``count`` independent replicates (defaults come from the scenario)."""
    count = scenario.replicates if count is None else count
    if count < 1:
        raise ValueError("need at least one replicate")
    if root is None:
        root = make_rng(scenario.base_seed if base_seed is None else base_seed)
    tasks = [(scenario, derive_stream(root, i)) for i in range(count)]
    return summarize(scenario, _map(_run_task, tasks, workers), aligned=aligned, keep=keep)


def with_erlang_shape(scenario: ScenarioConfig, k: int, rescale_rate: bool = True) -> ScenarioConfig:
    """Scenario with Erlang shape ``k``; the rate is rescaled to keep the mean when asked."""
    d = scenario.disease
    rate = k * d.sigma_per_day if rescale_rate else d.erlang_rate_per_day
    return replace(scenario, disease=replace(d, erlang_k=int(k), erlang_rate_per_day=rate))


def sensitivity_k(scenario: ScenarioConfig, k_min: int, k_max: int, trajectories: int,
                  base_seed: Optional[int] = None, *, rescale_rate: bool = True, workers: int = 1,
                  aligned: bool = True) -> Ensemble:
    """Ensemble in which each trajectory draws its own integer Erlang shape.

    Trajectory ``i`` draws ``k`` uniformly from ``[k_min, k_max]`` using the
    stream ``derive_stream(derive_stream(root, i), 0)`` and simulates with
    ``derive_stream(root, i)``, the same stream replicate ``i`` of
    :func:`run_replicates` would use.
    """
    if not (isinstance(k_min, (int, np.integer)) and isinstance(k_max, (int, np.integer))) or not 1 <= k_min <= k_max:
        raise ValueError(f"need integers 1 <= k_min <= k_max, got [{k_min}, {k_max}]")
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    root = make_rng(scenario.base_seed if base_seed is None else base_seed)
    ks, tasks = [], []
    for i in range(trajectories):
        stream = derive_stream(root, i)
        k = int(derive_stream(stream, 0).generator.integers(k_min, k_max + 1))
        ks.append(k)
        tasks.append((with_erlang_shape(scenario, k, rescale_rate), stream))
    ens = summarize(scenario, _map(_run_task, tasks, workers), aligned=aligned)
    ens.k_values = np.array(ks)
    return ens


@dataclass(frozen=True)
class SweepGrid:
    """Cross product of parameter values applied to a base scenario.

    ``axes`` is a sequence of ``(dotted path, values)`` pairs; paths follow
    the config file layout (``disease.r0``, ``policy.phases.0.c``, ...).
    """

    base: ScenarioConfig
    axes: tuple[tuple[str, tuple], ...]
    replicates: int = 1

    def cells(self) -> list[tuple[dict, ScenarioConfig]]:
        """Every cell as ``(assignment, validated scenario)``.

        All cells are validated before any is returned.

        Raises:
            ConfigValidationError: collecting the violations of every cell.
        """
        from .composer import set_path

        problems: list[Violation] = []
        out = []
        names = [p for p, _ in self.axes]
        for combo in itertools.product(*(vals for _, vals in self.axes)):
            assignment = dict(zip(names, combo))
            raw = copy.deepcopy(scenario_to_raw(self.base))
            for path, value in assignment.items():
                set_path(raw, path, value)
            try:
                out.append((assignment, validate_scenario(raw)))
            except ConfigValidationError as exc:
                label = ", ".join(f"{k}={v}" for k, v in assignment.items())
                problems.extend(Violation(f"[{label}] {v.path}", v.message, v.line, v.kind) for v in exc.violations)
        if problems:
            raise ConfigValidationError(problems)
        return out


def run_sweep(grid: SweepGrid, base_seed: Optional[int] = None, workers: int = 1) -> list[tuple[dict, Ensemble]]:
    """Ensemble per cell; cell ``c`` draws its replicates from ``derive_stream(root, c)``."""
    cells = grid.cells()
    root = make_rng(grid.base.base_seed if base_seed is None else base_seed)
    results = []
    for c, (assignment, scenario) in enumerate(cells):
        ens = run_replicates(scenario, grid.replicates, root=derive_stream(root, c), workers=workers, keep=False)
        results.append((assignment, ens))
    return results


def sweep_rows(results) -> list[dict[str, Any]]:
    rows = []
    for assignment, ens in results:
        row = dict(assignment)
        row.update(
            replicates=ens.replicates,
            mean_peak_I=ens.mean_peak(),
            p05_peak_I=float(np.percentile(ens.peak_prevalence, 5)),
            p95_peak_I=float(np.percentile(ens.peak_prevalence, 95)),
            mean_peak_I_G=ens.mean_peak_g(),
            mean_attack_rate=float(ens.attack_rate.mean()),
        )
        rows.append(row)
    return rows
