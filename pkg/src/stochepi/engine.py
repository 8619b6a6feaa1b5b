"""Daily-tick stochastic simulator for one well-mixed population.

The population is split into the vulnerable group G and its complement.
Exposed and infectious persons are kept as count queues indexed by the
number of days they have left in that compartment, so a day costs one
Poisson draw, one uniform per transmission attempt and vectorised duration
draws for the persons changing compartment.

Order of events within day ``t``:

1. phase triggers are checked on the start-of-day state;
2. ``T ~ Poisson(beta_phase * I(t))`` transmission attempts are resolved
   (group G is targeted with probability ``c * n_g / N``);
3. queues advance: infectious persons with one day left are removed,
   exposed persons with one day left become infectious, and the day's new
   infections enter the exposed queue (or the infectious queue directly when
   their incubation draw is 0).

Newly infectious persons first transmit on day ``t + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from . import kernels
from .distributions import RngStream, sample_binomial, sample_erlang_days_batch, sample_poisson
from .model import DiseaseParams, InterventionPolicy, ScenarioConfig, effective_beta

__all__ = [
    "GROUP_COLUMNS",
    "EpidemicState",
    "DayRecord",
    "Trajectory",
    "init_state",
    "step_day",
    "run",
    "detect_intervention",
    "align_to_threshold",
]

GROUP_COLUMNS = ("S_G", "E_G", "I_G", "R_G", "S_O", "E_O", "I_O", "R_O", "new_inf_G", "new_inf_other", "phase")

G, OTHER = 0, 1


@dataclass
class EpidemicState:
    day: int
    group_sizes: np.ndarray
    susceptible: np.ndarray
    exposed: np.ndarray  # [group, remaining days]; column 0 unused
    infectious: np.ndarray  # [group, remaining days]; column 0 unused
    removed: np.ndarray
    active_phase: int = 0
    phase_start_days: list = field(default_factory=list)
    t0_day: Optional[int] = None

    @property
    def n_total(self) -> int:
        return int(self.group_sizes.sum())

    def exposed_counts(self) -> np.ndarray:
        return self.exposed.sum(axis=1)

    def infectious_counts(self) -> np.ndarray:
        return self.infectious.sum(axis=1)

    def is_extinct(self) -> bool:
        return not self.exposed.any() and not self.infectious.any()


@dataclass(frozen=True)
class DayRecord:
    day: int
    S_G: float
    E_G: float
    I_G: float
    R_G: float
    S_O: float
    E_O: float
    I_O: float
    R_O: float
    new_inf_G: float
    new_inf_other: float
    phase: int

    @property
    def S(self):
        return self.S_G + self.S_O

    @property
    def E(self):
        return self.E_G + self.E_O

    @property
    def I(self):  # noqa: E743
        return self.I_G + self.I_O

    @property
    def R(self):
        return self.R_G + self.R_O


@dataclass
class Trajectory:
    """Per-day series for one run, stored column-wise.

    ``data`` maps every name in :data:`GROUP_COLUMNS` to an array with one
    entry per day; ``days`` runs 0, 1, ... consecutively.  Totals are
    exposed as properties.  A trajectory that was aligned to a threshold
    the run never reached is empty and has ``threshold_reached`` False.
    """

    n_total: int
    n_g: int
    data: dict
    t0_day: Optional[int] = None
    threshold_day: Optional[int] = None
    threshold_reached: bool = True
    offset: int = 0
    deterministic: bool = False
    scenario: Optional[ScenarioConfig] = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.data["S_G"])

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.data:
            return self.data[name]
        if name in ("S", "E", "I", "R"):
            return self.data[f"{name}_G"] + self.data[f"{name}_O"]
        if name == "day":
            return self.days
        raise KeyError(name)

    @property
    def n_other(self) -> int:
        return self.n_total - self.n_g

    @property
    def days(self) -> np.ndarray:
        return np.arange(len(self))

    @property
    def S(self):
        return self["S"]

    @property
    def E(self):
        return self["E"]

    @property
    def I(self):  # noqa: E743
        return self["I"]

    @property
    def R(self):
        return self["R"]

    def prevalence(self) -> np.ndarray:
        """I(t)/N."""
        return self.I / self.n_total

    def prevalence_g(self) -> np.ndarray:
        """I_G(t)/n."""
        return self.data["I_G"] / self.n_g

    def records(self) -> Iterator[DayRecord]:
        cols = [self.data[c] for c in GROUP_COLUMNS]
        for day, row in enumerate(zip(*cols)):
            yield DayRecord(day, *(v.item() for v in row[:-1]), int(row[-1]))

    def slice(self, start: int, stop: Optional[int] = None) -> "Trajectory":
        data = {k: v[start:stop] for k, v in self.data.items()}
        shift = lambda d: None if d is None else d - start  # noqa: E731
        return replace(self, data=data, t0_day=shift(self.t0_day),
                       threshold_day=shift(self.threshold_day), offset=self.offset + start)

    def extended(self, length: int) -> "Trajectory":
        """Copy padded to ``length`` days by holding the final state."""
        n = len(self)
        if length <= n:
            return self
        if n == 0:
            raise ValueError("cannot extend an empty trajectory")
        data = {}
        for k, v in self.data.items():
            fill = 0 if k.startswith("new_inf") else v[-1]
            data[k] = np.concatenate([v, np.full(length - n, fill, dtype=v.dtype)])
        return replace(self, data=data)


def _seed_count(config: ScenarioConfig) -> int:
    n = config.n_total
    count = max(1, math.ceil(config.seed_infected_fraction * n - 1e-9))
    if count >= n:
        raise ValueError(f"seed count {count} must be smaller than the population {n}")
    return count


def _add_counts(queue: np.ndarray, group: int, values: np.ndarray) -> np.ndarray:
    """Add a histogram of ``values`` to ``queue[group]``, growing the queue if needed."""
    hist = np.bincount(values)
    if len(hist) > queue.shape[1]:
        grown = np.zeros((queue.shape[0], max(len(hist), 2 * queue.shape[1])), dtype=queue.dtype)
        grown[:, : queue.shape[1]] = queue
        queue = grown
    queue[group, : len(hist)] += hist
    return queue


def init_state(config: ScenarioConfig, rng: RngStream) -> EpidemicState:
    """Day-0 state: a small infectious seed, everyone else susceptible.

    ``ceil(seed_infected_fraction * N)`` persons (at least one) start
    infectious.  Each lands in G with probability n_g/N and gets a fresh
    Erlang duration.
    """
    pop = config.population
    disease = config.disease
    sizes = np.array([pop.n_g, pop.n_other], dtype=np.int64)
    seeds = _seed_count(config)
    in_g = sample_binomial(rng, seeds, pop.g_share)
    in_g = min(max(in_g, seeds - pop.n_other), pop.n_g)
    split = (in_g, seeds - in_g)
    infectious = np.zeros((2, 128), dtype=np.int64)
    for g, m in enumerate(split):
        if m:
            infectious = _add_counts(
                infectious, g, sample_erlang_days_batch(rng, disease.erlang_k, disease.erlang_rate_per_day, m)
            )
    return EpidemicState(
        day=0,
        group_sizes=sizes,
        susceptible=sizes - np.array(split, dtype=np.int64),
        exposed=np.zeros((2, 32), dtype=np.int64),
        infectious=infectious,
        removed=np.zeros(2, dtype=np.int64),
    )


def detect_intervention(state: EpidemicState, x: float, phase: int = 1) -> bool:
    """True when phase ``phase`` is not yet active and S/N <= x."""
    if state.active_phase >= phase:
        return False
    return bool(state.susceptible.sum() / state.n_total <= x)


def _apply_triggers(state: EpidemicState, policy: InterventionPolicy) -> None:
    while state.active_phase < len(policy.phases):
        nxt = policy.phases[state.active_phase]
        if nxt.trigger_s_fraction is not None:
            fire = detect_intervention(state, nxt.trigger_s_fraction, state.active_phase + 1)
        else:
            fire = state.day - state.phase_start_days[-1] >= nxt.trigger_day_offset
        if not fire:
            return
        state.active_phase += 1
        state.phase_start_days.append(state.day)
        if state.t0_day is None:
            state.t0_day = state.day


def _snapshot(state: EpidemicState, new_g: int, new_o: int) -> DayRecord:
    e = state.exposed_counts()
    i = state.infectious_counts()
    return DayRecord(
        state.day,
        int(state.susceptible[G]), int(e[G]), int(i[G]), int(state.removed[G]),
        int(state.susceptible[OTHER]), int(e[OTHER]), int(i[OTHER]), int(state.removed[OTHER]),
        new_g, new_o, state.active_phase,
    )


def step_day(state: EpidemicState, disease: DiseaseParams, policy: InterventionPolicy, rng: RngStream) -> DayRecord:
    """Advance ``state`` by one day in place.

    Returns the record of the day just simulated: start-of-day compartment
    counts, the phase in force and the infections that occurred that day.
    """
    _apply_triggers(state, policy)
    r0, c = policy.settings(state.active_phase, disease)
    beta = effective_beta(r0, disease.sigma_per_day)
    n_g, n_o = (int(v) for v in state.group_sizes)
    i_total = int(state.infectious.sum())

    new_g = new_o = 0
    attempts = sample_poisson(rng, beta * i_total) if i_total else 0
    if attempts:
        u = rng.generator.random(attempts)
        p_g = c * (n_g / (n_g + n_o))
        new_g, new_o = kernels.transmit_attempts(
            u, p_g, n_g, n_o, int(state.susceptible[G]), int(state.susceptible[OTHER])
        )
    record = _snapshot(state, new_g, new_o)
    state.susceptible[G] -= new_g
    state.susceptible[OTHER] -= new_o

    inf = state.infectious
    state.removed += inf[:, 1]
    inf[:, 1:-1] = inf[:, 2:]
    inf[:, -1] = 0
    ex = state.exposed
    matured = ex[:, 1].copy()
    ex[:, 1:-1] = ex[:, 2:]
    ex[:, -1] = 0

    k, rate = disease.erlang_k, disease.erlang_rate_per_day
    for g, new in ((G, new_g), (OTHER, new_o)):
        starting = int(matured[g])
        if new:
            if disease.incubation_mean_days > 0:
                delays = sample_poisson(rng, disease.incubation_mean_days, new)
                incubating = delays[delays > 0]
                starting += new - len(incubating)
                if len(incubating):
                    state.exposed = _add_counts(state.exposed, g, incubating)
            else:
                starting += new
        if starting:
            state.infectious = _add_counts(state.infectious, g, sample_erlang_days_batch(rng, k, rate, starting))
    state.day += 1
    return record


def _trajectory_from_records(config: ScenarioConfig, rows: list, t0_day) -> Trajectory:
    arr = np.array([[getattr(r, c) for c in GROUP_COLUMNS] for r in rows], dtype=np.int64).reshape(-1, len(GROUP_COLUMNS))
    data = {c: arr[:, j].copy() for j, c in enumerate(GROUP_COLUMNS)}
    traj = Trajectory(config.n_total, config.population.n_g, data, t0_day=t0_day, scenario=config)
    traj.threshold_day = first_day_at_or_above(traj.prevalence(), config.plot_threshold_fraction)
    return traj


def first_day_at_or_above(series: np.ndarray, threshold: float) -> Optional[int]:
    hits = np.flatnonzero(series >= threshold)
    return int(hits[0]) if len(hits) else None


def run(config: ScenarioConfig, rng: RngStream) -> Trajectory:
    """Simulate until the epidemic dies out or ``t_max_days`` is reached.

    The returned trajectory holds one record per day from 0 to the final
    day inclusive; the final record carries no new infections.
    """
    state = init_state(config, rng)
    rows = []
    while state.day < config.t_max_days and not state.is_extinct():
        rows.append(step_day(state, config.disease, config.policy, rng))
    rows.append(_snapshot(state, 0, 0))
    return _trajectory_from_records(config, rows, state.t0_day)


def align_to_threshold(trajectory: Trajectory, threshold: float) -> Trajectory:
    """Re-index ``trajectory`` so day 0 is the first day with I/N >= threshold.

    If the threshold is never reached, an empty trajectory with
    ``threshold_reached=False`` is returned.
    """
    if len(trajectory) == 0:
        raise ValueError("cannot align an empty trajectory")
    start = first_day_at_or_above(trajectory.prevalence(), threshold)
    if start is None:
        empty = trajectory.slice(len(trajectory))
        return replace(empty, threshold_reached=False, t0_day=None, threshold_day=None)
    return trajectory.slice(start)
