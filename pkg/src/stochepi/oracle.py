"""Deterministic mean-field recursion of the daily-tick simulator.

Every random draw of :func:`stochepi.engine.step_day` is replaced by its
expectation: infections become real-valued flows, and incubation and
infectious durations are spread over the day queues with their probability
mass functions.  The result is a real-valued :class:`Trajectory` flagged
``deterministic=True``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc
from scipy.stats import poisson

from .engine import GROUP_COLUMNS, Trajectory, _seed_count, first_day_at_or_above
from .model import ScenarioConfig, effective_beta

__all__ = ["erlang_days_pmf", "poisson_pmf", "mean_field_run", "CompareReport", "compare"]


def _truncate(pmf: np.ndarray, tail: float) -> np.ndarray:
    cum = np.cumsum(pmf)
    last = int(np.searchsorted(cum, 1.0 - tail))
    last = min(last, len(pmf) - 1)
    out = pmf[: last + 1].copy()
    out[-1] += 1.0 - out.sum()
    return out


def erlang_days_pmf(k: int, rate: float, tail: float = 1e-9) -> np.ndarray:
    """Mass function of ``max(1, round(X))`` for X ~ Erlang(k, rate).

    Entry ``d`` is the probability of a duration of ``d`` days; entry 0 is
    always zero.  The tail beyond cumulative mass ``1 - tail`` is folded
    into the last retained day.
    """
    mean = k / rate
    horizon = int(mean + 60 * np.sqrt(k) / rate) + 10
    edges = np.arange(1, horizon + 1) + 0.5
    cdf = gammainc(k, rate * edges)
    pmf = np.empty(horizon + 1)
    pmf[0] = 0.0
    pmf[1] = cdf[0]
    pmf[2:] = np.diff(cdf)
    return _truncate(pmf, tail)


def poisson_pmf(mean: float, tail: float = 1e-9) -> np.ndarray:
    if mean == 0:
        return np.array([1.0])
    horizon = int(mean + 40 * np.sqrt(mean)) + 20
    return _truncate(poisson.pmf(np.arange(horizon + 1), mean), tail)


def _push(queue: np.ndarray, group: int, mass: float, pmf: np.ndarray) -> None:
    queue[group, : len(pmf)] += mass * pmf


def mean_field_run(config: ScenarioConfig, tail: float = 1e-9, depletion: str = "linear") -> Trajectory:
    """Expected-value trajectory of the scenario.

    Args:
        config: validated scenario.
        tail: probability mass dropped from the duration distributions
            (it is added to the last retained day).
        depletion: ``"linear"`` uses ``beta*I*q*S/N_m`` new infections per
            group; ``"exact"`` uses ``S*(1 - exp(-beta*I*q/N_m))``, the exact
            expected number of distinct susceptibles hit by a Poisson number
            of uniformly targeted attempts.
    """
    if depletion not in ("linear", "exact"):
        raise ValueError(f"unknown depletion law {depletion!r}")
    pop, disease, policy = config.population, config.disease, config.policy
    sizes = np.array([pop.n_g, pop.n_other], dtype=float)
    n = sizes.sum()
    dur = erlang_days_pmf(disease.erlang_k, disease.erlang_rate_per_day, tail)
    inc = poisson_pmf(disease.incubation_mean_days, tail)

    seeds = _seed_count(config) * sizes / n
    S = sizes - seeds
    E = np.zeros((2, len(inc) + 1))
    I = np.zeros((2, len(dur) + 1))
    R = np.zeros(2)
    for g in range(2):
        _push(I, g, seeds[g], dur)

    phase, starts, t0 = 0, [], None
    share = pop.n_g / pop.n_total
    rows = []
    for day in range(config.t_max_days + 1):
        while phase < len(policy.phases):
            nxt = policy.phases[phase]
            if nxt.trigger_s_fraction is not None:
                fire = S.sum() / n <= nxt.trigger_s_fraction
            else:
                fire = day - starts[-1] >= nxt.trigger_day_offset
            if not fire:
                break
            phase += 1
            starts.append(day)
            t0 = day if t0 is None else t0
        e_tot, i_tot = E.sum(axis=1), I.sum(axis=1)
        if day == config.t_max_days:
            rows.append((*_group_row(S, e_tot, i_tot, R), 0.0, 0.0, phase))
            break
        r0, c = policy.settings(phase, disease)
        force = effective_beta(r0, disease.sigma_per_day) * i_tot.sum()
        q = np.array([c * share, 1.0 - c * share])
        if depletion == "linear":
            new = np.minimum(force * q * S / sizes, S)
        else:
            new = S * -np.expm1(-force * q / sizes)
        rows.append((*_group_row(S, e_tot, i_tot, R), new[0], new[1], phase))
        S = S - new

        R = R + I[:, 1]
        I[:, 1:-1] = I[:, 2:]
        I[:, -1] = 0.0
        matured = E[:, 1].copy()
        E[:, 1:-1] = E[:, 2:]
        E[:, -1] = 0.0
        for g in range(2):
            _push(I, g, matured[g] + new[g] * inc[0], dur)
            if len(inc) > 1:
                E[g, 1 : len(inc)] += new[g] * inc[1:]

    arr = np.array(rows, dtype=float)
    data = {c: arr[:, j].copy() for j, c in enumerate(GROUP_COLUMNS)}
    data["phase"] = data["phase"].astype(np.int64)
    traj = Trajectory(pop.n_total, pop.n_g, data, t0_day=t0, deterministic=True, scenario=config)
    traj.threshold_day = first_day_at_or_above(traj.prevalence(), config.plot_threshold_fraction)
    return traj


def _group_row(S, e_tot, i_tot, R):
    return S[0], e_tot[0], i_tot[0], R[0], S[1], e_tot[1], i_tot[1], R[1]


@dataclass(frozen=True)
class CompareReport:
    gap: float
    passed: bool
    worst_day: int
    tolerance: float

    def as_dict(self):
        return {"gap": self.gap, "passed": self.passed, "worst_day": self.worst_day, "tolerance": self.tolerance}


def compare(series, reference, tolerance: float) -> CompareReport:
    """Sup-norm comparison of two equally aligned daily series."""
    a = np.asarray(series, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"series lengths differ after alignment: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("nothing to compare")
    diff = np.abs(a - b)
    worst = int(np.argmax(diff))
    gap = float(diff[worst])
    return CompareReport(gap, gap <= tolerance, worst, tolerance)
