"""Mortality calibration, expected and sampled daily deaths, bed demand.

Deaths are a post-processing layer over a finished trajectory; they never
feed back into the epidemic dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .distributions import RngStream, sample_binomial
from .engine import Trajectory

__all__ = [
    "AgeBandTable",
    "UK_AGE_TABLE",
    "MortalityRates",
    "BurdenSeries",
    "calibrate_age_table",
    "group_mortality_rates",
    "rates_for",
    "expected_deaths",
    "expected_daily_deaths",
    "sample_deaths",
]


@dataclass(frozen=True)
class AgeBandTable:
    """Ordered age bands as ``(label, size in millions, death probability)``."""

    bands: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        if not self.bands:
            raise ValueError("age table needs at least one band")
        labels = [b[0] for b in self.bands]
        if len(set(labels)) != len(labels):
            raise ValueError("age band labels must be unique")
        for label, size, prob in self.bands:
            if size <= 0:
                raise ValueError(f"band {label!r}: size must be positive")
            if not 0 <= prob <= 1:
                raise ValueError(f"band {label!r}: death probability must lie in [0,1]")

    @property
    def labels(self) -> list[str]:
        return [b[0] for b in self.bands]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([b[1] for b in self.bands])

    @property
    def probs(self) -> np.ndarray:
        return np.array([b[2] for b in self.bands])

    @property
    def total(self) -> float:
        return float(self.sizes.sum())

    def average(self) -> float:
        """Population-weighted mean death probability."""
        return float(np.dot(self.sizes, self.probs) / self.total)


# UK population by age (millions) with per-band infection fatality ratios.
UK_AGE_TABLE = AgeBandTable((
    ("0-19", 15.58, 0.00003),
    ("20-29", 8.71, 0.0003),
    ("30-39", 8.83, 0.0008),
    ("40-49", 8.50, 0.0015),
    ("50-59", 8.96, 0.006),
    ("60-69", 7.07, 0.022),
    ("70-79", 5.49, 0.051),
    ("80+", 3.27, 0.093),
))


def calibrate_age_table(table: AgeBandTable, target_avg: float) -> tuple[AgeBandTable, float]:
    """Scale every band's probability by one factor so the average hits ``target_avg``."""
    if not 0 < target_avg < 1:
        raise ValueError(f"target average mortality must lie in (0,1), got {target_avg}")
    raw = table.average()
    if raw == 0:
        raise ValueError("cannot calibrate a table whose average mortality is zero")
    factor = target_avg / raw
    scaled = tuple((label, size, prob * factor) for label, size, prob in table.bands)
    try:
        return AgeBandTable(scaled), factor
    except ValueError as exc:
        raise ValueError(f"calibration pushes a probability above 1 (factor {factor:.4g})") from exc


@dataclass(frozen=True)
class MortalityRates:
    r_g: float
    r_other: float
    r_avg: float
    alpha: float
    scale_factor: float = 1.0


def group_mortality_rates(table: AgeBandTable, g_bands: Iterable[str], scale_factor: float = 1.0) -> MortalityRates:
    """Size-weighted mortality of the bands in ``g_bands`` and of the rest."""
    g_bands = set(g_bands)
    unknown = g_bands - set(table.labels)
    if unknown:
        raise ValueError(f"unknown age band(s): {', '.join(sorted(unknown))}")
    in_g = np.array([lab in g_bands for lab in table.labels])
    if not in_g.any() or in_g.all():
        raise ValueError("g_bands must be a non-empty proper subset of the table's bands")
    sizes, probs = table.sizes, table.probs
    n = sizes[in_g].sum()
    return MortalityRates(
        r_g=float(np.dot(sizes[in_g], probs[in_g]) / n),
        r_other=float(np.dot(sizes[~in_g], probs[~in_g]) / sizes[~in_g].sum()),
        r_avg=table.average(),
        alpha=float(n / sizes.sum()),
        scale_factor=scale_factor,
    )


def rates_for(spec=None) -> MortalityRates:
    """Calibrated group rates for a :class:`~stochepi.model.BurdenSpec` (UK defaults if None)."""
    from .model import BurdenSpec

    spec = spec or BurdenSpec()
    table = UK_AGE_TABLE if spec.age_table is None else AgeBandTable(tuple(spec.age_table))
    scaled, factor = calibrate_age_table(table, spec.target_avg_mortality)
    return group_mortality_rates(scaled, spec.g_bands, factor)


@dataclass(frozen=True)
class BurdenSeries:
    ed_g: np.ndarray
    ed_other: np.ndarray
    beds_per_death: float = 1.0
    d_g: Optional[np.ndarray] = None
    d_other: Optional[np.ndarray] = None

    @property
    def ed_total(self) -> np.ndarray:
        return self.ed_g + self.ed_other

    @property
    def beds_g(self) -> np.ndarray:
        return self.beds_per_death * self.ed_g

    @property
    def beds_other(self) -> np.ndarray:
        return self.beds_per_death * self.ed_other

    @property
    def beds_total(self) -> np.ndarray:
        return self.beds_per_death * self.ed_total

    @property
    def d_total(self) -> Optional[np.ndarray]:
        if self.d_g is None:
            return None
        return self.d_g + self.d_other

    def peak(self) -> tuple[int, float]:
        total = self.ed_total
        if len(total) == 0:
            raise ValueError("empty burden series")
        day = int(np.argmax(total))
        return day, float(total[day])


def expected_daily_deaths(prevalence: float, n_total: float, rate: float, sigma: float) -> float:
    """Expected deaths per day with ``prevalence * n_total`` infectious persons."""
    return prevalence * n_total * rate * sigma


def expected_deaths(trajectory: Trajectory, rates: MortalityRates, sigma: float, beds_per_death: float = 1.0) -> BurdenSeries:
    i_g = np.asarray(trajectory["I_G"], dtype=float)
    i_o = np.asarray(trajectory["I_O"], dtype=float)
    return BurdenSeries(rates.r_g * sigma * i_g, rates.r_other * sigma * i_o, beds_per_death)


def sample_deaths(trajectory: Trajectory, rates: MortalityRates, sigma: float, rng: RngStream,
                  beds_per_death: float = 1.0) -> BurdenSeries:
    """Expected deaths plus one binomial sample of daily deaths per group."""
    p_g, p_o = rates.r_g * sigma, rates.r_other * sigma
    for p in (p_g, p_o):
        if not 0 <= p <= 1:
            raise ValueError(f"daily death probability r*sigma = {p} is outside [0,1]")
    counts = []
    for col in ("I_G", "I_O"):
        v = np.asarray(trajectory[col])
        if not np.array_equal(v, np.rint(v)):
            raise ValueError("sampling deaths needs integer prevalence counts")
        counts.append(v.astype(np.int64))
    d_g = sample_binomial(rng, counts[0], p_g, len(counts[0])) if len(counts[0]) else np.zeros(0, np.int64)
    d_o = sample_binomial(rng, counts[1], p_o, len(counts[1])) if len(counts[1]) else np.zeros(0, np.int64)
    base = expected_deaths(trajectory, rates, sigma, beds_per_death)
    return replace(base, d_g=np.asarray(d_g), d_other=np.asarray(d_o))
