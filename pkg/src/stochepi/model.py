"""Scenario domain types and validation.

A scenario is assembled from a nested mapping (the parsed config file) by
:func:`validate_scenario`, which either returns a frozen
:class:`ScenarioConfig` or raises :class:`ConfigValidationError` listing every
violated constraint with its field path.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Optional, Sequence

__all__ = [
    "ConfigError",
    "ConfigValidationError",
    "UnknownKeyError",
    "Violation",
    "DiseaseParams",
    "PopulationSpec",
    "Phase",
    "InterventionPolicy",
    "BurdenSpec",
    "ScenarioConfig",
    "effective_beta",
    "validate_scenario",
    "scenario_to_raw",
    "round_half_up",
    "MORTALITY_PRESETS",
]

# Average mortality figures quoted from different sources.
MORTALITY_PRESETS = {
    "uk": 0.009,
    "who": 0.034,
    "yamin": 0.003,
    "low": 0.001,
}


class ConfigError(Exception):
    """Base class for every configuration problem."""


@dataclass(frozen=True)
class Violation:
    path: str
    message: str
    line: Optional[int] = None
    kind: str = "invalid"  # "invalid" | "missing" | "unknown_key"

    def __str__(self):
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.path}: {self.message}{where}"


class ConfigValidationError(ConfigError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnknownKeyError(ConfigValidationError):
    """Raised instead of :class:`ConfigValidationError` when any key is unknown."""


def raise_for(violations: Sequence[Violation]) -> None:
    if any(v.kind == "unknown_key" for v in violations):
        raise UnknownKeyError(violations)
    if violations:
        raise ConfigValidationError(violations)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def effective_beta(r0: float, sigma: float) -> float:
    """Transmissions per infectious person per day for a given R0."""
    return r0 * sigma


@dataclass(frozen=True)
class DiseaseParams:
    r0: float = 2.5
    incubation_mean_days: float = 7.0
    erlang_k: int = 3
    erlang_rate_per_day: float = 1.0 / 7.0

    @property
    def sigma_per_day(self) -> float:
        return self.erlang_rate_per_day / self.erlang_k

    @property
    def beta_per_day(self) -> float:
        return effective_beta(self.r0, self.sigma_per_day)

    @property
    def mean_infectious_days(self) -> float:
        return self.erlang_k / self.erlang_rate_per_day


@dataclass(frozen=True)
class PopulationSpec:
    n_total: int
    alpha: float = 0.2

    @property
    def n_g(self) -> int:
        return round_half_up(self.alpha * self.n_total)

    @property
    def n_other(self) -> int:
        return self.n_total - self.n_g

    @property
    def g_share(self) -> float:
        """Realised fraction n_g / N after rounding."""
        return self.n_g / self.n_total


@dataclass(frozen=True)
class Phase:
    """One intervention phase.

    Exactly one of ``trigger_s_fraction`` (fires on the first day with
    S/N <= x) or ``trigger_day_offset`` (fires d days after the previous
    phase started) is set.
    """

    r0_prime: float
    c: float = 1.0
    trigger_s_fraction: Optional[float] = None
    trigger_day_offset: Optional[int] = None


@dataclass(frozen=True)
class InterventionPolicy:
    phases: tuple[Phase, ...] = ()

    def settings(self, index: int, disease: DiseaseParams) -> tuple[float, float]:
        """(R0, c) in force while phase ``index`` is active; 0 is the baseline."""
        if index == 0:
            return disease.r0, 1.0
        ph = self.phases[index - 1]
        return ph.r0_prime, ph.c


@dataclass(frozen=True)
class BurdenSpec:
    age_table: Optional[tuple[tuple[str, float, float], ...]] = None
    target_avg_mortality: float = MORTALITY_PRESETS["uk"]
    g_bands: tuple[str, ...] = ("70-79", "80+")
    beds_per_death: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    population: PopulationSpec
    disease: DiseaseParams = field(default_factory=DiseaseParams)
    policy: InterventionPolicy = field(default_factory=InterventionPolicy)
    seed_infected_fraction: float = 0.001
    plot_threshold_fraction: float = 0.005
    t_max_days: int = 500
    base_seed: int = 0
    replicates: int = 1
    burden: Optional[BurdenSpec] = None

    @property
    def n_total(self) -> int:
        return self.population.n_total


_SCHEMA: dict[str, set[str]] = {
    "disease": {"r0", "incubation_mean_days", "erlang_k", "erlang_rate_per_day"},
    "population": {"n_total", "alpha"},
    "policy": {"phases"},
    "run": {"seed", "replicates", "t_max_days", "seed_infected_fraction", "plot_threshold_fraction"},
    "burden": {"age_table", "target_avg_mortality", "g_bands", "beds_per_death"},
}
_PHASE_KEYS = {"trigger_s_fraction", "trigger_day_offset", "r0_prime", "c"}
_BAND_KEYS = {"label", "size_millions", "death_prob"}


class _Collector:
    def __init__(self, lines: Optional[Mapping[str, int]] = None):
        self.violations: list[Violation] = []
        self.lines = lines or {}

    def add(self, path: str, message: str, kind: str = "invalid") -> None:
        self.violations.append(Violation(path, message, self.lines.get(path), kind))

    def unknown(self, path: str) -> None:
        self.add(path, "unknown key", "unknown_key")

    def number(self, section: Mapping, key: str, path: str, default, *, integer=False):
        if key not in section:
            if default is _REQUIRED:
                self.add(path, "required field is missing", "missing")
            return default
        v = section[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(path, f"expected a number, got {v!r}")
            return _INVALID
        if integer and int(v) != v:
            self.add(path, f"expected an integer, got {v!r}")
            return _INVALID
        if not math.isfinite(v):
            self.add(path, f"must be finite, got {v!r}")
            return _INVALID
        return int(v) if integer else float(v)


_REQUIRED = object()
_INVALID = object()


def _ok(*values) -> bool:
    return all(v is not _INVALID and v is not _REQUIRED for v in values)


def validate_scenario(raw: Mapping[str, Any], lines: Optional[Mapping[str, int]] = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a nested mapping.

    Args:
        raw: mapping with the sections ``disease``, ``population``,
            ``policy``, ``run`` and optionally ``burden``.
        lines: optional map from dotted field path to source line, used to
            annotate violations.

    Raises:
        ConfigValidationError: with one :class:`Violation` per problem found
            (:class:`UnknownKeyError` if any key was not recognised).
    """
    col = _Collector(lines)
    if not isinstance(raw, Mapping):
        raise ConfigValidationError([Violation("<root>", "config must be a mapping")])
    for key in raw:
        if key not in _SCHEMA:
            col.unknown(str(key))
    sections = {}
    for name, allowed in _SCHEMA.items():
        sec = raw.get(name, {})
        if sec is None:
            sec = {}
        if not isinstance(sec, Mapping):
            col.add(name, "expected a mapping")
            sec = {}
        for key in sec:
            if key not in allowed:
                col.unknown(f"{name}.{key}")
        sections[name] = sec

    d = sections["disease"]
    dd = DiseaseParams()
    r0 = col.number(d, "r0", "disease.r0", dd.r0)
    inc = col.number(d, "incubation_mean_days", "disease.incubation_mean_days", dd.incubation_mean_days)
    k = col.number(d, "erlang_k", "disease.erlang_k", dd.erlang_k, integer=True)
    rate = col.number(d, "erlang_rate_per_day", "disease.erlang_rate_per_day", dd.erlang_rate_per_day)
    if _ok(r0) and r0 < 0:
        col.add("disease.r0", "must be >= 0")
    if _ok(inc) and inc < 0:
        col.add("disease.incubation_mean_days", "must be >= 0")
    if _ok(k) and k < 1:
        col.add("disease.erlang_k", "must be a positive integer")
    if _ok(rate) and rate <= 0:
        col.add("disease.erlang_rate_per_day", "must be > 0")

    p = sections["population"]
    n_total = col.number(p, "n_total", "population.n_total", _REQUIRED, integer=True)
    alpha = col.number(p, "alpha", "population.alpha", 0.2)
    if _ok(n_total) and n_total < 2:
        col.add("population.n_total", "must be an integer >= 2")
    if _ok(alpha) and not 0 < alpha < 1:
        col.add("population.alpha", "alpha must lie in (0,1)")
    if _ok(n_total, alpha) and n_total >= 2 and 0 < alpha < 1:
        n_g = round_half_up(alpha * n_total)
        if not 0 < n_g < n_total:
            col.add("population.alpha", f"alpha * n_total rounds to an empty group (n_g={n_g})")

    phases = _validate_phases(sections["policy"].get("phases", []) or [], col)

    r = sections["run"]
    seed = col.number(r, "seed", "run.seed", 0, integer=True)
    reps = col.number(r, "replicates", "run.replicates", 1, integer=True)
    t_max = col.number(r, "t_max_days", "run.t_max_days", 500, integer=True)
    f_seed = col.number(r, "seed_infected_fraction", "run.seed_infected_fraction", 0.001)
    f_plot = col.number(r, "plot_threshold_fraction", "run.plot_threshold_fraction", 0.005)
    if _ok(seed) and not 0 <= seed < 2**64:
        col.add("run.seed", "must be a 64-bit unsigned integer")
    if _ok(reps) and reps < 1:
        col.add("run.replicates", "must be >= 1")
    if _ok(t_max) and t_max < 1:
        col.add("run.t_max_days", "must be >= 1")
    for path, v in (("run.seed_infected_fraction", f_seed), ("run.plot_threshold_fraction", f_plot)):
        if _ok(v) and not 0 < v < 1:
            col.add(path, "fraction must lie in (0,1)")
    if _ok(f_seed, f_plot) and not f_seed < f_plot:
        col.add("run.seed_infected_fraction", "must be smaller than run.plot_threshold_fraction")

    burden = _validate_burden(sections["burden"], col) if "burden" in raw else None

    raise_for(col.violations)
    return ScenarioConfig(
        population=PopulationSpec(n_total=n_total, alpha=alpha),
        disease=DiseaseParams(r0=r0, incubation_mean_days=inc, erlang_k=k, erlang_rate_per_day=rate),
        policy=InterventionPolicy(tuple(phases)),
        seed_infected_fraction=f_seed,
        plot_threshold_fraction=f_plot,
        t_max_days=t_max,
        base_seed=seed,
        replicates=reps,
        burden=burden,
    )


def _validate_phases(raw_phases, col: _Collector) -> list[Phase]:
    if not isinstance(raw_phases, Sequence) or isinstance(raw_phases, (str, bytes)):
        col.add("policy.phases", "expected a list of phases")
        return []
    out = []
    for i, ph in enumerate(raw_phases):
        base = f"policy.phases.{i}"
        if not isinstance(ph, Mapping):
            col.add(base, "expected a mapping")
            continue
        for key in ph:
            if key not in _PHASE_KEYS:
                col.unknown(f"{base}.{key}")
        r0p = col.number(ph, "r0_prime", f"{base}.r0_prime", _REQUIRED)
        c = col.number(ph, "c", f"{base}.c", 1.0)
        x = col.number(ph, "trigger_s_fraction", f"{base}.trigger_s_fraction", None)
        off = col.number(ph, "trigger_day_offset", f"{base}.trigger_day_offset", None, integer=True)
        if _ok(r0p) and r0p <= 0:
            col.add(f"{base}.r0_prime", "must be > 0")
        if _ok(c) and not 0 < c <= 1:
            col.add(f"{base}.c", "must lie in (0,1]")
        if (x is None) == (off is None):
            col.add(base, "exactly one of trigger_s_fraction or trigger_day_offset is required")
        if _ok(x) and x is not None and not 0 < x < 1:
            col.add(f"{base}.trigger_s_fraction", "must lie in (0,1)")
        if _ok(off) and off is not None and off < 0:
            col.add(f"{base}.trigger_day_offset", "must be >= 0")
        if off is not None and i == 0:
            col.add(f"{base}.trigger_day_offset", "the first phase needs a prevalence trigger")
        if _ok(r0p, c, x, off):
            out.append(Phase(r0_prime=r0p, c=c, trigger_s_fraction=x, trigger_day_offset=off))
    return out


def _validate_burden(b: Mapping, col: _Collector) -> BurdenSpec:
    defaults = BurdenSpec()
    table = None
    if "age_table" in b:
        raw_table = b["age_table"]
        if raw_table == "uk":
            table = None
        elif isinstance(raw_table, Sequence) and not isinstance(raw_table, str):
            rows = []
            for i, band in enumerate(raw_table):
                base = f"burden.age_table.{i}"
                if not isinstance(band, Mapping):
                    col.add(base, "expected a mapping")
                    continue
                for key in band:
                    if key not in _BAND_KEYS:
                        col.unknown(f"{base}.{key}")
                label = band.get("label")
                if not isinstance(label, str):
                    col.add(f"{base}.label", "expected a string label")
                size = col.number(band, "size_millions", f"{base}.size_millions", _REQUIRED)
                prob = col.number(band, "death_prob", f"{base}.death_prob", _REQUIRED)
                if _ok(size) and size <= 0:
                    col.add(f"{base}.size_millions", "must be > 0")
                if _ok(prob) and not 0 <= prob <= 1:
                    col.add(f"{base}.death_prob", "must lie in [0,1]")
                if isinstance(label, str) and _ok(size, prob):
                    rows.append((label, size, prob))
            table = tuple(rows)
        else:
            col.add("burden.age_table", "expected 'uk' or a list of bands")
    target = b.get("target_avg_mortality", defaults.target_avg_mortality)
    if isinstance(target, str):
        if target not in MORTALITY_PRESETS:
            col.add("burden.target_avg_mortality", f"unknown preset {target!r}")
            target = defaults.target_avg_mortality
        else:
            target = MORTALITY_PRESETS[target]
    else:
        target = col.number(b, "target_avg_mortality", "burden.target_avg_mortality", defaults.target_avg_mortality)
        if _ok(target) and not 0 < target < 1:
            col.add("burden.target_avg_mortality", "must lie in (0,1)")
    g_bands = b.get("g_bands", list(defaults.g_bands))
    if not isinstance(g_bands, Sequence) or isinstance(g_bands, str) or not all(isinstance(s, str) for s in g_bands):
        col.add("burden.g_bands", "expected a list of band labels")
        g_bands = list(defaults.g_bands)
    beds = col.number(b, "beds_per_death", "burden.beds_per_death", defaults.beds_per_death)
    if _ok(beds) and beds < 0:
        col.add("burden.beds_per_death", "must be >= 0")
    return BurdenSpec(table, target if _ok(target) else defaults.target_avg_mortality,
                      tuple(g_bands), beds if _ok(beds) else 1.0)


def scenario_to_raw(cfg: ScenarioConfig) -> dict:
    """Inverse of :func:`validate_scenario` (derived fields are not stored)."""
    phases = []
    for ph in cfg.policy.phases:
        d = {"r0_prime": ph.r0_prime, "c": ph.c}
        if ph.trigger_s_fraction is not None:
            d["trigger_s_fraction"] = ph.trigger_s_fraction
        else:
            d["trigger_day_offset"] = ph.trigger_day_offset
        phases.append(d)
    raw = {
        "disease": asdict(cfg.disease),
        "population": asdict(cfg.population),
        "policy": {"phases": phases},
        "run": {
            "seed": cfg.base_seed,
            "replicates": cfg.replicates,
            "t_max_days": cfg.t_max_days,
            "seed_infected_fraction": cfg.seed_infected_fraction,
            "plot_threshold_fraction": cfg.plot_threshold_fraction,
        },
    }
    if cfg.burden is not None:
        b = cfg.burden
        raw["burden"] = {
            "age_table": "uk" if b.age_table is None else [
                {"label": lab, "size_millions": s, "death_prob": p} for lab, s, p in b.age_table
            ],
            "target_avg_mortality": b.target_avg_mortality,
            "g_bands": list(b.g_bands),
            "beds_per_death": b.beds_per_death,
        }
    return raw
