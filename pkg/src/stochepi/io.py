"""Scenario files (YAML) and CSV output.

A config file is a YAML mapping with the sections ``disease``,
``population``, ``policy``, ``run`` and ``burden``.  Two optional top-level
sections change what the file describes:

``subpopulations``
    a list of ``{name, size, start_offset_days, overrides}`` entries; the
    file is then a :class:`~stochepi.composer.SubpopulationPlan`.
``sweep``
    ``{replicates, axes: [{path, values}, ...]}``; the file is then a
    :class:`~stochepi.ensemble.SweepGrid`.
"""
from __future__ import annotations

import copy
import csv
import math
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import yaml

from .burden import BurdenSeries
from .composer import Subpopulation, SubpopulationPlan, set_path
from .engine import Trajectory
from .ensemble import Ensemble, SweepGrid
from .model import ConfigError, ScenarioConfig, Violation, raise_for, validate_scenario

__all__ = [
    "ConfigSyntaxError",
    "CSV_COLUMNS",
    "load_raw",
    "apply_overrides",
    "parse_config",
    "parse_config_text",
    "write_csv",
    "read_csv",
    "write_rows",
]

CSV_COLUMNS = ("day", "S", "E", "I", "R", "S_G", "E_G", "I_G", "R_G", "new_inf_G", "new_inf_other",
               "ED_G", "ED_other", "ED_total", "phase")
BURDEN_COLUMNS = ("ED_G", "ED_other", "ED_total")


class ConfigSyntaxError(ConfigError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"syntax error{where}: {message}")


def _line_map(node, prefix="", out=None) -> dict[str, int]:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _line_map(value, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}.{i}"
            out[path] = item.start_mark.line + 1
            _line_map(item, path, out)
    return out


def load_raw(text: str) -> tuple[dict, dict[str, int]]:
    """Parse YAML text into a mapping plus a field-path to line-number map."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ConfigSyntaxError(problem, mark.line + 1, mark.column + 1) from exc
        raise ConfigSyntaxError(problem) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigSyntaxError("top level of a config file must be a mapping")
    return raw, _line_map(node) if node is not None else {}


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    """Apply ``key=value`` strings; values are parsed as YAML scalars/lists."""
    raw = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigSyntaxError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigSyntaxError(f"cannot parse override value {text!r}") from exc
        try:
            set_path(raw, key.strip(), value)
        except (ValueError, IndexError, TypeError) as exc:
            raise ConfigSyntaxError(f"cannot apply override {item!r}: {exc}") from exc
    return raw


def _parse_plan(base: ScenarioConfig, raw_subs, lines) -> SubpopulationPlan:
    problems = []
    subs = []
    if not isinstance(raw_subs, list):
        raise_for([Violation("subpopulations", "expected a list", lines.get("subpopulations"))])
    for i, entry in enumerate(raw_subs):
        path = f"subpopulations.{i}"
        if not isinstance(entry, dict):
            problems.append(Violation(path, "expected a mapping", lines.get(path)))
            continue
        for key in entry:
            if key not in ("name", "size", "start_offset_days", "overrides"):
                problems.append(Violation(f"{path}.{key}", "unknown key", lines.get(f"{path}.{key}"), "unknown_key"))
        size = entry.get("size")
        if isinstance(size, bool) or not isinstance(size, int) or size <= 0:
            problems.append(Violation(f"{path}.size", "expected a positive integer", lines.get(f"{path}.size")))
            continue
        offset = entry.get("start_offset_days", 0)
        if isinstance(offset, bool) or not isinstance(offset, int) or offset < 0:
            problems.append(Violation(f"{path}.start_offset_days", "expected a non-negative integer",
                                      lines.get(f"{path}.start_offset_days")))
            continue
        overrides = entry.get("overrides") or {}
        if not isinstance(overrides, dict):
            problems.append(Violation(f"{path}.overrides", "expected a mapping of dotted paths", lines.get(f"{path}.overrides")))
            continue
        subs.append(Subpopulation(str(entry.get("name", f"sub{i}")), size, offset, overrides))
    raise_for(problems)
    plan = SubpopulationPlan(base, tuple(subs))
    plan.scenarios()
    return plan


def _parse_sweep(base: ScenarioConfig, raw_sweep, lines) -> SweepGrid:
    problems = []
    if not isinstance(raw_sweep, dict):
        raise_for([Violation("sweep", "expected a mapping", lines.get("sweep"))])
    for key in raw_sweep:
        if key not in ("axes", "replicates"):
            problems.append(Violation(f"sweep.{key}", "unknown key", lines.get(f"sweep.{key}"), "unknown_key"))
    reps = raw_sweep.get("replicates", base.replicates)
    if isinstance(reps, bool) or not isinstance(reps, int) or reps < 1:
        problems.append(Violation("sweep.replicates", "expected a positive integer", lines.get("sweep.replicates")))
    axes = []
    for i, ax in enumerate(raw_sweep.get("axes") or []):
        path = f"sweep.axes.{i}"
        if not isinstance(ax, dict) or not isinstance(ax.get("path"), str) or not isinstance(ax.get("values"), list) \
                or not ax["values"]:
            problems.append(Violation(path, "expected {path: <dotted key>, values: [..]}", lines.get(path)))
            continue
        axes.append((ax["path"], tuple(ax["values"])))
    if not axes and not problems:
        problems.append(Violation("sweep.axes", "sweep needs at least one axis", lines.get("sweep")))
    raise_for(problems)
    grid = SweepGrid(base, tuple(axes), reps)
    grid.cells()
    return grid


def parse_config_text(text: str, overrides: Iterable[str] = ()) -> Union[ScenarioConfig, SubpopulationPlan, SweepGrid]:
    raw, lines = load_raw(text)
    raw = apply_overrides(raw, overrides)
    subs = raw.pop("subpopulations", None)
    sweep = raw.pop("sweep", None)
    if subs is not None and sweep is not None:
        raise_for([Violation("sweep", "a file cannot be both a subpopulation plan and a sweep", lines.get("sweep"))])
    if subs is not None:
        pop = raw.setdefault("population", {}) or {}
        raw["population"] = pop
        declared = pop.get("n_total")
        total = sum(s.get("size", 0) for s in subs if isinstance(s, dict) and isinstance(s.get("size"), int))
        if declared is not None and declared != total:
            raise_for([Violation("population.n_total", f"must equal the sum of subpopulation sizes ({total})",
                                 lines.get("population.n_total"))])
        pop["n_total"] = max(total, 2)
        return _parse_plan(validate_scenario(raw, lines), subs, lines)
    base = validate_scenario(raw, lines)
    if sweep is not None:
        return _parse_sweep(base, sweep, lines)
    return base


def parse_config(path, overrides: Iterable[str] = ()):
    """Read and validate a config file.

    Returns a :class:`ScenarioConfig`, :class:`SubpopulationPlan` or
    :class:`SweepGrid` depending on the file's top-level sections.

    Raises:
        ConfigSyntaxError: unreadable YAML (with line and column).
        UnknownKeyError: a key outside the schema.
        ConfigValidationError: any other constraint violation.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text, overrides)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return f"{v:.6f}"


def write_csv(obj, path, *, normalized: bool = False, burden: Optional[BurdenSeries] = None) -> Path:
    """Write a trajectory (or an ensemble's mean) in the fixed CSV schema.

    Burden columns are included only when ``burden`` is given.  With
    ``normalized`` every compartment column is divided by its group size
    (totals by N) and rendered with 6 decimals.  Real-valued trajectories
    from the mean-field oracle start with a ``# deterministic=true`` line.
    """
    traj = obj.mean if isinstance(obj, Ensemble) else obj
    if not isinstance(traj, Trajectory):
        raise TypeError(f"cannot write {type(obj).__name__} as a trajectory CSV")
    cols = [c for c in CSV_COLUMNS if burden is not None or c not in BURDEN_COLUMNS]
    n, n_g, n_o = traj.n_total, traj.n_g, traj.n_other
    series = {
        "day": traj.days,
        **{c: traj[c] for c in ("S", "E", "I", "R", "S_G", "E_G", "I_G", "R_G", "new_inf_G", "new_inf_other", "phase")},
    }
    if normalized:
        for c in ("S", "E", "I", "R"):
            series[c] = series[c] / n
        for c in ("S_G", "E_G", "I_G", "R_G", "new_inf_G"):
            series[c] = series[c] / n_g
        series["new_inf_other"] = series["new_inf_other"] / n_o
    if burden is not None:
        if len(burden.ed_g) != len(traj):
            raise ValueError("burden series length does not match the trajectory")
        series.update(ED_G=burden.ed_g, ED_other=burden.ed_other, ED_total=burden.ed_total)
    frac = {"S", "E", "I", "R", "S_G", "E_G", "I_G", "R_G", "new_inf_G", "new_inf_other"} if normalized else set()
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            if traj.deterministic:
                fh.write("# deterministic=true\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for i in range(len(traj)):
                w.writerow([f"{float(series[c][i]):.6f}" if c in frac else _fmt(series[c][i]) for c in cols])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_csv(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Columns and ``# key=value`` metadata of a file written by :func:`write_csv`."""
    meta: dict[str, str] = {}
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = list(reader)
    cols = {}
    for j, name in enumerate(header):
        values = [r[j] for r in rows]
        if all(_is_int(v) for v in values):
            cols[name] = np.array([int(v) for v in values], dtype=np.int64)
        else:
            cols[name] = np.array([float(v) for v in values])
    return cols, meta


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def write_rows(rows: list[dict], path) -> Path:
    """Plain CSV of summary rows (sweep cells, sensitivity runs)."""
    path = Path(path)
    if not rows:
        path.write_text("")
        return path
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (format(float(v), ".10g") if isinstance(v, (float, np.floating)) and math.isfinite(v) else v)
                        for k, v in row.items()})
    return path
