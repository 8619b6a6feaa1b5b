"""SVG line charts in the conventional epidemic-curve palette.

Baseline (no intervention) runs are drawn solid: red S/N, blue R/N and
green I/N.  Intervention runs add dashed blue R/N and dashed green I/N plus
the group curves: black R_G/n, orange S_G/n and purple I_G/n.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import Trajectory

__all__ = ["Curve", "scenario_curves", "prevalence_bundle", "render_svg"]


@dataclass(frozen=True)
class Curve:
    label: str
    y: np.ndarray
    color: str
    dashed: bool = False
    width: float = 1.5
    alpha: float = 1.0


def scenario_curves(baseline: Optional[Trajectory] = None, intervention: Optional[Trajectory] = None) -> list[Curve]:
    curves = []
    if baseline is not None:
        curves += [
            Curve("S(t)/N", baseline.S / baseline.n_total, "red"),
            Curve("R(t)/N", baseline.R / baseline.n_total, "blue"),
            Curve("I(t)/N", baseline.prevalence(), "green"),
        ]
    if intervention is not None:
        t = intervention
        curves += [
            Curve("R(t)/N, intervention", t.R / t.n_total, "blue", dashed=True),
            Curve("R_G(t)/n", t["R_G"] / t.n_g, "black"),
            Curve("S_G(t)/n", t["S_G"] / t.n_g, "orange"),
            Curve("I(t)/N, intervention", t.prevalence(), "green", dashed=True),
            Curve("I_G(t)/n", t.prevalence_g(), "purple"),
        ]
    return curves


def prevalence_bundle(trajectories: Sequence[Trajectory], color: str = "green") -> list[Curve]:
    """Thin overlaid I/N curves, e.g. for a sensitivity ensemble."""
    return [Curve("I(t)/N" if i == 0 else "", t.prevalence(), color, width=0.6, alpha=0.4)
            for i, t in enumerate(trajectories)]


def render_svg(curves: Sequence[Curve], path, title: str = "") -> Path:
    if not curves or all(len(c.y) == 0 for c in curves):
        raise ValueError("nothing to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "stochepi", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for c in curves:
            ax.plot(np.arange(len(c.y)), c.y, color=c.color, linestyle="--" if c.dashed else "-",
                    linewidth=c.width, alpha=c.alpha, label=c.label or None)
        ax.set_xlabel("days")
        ax.set_ylabel("fraction")
        ax.set_ylim(0, 1)
        if title:
            ax.set_title(title)
        if any(c.label for c in curves):
            ax.legend(loc="center right", fontsize="small")
        path = Path(path)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
