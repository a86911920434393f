"""Markdown briefing generator for scaling studies, radius sweeps and bad-radius scans."""

from __future__ import annotations

import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
from jinja2 import Environment, FileSystemLoader, select_autoescape

from .experiments import RadiusSweep, ScalingStudy, sweep_bounded
from .persistence import atomic_write_text

BASE_DIR = Path(__file__).resolve().parents[1]
TEMPLATE_NAME = "study_brief.md.j2"


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{value:.6g}"


def _scaling_context(study: ScalingStudy) -> Dict[str, Any]:
    rows: List[Dict[str, str]] = []
    for row in study.summary.itertuples():
        rows.append(
            {
                "N": str(int(row.N)),
                "mean": _fmt(float(row.mean)),
                "sem": _fmt(float(row.sem)),
                "lower_bound": _fmt(float(row.lower_bound)),
                "bound_constant": _fmt(float(row.bound_constant)),
            }
        )
    worst_tail = float(study.results["tail_bound"].max())
    worst_relative = float((study.results["tail_bound"] / study.results["value"].clip(lower=1e-300)).max())
    mode = "two-radius" if study.config.two_radius else "single-radius"
    return {
        "space": study.space.label,
        "generator": study.config.generator,
        "mode": mode,
        "radii": ", ".join(f"{r:.6g}" for r in study.config.radii),
        "slope": _fmt(study.fit.slope),
        "slope_stderr": _fmt(study.fit.slope_stderr),
        "slope_upper": _fmt(study.fit_upper.slope),
        "slope_upper_stderr": _fmt(study.fit_upper.slope_stderr),
        "target_slope": _fmt(study.target_slope),
        "bound_min": _fmt(study.bound.minimum),
        "bound_trend": _fmt(study.bound.trend_slope()),
        "worst_tail": _fmt(worst_tail),
        "worst_relative_tail": _fmt(worst_relative),
        "rows": rows,
        "notes": list(study.notes),
    }


def _sweep_context(sweep: RadiusSweep, factor: float) -> Dict[str, Any]:
    rows = [
        {
            "label": str(row.label),
            "N": str(int(row.N)),
            "sup": _fmt(float(row.sup)),
            "argsup_r": _fmt(float(row.argsup_r)),
            "scaled_sup": _fmt(float(row.scaled_sup)),
        }
        for row in sweep.summary.itertuples()
    ]
    return {
        "rows": rows,
        "factor": _fmt(factor),
        "median": _fmt(float(sweep.summary["scaled_sup"].median())),
        "bounded": sweep_bounded(sweep.summary, factor),
    }


def _scan_context(scan: pd.DataFrame, threshold: float) -> Dict[str, Any]:
    flagged = scan[scan["flagged"]]
    return {
        "count": len(scan),
        "threshold": _fmt(threshold),
        "flagged": [
            {"r": _fmt(float(row.r)), "score": _fmt(float(row.score)), "argmin_m": str(int(row.argmin_m))}
            for row in flagged.itertuples()
        ],
        "lowest": _fmt(float(scan["score"].min())) if len(scan) else "n/a",
    }


def render_brief(
    title: str,
    study: ScalingStudy | None = None,
    sweep: RadiusSweep | None = None,
    scan: pd.DataFrame | None = None,
    scan_threshold: float = 1e-3,
    sweep_factor: float = 3.0,
    template_path: str | Path | None = None,
) -> str:
    """Render the brief text; sections without data are left out."""

    template_file = Path(template_path) if template_path is not None else BASE_DIR / "templates" / TEMPLATE_NAME
    env = Environment(
        loader=FileSystemLoader(str(template_file.parent)),
        autoescape=select_autoescape(["html", "xml"]),
        trim_blocks=True,
        lstrip_blocks=True,
    )
    template = env.get_template(template_file.name)
    context = {
        "title": title,
        "generated_ts": datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M UTC"),
        "scaling": _scaling_context(study) if study is not None else None,
        "sweep": _sweep_context(sweep, sweep_factor) if sweep is not None else None,
        "scan": _scan_context(scan, scan_threshold) if scan is not None else None,
    }
    return template.render(**context)


def generate_brief(output_path: str | Path, title: str, **sections: Any) -> str:
    """Write the Markdown brief next to the JSON/CSV outputs and return its path."""

    return atomic_write_text(output_path, render_brief(title, **sections))


__all__ = ["render_brief", "generate_brief", "TEMPLATE_NAME"]
