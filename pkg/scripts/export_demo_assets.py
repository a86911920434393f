"""Create a reviewer-friendly demo bundle: a small scaling study, a radius sweep and the brief."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

CURRENT_DIR = Path(__file__).resolve().parent
PROJECT_ROOT = CURRENT_DIR.parent
if str(PROJECT_ROOT) not in sys.path:  # pragma: no cover - runtime convenience
    sys.path.append(str(PROJECT_ROOT))

from src.config import ASYMPTOTIC_EPSILON, StudyConfig  # type: ignore
from src.experiments import run_radius_sweep, run_scaling  # type: ignore
from src.persistence import RunRecord, atomic_write_text, persist_results  # type: ignore
from src.pointsets import load_pointset  # type: ignore
from src.report import generate_brief  # type: ignore

DESIGN_NAMES = ("tetrahedron", "octahedron", "cube", "icosahedron", "dodecahedron")


def demo_config(seed: int = 42) -> StudyConfig:
    return StudyConfig(
        family="sphere",
        n=2,
        generator="fibonacci",
        n_grid=(64, 128, 256, 512),
        radii=(0.8, 1.6),
        seeds=1,
        seed=seed,
        name="fibonacci_two_radius_demo",
    )


def export_demo_assets(base_dir: Path | None = None, seed: int = 42) -> dict:
    base = Path(base_dir) if base_dir is not None else PROJECT_ROOT
    demo_dir = base / "docs" / "demo"
    design_dir = PROJECT_ROOT / "data" / "designs"

    config = demo_config(seed)
    study = run_scaling(config)
    design_paths = [design_dir / f"{name}.txt" for name in DESIGN_NAMES]
    designs = [load_pointset(path, fmt="tdesign") for path in design_paths]
    r_grid = np.linspace(0.1, math.pi - ASYMPTOTIC_EPSILON, 21)
    sweep = run_radius_sweep(designs, r_grid, labels=DESIGN_NAMES)

    record = RunRecord.create(["scripts/export_demo_assets.py", f"--seed={seed}"], config.to_dict(), inputs=design_paths)
    brief = generate_brief(demo_dir / "study_brief.md", "Demo bundle: Fibonacci scaling and design sweep", study=study, sweep=sweep)
    written = persist_results(
        record,
        {"scaling": study.to_summary_dict(), "sweep_bounded": sweep.bounded},
        demo_dir,
        name="demo",
        tables={
            "scaling_results": study.results,
            "scaling_summary": study.summary,
            "sweep": sweep.table,
            "sweep_summary": sweep.summary,
        },
        extra_outputs=[brief],
    )

    atomic_write_text(
        demo_dir / "README_demo.md",
        "# Demo bundle\n\n"
        "Ready-to-share outputs of a desk-scale run.\n\n"
        "## Files\n"
        "- study_brief.md: fitted exponents, bound constants and the sweep verdict.\n"
        "- scaling_results.csv / scaling_summary.csv: per-N values for Fibonacci points on S^2, radii 0.8 and 1.6.\n"
        "- sweep.csv / sweep_summary.csv: discrepancy over 21 radii for the bundled spherical designs.\n"
        "- demo.json (+ demo.json.run.json): machine summary and its run record.\n\n"
        "## Regenerate\n"
        "Run `python scripts/export_demo_assets.py`.\n",
    )
    return written


def main() -> None:
    parser = argparse.ArgumentParser(description="Export reviewer-friendly demo assets.")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    export_demo_assets(seed=args.seed)


if __name__ == "__main__":
    main()
