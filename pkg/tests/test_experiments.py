"""Scaling studies, exponent fits, radius sweeps, bad-radius scans and the brief."""
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.config import StudyConfig
from src.errors import DomainError, SpaceError
from src.experiments import (
    BoundConstant,
    bootstrap_slopes,
    cell_seed,
    loglog_fit,
    run_bad_radius_scan,
    run_radius_sweep,
    run_scaling,
    sweep_bounded,
    target_exponent,
    truncation_degree,
)
from src.persistence import ResumeCache, digest_payload
from src.pointsets import load_pointset
from src.report import generate_brief, render_brief
from src.spaces import SpaceKind
from src.specfun import jacobi_zero

DESIGN_DIR = Path(__file__).resolve().parents[1] / "data" / "designs"
DESIGNS = ["tetrahedron", "octahedron", "cube", "icosahedron", "dodecahedron"]


def small_uniform_config(**overrides):
    settings = dict(
        family="sphere",
        n=2,
        generator="uniform",
        n_grid=(16, 32, 64),
        radii=(1.0,),
        seeds=3,
        seed=7,
        max_degree=256,
        name="small",
    )
    settings.update(overrides)
    return StudyConfig(**settings)


def test_loglog_fit_recovers_power_law():
    n = np.array([10, 20, 40, 80])
    fit = loglog_fit(n, 3.0 * n**-1.5)
    assert fit.slope == pytest.approx(-1.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-10)
    pair = loglog_fit([10, 100], [1.0, 0.01])
    assert pair.slope == pytest.approx(-2.0)
    assert math.isnan(pair.slope_stderr)
    with pytest.raises(DomainError):
        loglog_fit([10], [1.0])


def test_targets_degrees_and_seeds():
    assert target_exponent(2, True) == pytest.approx(-1.5)
    assert target_exponent(2, False) == pytest.approx(-2.5)
    assert truncation_degree(100, 2, 32.0, 4096) == 320
    assert truncation_degree(10_000, 2, 32.0, 1000) == 1000
    assert cell_seed(42, 64, 0) == cell_seed(42, 64, 0)
    assert len({cell_seed(42, n, rep) for n in (16, 32) for rep in range(4)}) == 8


def test_bound_constant_trend_is_flat_for_exact_rate():
    n_grid = (100, 200, 400)
    constant = BoundConstant(n_grid, tuple(2.0 for _ in n_grid))
    assert constant.minimum == 2.0
    assert constant.trend_slope() == pytest.approx(0.0, abs=1e-12)


def test_uniform_scaling_study_structure():
    study = run_scaling(small_uniform_config())
    results = study.results
    assert len(results) == 9
    assert {"N", "seed", "value", "tail_bound", "M_used", "lower_bound", "value_r0"} <= set(results.columns)
    assert np.all(results["value"] > 0)
    assert np.all(results["lower_bound"] <= results["value"] + 1e-15)
    assert list(study.summary["N"]) == [16, 32, 64]
    assert list(study.summary["count"]) == [3, 3, 3]
    assert list(results.groupby("N")["M_used"].first()) == [128, 182, 256]
    assert -1.8 <= study.fit.slope <= -0.4
    assert study.target_slope == pytest.approx(-2.5)
    summary = study.to_summary_dict()
    assert summary["space"] == "S^2"
    assert summary["fit"]["n_points"] == 3


def test_scaling_results_do_not_depend_on_threads():
    config = small_uniform_config(seeds=2)
    serial = run_scaling(config, threads=1)
    pooled = run_scaling(config, threads=3)
    pd.testing.assert_frame_equal(serial.results, pooled.results)


def test_resume_cache_skips_finished_cells(tmp_path):
    config = small_uniform_config(seeds=2)
    digest = digest_payload(config.to_dict())
    first_cache = ResumeCache(tmp_path, digest)
    first = run_scaling(config, cache=first_cache)
    assert first_cache.misses == 6 and first_cache.hits == 0

    second_cache = ResumeCache(tmp_path, digest)
    second = run_scaling(config, cache=second_cache)
    assert second_cache.hits == 6 and second_cache.misses == 0
    pd.testing.assert_frame_equal(first.results, second.results)


def test_design_study_uses_one_file_per_count():
    names = ["tetrahedron", "octahedron", "cube", "icosahedron"]
    config = StudyConfig(
        family="sphere",
        n=2,
        generator="tdesign",
        n_grid=(4, 6, 8, 12),
        radii=(1.0,),
        seeds=1,
        design_paths=tuple(str(DESIGN_DIR / f"{name}.txt") for name in names),
    )
    study = run_scaling(config)
    assert list(study.results["N"]) == [4, 6, 8, 12]
    assert list(study.summary["sem"]) == [0.0, 0.0, 0.0, 0.0]

    wrong = StudyConfig(**{**config.to_dict(), "n_grid": (4, 6, 9, 12)})
    with pytest.raises(DomainError):
        run_scaling(wrong)
    short = StudyConfig(**{**config.to_dict(), "design_paths": tuple(config.design_paths[:2])})
    with pytest.raises(DomainError):
        run_scaling(short)


def test_matrix_generator_cannot_drive_a_study():
    with pytest.raises(SpaceError):
        run_scaling(small_uniform_config(generator="matrix"))


def test_one_mod_four_dimension_gets_a_note():
    study = run_scaling(small_uniform_config(n=5, n_grid=(8, 16, 32), seeds=1, max_degree=32))
    assert study.notes
    assert set(study.results["M_used"]) == {32}


def test_bootstrap_slopes_are_reproducible():
    study = run_scaling(small_uniform_config())
    slopes = bootstrap_slopes(study, n_boot=50, seed=3)
    assert slopes.shape == (50,)
    assert np.all(np.isfinite(slopes))
    np.testing.assert_array_equal(slopes, bootstrap_slopes(study, n_boot=50, seed=3))


def test_study_config_validation(tmp_path):
    with pytest.raises(ValueError):
        small_uniform_config(n_grid=(16, 32)).validate()
    with pytest.raises(ValueError):
        small_uniform_config(n_grid=(16, 64, 32)).validate()
    with pytest.raises(ValueError):
        small_uniform_config(radii=(2.0, 2.5)).validate()
    with pytest.raises(ValueError):
        StudyConfig.from_dict({**small_uniform_config().to_dict(), "colour": "blue"})
    path = tmp_path / "study.json"
    path.write_text(
        '{"space": {"family": "sphere", "n": 2}, "generator": "fibonacci", "n_grid": [64, 128, 256], "radius": 1.2}',
        encoding="utf-8",
    )
    config = StudyConfig.from_json(path)
    assert config.family == "sphere" and config.radii == (1.2,)
    assert not config.two_radius


def test_radius_sweep_over_designs():
    designs = [load_pointset(DESIGN_DIR / f"{name}.txt") for name in DESIGNS]
    grid = np.linspace(0.1, math.pi - 0.3, 21)
    sweep = run_radius_sweep(designs, grid, labels=DESIGNS)
    assert len(sweep.table) == 5 * 21
    assert list(sweep.summary["label"]) == DESIGNS
    assert np.all(sweep.summary["sup"] > 0)
    assert set(sweep.summary["argsup_r"]) <= set(float(r) for r in grid)
    assert sweep.bounded is True
    assert sweep.summary["scaled_sup"].max() <= 3 * sweep.summary["scaled_sup"].median()
    with pytest.raises(DomainError):
        run_radius_sweep(designs, [0.5, math.pi - 0.1], labels=DESIGNS)
    with pytest.raises(DomainError):
        run_radius_sweep(designs, grid, labels=DESIGNS[:2])


def test_sweep_bounded_against_median():
    assert sweep_bounded(pd.DataFrame({"scaled_sup": [1.0, 1.2, 0.9]}))
    assert not sweep_bounded(pd.DataFrame({"scaled_sup": [1.0, 1.0, 10.0]}))
    assert sweep_bounded(pd.DataFrame({"scaled_sup": [1.0, 1.0, 10.0]}), factor=20.0)


def test_bad_radius_scan_flags_a_jacobi_zero(caplog):
    zero = jacobi_zero(0.0, 0.0, 20, 7).location
    with caplog.at_level(logging.INFO):
        scan = run_bad_radius_scan(SpaceKind.sphere(2), [zero, 1.0], M_max=40, delta=0.1, threshold=1e-6)
    assert list(scan.columns) == ["r", "score", "argmin_m", "flagged"]
    assert bool(scan["flagged"].iloc[0])
    assert int(scan["argmin_m"].iloc[0]) == 20
    assert "flagged" in caplog.text
    with pytest.raises(DomainError):
        run_bad_radius_scan(SpaceKind.sphere(2), [0.0], M_max=10, delta=0.1)


def test_brief_sections(tmp_path):
    study = run_scaling(small_uniform_config(seeds=2))
    designs = [load_pointset(DESIGN_DIR / f"{name}.txt") for name in DESIGNS[:3]]
    sweep = run_radius_sweep(designs, [0.5, 1.0, 1.5], labels=DESIGNS[:3])
    scan = run_bad_radius_scan(SpaceKind.sphere(2), [0.7, 1.3], M_max=20, delta=0.1)

    text = render_brief("Study", study=study, sweep=sweep, scan=scan)
    assert text.startswith("# Study")
    for heading in ("## Scaling study", "## Radius sweep", "## Bad-radius scan", "## Methods & limitations"):
        assert heading in text
    assert "S^2" in text

    bare = render_brief("Empty")
    assert "## Scaling study" not in bare
    assert "## Methods & limitations" in bare

    path = generate_brief(tmp_path / "brief.md", "Study", sweep=sweep)
    assert Path(path).read_text(encoding="utf-8").startswith("# Study")


@pytest.mark.slow
def test_fibonacci_two_radius_exponent():
    config = StudyConfig(
        family="sphere",
        n=2,
        generator="fibonacci",
        n_grid=(128, 256, 512, 1024, 2048, 4096, 8192),
        radii=(0.8, 1.6),
        seeds=1,
        degree_factor=16.0,
        max_degree=2048,
    )
    study = run_scaling(config, threads=4)
    assert study.target_slope == pytest.approx(-1.5)
    assert -1.6 <= study.fit.slope <= -1.35
    assert study.bound.minimum > 0
    assert study.bound.trend_slope() >= -0.1
    assert np.all(study.results["lower_bound"] <= study.results["value"] + 1e-15)
