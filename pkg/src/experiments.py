"""Desk-scale scaling studies, radius sweeps and bad-radius scans.

Every cell computes spectral discrepancies from one Gram spectrum truncated at
``ceil(degree_factor * N^(1/d))``; the omitted mass then shrinks at the same rate
as the values themselves, so the fitted exponents are not biased by truncation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from .config import (
    ASYMPTOTIC_EPSILON,
    BAD_RADIUS_M0,
    BAD_RADIUS_THRESHOLD,
    MAX_DEGREE_CAP,
    StudyConfig,
    resolve_threads,
)
from .discrepancy import (
    WeightedPointSet,
    gram_discrepancies,
    gram_spectrum,
    spectral_lower_bound,
)
from .errors import DomainError, SpaceError
from .persistence import ResumeCache
from .pointsets import GeneratorSpec, fibonacci_sphere, load_pointset, sample_uniform
from .sampling import STREAM_BOOTSTRAP, philox_generator
from .spaces import SpaceKind, space_params
from .spectral import bad_radius_argmin, bad_radius_score

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    n_points: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "intercept_stderr": self.intercept_stderr,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class BoundConstant:
    """N^(1 + 1/d) times the mean discrepancy at each N, and its minimum over the grid."""

    n_grid: Tuple[int, ...]
    values: Tuple[float, ...]

    @property
    def minimum(self) -> float:
        return float(min(self.values))

    def trend_slope(self) -> float:
        """log-log slope of the constants against N; near zero when the rate is attained."""

        return loglog_fit(self.n_grid, self.values).slope


@dataclass
class ScalingStudy:
    config: StudyConfig
    space: SpaceKind
    results: pd.DataFrame
    summary: pd.DataFrame
    fit: LogLogFit
    fit_upper: LogLogFit
    bound: BoundConstant
    target_slope: float
    notes: List[str] = field(default_factory=list)

    def to_summary_dict(self) -> Dict[str, Any]:
        return {
            "name": self.config.name,
            "space": self.space.label,
            "generator": self.config.generator,
            "radii": list(self.config.radii),
            "slope": self.fit.slope,
            "stderr": self.fit.slope_stderr,
            "slope_upper": self.fit_upper.slope,
            "stderr_upper": self.fit_upper.slope_stderr,
            "target_slope": self.target_slope,
            "bound_constant_min": self.bound.minimum,
            "bound_constant_trend": self.bound.trend_slope(),
            "fit": self.fit.to_dict(),
            "fit_upper": self.fit_upper.to_dict(),
        }


@dataclass
class RadiusSweep:
    table: pd.DataFrame
    summary: pd.DataFrame

    @property
    def bounded(self) -> bool:
        return sweep_bounded(self.summary)


def loglog_fit(n_values: Sequence[float], values: Sequence[float]) -> LogLogFit:
    """Least-squares line through (log N, log value)."""

    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2:
        raise DomainError("a log-log fit needs at least two points")
    if x.size == 2:
        slope = float((y[1] - y[0]) / (x[1] - x[0]))
        return LogLogFit(slope, float(y[0] - slope * x[0]), float("nan"), float("nan"), 2)
    fit = linregress(x, y)
    return LogLogFit(float(fit.slope), float(fit.intercept), float(fit.stderr), float(fit.intercept_stderr), int(x.size))


def target_exponent(d: int, two_radius: bool) -> float:
    """-1 - 1/d with two radii; -1 - 3/d for a single radius (up to an arbitrarily small loss)."""

    return -1.0 - 1.0 / d if two_radius else -1.0 - 3.0 / d


def truncation_degree(N: int, d: int, degree_factor: float, max_degree: int) -> int:
    return int(min(max_degree, MAX_DEGREE_CAP, math.ceil(degree_factor * N ** (1.0 / d))))


def cell_seed(base_seed: int, N: int, replicate: int) -> int:
    """Independent 32-bit seed per (N, replicate) cell."""

    sequence = np.random.SeedSequence(int(base_seed), spawn_key=(int(N), int(replicate)))
    return int(sequence.generate_state(1)[0])


def _study_pointsets(config: StudyConfig, space: SpaceKind) -> List[Tuple[int, int, Any]]:
    """(N, replicate, factory) triples; factories build the point set lazily."""

    cells: List[Tuple[int, int, Any]] = []
    if config.generator == "uniform":
        GeneratorSpec("uniform", config.n_grid[0], config.seed).validate(space)
        for n in config.n_grid:
            for rep in range(config.seeds):
                cells.append((n, rep, lambda n=n, rep=rep: sample_uniform(space, n, cell_seed(config.seed, n, rep))))
    elif config.generator == "fibonacci":
        GeneratorSpec("fibonacci", config.n_grid[0]).validate(space)
        for n in config.n_grid:
            cells.append((n, 0, lambda n=n: fibonacci_sphere(n)))
    elif config.generator == "tdesign":
        if len(config.design_paths) != len(config.n_grid):
            raise DomainError("tdesign studies list one design file per entry of n_grid")
        for n, path in zip(config.n_grid, config.design_paths):
            GeneratorSpec("tdesign", n, path=path).validate(space)
            cells.append((n, 0, lambda path=path, n=n: _checked_design(path, space, n)))
    else:
        raise SpaceError(f"generator {config.generator!r} cannot drive a scaling study")
    return cells


def _checked_design(path: str, space: SpaceKind, n: int) -> WeightedPointSet:
    pointset = load_pointset(path, fmt="tdesign", space=space)
    if pointset.size != n:
        raise DomainError(f"{path} holds {pointset.size} points, n_grid says {n}")
    return pointset


def evaluate_cell(
    pointset: WeightedPointSet, radii: Sequence[float], degree: int, threads: int | None = None
) -> Dict[str, Any]:
    """Spectral values, tails and the spectral lower bound for one point set."""

    d = pointset.params.d
    gram = gram_spectrum(pointset, degree, threads=threads)
    values, tails = gram_discrepancies(gram, pointset.space, radii)
    lower_level = min(degree, int(math.ceil(pointset.size ** (1.0 / d))) + 1)
    return {
        "values": [float(v) for v in values],
        "value": float(values.sum()),
        "tail_bound": float(tails.sum()),
        "M_used": int(degree),
        "lower_bound": spectral_lower_bound(gram, pointset.space, radii, lower_level),
    }


def _compute_cell(
    cell: Tuple[int, int, Any], radii: Sequence[float], d: int, config: StudyConfig, threads: int
) -> Dict[str, Any]:
    n, _, factory = cell
    degree = truncation_degree(n, d, config.degree_factor, config.max_degree)
    return evaluate_cell(factory(), radii, degree, threads=threads)


def run_scaling(config: StudyConfig, cache: ResumeCache | None = None, threads: int | None = None) -> ScalingStudy:
    """Spectral discrepancies over the N grid, exponent fits and bound constants.

    Cells missing from ``cache`` run on a thread pool; each cell's Gram spectrum
    stays single-threaded in that case.
    """

    config.validate()
    space = SpaceKind.parse(config.family, config.n)
    d = space_params(space).d
    radii = list(config.radii)
    cells = _study_pointsets(config, space)
    outcomes: Dict[Tuple[int, int], Dict[str, Any]] = {}
    pending = []
    for cell in cells:
        cached = cache.get(cell[0], cell[1]) if cache is not None else None
        if cached is None:
            pending.append(cell)
        else:
            outcomes[(cell[0], cell[1])] = cached
    workers = resolve_threads(threads)
    pool: ThreadPoolExecutor | None = None
    if workers == 1 or len(pending) <= 1:
        computed = (_compute_cell(cell, radii, d, config, workers) for cell in pending)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        computed = pool.map(lambda cell: _compute_cell(cell, radii, d, config, 1), pending)
    try:
        for index, (cell, outcome) in enumerate(zip(pending, computed), start=1):
            outcomes[(cell[0], cell[1])] = outcome
            if cache is not None:
                cache.put(cell[0], cell[1], outcome)
            logger.info("cell %d/%d: N=%d replicate=%d value=%.6e", index, len(pending), cell[0], cell[1], outcome["value"])
    finally:
        if pool is not None:
            pool.shutdown()
    if cache is not None:
        logger.info("Resume cache: %d hits, %d misses", cache.hits, cache.misses)

    rows: List[Dict[str, Any]] = []
    for n, rep, _ in cells:
        outcome = outcomes[(n, rep)]
        row = {
            "N": n,
            "seed": rep,
            "value": outcome["value"],
            "tail_bound": outcome["tail_bound"],
            "M_used": outcome["M_used"],
            "lower_bound": outcome["lower_bound"],
        }
        for position, value in enumerate(outcome["values"]):
            row[f"value_r{position}"] = value
        rows.append(row)
    results = pd.DataFrame(rows)
    summary = summarise(results, d)
    fit = loglog_fit(summary["N"], summary["mean"])
    upper = summary.iloc[len(summary) // 2:]
    fit_upper = loglog_fit(upper["N"], upper["mean"])
    bound = BoundConstant(tuple(int(n) for n in summary["N"]), tuple(float(v) for v in summary["bound_constant"]))
    notes: List[str] = []
    if d % 4 == 1:
        notes.append("d = 1 mod 4: no lower-bound claim is made for this dimension.")
    study = ScalingStudy(
        config=config,
        space=space,
        results=results,
        summary=summary,
        fit=fit,
        fit_upper=fit_upper,
        bound=bound,
        target_slope=target_exponent(d, config.two_radius),
        notes=notes,
    )
    logger.info("Scaling fit for %s: slope %.3f +/- %.3f (target %.3f)", space.label, fit.slope, fit.slope_stderr, study.target_slope)
    return study


def summarise(results: pd.DataFrame, d: int) -> pd.DataFrame:
    grouped = results.groupby("N", sort=True)["value"]
    summary = grouped.agg(mean="mean", count="count").reset_index()
    std = grouped.std(ddof=1).reset_index(drop=True).fillna(0.0)
    summary["sem"] = std / np.sqrt(summary["count"])
    summary["lower_bound"] = results.groupby("N", sort=True)["lower_bound"].mean().to_numpy()
    summary["bound_constant"] = summary["N"] ** (1.0 + 1.0 / d) * summary["mean"]
    return summary


def bootstrap_slopes(study: ScalingStudy, n_boot: int = 200, seed: int = 0) -> np.ndarray:
    """Full-grid slopes refitted after resampling replicates within each N."""

    rng = philox_generator(seed, STREAM_BOOTSTRAP)
    groups = [group["value"].to_numpy() for _, group in study.results.groupby("N", sort=True)]
    n_values = sorted(study.results["N"].unique())
    slopes = np.empty(n_boot)
    for i in range(n_boot):
        means = [float(values[rng.integers(0, values.size, values.size)].mean()) for values in groups]
        slopes[i] = loglog_fit(n_values, means).slope
    return slopes


def run_radius_sweep(
    pointsets: Sequence[WeightedPointSet],
    r_grid: Sequence[float],
    labels: Sequence[str] | None = None,
    epsilon: float = ASYMPTOTIC_EPSILON,
    degree_factor: float = 32.0,
    max_degree: int = 4096,
) -> RadiusSweep:
    """||D_r||^2 over a radius grid for each point set, with sup_r and N^(1+1/d) sup_r."""

    radii = [float(r) for r in r_grid]
    if not radii or min(radii) < 0 or max(radii) > math.pi - epsilon + 1e-12:
        raise DomainError(f"sweep radii must lie in [0, pi - {epsilon}]")
    names = list(labels) if labels is not None else [f"set{i}" for i in range(len(pointsets))]
    if len(names) != len(pointsets):
        raise DomainError("one label per point set")
    long_rows: List[Dict[str, Any]] = []
    summary_rows: List[Dict[str, Any]] = []
    for name, pointset in zip(names, pointsets):
        d = pointset.params.d
        degree = truncation_degree(pointset.size, d, degree_factor, max_degree)
        gram = gram_spectrum(pointset, degree)
        values, tails = gram_discrepancies(gram, pointset.space, radii)
        for radius, value, tail in zip(radii, values, tails):
            long_rows.append({"label": name, "N": pointset.size, "r": radius, "value": float(value), "tail_bound": float(tail)})
        sup = float(values.max())
        summary_rows.append(
            {
                "label": name,
                "N": pointset.size,
                "sup": sup,
                "argsup_r": radii[int(np.argmax(values))],
                "scaled_sup": pointset.size ** (1.0 + 1.0 / d) * sup,
                "M_used": degree,
            }
        )
    return RadiusSweep(table=pd.DataFrame(long_rows), summary=pd.DataFrame(summary_rows))


def sweep_bounded(summary: pd.DataFrame, factor: float = 3.0) -> bool:
    """True when every N^(1+1/d) sup_r value is within ``factor`` times their median."""

    scaled = summary["scaled_sup"].to_numpy(dtype=float)
    return bool(np.all(scaled <= factor * np.median(scaled)))


def run_bad_radius_scan(
    space: SpaceKind,
    r_grid: Sequence[float],
    M_max: int,
    delta: float,
    threshold: float = BAD_RADIUS_THRESHOLD,
    m0: int = BAD_RADIUS_M0,
) -> pd.DataFrame:
    """Bad-radius scores over a grid; radii scoring below ``threshold`` are flagged."""

    radii = [float(r) for r in r_grid]
    if any(not 0.0 < r < math.pi for r in radii):
        raise DomainError("scan radii must lie in (0, pi)")
    params = space_params(space)
    rows = []
    for radius in radii:
        score = bad_radius_score(params, radius, M_max, delta, m0)
        rows.append(
            {
                "r": radius,
                "score": score,
                "argmin_m": bad_radius_argmin(params, radius, M_max, delta, m0),
                "flagged": bool(score < threshold),
            }
        )
    table = pd.DataFrame(rows)
    logger.info("Bad-radius scan on %s: %d of %d radii flagged", space.label, int(table["flagged"].sum()), len(table))
    return table


__all__ = [
    "LogLogFit",
    "BoundConstant",
    "ScalingStudy",
    "RadiusSweep",
    "loglog_fit",
    "target_exponent",
    "truncation_degree",
    "cell_seed",
    "evaluate_cell",
    "run_scaling",
    "summarise",
    "bootstrap_slopes",
    "run_radius_sweep",
    "sweep_bounded",
    "run_bad_radius_scan",
]
