"""Numerical defaults, desk-scale caps and the scaling-study configuration."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple

DEFAULT_TOL = 1e-9
MAX_DEGREE_CAP = 100_000
MIN_INITIAL_DEGREE = 64
ASYMPTOTIC_EPSILON = 0.3
BAD_RADIUS_M0 = 2
BAD_RADIUS_DELTA = 0.1
BAD_RADIUS_THRESHOLD = 1e-3
MC_MIN_SAMPLES = 1_000
NEGATIVE_GRAM_WARN = -1e-9
UNIT_NORM_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-10
ROOT_MAX_ITER = 50

# Bessel power series below max(BESSEL_SWITCH_MIN, 2 * nu), Hankel expansion above.
BESSEL_SWITCH_MIN = 12.0

DESK_MAX_POINTS = 10_000
DESK_MAX_SEEDS = 64

PAIR_BLOCK_SIZE = 1 << 16
SAMPLE_BLOCK_ELEMENTS = 1 << 22
POINT_BLOCK_SIZE = 1024

THREADS_ENV_VAR = "GEODISC_THREADS"

GENERATOR_KINDS = ("uniform", "fibonacci", "tdesign", "matrix")


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value first, then the environment variable, then one thread."""

    if threads is not None:
        if threads < 1:
            raise ValueError("threads must be at least 1")
        return int(threads)
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV_VAR}={raw!r} is not an integer") from exc
    return max(value, 1)


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of a discrepancy scaling study over a grid of point counts."""

    family: str
    n: int
    generator: str
    n_grid: Tuple[int, ...]
    radii: Tuple[float, ...]
    seeds: int = 8
    seed: int = 42
    degree_factor: float = 32.0
    max_degree: int = 4096
    name: str = "study"
    design_paths: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def two_radius(self) -> bool:
        return len(self.radii) == 2

    def validate(self) -> None:
        if self.generator not in GENERATOR_KINDS:
            raise ValueError(f"generator must be one of {GENERATOR_KINDS}, got {self.generator!r}")
        if len(self.n_grid) < 3:
            raise ValueError("n_grid needs at least 3 point counts")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.n_grid[0] < 1 or self.n_grid[-1] > DESK_MAX_POINTS:
            raise ValueError(f"point counts must lie in [1, {DESK_MAX_POINTS}]")
        if not 1 <= self.seeds <= DESK_MAX_SEEDS:
            raise ValueError(f"seeds must lie in [1, {DESK_MAX_SEEDS}]")
        if len(self.radii) not in (1, 2):
            raise ValueError("radii holds one radius, or two for the two-radius mode")
        if any(not 0.0 < r <= math.pi for r in self.radii):
            raise ValueError("radii must lie in (0, pi] (radians)")
        if self.two_radius and self.radii[0] > math.pi / 2:
            raise ValueError("two-radius mode needs the first radius in (0, pi/2]")
        if self.degree_factor <= 0:
            raise ValueError("degree_factor must be positive")
        if not 1 <= self.max_degree <= MAX_DEGREE_CAP:
            raise ValueError(f"max_degree must lie in [1, {MAX_DEGREE_CAP}]")

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["n_grid"] = list(self.n_grid)
        payload["radii"] = list(self.radii)
        payload["design_paths"] = list(self.design_paths)
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "StudyConfig":
        data = dict(payload)
        space = data.pop("space", None)
        if isinstance(space, dict):
            data.setdefault("family", space.get("family"))
            data.setdefault("n", space.get("n", 0))
        if "radius" in data and "radii" not in data:
            data["radii"] = [data.pop("radius")]
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown study keys: {unknown}")
        data["n_grid"] = tuple(int(v) for v in data.get("n_grid", ()))
        data["radii"] = tuple(float(v) for v in data.get("radii", ()))
        data["design_paths"] = tuple(str(v) for v in data.get("design_paths", ()))
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def from_json(cls, path: str | Path) -> "StudyConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "ASYMPTOTIC_EPSILON",
    "BAD_RADIUS_DELTA",
    "BAD_RADIUS_M0",
    "BAD_RADIUS_THRESHOLD",
    "BESSEL_SWITCH_MIN",
    "DEFAULT_TOL",
    "DESK_MAX_POINTS",
    "DESK_MAX_SEEDS",
    "GENERATOR_KINDS",
    "MAX_DEGREE_CAP",
    "MC_MIN_SAMPLES",
    "MIN_INITIAL_DEGREE",
    "NEGATIVE_GRAM_WARN",
    "PAIR_BLOCK_SIZE",
    "POINT_BLOCK_SIZE",
    "ROOT_MAX_ITER",
    "ROOT_RESIDUAL_TOL",
    "SAMPLE_BLOCK_ELEMENTS",
    "THREADS_ENV_VAR",
    "UNIT_NORM_TOL",
    "WEIGHT_SUM_TOL",
    "StudyConfig",
    "resolve_threads",
]
