"""Generation, import, export and padding of weighted point sets."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

import numpy as np
from scipy.stats import ortho_group, unitary_group

from .config import GENERATOR_KINDS, POINT_BLOCK_SIZE, UNIT_NORM_TOL, resolve_threads
from .discrepancy import WeightedPointSet
from .errors import DomainError, PointSetError, SpaceError, UnsupportedSpaceError
from .persistence import atomic_write_json, atomic_write_text
from .sampling import STREAM_PERTURB, STREAM_POINTS, STREAM_ROTATION, box_muller, philox_generator, random_unit_vectors
from .spaces import Family, SpaceKind, load_distance_matrix, parse_numeric_rows

logger = logging.getLogger(__name__)

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
_DESIGN_NORM_SLACK = 1e-6


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    N: int = 0
    seed: int = 0
    path: str | None = None

    def validate(self, space: SpaceKind) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise DomainError(f"generator must be one of {GENERATOR_KINDS}, got {self.kind!r}")
        if self.kind in ("uniform", "fibonacci") and self.N < 1:
            raise DomainError("N must be at least 1")
        if self.kind == "fibonacci" and space != SpaceKind.sphere(2):
            raise SpaceError("the Fibonacci spiral lives on S^2 only")
        if self.kind == "tdesign" and space.family is not Family.SPHERE:
            raise SpaceError("t-design files describe points on spheres")
        if self.kind in ("tdesign", "matrix") and not self.path:
            raise DomainError(f"generator {self.kind!r} needs a file path")
        if self.kind == "uniform" and not space.has_vector_model:
            raise UnsupportedSpaceError(f"{space.label} has no sampler; use a distance-matrix point set")


def _sample_block(space: SpaceKind, seed: int, block: int, count: int) -> np.ndarray:
    return random_unit_vectors(space, count, philox_generator(seed, STREAM_POINTS, block))


def sample_uniform(space: SpaceKind, N: int, seed: int, threads: int | None = None) -> WeightedPointSet:
    """N i.i.d. points from the invariant measure, equal weights.

    Points are drawn in fixed blocks, each with its own substream, so the set is
    identical for any thread count.
    """

    GeneratorSpec("uniform", N, seed).validate(space)
    jobs = [(block, min(POINT_BLOCK_SIZE, N - start)) for block, start in enumerate(range(0, N, POINT_BLOCK_SIZE))]
    workers = resolve_threads(threads)
    if workers == 1 or len(jobs) == 1:
        chunks = [_sample_block(space, seed, block, count) for block, count in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda job: _sample_block(space, seed, *job), jobs))
    return WeightedPointSet.equal_weights(space, coords=np.concatenate(chunks))


def fibonacci_sphere(N: int) -> WeightedPointSet:
    if N < 1:
        raise DomainError("N must be at least 1")
    j = np.arange(N, dtype=float)
    z = 1.0 - (2.0 * j + 1.0) / N
    azimuth = np.mod(2.0 * math.pi * j / GOLDEN_RATIO, 2.0 * math.pi)
    radial = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    coords = np.column_stack([radial * np.cos(azimuth), radial * np.sin(azimuth), z])
    coords /= np.linalg.norm(coords, axis=1, keepdims=True)
    return WeightedPointSet.equal_weights(SpaceKind.sphere(2), coords=coords)


def _load_design(path: Path, space: SpaceKind | None) -> WeightedPointSet:
    rows = parse_numeric_rows(path.read_text(encoding="utf-8"))
    if not rows:
        raise PointSetError(f"{path}: no points found")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise PointSetError(f"{path}: every line needs the same number of coordinates")
    width = widths.pop()
    sphere = SpaceKind.sphere(width - 1) if space is None else space
    if sphere.family is not Family.SPHERE or sphere.vector_shape != (width,):
        raise PointSetError(f"{path}: {width} coordinates per line do not fit {sphere.label}")
    coords = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(coords, axis=1, keepdims=True)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > _DESIGN_NORM_SLACK:
        raise PointSetError(f"{path}: rows are not unit vectors (max |norm - 1| = {worst:.2e})")
    if worst > UNIT_NORM_TOL:
        logger.debug("Rescaling design rows of %s (max |norm - 1| = %.2e)", path, worst)
        coords = coords / norms
    return WeightedPointSet.equal_weights(sphere, coords=coords)


def _load_native(path: Path) -> WeightedPointSet:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        space = SpaceKind.from_dict(payload["space"])
        weights = np.asarray(payload["weights"], dtype=float)
    except (ValueError, KeyError, TypeError) as exc:
        raise PointSetError(f"{path}: malformed point-set file ({exc})") from exc
    if "distance_matrix" in payload:
        return WeightedPointSet(space=space, weights=weights, matrix=np.asarray(payload["distance_matrix"], dtype=float))
    if "points" not in payload:
        raise PointSetError(f"{path}: needs either points or distance_matrix")
    flat = np.asarray(payload["points"], dtype=float)
    try:
        coords = flat.reshape((flat.shape[0], *space.vector_shape))
    except ValueError as exc:
        raise PointSetError(f"{path}: point rows do not fit {space.label}") from exc
    return WeightedPointSet(space=space, weights=weights, coords=coords)


def load_pointset(path: str | Path, fmt: str | None = None, space: SpaceKind | None = None) -> WeightedPointSet:
    """Read the native JSON format or an equal-weight t-design text file."""

    source = Path(path)
    if not source.exists():
        raise PointSetError(f"point-set file not found: {source}")
    fmt = fmt or ("json" if source.suffix.lower() == ".json" else "tdesign")
    if fmt == "json":
        pointset = _load_native(source)
        if space is not None and pointset.space != space:
            raise SpaceError(f"{source} holds points on {pointset.space.label}, not {space.label}")
        return pointset
    if fmt == "tdesign":
        return _load_design(source, space)
    raise PointSetError(f"unknown point-set format {fmt!r}")


def pointset_to_dict(pointset: WeightedPointSet) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"space": pointset.space.to_dict()}
    if pointset.coords is not None:
        payload["points"] = pointset.coords.reshape(pointset.size, -1).tolist()
    else:
        payload["distance_matrix"] = pointset.matrix.tolist()
    payload["weights"] = pointset.weights.tolist()
    return payload


def save_pointset(pointset: WeightedPointSet, path: str | Path, fmt: str | None = None) -> str:
    target = Path(path)
    fmt = fmt or ("json" if target.suffix.lower() == ".json" else "tdesign")
    if fmt == "json":
        return atomic_write_json(target, pointset_to_dict(pointset))
    if fmt != "tdesign":
        raise PointSetError(f"unknown point-set format {fmt!r}")
    if pointset.space.family is not Family.SPHERE or pointset.coords is None:
        raise PointSetError("the t-design text format holds sphere points only")
    if not np.all(pointset.weights == pointset.weights[0]):
        raise PointSetError("the t-design text format is equal-weight; save weighted sets as JSON")
    lines = [" ".join(repr(float(v)) for v in row) for row in pointset.coords]
    return atomic_write_text(target, "\n".join(lines) + "\n")


def load_matrix_pointset(space: SpaceKind, path: str | Path, weights: np.ndarray | None = None) -> WeightedPointSet:
    matrix = load_distance_matrix(path)
    w = np.full(matrix.shape[0], 1.0 / matrix.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return WeightedPointSet(space=space, weights=w, matrix=matrix)


def generate(space: SpaceKind, spec: GeneratorSpec, threads: int | None = None) -> WeightedPointSet:
    spec.validate(space)
    if spec.kind == "uniform":
        return sample_uniform(space, spec.N, spec.seed, threads=threads)
    if spec.kind == "fibonacci":
        return fibonacci_sphere(spec.N)
    if spec.kind == "tdesign":
        return load_pointset(spec.path, fmt="tdesign", space=space)
    return load_matrix_pointset(space, spec.path)


def duplicate_pad(pointset: WeightedPointSet, N_target: int) -> WeightedPointSet:
    """Pad to N_target points by repeating the last point and splitting its weight evenly."""

    n = pointset.size
    if N_target < n:
        raise DomainError(f"N_target={N_target} is below the current size {n}")
    if N_target == n:
        return pointset
    copies = N_target - n + 1
    weights = np.concatenate([pointset.weights[:-1], np.full(copies, pointset.weights[-1] / copies)])
    if pointset.coords is not None:
        coords = np.concatenate([pointset.coords, np.repeat(pointset.coords[-1:], copies - 1, axis=0)])
        return WeightedPointSet(space=pointset.space, weights=weights, coords=coords)
    index = np.concatenate([np.arange(n), np.full(copies - 1, n - 1)])
    return WeightedPointSet(space=pointset.space, weights=weights, matrix=pointset.matrix[np.ix_(index, index)])


def perturb(pointset: WeightedPointSet, scale: float, seed: int) -> WeightedPointSet:
    """Jitter every point by Gaussian noise of the given scale and project back to the space."""

    if pointset.coords is None:
        raise UnsupportedSpaceError(f"{pointset.space.label} point sets given by distances cannot be perturbed")
    if scale < 0:
        raise DomainError("scale must be nonnegative")
    rng = philox_generator(seed, STREAM_PERTURB)
    moved = pointset.coords + scale * box_muller(rng, pointset.coords.shape)
    axes = tuple(range(1, moved.ndim))
    moved = moved / np.sqrt(np.sum(moved * moved, axis=axes, keepdims=True))
    return WeightedPointSet(space=pointset.space, weights=pointset.weights, coords=moved)


def rotate(pointset: WeightedPointSet, seed: int) -> WeightedPointSet:
    """Apply one random isometry to the whole configuration.

    Spheres and real/quaternionic projective spaces get a Haar orthogonal matrix
    acting on the coordinate rows; complex projective spaces get a Haar unitary.
    """

    if pointset.coords is None:
        raise UnsupportedSpaceError(f"{pointset.space.label} point sets given by distances cannot be rotated")
    rng = philox_generator(seed, STREAM_ROTATION)
    dim = pointset.coords.shape[1]
    if pointset.space.family is Family.PROJ_COMPLEX:
        unitary = unitary_group.rvs(dim, random_state=rng)
        vectors = pointset.coords[..., 0] + 1j * pointset.coords[..., 1]
        turned = vectors @ unitary.T
        coords = np.stack([turned.real, turned.imag], axis=-1)
    else:
        orthogonal = ortho_group.rvs(dim, random_state=rng)
        coords = np.einsum("ij,nj...->ni...", orthogonal, pointset.coords)
    return WeightedPointSet(space=pointset.space, weights=pointset.weights, coords=coords)


def separation_count(pointset: WeightedPointSet, radius: float) -> int:
    """Largest number of points within ``radius`` of one of the points."""

    return int(pointset.neighbour_counts(radius).max())


def min_separation(pointset: WeightedPointSet) -> float:
    best = math.pi
    for start in range(0, pointset.size, POINT_BLOCK_SIZE):
        rows = slice(start, min(start + POINT_BLOCK_SIZE, pointset.size))
        cos = pointset.cosine_block(rows, slice(None))
        idx = np.arange(rows.start, rows.stop)
        cos[idx - rows.start, idx] = -1.0
        best = min(best, float(np.arccos(np.clip(cos.max(), -1.0, 1.0))))
    return best


__all__ = [
    "GOLDEN_RATIO",
    "GeneratorSpec",
    "sample_uniform",
    "fibonacci_sphere",
    "load_pointset",
    "pointset_to_dict",
    "save_pointset",
    "load_matrix_pointset",
    "generate",
    "duplicate_pad",
    "perturb",
    "rotate",
    "separation_count",
    "min_separation",
]
