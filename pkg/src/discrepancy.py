"""Spectral L2 ball discrepancy, its Monte Carlo oracle, Gram spectra and cubature checks.

For a weighted point set the squared L2 norm of ``D_r`` splits level by level:

    sum over m >= 1 of S_m * c_m(r)^2 / d_m^2

with ``S_m = sum_{j,k} a_j a_k Z^m(rho(x_j, x_k))``. Because ``S_m <= d_m`` the
omitted levels weigh at most the Parseval remainder ``V(1 - V) - sum c_m^2 / d_m``,
which is computable exactly and certifies every truncated value.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import (
    DEFAULT_TOL,
    MAX_DEGREE_CAP,
    MC_MIN_SAMPLES,
    MIN_INITIAL_DEGREE,
    NEGATIVE_GRAM_WARN,
    PAIR_BLOCK_SIZE,
    SAMPLE_BLOCK_ELEMENTS,
    WEIGHT_SUM_TOL,
    resolve_threads,
)
from .errors import DomainError, PointSetError, SpaceError, TruncationError, UnsupportedSpaceError
from .persistence import atomic_write_frame, dumps_finite
from .sampling import STREAM_MONTE_CARLO, philox_generator, random_unit_vectors
from .spaces import (
    Family,
    MatrixIndex,
    PointRepr,
    ProjVec,
    SpaceKind,
    SpaceParams,
    SphereVec,
    as_components,
    as_params,
    ball_volume,
    check_unit_norm,
    pairwise_cosines,
    space_params,
    validate_distance_matrix,
)
from .specfun import iter_normalized_jacobi
from .spectral import BallCoefficientTable, ball_coefficient_matrix, ball_coefficient_table, eigen_dimensions

logger = logging.getLogger(__name__)

_TILE = int(math.isqrt(PAIR_BLOCK_SIZE))


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """N points with positive weights summing to one, bound to a space.

    Vector models keep real coordinates of shape ``(N, *space.vector_shape)``;
    point sets on spaces without a vector model carry a validated distance matrix
    and are addressed by index.
    """

    space: SpaceKind
    weights: np.ndarray
    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.size == 0:
            raise PointSetError("a point set needs at least one point")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise PointSetError("weights must be positive")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise PointSetError(
                f"weights sum to {total!r}, not 1; divide them by their sum before loading"
            )
        object.__setattr__(self, "weights", weights)
        if (self.coords is None) == (self.matrix is None):
            raise PointSetError("give either coordinates or a distance matrix")
        if self.coords is not None:
            coords = as_components(self.coords, self.space)
            if coords.shape[0] != weights.size:
                raise PointSetError(f"{coords.shape[0]} points but {weights.size} weights")
            try:
                check_unit_norm(coords, self.space)
            except SpaceError as exc:
                raise PointSetError(str(exc)) from exc
            object.__setattr__(self, "coords", coords)
        else:
            matrix = validate_distance_matrix(self.matrix)
            if matrix.shape[0] != weights.size:
                raise PointSetError(f"{matrix.shape[0]} points but {weights.size} weights")
            object.__setattr__(self, "matrix", matrix)

    @classmethod
    def equal_weights(cls, space: SpaceKind, coords: np.ndarray | None = None, matrix: np.ndarray | None = None) -> "WeightedPointSet":
        count = len(coords) if coords is not None else len(matrix)
        return cls(space=space, weights=np.full(count, 1.0 / count), coords=coords, matrix=matrix)

    @classmethod
    def from_points(
        cls,
        space: SpaceKind,
        points: Sequence[PointRepr],
        weights: Sequence[float] | None = None,
        matrix: np.ndarray | None = None,
    ) -> "WeightedPointSet":
        if not points:
            raise PointSetError("a point set needs at least one point")
        kinds = {type(point) for point in points}
        if len(kinds) != 1:
            raise SpaceError("cannot mix point representations in one set")
        w = np.full(len(points), 1.0 / len(points)) if weights is None else np.asarray(weights, dtype=float)
        if kinds == {MatrixIndex}:
            if matrix is None:
                raise SpaceError("matrix-indexed points need the distance matrix")
            index = [point.index for point in points]
            full = validate_distance_matrix(matrix)
            return cls(space=space, weights=w, matrix=full[np.ix_(index, index)])
        expected = SphereVec if space.family is Family.SPHERE else ProjVec
        if kinds != {expected}:
            raise SpaceError(f"{space.label} expects {expected.__name__} points")
        coords = np.stack([as_components(point.coords, space) for point in points])
        return cls(space=space, weights=w, coords=coords)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def params(self) -> SpaceParams:
        return space_params(self.space)

    @property
    def points(self) -> List[PointRepr]:
        if self.coords is None:
            return [MatrixIndex(i) for i in range(self.size)]
        wrapper = SphereVec if self.coords.ndim == 2 else ProjVec
        return [wrapper(row) for row in self.coords]

    def cosine_block(self, rows: slice, cols: slice) -> np.ndarray:
        if self.coords is not None:
            return pairwise_cosines(self.space, self.coords[rows], self.coords[cols])
        return np.cos(self.matrix[rows, cols])

    def neighbour_counts(self, radius: float) -> np.ndarray:
        """#{k : rho(x_j, x_k) <= radius} for every j, the point itself included."""

        threshold = math.cos(min(max(radius, 0.0), math.pi))
        counts = np.zeros(self.size, dtype=int)
        for start in range(0, self.size, _TILE):
            rows = slice(start, min(start + _TILE, self.size))
            counts[rows] = np.sum(self.cosine_block(rows, slice(None)) >= threshold - 1e-15, axis=1)
        return counts


@dataclass(frozen=True)
class GramSpectrum:
    S: np.ndarray
    dims: np.ndarray
    weight_sq: float

    @property
    def degree(self) -> int:
        return int(self.S.size)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"m": np.arange(1, self.degree + 1), "S_m": self.S, "d_m": self.dims})

    def to_csv(self, path: str | Path) -> str:
        return atomic_write_frame(path, self.to_frame())


@dataclass(frozen=True)
class DiscrepancyReport:
    value: float
    M_used: int
    tail_bound: float
    r: float
    volume: float
    converged: bool = True
    per_m: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_per_m: bool = True) -> Dict[str, object]:
        payload: Dict[str, object] = {
            "value": self.value,
            "M_used": self.M_used,
            "tail_bound": self.tail_bound,
            "r": self.r,
            "volume": self.volume,
            "converged": self.converged,
        }
        if include_per_m and self.per_m is not None:
            payload["per_m"] = [float(v) for v in self.per_m]
        return payload

    def to_json(self, include_per_m: bool = True) -> str:
        return dumps_finite(self.to_dict(include_per_m))


def _tiles(n: int) -> List[Tuple[slice, slice]]:
    starts = range(0, n, _TILE)
    return [
        (slice(i, min(i + _TILE, n)), slice(j, min(j + _TILE, n)))
        for i in starts
        for j in starts
        if j >= i
    ]


def _tile_sums(pointset: WeightedPointSet, tile: Tuple[slice, slice], M: int) -> np.ndarray:
    """sum over pairs j < k in the tile of 2 a_j a_k R_m(cos rho_jk), for m = 1..M."""

    rows, cols = tile
    cos = pointset.cosine_block(rows, cols)
    pair_weights = 2.0 * np.outer(pointset.weights[rows], pointset.weights[cols])
    if rows.start == cols.start:
        upper = np.triu_indices(cos.shape[0], k=1, m=cos.shape[1])
        cos, pair_weights = cos[upper], pair_weights[upper]
    else:
        cos, pair_weights = cos.ravel(), pair_weights.ravel()
    params = pointset.params
    sums = np.zeros(M)
    if cos.size == 0:
        return sums
    levels = iter_normalized_jacobi(params.a, params.b, cos, M)
    next(levels)
    for m, values in enumerate(levels, start=1):
        sums[m - 1] = pair_weights @ values
    return sums


def gram_spectrum(pointset: WeightedPointSet, M: int, threads: int | None = None) -> GramSpectrum:
    """S_m for m = 1..M from pairwise zonal kernels, blocked over pair tiles."""

    if M < 1 or M > MAX_DEGREE_CAP:
        raise DomainError(f"M must lie in [1, {MAX_DEGREE_CAP}]")
    workers = resolve_threads(threads)
    tiles = _tiles(pointset.size)
    weight_sq = float(np.sum(pointset.weights**2))
    logger.debug("Gram spectrum: N=%d, M=%d, %d tiles, %d threads", pointset.size, M, len(tiles), workers)
    if workers == 1 or len(tiles) == 1:
        partials = [_tile_sums(pointset, tile, M) for tile in tiles]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda tile: _tile_sums(pointset, tile, M), tiles))
    cross = np.zeros(M)
    for partial in partials:
        cross += partial
    dims = eigen_dimensions(pointset.params, M)[1:]
    S = dims * (weight_sq + cross)
    low = float(S.min())
    if low < NEGATIVE_GRAM_WARN:
        logger.warning("Gram spectrum has a negative entry %.3e below rounding level; clamping to 0", low)
    return GramSpectrum(S=np.maximum(S, 0.0), dims=dims, weight_sq=weight_sq)


def choose_truncation(
    space: SpaceKind | SpaceParams,
    r: float,
    tol: float = DEFAULT_TOL,
    max_degree: int = MAX_DEGREE_CAP,
) -> Tuple[int, BallCoefficientTable]:
    """Smallest M whose Parseval remainder is at most tol, or the cap when none is.

    The remainder decays like K / M, so each extension jumps straight to the
    degree that estimate predicts (at least doubling).
    """

    params = as_params(space)
    cap = min(int(max_degree), MAX_DEGREE_CAP)
    if cap < 1:
        raise DomainError("max_degree must be at least 1")
    degree = min(MIN_INITIAL_DEGREE, cap)
    table = ball_coefficient_table(params, r, degree)
    while table.tail() > tol and degree < cap:
        predicted = degree * table.tail() / tol
        step = 2 ** math.ceil(math.log2(max(predicted / degree, 2.0))) if math.isfinite(predicted) else cap
        degree = int(min(cap, degree * step))
        table = ball_coefficient_table(params, r, degree)
    tails = table.parseval_total - table.parseval_partial
    reached = np.nonzero(tails <= tol)[0]
    chosen = int(reached[0]) + 1 if reached.size else table.degree
    return chosen, table


def discrepancy_from_gram(
    gram: GramSpectrum,
    space: SpaceKind | SpaceParams,
    r: float,
    M: int | None = None,
) -> Tuple[float, np.ndarray]:
    """Truncated spectral value and its per-level terms, reusing a Gram spectrum."""

    params = as_params(space)
    degree = gram.degree if M is None else int(M)
    if degree < 1 or degree > gram.degree:
        raise DomainError(f"M must lie in [1, {gram.degree}]")
    coeffs = ball_coefficient_matrix(params, [r], degree)[0]
    per_m = gram.S[:degree] * (coeffs / gram.dims[:degree]) ** 2
    return float(per_m.sum()), per_m


def gram_discrepancies(
    gram: GramSpectrum,
    space: SpaceKind | SpaceParams,
    radii: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """Spectral values and Parseval tail bounds for many radii from one Gram spectrum."""

    params = as_params(space)
    rr = np.asarray(list(radii), dtype=float)
    coeffs = ball_coefficient_matrix(params, rr, gram.degree)
    ratios = coeffs**2 / gram.dims[None, :] ** 2
    values = ratios @ gram.S
    volumes = np.asarray(ball_volume(params, rr), dtype=float)
    tails = np.maximum(volumes * (1 - volumes) - (coeffs**2 / gram.dims[None, :]).sum(axis=1), 0.0)
    full = rr >= math.pi
    values[full], tails[full] = 0.0, 0.0
    return values, tails


def l2_discrepancy_spectral(
    pointset: WeightedPointSet,
    r: float,
    tol: float = DEFAULT_TOL,
    max_degree: int = MAX_DEGREE_CAP,
    gram: GramSpectrum | None = None,
    strict: bool = False,
    threads: int | None = None,
) -> DiscrepancyReport:
    """Integral of |D_r|^2 over ball centres with a certified truncation bound."""

    if tol <= 0:
        raise DomainError("tol must be positive")
    if not 0.0 <= r <= math.pi + 1e-12:
        raise DomainError("radius must lie in [0, pi] (radians)")
    r = min(float(r), math.pi)
    params = pointset.params
    volume = float(ball_volume(params, r))
    if r == 0.0 or r >= math.pi:
        return DiscrepancyReport(value=0.0, M_used=0, tail_bound=0.0, r=r, volume=volume, per_m=np.zeros(0))

    degree, table = choose_truncation(params, r, tol, max_degree)
    if gram is not None and gram.degree < degree:
        logger.info("Supplied Gram spectrum stops at M=%d, below the requested M=%d", gram.degree, degree)
        degree = gram.degree
    if gram is None:
        gram = gram_spectrum(pointset, degree, threads=threads)
    value, per_m = discrepancy_from_gram(gram, params, r, degree)
    tail = table.tail(degree)
    converged = tail <= tol
    if not converged:
        message = f"tail bound {tail:.3e} above tol {tol:.1e} at M={degree} (cap {max_degree})"
        if strict:
            raise TruncationError(message)
        logger.warning("Truncation tolerance unreachable: %s", message)
    return DiscrepancyReport(
        value=value, M_used=degree, tail_bound=tail, r=r, volume=volume, converged=converged, per_m=per_m
    )


def _montecarlo_block(
    pointset: WeightedPointSet, r: float, volume: float, seed: int, block: int, count: int
) -> np.ndarray:
    rng = philox_generator(seed, STREAM_MONTE_CARLO, block)
    centres = random_unit_vectors(pointset.space, count, rng)
    inside = pairwise_cosines(pointset.space, centres, pointset.coords) > math.cos(r)
    local = inside.astype(float) @ pointset.weights - volume
    return local * local


def l2_discrepancy_montecarlo(
    pointset: WeightedPointSet,
    r: float,
    samples: int,
    seed: int,
    threads: int | None = None,
) -> Tuple[float, float]:
    """Direct average of |D_r(x)|^2 over uniform centres: (estimate, standard error)."""

    if samples < MC_MIN_SAMPLES:
        raise DomainError(f"Monte Carlo needs at least {MC_MIN_SAMPLES} samples")
    if pointset.coords is None or not pointset.space.has_vector_model:
        logger.warning("No sampler for %s; Monte Carlo oracle unavailable", pointset.space.label)
        raise UnsupportedSpaceError(f"{pointset.space.label} has no sampler for ball centres")
    if not 0.0 <= r <= math.pi + 1e-12:
        raise DomainError("radius must lie in [0, pi] (radians)")
    if r >= math.pi:
        return 0.0, 0.0
    volume = float(ball_volume(pointset.params, r))
    per_block = max(1, SAMPLE_BLOCK_ELEMENTS // pointset.size)
    jobs = [(block, min(per_block, samples - start)) for block, start in enumerate(range(0, samples, per_block))]
    workers = resolve_threads(threads)
    if workers == 1 or len(jobs) == 1:
        chunks = [_montecarlo_block(pointset, r, volume, seed, block, count) for block, count in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda job: _montecarlo_block(pointset, r, volume, seed, *job), jobs))
    squares = np.concatenate(chunks)
    estimate = float(squares.mean())
    stderr = float(squares.std(ddof=1) / math.sqrt(squares.size))
    return estimate, stderr


def cassels_sum(pointset: WeightedPointSet, X: int, gram: GramSpectrum | None = None) -> float:
    """sum_{m=1..X} S_m."""

    if X < 1:
        raise DomainError("X must be at least 1")
    if gram is None or gram.degree < X:
        gram = gram_spectrum(pointset, int(X))
    return float(gram.S[: int(X)].sum())


def _strength_search_limit(pointset: WeightedPointSet) -> int:
    # a cubature of strength t needs about t^d / (2^d d!) points, so t stays below this
    d = pointset.params.d
    return int(math.ceil(2 * (math.factorial(d) * pointset.size) ** (1.0 / d))) + 4


def cubature_strength(
    pointset: WeightedPointSet,
    tol: float = 1e-10,
    gram: GramSpectrum | None = None,
) -> int:
    """Largest X with S_m <= tol for 1 <= m <= X."""

    if tol <= 0:
        raise DomainError("tol must be positive")
    limit = gram.degree if gram is not None else min(_strength_search_limit(pointset), MAX_DEGREE_CAP)
    while True:
        if gram is None or gram.degree < limit:
            gram = gram_spectrum(pointset, limit)
        above = np.nonzero(gram.S[:limit] > tol)[0]
        if above.size:
            return int(above[0])
        if limit >= MAX_DEGREE_CAP:
            return limit
        limit = min(2 * limit, MAX_DEGREE_CAP)


def spectral_lower_bound(
    gram: GramSpectrum,
    space: SpaceKind | SpaceParams,
    radii: Sequence[float],
    X: int,
) -> float:
    """sum_{m<=X} S_m * min_{m<=X} sum_r c_m(r)^2 / d_m^2, a lower bound for sum_r ||D_r||^2."""

    params = as_params(space)
    if not 1 <= X <= gram.degree:
        raise DomainError(f"X must lie in [1, {gram.degree}]")
    coeffs = ball_coefficient_matrix(params, list(radii), int(X))
    weights = (coeffs**2 / gram.dims[None, : int(X)] ** 2).sum(axis=0)
    return float(gram.S[: int(X)].sum() * weights.min())


def cubature_hypotheses(pointset: WeightedPointSet) -> Tuple[float, int]:
    """(A, B): weights obey a_j <= A / N and every N^(-1/d)-ball around a point holds at most B points."""

    n = pointset.size
    big_a = float(n * pointset.weights.max())
    radius = n ** (-1.0 / pointset.params.d)
    big_b = int(pointset.neighbour_counts(radius).max())
    return big_a, big_b


__all__ = [
    "WeightedPointSet",
    "GramSpectrum",
    "DiscrepancyReport",
    "gram_spectrum",
    "choose_truncation",
    "discrepancy_from_gram",
    "gram_discrepancies",
    "l2_discrepancy_spectral",
    "l2_discrepancy_montecarlo",
    "cassels_sum",
    "cubature_strength",
    "spectral_lower_bound",
    "cubature_hypotheses",
]
