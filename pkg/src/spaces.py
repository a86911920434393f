"""Compact two-point homogeneous spaces: parameters, point models, distances and ball volumes.

Distances are normalised so that every space has diameter pi. Spheres use the
angle between unit vectors; projective spaces over R, C and H use
``cos(rho) = 2 |<x, y>|^2 - 1`` for unit representatives x, y of the two lines,
which makes the radial measure density ``A(r) = c(a,b) sin(r/2)^(2a+1) cos(r/2)^(2b+1)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np
import regex as re
from scipy.special import betainc, gammaln

from .config import UNIT_NORM_TOL
from .errors import DomainError, SpaceError, UnsupportedSpaceError

logger = logging.getLogger(__name__)

_RADIUS_SLACK = 1e-12


class Family(str, Enum):
    SPHERE = "sphere"
    PROJ_REAL = "projreal"
    PROJ_COMPLEX = "projcomplex"
    PROJ_QUATERNION = "projquaternion"
    PROJ_OCTONION = "projoctonion"
    ABSTRACT = "abstract"


FIELD_DIMENSION = {
    Family.PROJ_REAL: 1,
    Family.PROJ_COMPLEX: 2,
    Family.PROJ_QUATERNION: 4,
    Family.PROJ_OCTONION: 8,
}

_FIELD_SYMBOL = {
    Family.PROJ_REAL: "R",
    Family.PROJ_COMPLEX: "C",
    Family.PROJ_QUATERNION: "H",
    Family.PROJ_OCTONION: "O",
}

_FAMILY_ALIASES = {
    "sphere": Family.SPHERE,
    "s": Family.SPHERE,
    "projreal": Family.PROJ_REAL,
    "rp": Family.PROJ_REAL,
    "projcomplex": Family.PROJ_COMPLEX,
    "cp": Family.PROJ_COMPLEX,
    "projquaternion": Family.PROJ_QUATERNION,
    "hp": Family.PROJ_QUATERNION,
    "projoctonion": Family.PROJ_OCTONION,
    "octonion": Family.PROJ_OCTONION,
    "op": Family.PROJ_OCTONION,
    "abstract": Family.ABSTRACT,
}

_SPACE_NAME = re.compile(r"^\s*(?P<family>[a-z]+?)(?P<n>\d+)?\s*$")


@dataclass(frozen=True)
class SpaceKind:
    """One of the five families (or an abstract metric space with given dimensions)."""

    family: Family
    n: int = 0
    d: int | None = None
    d0: int | None = None

    def __post_init__(self) -> None:
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if family is Family.SPHERE and self.n < 1:
            raise SpaceError("sphere needs n >= 1")
        if family in (Family.PROJ_REAL, Family.PROJ_COMPLEX, Family.PROJ_QUATERNION) and self.n < 2:
            raise SpaceError(f"{family.value} needs n >= 2")
        if family is Family.PROJ_OCTONION and self.n not in (0, 2):
            raise SpaceError("the octonionic projective space exists only as a plane (n = 2)")
        if family is Family.PROJ_OCTONION:
            object.__setattr__(self, "n", 2)
        if family is Family.ABSTRACT:
            if self.d is None or self.d0 is None or self.d < 1 or self.d0 < 1:
                raise SpaceError("abstract spaces need explicit dimensions d >= 1 and d0 >= 1")
        elif self.d is not None or self.d0 is not None:
            raise SpaceError("explicit (d, d0) only apply to abstract spaces")

    @classmethod
    def sphere(cls, n: int) -> "SpaceKind":
        return cls(Family.SPHERE, n)

    @classmethod
    def projective(cls, field: str, n: int = 2) -> "SpaceKind":
        """``field`` is one of ``real``, ``complex``, ``quaternion``, ``octonion``."""

        family = _FAMILY_ALIASES.get(f"proj{field.lower()}")
        if family is None:
            raise SpaceError(f"unknown projective field {field!r}")
        return cls(family, n)

    @classmethod
    def abstract(cls, d: int, d0: int) -> "SpaceKind":
        return cls(Family.ABSTRACT, 0, d=d, d0=d0)

    @classmethod
    def parse(cls, name: str, n: int | None = None) -> "SpaceKind":
        """Parse ``sphere2``, ``projcomplex2``, ``octonion`` or a bare family plus ``n``."""

        match = _SPACE_NAME.match(name.lower())
        if match is None or match.group("family") not in _FAMILY_ALIASES:
            raise SpaceError(f"unknown space {name!r}")
        family = _FAMILY_ALIASES[match.group("family")]
        embedded = match.group("n")
        if embedded is not None and n is not None and int(embedded) != n:
            raise SpaceError(f"space {name!r} conflicts with n={n}")
        value = int(embedded) if embedded is not None else n
        if family is Family.PROJ_OCTONION:
            return cls(family, 2)
        if family is Family.ABSTRACT:
            raise SpaceError("abstract spaces need explicit dimensions; use SpaceKind.abstract")
        if value is None:
            raise SpaceError(f"space {name!r} needs an index n")
        return cls(family, value)

    @property
    def field_dim(self) -> int:
        """Real dimension of the scalar field of a projective model (1 for spheres)."""

        return FIELD_DIMENSION.get(self.family, 1)

    @property
    def has_vector_model(self) -> bool:
        return self.family in (Family.SPHERE, Family.PROJ_REAL, Family.PROJ_COMPLEX, Family.PROJ_QUATERNION)

    @property
    def vector_shape(self) -> Tuple[int, ...]:
        """Shape of one point's real coordinate array."""

        if self.family is Family.SPHERE:
            return (self.n + 1,)
        if self.has_vector_model:
            return (self.n + 1, self.field_dim)
        raise UnsupportedSpaceError(f"{self.label} has no linear model; use a distance matrix")

    @property
    def label(self) -> str:
        if self.family is Family.SPHERE:
            return f"S^{self.n}"
        if self.family is Family.ABSTRACT:
            return f"M(d={self.d}, d0={self.d0})"
        return f"P^{self.n}({_FIELD_SYMBOL[self.family]})"

    def to_dict(self) -> dict:
        payload = {"family": self.family.value, "n": self.n}
        if self.family is Family.ABSTRACT:
            payload.update({"d": self.d, "d0": self.d0})
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "SpaceKind":
        family = _FAMILY_ALIASES.get(str(payload.get("family", "")).lower())
        if family is None:
            raise SpaceError(f"unknown space family in {payload!r}")
        if family is Family.ABSTRACT:
            return cls.abstract(int(payload["d"]), int(payload["d0"]))
        return cls(family, int(payload.get("n", 0)))


@dataclass(frozen=True)
class SpaceParams:
    d: int
    d0: int
    a: float
    b: float
    c_ab: float

    @property
    def alpha_beta(self) -> Tuple[float, float]:
        return self.a, self.b


@dataclass(frozen=True, eq=False)
class SphereVec:
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class ProjVec:
    """Unit vector in F^(n+1), stored as real components of shape (n + 1, field_dim)."""

    coords: np.ndarray


@dataclass(frozen=True)
class MatrixIndex:
    index: int


PointRepr = Union[SphereVec, ProjVec, MatrixIndex]


def space_params(kind: SpaceKind) -> SpaceParams:
    """Real dimension, field dimension, Jacobi parameters and c(a, b) of a space."""

    if kind.family is Family.SPHERE:
        d = d0 = kind.n
    elif kind.family is Family.ABSTRACT:
        d, d0 = int(kind.d), int(kind.d0)
    else:
        d0 = FIELD_DIMENSION[kind.family]
        d = kind.n * d0
    a = (d - 2) / 2
    b = (d0 - 2) / 2
    c_ab = float(np.exp(gammaln(a + b + 2) - gammaln(a + 1) - gammaln(b + 1)))
    return SpaceParams(d=d, d0=d0, a=a, b=b, c_ab=c_ab)


def as_params(space: SpaceKind | SpaceParams) -> SpaceParams:
    return space if isinstance(space, SpaceParams) else space_params(space)


# (x component, y component, output component, sign) of conj(x) * y for quaternions;
# restricting to components below the field dimension gives the real and complex products.
_CONJ_PRODUCT_TABLE = (
    (0, 0, 0, 1), (1, 1, 0, 1), (2, 2, 0, 1), (3, 3, 0, 1),
    (0, 1, 1, 1), (1, 0, 1, -1), (2, 3, 1, -1), (3, 2, 1, 1),
    (0, 2, 2, 1), (1, 3, 2, 1), (2, 0, 2, -1), (3, 1, 2, -1),
    (0, 3, 3, 1), (1, 2, 3, -1), (2, 1, 3, 1), (3, 0, 3, -1),
)


def quaternion_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternions stored as (..., 4) arrays (w, i, j, k)."""

    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(p, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def quaternion_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.array(q, dtype=float, copy=True)
    q[..., 1:] *= -1.0
    return q


def field_inner_sq(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|<x, y>|^2 for every pair of rows of x (N, n+1, k) and y (M, n+1, k)."""

    k = x.shape[-1]
    parts = {}
    for xi, yi, out, sign in _CONJ_PRODUCT_TABLE:
        if xi >= k or yi >= k:
            continue
        term = x[..., xi] @ y[..., yi].T
        parts[out] = parts.get(out, 0.0) + (term if sign > 0 else -term)
    return sum(part * part for part in parts.values())


def as_components(coords: np.ndarray, kind: SpaceKind) -> np.ndarray:
    """Accept complex or real input and return float coordinates of the model's shape."""

    arr = np.asarray(coords)
    if kind.family is Family.PROJ_COMPLEX and np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    arr = np.asarray(arr, dtype=float)
    shape = kind.vector_shape
    if arr.shape[-len(shape):] != shape:
        try:
            arr = arr.reshape(arr.shape[: arr.ndim - 1] + shape) if arr.shape[-1] == int(np.prod(shape)) else arr
        except ValueError:
            pass
    if arr.shape[-len(shape):] != shape:
        raise SpaceError(f"coordinates of shape {arr.shape} do not fit {kind.label} (expected {shape})")
    return arr


def check_unit_norm(coords: np.ndarray, kind: SpaceKind, tol: float = UNIT_NORM_TOL) -> None:
    axes = tuple(range(coords.ndim - len(kind.vector_shape), coords.ndim))
    norms = np.sqrt(np.sum(coords * coords, axis=axes))
    worst = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if worst > tol:
        raise SpaceError(f"points must be unit vectors (max |norm - 1| = {worst:.3e})")


def pairwise_cosines(kind: SpaceKind, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """cos(rho) for all pairs of rows; the vector model is chosen by the space family."""

    if not kind.has_vector_model:
        raise UnsupportedSpaceError(f"{kind.label} has no vector model")
    y = x if y is None else y
    if kind.family is Family.SPHERE:
        cos = x @ y.T
    else:
        cos = 2.0 * field_inner_sq(x, y) - 1.0
    return np.clip(cos, -1.0, 1.0)


def pairwise_distances(kind: SpaceKind, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    dist = np.arccos(pairwise_cosines(kind, x, y))
    if y is None:
        np.fill_diagonal(dist, 0.0)
    return dist


def distance(kind: SpaceKind, x: PointRepr, y: PointRepr, matrix: np.ndarray | None = None) -> float:
    """Geodesic distance in [0, pi] between two points of the same model."""

    if type(x) is not type(y):
        raise SpaceError(f"cannot mix point representations {type(x).__name__} and {type(y).__name__}")
    if isinstance(x, MatrixIndex):
        if matrix is None:
            raise SpaceError("matrix-indexed points need the distance matrix")
        return float(matrix[x.index, y.index])
    expected = SphereVec if kind.family is Family.SPHERE else ProjVec
    if not isinstance(x, expected):
        raise SpaceError(f"{kind.label} expects {expected.__name__} points")
    xs = as_components(x.coords, kind)
    ys = as_components(y.coords, kind)
    check_unit_norm(xs, kind)
    check_unit_norm(ys, kind)
    if np.array_equal(xs, ys):
        return 0.0
    if kind.family is Family.SPHERE:
        # atan2 form keeps full accuracy near 0 and pi
        return float(2.0 * math.atan2(np.linalg.norm(xs - ys), np.linalg.norm(xs + ys)))
    return float(pairwise_distances(kind, xs[None], ys[None])[0, 0])


def _check_radius(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < -_RADIUS_SLACK) or np.any(r > math.pi + _RADIUS_SLACK):
        raise DomainError("radius must lie in [0, pi] (radians)")
    return np.clip(r, 0.0, math.pi)


def radial_density(kind: SpaceKind | SpaceParams, r: float | np.ndarray) -> float | np.ndarray:
    """A(r) = c(a,b) sin(r/2)^(2a+1) cos(r/2)^(2b+1); integrates to one over [0, pi]."""

    params = as_params(kind)
    rr = _check_radius(r)
    value = params.c_ab * np.sin(rr / 2) ** (2 * params.a + 1) * np.cos(rr / 2) ** (2 * params.b + 1)
    return float(value) if np.ndim(value) == 0 else value


def ball_volume(kind: SpaceKind | SpaceParams, r: float | np.ndarray) -> float | np.ndarray:
    """mu(B_r) as the regularised incomplete beta I_{sin^2(r/2)}(a + 1, b + 1)."""

    params = as_params(kind)
    rr = _check_radius(r)
    value = betainc(params.a + 1, params.b + 1, np.sin(rr / 2) ** 2)
    value = np.where(rr >= math.pi, 1.0, value)
    return float(value) if np.ndim(value) == 0 else value


def ball_volume_bounds(kind: SpaceKind, r_grid: Iterable[float] | None = None) -> Tuple[float, float]:
    """Fitted (c1, c2) with c1 r^d <= mu(B_r) <= c2 r^d over a log-spaced grid."""

    params = space_params(kind)
    grid = np.geomspace(1e-3, math.pi, 200) if r_grid is None else np.asarray(list(r_grid), dtype=float)
    grid = grid[grid > 0]
    ratios = np.asarray(ball_volume(params, grid)) / grid ** params.d
    return float(ratios.min()), float(ratios.max())


_NUMBER = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?(?:inf|nan)", re.IGNORECASE)


def parse_numeric_rows(text: str) -> List[List[float]]:
    """Rows of floats from whitespace/comma separated text; ``#`` starts a comment."""

    rows: List[List[float]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = re.sub(r"#.*$", "", raw).strip()
        if not line:
            continue
        tokens = [tok for tok in re.split(r"[\s,;]+", line) if tok]
        if not all(_NUMBER.fullmatch(tok) for tok in tokens):
            raise SpaceError(f"line {line_no}: non-numeric token in {raw.strip()!r}")
        rows.append([float(tok) for tok in tokens])
    return rows


def validate_distance_matrix(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise SpaceError(f"distance matrix must be square and non-empty, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise SpaceError("distance matrix has non-finite entries")
    if np.max(np.abs(mat - mat.T)) > tol:
        raise SpaceError("distance matrix is not symmetric")
    if np.max(np.abs(np.diag(mat))) > tol:
        raise SpaceError("distance matrix must have a zero diagonal")
    if mat.min() < -tol or mat.max() > math.pi + tol:
        raise SpaceError("distances must lie in [0, pi] (radians)")
    mat = np.clip(0.5 * (mat + mat.T), 0.0, math.pi)
    np.fill_diagonal(mat, 0.0)
    return mat


def load_distance_matrix(path: str | Path) -> np.ndarray:
    """Read a plain-text or JSON square distance matrix (radians) and validate it."""

    source = Path(path)
    text = source.read_text(encoding="utf-8")
    if source.suffix.lower() == ".json":
        payload = json.loads(text)
        if isinstance(payload, dict):
            payload = payload.get("distance_matrix")
        if payload is None:
            raise SpaceError(f"{source}: no distance_matrix entry")
        return validate_distance_matrix(np.asarray(payload, dtype=float))
    rows = parse_numeric_rows(text)
    if len({len(row) for row in rows}) > 1:
        raise SpaceError(f"{source}: ragged distance matrix")
    return validate_distance_matrix(np.asarray(rows, dtype=float))


__all__ = [
    "Family",
    "SpaceKind",
    "SpaceParams",
    "SphereVec",
    "ProjVec",
    "MatrixIndex",
    "PointRepr",
    "space_params",
    "as_params",
    "quaternion_multiply",
    "quaternion_conjugate",
    "field_inner_sq",
    "as_components",
    "check_unit_norm",
    "pairwise_cosines",
    "pairwise_distances",
    "distance",
    "radial_density",
    "ball_volume",
    "ball_volume_bounds",
    "parse_numeric_rows",
    "validate_distance_matrix",
    "load_distance_matrix",
]
