"""Eigenvalues, eigenspace dimensions, zonal kernels and Fourier coefficients of geodesic balls."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .config import ASYMPTOTIC_EPSILON, BAD_RADIUS_M0, MAX_DEGREE_CAP
from .errors import DomainError
from .persistence import atomic_write_frame
from .spaces import SpaceKind, SpaceParams, as_params, ball_volume
from .specfun import bessel_j, iter_normalized_jacobi, jacobi_table

logger = logging.getLogger(__name__)

_TRIG_GRID_POINTS = 2001


@dataclass(frozen=True)
class EigenLevel:
    m: int
    lam: float
    dim: float


@dataclass(frozen=True)
class BallCoefficientTable:
    """Ball coefficients c_m(r) for m = 1..M with the running Parseval sum."""

    space: SpaceParams
    r: float
    volume: float
    coeffs: np.ndarray
    dims: np.ndarray
    parseval_partial: np.ndarray

    @property
    def degree(self) -> int:
        return int(self.coeffs.size)

    @property
    def parseval_total(self) -> float:
        """V(1 - V): the full Parseval sum of the ball indicator minus its mean."""

        return self.volume * (1.0 - self.volume)

    def tail(self, M: int | None = None) -> float:
        """Parseval remainder after level M (defaults to the whole table), never negative."""

        upto = self.degree if M is None else int(M)
        if upto < 0 or upto > self.degree:
            raise DomainError(f"M must lie in [0, {self.degree}]")
        partial = float(self.parseval_partial[upto - 1]) if upto else 0.0
        return max(self.parseval_total - partial, 0.0)

    def to_frame(self) -> pd.DataFrame:
        m = np.arange(1, self.degree + 1)
        return pd.DataFrame(
            {
                "m": m,
                "c_m": self.coeffs,
                "c_m2_over_d_m": self.coeffs**2 / self.dims,
                "parseval_partial": self.parseval_partial,
            }
        )

    def to_csv(self, path: str | Path) -> str:
        return atomic_write_frame(path, self.to_frame())


def _check_level(m: int) -> int:
    if m < 0 or int(m) != m:
        raise DomainError(f"level must be a nonnegative integer (got {m})")
    return int(m)


def _check_radius(r: float) -> float:
    if not 0.0 <= r <= math.pi + 1e-12:
        raise DomainError("radius must lie in [0, pi] (radians)")
    return min(float(r), math.pi)


def eigen_dimensions(space: SpaceKind | SpaceParams, M: int) -> np.ndarray:
    """d_0..d_M in floating point, from P_m(1)^2 / (c(a,b) 2^-(a+b+1) h_m) in log-gamma form."""

    params = as_params(space)
    a, b = params.a, params.b
    m = np.arange(0, int(M) + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_dim = (
            np.log(2 * m + a + b + 1)
            + gammaln(m + a + 1)
            - gammaln(a + 1)
            + gammaln(m + a + b + 1)
            - gammaln(a + b + 2)
            - gammaln(m + 1)
            - gammaln(m + b + 1)
            + gammaln(b + 1)
        )
    dims = np.exp(log_dim)
    dims[0] = 1.0
    return dims


def _rising(x: Fraction, k: int) -> Fraction:
    value = Fraction(1)
    for i in range(k):
        value *= x + i
    return value


def eigen_dimension_exact(space: SpaceKind | SpaceParams, m: int) -> Fraction:
    """d_m in exact rational arithmetic; integer-valued for every two-point homogeneous space."""

    params = as_params(space)
    m = _check_level(m)
    if m == 0:
        return Fraction(1)
    a = Fraction(int(round(2 * params.a)), 2)
    b = Fraction(int(round(2 * params.b)), 2)
    numerator = (2 * m + a + b + 1) * _rising(a + 1, m) * _rising(a + b + 2, m - 1)
    denominator = math.factorial(m) * _rising(b + 1, m)
    return numerator / denominator


def eigen_level(space: SpaceKind | SpaceParams, m: int) -> EigenLevel:
    params = as_params(space)
    m = _check_level(m)
    dim = float(eigen_dimensions(params, m)[-1])
    return EigenLevel(m=m, lam=float(m * (m + params.a + params.b + 1)), dim=dim)


def zonal_eval(space: SpaceKind | SpaceParams, m: int, rho: float | np.ndarray) -> float | np.ndarray:
    """Z^m at geodesic distance rho: d_m P_m(cos rho) / P_m(1)."""

    params = as_params(space)
    m = _check_level(m)
    rr = np.asarray(rho, dtype=float)
    if np.any(rr < -1e-12) or np.any(rr > math.pi + 1e-12):
        raise DomainError("rho must lie in [0, pi] (radians)")
    normalized = jacobi_table(m, params.a, params.b, np.cos(np.clip(rr, 0.0, math.pi)))[-1]
    value = eigen_dimensions(params, m)[-1] * normalized
    return float(value) if np.ndim(value) == 0 else value


def _shifted_weight(params: SpaceParams, r: np.ndarray) -> np.ndarray:
    weight = np.sin(r / 2) ** (2 * params.a + 2) * np.cos(r / 2) ** (2 * params.b + 2)
    # cos(pi/2) is not exactly zero in floating point
    return np.where(np.asarray(r) >= math.pi, 0.0, weight)


def ball_coefficient_matrix(space: SpaceKind | SpaceParams, radii: Sequence[float] | np.ndarray, M: int) -> np.ndarray:
    """c_m(r) for every radius (rows) and m = 1..M (columns), one recurrence pass over m."""

    params = as_params(space)
    if M < 1 or M > MAX_DEGREE_CAP:
        raise DomainError(f"M must lie in [1, {MAX_DEGREE_CAP}]")
    rr = np.array([_check_radius(float(r)) for r in np.atleast_1d(radii)], dtype=float)
    dims = eigen_dimensions(params, M)[1:]
    shifted = np.empty((rr.size, M))
    for idx, values in enumerate(iter_normalized_jacobi(params.a + 1, params.b + 1, np.cos(rr), M - 1)):
        shifted[:, idx] = values
    scale = params.c_ab / (params.a + 1) * _shifted_weight(params, rr)
    return scale[:, None] * dims[None, :] * shifted


def ball_coefficient(space: SpaceKind | SpaceParams, m: int, r: float) -> float:
    """Integral of Z^m over a ball of radius r, in closed form.

    ``c(a,b) d_m / (a + 1) * R_{m-1}^{(a+1,b+1)}(cos r) sin(r/2)^(2a+2) cos(r/2)^(2b+2)``,
    where R is the Jacobi polynomial normalised to one at x = 1.
    """

    if m < 1:
        raise DomainError("ball coefficients are defined for m >= 1")
    return float(ball_coefficient_matrix(space, [r], int(m))[0, -1])


def ball_coefficient_table(space: SpaceKind | SpaceParams, r: float, M: int) -> BallCoefficientTable:
    params = as_params(space)
    coeffs = ball_coefficient_matrix(params, [r], M)[0]
    dims = eigen_dimensions(params, M)[1:]
    partial = np.cumsum(coeffs**2 / dims)
    return BallCoefficientTable(
        space=params,
        r=_check_radius(r),
        volume=float(ball_volume(params, _check_radius(r))),
        coeffs=coeffs,
        dims=dims,
        parseval_partial=partial,
    )


def effective_order(params: SpaceParams, m: int) -> float:
    """M = m + (a + b + 1) / 2, the frequency in the Bessel approximations."""

    return m + (params.a + params.b + 1) / 2


def ball_coefficient_asymptotic(
    space: SpaceKind | SpaceParams,
    m: int,
    r: float,
    epsilon: float = ASYMPTOTIC_EPSILON,
) -> Tuple[float, float]:
    """Bessel main term of c_m(r) and the error scale d_m m^(-5/2-a)."""

    params = as_params(space)
    if m < 1:
        raise DomainError("ball coefficients are defined for m >= 1")
    r = _check_radius(r)
    if r > math.pi - epsilon:
        raise DomainError(f"asymptotic form needs r <= pi - {epsilon}")
    dim = float(eigen_dimensions(params, m)[-1])
    error_scale = dim * m ** (-2.5 - params.a)
    if r == 0.0:
        return 0.0, error_scale
    big_m = effective_order(params, m)
    main = (
        params.c_ab
        * dim
        * math.exp(gammaln(params.a + 1))
        * math.sin(r / 2) ** (params.a + 1)
        * math.cos(r / 2) ** (params.b + 1)
        * big_m ** (-params.a - 1)
        * math.sqrt(r / math.sin(r))
        * bessel_j(params.a + 1, big_m * r)
    )
    return float(main), error_scale


def two_radius_floor(space: SpaceKind | SpaceParams, r: float, m: int) -> float:
    """|J_{a+1}(M r)|^2 + |J_{a+1}(2 M r)|^2; a two-radius pair never sees both vanish."""

    params = as_params(space)
    if not 0.0 < r < math.pi / 2:
        raise DomainError("two-radius floor needs 0 < r < pi/2")
    if m < 1:
        raise DomainError("level must be at least 1")
    big_m = effective_order(params, m)
    nu = params.a + 1
    return float(bessel_j(nu, big_m * r) ** 2 + bessel_j(nu, 2 * big_m * r) ** 2)


def trigonometric_floor(d: int) -> Tuple[float, float]:
    """(min, argmin) over one period of cos^2(w) + cos^2(2w + (a+1) pi/2 + pi/4), a = (d-2)/2.

    This is the large-argument limit of the two-radius floor; it vanishes exactly
    when (d - 1) / 4 is an integer.
    """

    if d < 1:
        raise DomainError("dimension must be positive")
    phase = ((d - 2) / 2 + 1) * math.pi / 2 + math.pi / 4

    def objective(w: float) -> float:
        return math.cos(w) ** 2 + math.cos(2 * w + phase) ** 2

    grid = np.linspace(0.0, math.pi, _TRIG_GRID_POINTS)
    values = np.cos(grid) ** 2 + np.cos(2 * grid + phase) ** 2
    best = int(np.argmin(values))
    best_w, best_value = float(grid[best]), float(values[best])
    step = grid[1] - grid[0]
    refined = minimize_scalar(
        objective,
        bounds=(max(best_w - step, 0.0), min(best_w + step, math.pi)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if refined.success and refined.fun < best_value:
        best_w, best_value = float(refined.x), float(refined.fun)
    return best_value, best_w


def _bad_radius_terms(params: SpaceParams, r: float, M_max: int, delta: float, m0: int) -> Tuple[np.ndarray, np.ndarray]:
    levels = np.arange(1, M_max + 1)
    shifted = jacobi_table(M_max - 1, params.a + 1, params.b + 1, math.cos(r))
    # P_{m-1}^{(a+1,b+1)}(1) restores the unnormalised polynomial
    log_at_one = gammaln(levels + params.a + 1) - gammaln(levels) - gammaln(params.a + 2)
    weighted = _shifted_weight(params, np.asarray(r)) * shifted * np.exp(log_at_one)
    terms = levels ** (1.5 + delta) * np.abs(weighted)
    keep = levels >= m0
    return levels[keep], terms[keep]


def bad_radius_score(
    space: SpaceKind | SpaceParams,
    r: float,
    M_max: int,
    delta: float,
    m0: int = BAD_RADIUS_M0,
) -> float:
    """min over m0 <= m <= M_max of m^(3/2 + delta) |sin^(2a+2)(r/2) cos^(2b+2)(r/2) P_{m-1}^{(a+1,b+1)}(cos r)|."""

    params = as_params(space)
    if not 0.0 < r < math.pi:
        raise DomainError("bad-radius score needs r in (0, pi)")
    if delta <= 0:
        raise DomainError("delta must be positive")
    if M_max < m0:
        raise DomainError(f"M_max must be at least m0 = {m0}")
    _, terms = _bad_radius_terms(params, r, int(M_max), delta, m0)
    return float(terms.min())


def bad_radius_argmin(
    space: SpaceKind | SpaceParams,
    r: float,
    M_max: int,
    delta: float,
    m0: int = BAD_RADIUS_M0,
) -> int:
    """Level attaining the bad-radius minimum."""

    params = as_params(space)
    if not 0.0 < r < math.pi or delta <= 0 or M_max < m0:
        raise DomainError("bad-radius scan needs r in (0, pi), delta > 0 and M_max >= m0")
    levels, terms = _bad_radius_terms(params, r, int(M_max), delta, m0)
    return int(levels[int(np.argmin(terms))])


__all__ = [
    "EigenLevel",
    "BallCoefficientTable",
    "eigen_dimensions",
    "eigen_dimension_exact",
    "eigen_level",
    "zonal_eval",
    "ball_coefficient_matrix",
    "ball_coefficient",
    "ball_coefficient_table",
    "effective_order",
    "ball_coefficient_asymptotic",
    "two_radius_floor",
    "trigonometric_floor",
    "bad_radius_score",
    "bad_radius_argmin",
]
