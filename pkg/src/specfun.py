"""Jacobi polynomials, weighted Jacobi forms, Bessel functions of the first kind and their zeros.

Large-degree evaluations run the three-term recurrence on the normalised
polynomials ``R_m = P_m / P_m(1)`` so values stay O(1) up to degree 1e5; the
value at one is restored through log-gamma differences when needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .config import BESSEL_SWITCH_MIN, ROOT_MAX_ITER, ROOT_RESIDUAL_TOL
from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

_BESSEL_SCAN_STEP = 0.25
_SERIES_MAX_TERMS = 400


@dataclass(frozen=True)
class JacobiParams:
    a: float
    b: float
    m: int

    def __post_init__(self) -> None:
        if self.a <= -1 or self.b <= -1:
            raise DomainError(f"Jacobi parameters need a, b > -1 (got a={self.a}, b={self.b})")
        if self.m < 0 or int(self.m) != self.m:
            raise DomainError(f"degree must be a nonnegative integer (got {self.m})")

    def shifted(self) -> "JacobiParams":
        """Parameters (a + 1, b + 1) with degree m - 1, as used by ball coefficients."""

        return JacobiParams(self.a + 1, self.b + 1, self.m - 1)


@dataclass(frozen=True)
class ZeroEstimate:
    location: float
    residual: float
    order_term: float
    initial: float = float("nan")
    iterations: int = 0


def _check_unit_interval(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise DomainError("Jacobi argument must lie in [-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def iter_normalized_jacobi(a: float, b: float, x: np.ndarray, n_max: int) -> Iterator[np.ndarray]:
    """Yield R_0(x), R_1(x), ..., R_{n_max}(x) with R_m = P_m^{(a,b)} / P_m^{(a,b)}(1)."""

    x = np.asarray(x, dtype=float)
    prev2 = np.ones_like(x)
    yield prev2
    if n_max == 0:
        return
    prev1 = 1.0 + (a + b + 2) * (x - 1.0) / (2.0 * (a + 1))
    yield prev1
    for n in range(2, n_max + 1):
        s = 2 * n + a + b
        denom = 2.0 * n * (n + a + b) * (s - 2)
        coef_x = (s - 1) * s * (s - 2) / denom
        coef_0 = (s - 1) * (a * a - b * b) / denom
        coef_2 = 2.0 * (n + a - 1) * (n + b - 1) * s / denom
        # P_{n-1}(1) / P_n(1) = n / (n + a)
        ratio1 = n / (n + a)
        ratio2 = ratio1 * (n - 1) / (n + a - 1)
        current = (coef_x * x + coef_0) * ratio1 * prev1 - coef_2 * ratio2 * prev2
        yield current
        prev2, prev1 = prev1, current


def jacobi_table(n_max: int, a: float, b: float, x: float | np.ndarray) -> np.ndarray:
    """Normalised values R_m(x) for m = 0..n_max, stacked along the first axis."""

    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    JacobiParams(a, b, 0)
    xs = _check_unit_interval(x)
    return np.stack(list(iter_normalized_jacobi(a, b, xs, n_max)))


def jacobi_at_one(params: JacobiParams) -> float:
    """P_m^{(a,b)}(1) = Gamma(m+a+1) / (Gamma(m+1) Gamma(a+1))."""

    a, m = params.a, params.m
    return float(np.exp(gammaln(m + a + 1) - gammaln(m + 1) - gammaln(a + 1)))


def jacobi_eval(params: JacobiParams, x: float | np.ndarray) -> float | np.ndarray:
    xs = _check_unit_interval(x)
    normalized = None
    for normalized in iter_normalized_jacobi(params.a, params.b, xs, params.m):
        pass
    value = normalized * jacobi_at_one(params)
    return float(value) if np.ndim(value) == 0 else value


def jacobi_norm(a: float, b: float, m: int) -> float:
    """h_m = integral of P_m^2 (1-x)^a (1+x)^b over [-1, 1]."""

    JacobiParams(a, b, m)
    if m == 0:
        log_h = (a + b + 1) * math.log(2.0) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2)
        return float(np.exp(log_h))
    log_h = (
        (a + b + 1) * math.log(2.0)
        - math.log(2 * m + a + b + 1)
        + gammaln(m + a + 1)
        + gammaln(m + b + 1)
        - gammaln(m + a + b + 1)
        - gammaln(m + 1)
    )
    return float(np.exp(log_h))


def _half_angle_weight(alpha: float, beta: float, r: np.ndarray) -> np.ndarray:
    return np.sin(r / 2) ** (2 * alpha) * np.cos(r / 2) ** (2 * beta)


def _check_angle(r: float | np.ndarray) -> np.ndarray:
    rr = np.asarray(r, dtype=float)
    if np.any(rr < -1e-12) or np.any(rr > math.pi + 1e-12):
        raise DomainError("angle must lie in [0, pi] (radians)")
    return np.clip(rr, 0.0, math.pi)


def weighted_jacobi(params: JacobiParams, r: float | np.ndarray) -> float | np.ndarray:
    """sin(r/2)^(2a) cos(r/2)^(2b) P_m^{(a,b)}(cos r) for the given (already shifted) parameters.

    Called with ``JacobiParams(a + 1, b + 1, m - 1)`` this is the weighted form whose
    zeros decide the single-radius lower bound.
    """

    rr = _check_angle(r)
    value = _half_angle_weight(params.a, params.b, rr) * jacobi_eval(params, np.cos(rr))
    return float(value) if np.ndim(value) == 0 else value


def weighted_jacobi_derivative(a: float, b: float, m: int, r: float | np.ndarray) -> float | np.ndarray:
    """d/dr of sin^(2a+2)(r/2) cos^(2b+2)(r/2) P_{m-1}^{(a+1,b+1)}(cos r).

    Rodrigues' relation collapses it to m sin^(2a+1)(r/2) cos^(2b+1)(r/2) P_m^{(a,b)}(cos r).
    """

    if m < 1:
        raise DomainError("level m must be at least 1")
    rr = _check_angle(r)
    value = m * _half_angle_weight(a + 0.5, b + 0.5, rr) * jacobi_eval(JacobiParams(a, b, m), np.cos(rr))
    return float(value) if np.ndim(value) == 0 else value


def _bessel_series(nu: float, x: float) -> float:
    if x == 0.0:
        if nu == 0:
            return 1.0
        return 0.0 if nu > 0 else math.inf
    term = math.exp(nu * math.log(x / 2) - gammaln(nu + 1))
    total = term
    quarter = -(x * x) / 4.0
    for k in range(1, _SERIES_MAX_TERMS):
        term *= quarter / (k * (k + nu))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and k > x / 2:
            break
    return total


def _bessel_hankel(nu: float, x: float) -> float:
    mu = 4.0 * nu * nu
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    last = math.inf
    for k in range(1, _SERIES_MAX_TERMS):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        size = abs(term)
        # the expansion diverges: stop at its smallest term once past the initial hump
        if (2 * k - 1) ** 2 > mu and size > last:
            break
        last = size
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p_sum += sign * term
        else:
            q_sum += sign * term
        if size < 1e-17:
            break
    chi = x - (nu / 2 + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_switch(nu: float) -> float:
    return max(BESSEL_SWITCH_MIN, 2.0 * nu)


def _bessel_scalar(nu: float, x: float) -> float:
    if x <= bessel_switch(nu):
        return _bessel_series(nu, x)
    return _bessel_hankel(nu, x)


def bessel_j(nu: float, x: float | np.ndarray) -> float | np.ndarray:
    """J_nu(x) for nu >= -1/2 and x >= 0.

    Power series up to ``max(12, 2 nu)``, Hankel's asymptotic expansion beyond,
    truncated at its smallest term.
    """

    if nu < -0.5:
        raise DomainError("bessel_j supports nu >= -1/2")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("bessel_j needs x >= 0")
    if xs.ndim == 0:
        return _bessel_scalar(nu, float(xs))
    flat = np.fromiter((_bessel_scalar(nu, float(v)) for v in xs.ravel()), dtype=float, count=xs.size)
    return flat.reshape(xs.shape)


def mcmahon_guess(nu: float, ell: int) -> float:
    return (ell + nu / 2 - 0.25) * math.pi


def _bessel_derivative(nu: float, x: float) -> float:
    return (nu / x) * _bessel_scalar(nu, x) - _bessel_scalar(nu + 1, x)


def _safeguarded_newton(f, df, lo: float, hi: float, start: float) -> tuple[float, int]:
    """Newton iteration kept inside a sign-change bracket, bisecting when a step leaves it."""

    f_lo = f(lo)
    x = min(max(start, lo), hi)
    iterations = 0
    for iterations in range(1, ROOT_MAX_ITER + 1):
        fx = f(x)
        if fx == 0.0:
            break
        if (fx > 0) == (f_lo > 0):
            lo, f_lo = x, fx
        else:
            hi = x
        slope = df(x)
        step = fx / slope if slope != 0 and math.isfinite(slope) else math.inf
        candidate = x - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - x) <= 4e-16 * max(abs(x), 1.0):
            x = candidate
            break
        x = candidate
    return x, iterations


def _bessel_brackets(nu: float, count: int) -> List[tuple[float, float]]:
    brackets: List[tuple[float, float]] = []
    x = max(nu, _BESSEL_SCAN_STEP)
    fx = _bessel_scalar(nu, x)
    while len(brackets) < count:
        nxt = x + _BESSEL_SCAN_STEP
        f_next = _bessel_scalar(nu, nxt)
        if fx == 0.0 or (fx > 0) != (f_next > 0):
            brackets.append((x, nxt))
        x, fx = nxt, f_next
    return brackets


def _refine_bessel(nu: float, ell: int, lo: float, hi: float) -> ZeroEstimate:
    guess = mcmahon_guess(nu, ell)
    start = guess if lo < guess < hi else 0.5 * (lo + hi)
    root, iterations = _safeguarded_newton(
        lambda v: _bessel_scalar(nu, v), lambda v: _bessel_derivative(nu, v), lo, hi, start
    )
    residual = abs(_bessel_scalar(nu, root))
    if residual >= ROOT_RESIDUAL_TOL:
        raise ConvergenceError(f"Bessel zero j({nu}, {ell}) stalled at {root!r} with |J| = {residual:.3e}")
    return ZeroEstimate(location=root, residual=residual, order_term=1.0 / ell, initial=guess, iterations=iterations)


def bessel_zeros(nu: float, count: int) -> List[ZeroEstimate]:
    """First ``count`` positive zeros of J_nu, from one sign-change scan."""

    if nu < -0.5:
        raise DomainError("bessel_zeros supports nu >= -1/2")
    if count < 1:
        raise DomainError("count must be at least 1")
    return [_refine_bessel(nu, ell, lo, hi) for ell, (lo, hi) in enumerate(_bessel_brackets(nu, count), start=1)]


def bessel_zero(nu: float, ell: int) -> ZeroEstimate:
    """The ell-th positive zero of J_nu, starting from McMahon's guess."""

    if ell < 1:
        raise DomainError("zero index must be at least 1")
    if nu < -0.5:
        raise DomainError("bessel_zero supports nu >= -1/2")
    lo, hi = _bessel_brackets(nu, ell)[-1]
    return _refine_bessel(nu, ell, lo, hi)


def _check_zero_hypotheses(a: float, b: float, m: int) -> None:
    if a < -1.5 or a + b < -3:
        raise DomainError(f"zero asymptotics need a >= -3/2 and a + b >= -3 (got a={a}, b={b})")
    if m < 2:
        raise DomainError("P_{m-1}^{(a+1,b+1)} has zeros only for m >= 2")


def frenzen_wong_estimate(a: float, b: float, m: int, ell: int, bessel_root: float | None = None) -> float:
    """Uniform asymptotic estimate of the ell-th zero (in angle) of P_{m-1}^{(a+1,b+1)}(cos theta)."""

    _check_zero_hypotheses(a, b, m)
    if not 1 <= ell <= m - 1:
        raise DomainError(f"zero index must lie in [1, {m - 1}]")
    j = bessel_zero(a + 1, ell).location if bessel_root is None else bessel_root
    big_m = m + (a + b + 1) / 2
    t = j / big_m
    alpha_sq = (a + 1) ** 2
    correction = (alpha_sq - 0.25) * (1 - t / math.tan(t)) / (2 * t) - (alpha_sq - (b + 1) ** 2) / 4 * math.tan(t / 2)
    return t + correction / big_m**2


def _jacobi_zero_brackets(a: float, b: float, m: int) -> np.ndarray:
    nodes, _ = roots_jacobi(m - 1, a + 1, b + 1)
    thetas = np.sort(np.arccos(np.clip(nodes, -1.0, 1.0)))
    mids = 0.5 * (thetas[1:] + thetas[:-1])
    return np.concatenate([[0.0], mids, [math.pi]])


def _refine_jacobi(a: float, b: float, m: int, ell: int, lo: float, hi: float, estimate: float) -> ZeroEstimate:
    def value(theta: float) -> float:
        return float(jacobi_table(m - 1, a + 1, b + 1, math.cos(theta))[-1])

    def newton_ratio_slope(theta: float) -> float:
        # d/dtheta of the weighted form divided by the weight, evaluated where R vanishes
        lower = float(jacobi_table(m, a, b, math.cos(theta))[-1])
        return 2 * (a + 1) * lower / math.sin(theta) if math.sin(theta) else math.inf

    root, iterations = _safeguarded_newton(value, newton_ratio_slope, lo, hi, estimate)
    residual = abs(value(root))
    if residual >= ROOT_RESIDUAL_TOL:
        raise ConvergenceError(f"Jacobi zero (m={m}, ell={ell}) stalled at {root!r} with residual {residual:.3e}")
    big_m = m + (a + b + 1) / 2
    t = root
    return ZeroEstimate(location=root, residual=residual, order_term=t * t / big_m**3, initial=estimate, iterations=iterations)


def jacobi_zeros(a: float, b: float, m: int, ells: Sequence[int] | None = None) -> List[ZeroEstimate]:
    """Refined zeros theta_{m-1,ell} of P_{m-1}^{(a+1,b+1)}(cos theta) for the requested indices."""

    _check_zero_hypotheses(a, b, m)
    indices = list(range(1, m)) if ells is None else [int(ell) for ell in ells]
    if any(not 1 <= ell <= m - 1 for ell in indices):
        raise DomainError(f"zero indices must lie in [1, {m - 1}]")
    if not indices:
        return []
    edges = _jacobi_zero_brackets(a, b, m)
    roots = bessel_zeros(a + 1, max(indices))
    results = []
    for ell in indices:
        estimate = frenzen_wong_estimate(a, b, m, ell, bessel_root=roots[ell - 1].location)
        lo, hi = edges[ell - 1], edges[ell]
        start = estimate if lo < estimate < hi else 0.5 * (lo + hi)
        refined = _refine_jacobi(a, b, m, ell, lo, hi, start)
        results.append(
            ZeroEstimate(refined.location, refined.residual, refined.order_term, initial=estimate, iterations=refined.iterations)
        )
    return results


def jacobi_zero(a: float, b: float, m: int, ell: int) -> ZeroEstimate:
    return jacobi_zeros(a, b, m, [ell])[0]


__all__ = [
    "JacobiParams",
    "ZeroEstimate",
    "iter_normalized_jacobi",
    "jacobi_table",
    "jacobi_at_one",
    "jacobi_eval",
    "jacobi_norm",
    "weighted_jacobi",
    "weighted_jacobi_derivative",
    "bessel_switch",
    "bessel_j",
    "mcmahon_guess",
    "bessel_zero",
    "bessel_zeros",
    "frenzen_wong_estimate",
    "jacobi_zeros",
    "jacobi_zero",
]
