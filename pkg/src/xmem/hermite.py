"""Probabilists' Hermite polynomials and Gaussian-weighted Hermite coefficients.

All inner products are taken with respect to the standard normal density,
``<f, g>_phi = int f(x) g(x) phi(x) dx``, so that ``<H_j, H_k>_phi = k! delta_jk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureSpec",
    "HermiteCoefficients",
    "HermiteRank",
    "DEFAULT_QUADRATURE",
    "hermite_eval",
    "hermite_normalized",
    "hermite_coeff",
    "hermite_coefficients",
    "gaussian_expectation",
    "hermite_rank",
    "half_factorial_ratio",
]

_LD = np.longdouble
_PI_LD = _LD("3.14159265358979323846264338327950288")
_INV_SQRT_2PI_LD = _LD(1) / np.sqrt(_LD(2) * _PI_LD)

# nodes sitting exactly on a breakpoint are nudged this far into their segment
_EDGE_NUDGE = 1e-15


class QuadratureError(RuntimeError):
    """Successive quadrature refinements did not agree within tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for Gaussian-weighted quadrature.

    ``domain_halfwidth`` is in standard-normal units. The adaptive Simpson
    scheme doubles the node count until two successive estimates agree to
    ``atol + rtol * L1`` (``L1`` being the integral of the absolute integrand),
    accumulating in extended precision. ``gauss_hermite`` uses rescaled
    probabilists' nodes and ignores breakpoints.
    """

    node_count: int = 201
    domain_halfwidth: float = 16.0
    scheme: str = "adaptive_simpson"
    rtol: float = 1e-12
    atol: float = 1e-15
    max_refinements: int = 10

    def __post_init__(self):
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if not self.domain_halfwidth > 0:
            raise ValueError("domain_halfwidth must be positive")
        if self.scheme not in ("adaptive_simpson", "gauss_hermite"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class HermiteCoefficients:
    values: np.ndarray
    k_max: int
    quad_error_estimate: float
    norm2: float = float("nan")  # <f, f>_phi over the quadrature domain

    def __post_init__(self):
        if len(self.values) != self.k_max + 1:
            raise ValueError("values must hold k_max + 1 coefficients")


@dataclass(frozen=True)
class HermiteRank:
    """Outcome of a rank search; ``rank`` is None when no coefficient up to
    ``k_max`` exceeded the threshold."""

    rank: int | None
    k_max: int
    coefficients: tuple[float, ...]
    threshold: float

    @property
    def none_up_to(self) -> int | None:
        return self.k_max if self.rank is None else None


def hermite_eval(n: int, x):
    """Evaluate H_n at ``x`` with the three-term recurrence.

    Keeps the floating dtype of ``x`` (including ``longdouble``).
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev[()]
    h = x.copy()
    for k in range(1, n):
        h_prev, h = h, x * h - k * h_prev
    return h[()]


def hermite_normalized(k_max: int, x) -> np.ndarray:
    """Table of ``H_k(x) / sqrt(k!)`` for k = 0..k_max, shape ``(k_max + 1, *x.shape)``.

    The normalized recurrence never overflows, which makes it usable for
    degrees in the thousands.
    """
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    out = np.empty((k_max + 1,) + x.shape, dtype=x.dtype)
    out[0] = 1
    if k_max >= 1:
        out[1] = x
    for k in range(1, k_max):
        out[k + 1] = (x * out[k] - np.sqrt(x.dtype.type(k)) * out[k - 1]) / np.sqrt(
            x.dtype.type(k + 1)
        )
    return out


def _segments(halfwidth: float, breakpoints: Iterable[float]) -> list[tuple[float, float]]:
    cuts = sorted({float(b) for b in breakpoints if np.isfinite(b) and -halfwidth < b < halfwidth})
    edges = [-halfwidth, *cuts, halfwidth]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _simpson_rule(segments, intervals: int):
    total = sum(b - a for a, b in segments)
    xs, ws = [], []
    for a, b in segments:
        m = max(2, 2 * math.ceil(intervals * (b - a) / total / 2))
        x = np.linspace(_LD(a), _LD(b), m + 1)
        nudge = _LD(_EDGE_NUDGE) * (_LD(b) - _LD(a))
        x[0] += nudge
        x[-1] -= nudge
        w = np.full(m + 1, 2, dtype=_LD)
        w[1::2] = 4
        w[0] = w[-1] = 1
        xs.append(x)
        ws.append(w * ((_LD(b) - _LD(a)) / m / 3))
    return np.concatenate(xs), np.concatenate(ws)


def _sqrt_factorials(k_max: int) -> np.ndarray:
    out = np.ones(k_max + 1, dtype=_LD)
    for k in range(1, k_max + 1):
        out[k] = out[k - 1] * np.sqrt(_LD(k))
    return out


def _eval(f: Callable, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        y = np.asarray(f(x))
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


def _weighted_moments(f, k_max, quad: QuadratureSpec, breakpoints, normalized):
    """Return (coefficients, error estimate, L2_phi norm squared of f)."""
    if quad.scheme == "gauss_hermite":
        return _gauss_hermite_moments(f, k_max, quad, normalized)

    segments = _segments(quad.domain_halfwidth, breakpoints)
    prev = None
    diff = np.array([np.inf])
    intervals = quad.node_count - 1
    for _ in range(quad.max_refinements + 1):
        x, w = _simpson_rule(segments, intervals)
        fx = _eval(f, x).astype(_LD)
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("integrand is not finite on the quadrature grid")
        kernel = w * fx * np.exp(-x * x / 2) * _INV_SQRT_2PI_LD
        table = hermite_normalized(k_max, x)
        est = table @ kernel
        l1 = np.abs(table) @ np.abs(kernel)
        norm2 = float(np.sum(w * fx * fx * np.exp(-x * x / 2)) * _INV_SQRT_2PI_LD)
        if prev is not None:
            diff = np.abs(est - prev)
            if np.all(diff <= quad.atol + quad.rtol * l1):
                break
        prev = est
        intervals *= 2
    else:
        raise QuadratureError(
            f"no convergence after {quad.max_refinements} refinements "
            f"(max difference {float(np.max(diff)):.3e})"
        )
    err = float(np.max(diff))
    if not normalized:
        scale = _sqrt_factorials(k_max)
        est = est * scale
        err *= float(scale[-1])
    return est, err, norm2


def _gauss_hermite_moments(f, k_max, quad, normalized):
    def rule(n):
        x, w = np.polynomial.hermite_e.hermegauss(n)
        return x, w / math.sqrt(2 * math.pi)

    results = []
    for n in (quad.node_count, quad.node_count + max(2, quad.node_count // 2)):
        x, w = rule(n)
        fx = _eval(f, x).astype(float)
        table = hermite_normalized(k_max, x)
        results.append((table @ (w * fx), float(np.sum(w * fx * fx))))
    (coarse, _), (fine, norm2) = results
    err = float(np.max(np.abs(fine - coarse)))
    if not normalized:
        scale = np.array([math.sqrt(math.factorial(k)) for k in range(k_max + 1)])
        fine = fine * scale
        err *= float(scale[-1])
    return fine, err, norm2


def hermite_coefficients(
    f: Callable,
    k_max: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
    normalized: bool = False,
) -> HermiteCoefficients:
    """Coefficients ``<f, H_k>_phi`` for k = 0..k_max.

    With ``normalized=True`` the coefficients are taken against
    ``H_k / sqrt(k!)``; squares of those are the terms of the Gaussian
    covariance expansion.

    ``breakpoints`` are points where ``f`` jumps or kinks; the domain is split
    there so that each panel sees a smooth integrand.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    est, err, norm2 = _weighted_moments(f, k_max, quad, breakpoints, normalized)
    return HermiteCoefficients(np.asarray(est, dtype=float), k_max, err, norm2)


def hermite_coeff(
    f: Callable,
    k: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
) -> float:
    """Numerical ``<f, H_k>_phi``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return float(hermite_coefficients(f, k, quad, breakpoints).values[k])


def gaussian_expectation(
    f: Callable, quad: QuadratureSpec = DEFAULT_QUADRATURE, breakpoints: Sequence[float] = ()
) -> float:
    """E f(Y) for standard normal Y."""
    return hermite_coeff(f, 0, quad, breakpoints)


def hermite_rank(
    f: Callable,
    k_max: int = 6,
    tol: float = 1e-7,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
    finite_variance: bool = True,
) -> HermiteRank:
    """Smallest k in 1..k_max with ``|<f, H_k>_phi| > tol * max(1, ||f||_phi)``.

    ``f`` must be centered. For functions without a second moment pass
    ``finite_variance=False``; the threshold is then absolute.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    est, _, norm2 = _weighted_moments(f, k_max, quad, breakpoints, normalized=False)
    coeffs = tuple(float(c) for c in est)
    scale = max(1.0, math.sqrt(norm2)) if finite_variance else 1.0
    threshold = tol * scale
    if abs(coeffs[0]) > threshold:
        raise ValueError(f"function is not centered: <f, H_0> = {coeffs[0]:.3e}")
    for k in range(1, k_max + 1):
        if abs(coeffs[k]) > threshold:
            return HermiteRank(k, k_max, coeffs, threshold)
    return HermiteRank(None, k_max, coeffs, threshold)


def half_factorial_ratio(k: int) -> float:
    """``[(2k-1)!!]^2 / (2k)!``, i.e. ``binom(2k, k) / 4^k``, via log-gamma."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.exp(math.lgamma(2 * k + 1) - 2 * math.lgamma(k + 1) - 2 * k * math.log(2))
