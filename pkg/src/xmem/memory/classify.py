"""Short/long memory classification through indicator-covariance series.

For ``X = G(Y)`` with ``Y`` stationary standard Gaussian, expanding the
bivariate normal density in Hermite polynomials gives

    int int Cov(1{X_0 > u}, 1{X_t > v}) mu(du) mu(dv)
        = sum_{k >= 1} a_{k-1}^2 / k * rho(t)^k

with ``a_m = int h_m(G^-(u)) phi(G^-(u)) mu(du)`` and ``h_m = H_m / sqrt(m!)``.
Integrating over lags turns each ``rho^k`` into :func:`rho_power_integral`,
so memory is decided by which of those integrals diverge with a
nonvanishing coefficient in front.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..bigauss import indicator_cov_grid
from ..distributions import ZDistribution, conditional_exceedance
from ..hermite import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    gaussian_expectation,
    hermite_coefficients,
    hermite_normalized,
)
from .covariance import CovarianceModel, rho_power_integrals
from .measures import FiniteMeasure
from .transforms import EVEN_COMPOSED, Transform, generalized_inverse

__all__ = [
    "SRD",
    "LRD",
    "BOUNDARY",
    "INCONCLUSIVE",
    "MemoryVerdict",
    "bk_coefficient",
    "classify_subordinated",
    "volatility_memory_series",
    "sigma2_numeric",
    "worst_verdict",
    "VERDICT_SEVERITY",
    "gaussian_levels",
]

SRD, LRD, BOUNDARY, INCONCLUSIVE = "SRD", "LRD", "BOUNDARY", "INCONCLUSIVE"
VERDICT_SEVERITY = {SRD: 0, INCONCLUSIVE: 1, BOUNDARY: 2, LRD: 3}

# sup_x |H_k(x)| exp(-x^2/4) / sqrt(k!)
CRAMER_CONSTANT = 1.086435
_BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class MemoryVerdict:
    verdict: str
    series_value: float
    certificate: tuple[int, str] | None
    mu: FiniteMeasure = field(repr=False)
    truncation: int
    tail_bound: float = 0.0
    leading_terms: tuple[float, ...] = ()

    def __post_init__(self):
        if self.verdict not in VERDICT_SEVERITY:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == LRD and self.certificate is None:
            raise ValueError("an LRD verdict needs a divergence certificate")

    def to_json(self) -> dict:
        sv = self.series_value
        return {
            "verdict": self.verdict,
            "series_value": sv if math.isfinite(sv) else ("inf" if sv > 0 else None),
            "certificate": None if self.certificate is None
            else {"k": self.certificate[0], "reason": self.certificate[1]},
            "mu": self.mu.describe(),
            "truncation": self.truncation,
            "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else None,
        }


def worst_verdict(verdicts) -> MemoryVerdict:
    """The most memory-indicating verdict (LRD > BOUNDARY > INCONCLUSIVE > SRD)."""
    verdicts = list(verdicts)
    if not verdicts:
        raise ValueError("no verdicts to compare")
    return max(verdicts, key=lambda v: VERDICT_SEVERITY[v.verdict])


def gaussian_levels(G: Transform, mu: FiniteMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian thresholds ``G^-(u)`` for the support points of ``mu`` and their weights."""
    locs, wts = mu.discretize()
    a = np.array([generalized_inverse(G, u) for u in locs], dtype=float)
    return a, wts


def _weighted_hermite(G, mu, k_max, scale=1.0):
    """``a_m = sum_i w_i h_m(a_i) phi(a_i)`` for m = 0..k_max."""
    a, w = gaussian_levels(G, mu)
    w = w / scale
    finite = np.isfinite(a)
    a, w = a[finite], w[finite]
    if a.size == 0:
        return np.zeros(k_max + 1)
    table = hermite_normalized(k_max, a)
    phi = np.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    return table @ (w * phi)


def bk_coefficient(G: Transform, mu: FiniteMeasure, k: int) -> float:
    """``(int H_k(G^-(u)) phi(G^-(u)) mu(du))^2``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    am = _weighted_hermite(G, mu, k)[k]
    if am == 0.0:
        return 0.0
    return float(math.exp(2 * math.log(abs(am)) + math.lgamma(k + 1)))


def _check_model(model: CovarianceModel):
    if not model.nonnegative:
        raise ValueError("the series criteria need a nonnegative correlation model")


def _decide(powers, coeffs_norm, integrals, tol, d, eta, skip=None):
    """Shared verdict logic.

    ``powers``: rho-powers of the terms; ``coeffs_norm``: scale-free
    coefficients compared with ``tol``; ``integrals``: rho-power integrals.
    Returns (verdict, certificate).
    """
    divergent = ~np.isfinite(integrals)
    if skip is not None:
        divergent &= ~skip
    if not np.any(divergent):
        return SRD, None
    live = divergent & (coeffs_norm > tol)
    if not np.any(live):
        return INCONCLUSIVE, None
    p = int(powers[np.argmax(live)])
    if eta is not None and abs(p * eta - d) <= _BOUNDARY_SLACK * max(1.0, d):
        return BOUNDARY, (p, "k·η = d")
    return LRD, (p, "k·η ≤ d")


def classify_subordinated(
    G: Transform,
    model: CovarianceModel,
    mu: FiniteMeasure,
    K_max: int = 4096,
    tol: float = 1e-10,
    lattice: bool = False,
) -> MemoryVerdict:
    """Decide short or long memory of ``X = G(Y)`` for the measure ``mu``.

    Monotone ``G`` use every rho-power; even-composed ``G`` only even ones
    (odd indicator coefficients cancel between ``Y > a`` and ``Y < -a``).
    Coefficients are normalised by ``mu(R)^2`` before comparison with
    ``tol`` so the verdict does not depend on the overall scale of ``mu``.
    """
    if K_max < 2:
        raise ValueError("K_max must be >= 2")
    _check_model(model)
    mass = mu.total_mass
    a = _weighted_hermite(G, mu, K_max - 1, scale=mass)  # a_0..a_{K-1}, mass-normalised
    eta = model.eta if model.family == "cauchy" else None
    d = model.d
    majorant = CRAMER_CONSTANT ** 2 / (2 * math.pi)  # bound on a_m^2 for a unit-mass measure

    if G.kind == EVEN_COMPOSED:
        powers = np.arange(2, K_max + 1, 2)
        coeff = 2.0 * a[powers - 1] ** 2 / (powers // 2)  # 4 a_{2j-1}^2 / (2j)
        bound_per = 2.0 * majorant
        step = 2
    else:
        powers = np.arange(1, K_max + 1)
        coeff = a[powers - 1] ** 2 / powers
        bound_per = majorant
        step = 1
    norm_coeff = a[powers - 1] ** 2
    integrals = rho_power_integrals(model, powers, lattice)
    verdict, cert = _decide(powers, norm_coeff, integrals, tol, d, eta)
    off_zero = _off_zero_integrals(model, lattice)

    if verdict == SRD:
        terms = coeff * off_zero(powers) * mass * mass
        series = float(math.fsum(terms))
        if lattice:
            series += _lag_zero_subordinated(G, mu)
        tail = _series_tail(off_zero, int(powers[-1]), bound_per * mass * mass, step)
    else:
        finite = np.isfinite(integrals)
        with np.errstate(invalid="ignore"):
            terms = np.where(coeff == 0.0, 0.0,
                             np.where(finite, coeff * integrals * mass * mass, np.inf))
        series = math.inf if verdict in (LRD, BOUNDARY) else math.nan
        tail = math.inf
    return MemoryVerdict(verdict, series, cert, mu, int(powers[-1]), tail,
                         tuple(float(x) for x in terms[:8]))


def _off_zero_integrals(model, lattice):
    """rho-power integrals without the lag-zero lattice point (which is handled exactly)."""
    if lattice:
        return lambda ks: rho_power_integrals(model, ks, True) - 1.0
    return lambda ks: rho_power_integrals(model, ks, False)


def _lag_zero_subordinated(G, mu):
    a, w = gaussian_levels(G, mu)
    cov = _pair_cov(1.0, a[:, None], a[None, :], G.kind)
    return float(w @ cov @ w)


def _series_tail(integrals, k_last, c, step):
    """Upper estimate of ``sum_{k > k_last, k = 0 mod step} c * step * I_k / k``.

    ``I_k`` is decreasing in k; beyond ``k_last`` it is modelled as
    ``I_K (K / k)^p`` with ``p`` read off ``I_K`` and ``I_{2K}``, which makes
    the sum ``~ c I_K / p``.
    """
    K = k_last + step
    i1, i2 = integrals([K, 2 * K])
    if not (np.isfinite(i1) and np.isfinite(i2)):
        return math.inf
    if i1 <= 0.0:
        return 0.0
    p = math.log2(i1 / i2) if i2 > 0 else math.inf
    if not p > 0:
        return math.inf
    if math.isinf(p):
        return c * step * i1 / K
    return c * i1 * (1.0 / p + step / K)


def volatility_memory_series(
    G: Transform,
    z: ZDistribution,
    model: CovarianceModel,
    mu: FiniteMeasure,
    K_max: int = 40,
    tol: float = 1e-10,
    lattice: bool = False,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MemoryVerdict:
    """Memory of ``X = G(Y) Z`` with white-noise ``Z`` for an atomic ``mu``.

    With ``F(y) = int P(G(y) Z > u) mu(du)`` the lag-``t`` covariance is
    ``sum_k <F, h_k>^2 rho(t)^k`` for ``t != 0``. The white-noise part only
    acts at lag zero and does not affect the verdict. Coefficients of odd
    order vanish identically when ``G`` is even and are not counted as
    evidence either way.
    """
    if not mu.is_atomic:
        raise ValueError("volatility series needs a purely atomic measure")
    if K_max < 2:
        raise ValueError("K_max must be >= 2")
    _check_model(model)
    mass = mu.total_mass
    levels = [(u, w / mass) for u, w in mu.atoms]

    def F(y):
        g = G(y)
        out = np.zeros_like(np.asarray(y, dtype=float))
        for u, w in levels:
            out = out + w * conditional_exceedance(g, z, u)
        return out

    coeffs = hermite_coefficients(F, K_max, quad, _volatility_breakpoints(G, z, mu), normalized=True)
    A = coeffs.values
    powers = np.arange(1, K_max + 1)
    integrals = rho_power_integrals(model, powers, lattice)
    skip = (powers % 2 == 1) if G.is_even else None
    eta = model.eta if model.family == "cauchy" else None
    verdict, cert = _decide(powers, A[1:] ** 2, integrals, tol, model.d, eta, skip)

    sq = A[1:] ** 2
    if skip is not None:
        sq = np.where(skip, 0.0, sq)

    def weighted(ints):
        # structurally zero coefficients stay zero even against a divergent integral
        with np.errstate(invalid="ignore"):
            return np.where(sq == 0.0, 0.0, sq * ints * mass * mass)

    if verdict == SRD:
        off_zero = _off_zero_integrals(model, lattice)
        terms = weighted(off_zero(powers))
        series = float(math.fsum(terms))
        if lattice:
            series += _lag_zero_volatility(G, z, mu, quad)
        # Bessel: the unseen coefficients carry at most the remaining L2 mass
        residual = max(0.0, coeffs.norm2 - float(np.sum(A ** 2)))
        tail = residual * float(off_zero([K_max + 1])[0]) * mass * mass
    else:
        terms = weighted(integrals)
        series = math.inf if verdict in (LRD, BOUNDARY) else math.nan
        tail = math.inf
    return MemoryVerdict(verdict, series, cert, mu, K_max, tail, tuple(float(x) for x in terms[:8]))


def _lag_zero_volatility(G, z, mu, quad):
    """int int [P(X > max(u, v)) - P(X > u) P(X > v)] mu(du) mu(dv) for X = G(Y) Z."""
    bps = _volatility_breakpoints(G, z, mu)
    locs = [u for u, _ in mu.atoms]
    wts = np.array([w for _, w in mu.atoms])
    tails = np.array([
        gaussian_expectation(lambda y, u=u: conditional_exceedance(G(y), z, u), quad, bps)
        for u in locs
    ])
    # P(X > u, X > v) = P(X > max(u, v))
    idx = np.arange(len(locs))
    top = np.where(np.greater.outer(locs, locs), idx[:, None], idx[None, :])
    joint = tails[top]
    return float(wts @ (joint - np.outer(tails, tails)) @ wts)


def _volatility_breakpoints(G: Transform, z: ZDistribution, mu: FiniteMeasure):
    """Gaussian points where ``y -> P(G(y) Z > u)`` may jump or kink."""
    pts = set()
    for u, _ in mu.atoms:
        targets = [u / k for k in z.kinks() if k != 0]
        targets.append(0.0)  # sign change of G
        for g in targets:
            try:
                y = generalized_inverse(G, g)
            except ValueError:
                continue
            if math.isfinite(y):
                pts.add(y)
                if G.is_even:
                    pts.add(-y)
    return sorted(pts)


def _pair_cov(r, a, b, kind):
    """Lag covariance of the exceedance indicators of ``G(Y)`` at Gaussian levels a, b."""
    if kind == EVEN_COMPOSED:
        return 2.0 * (indicator_cov_grid(r, a, b) + indicator_cov_grid(-r, a, b))
    return indicator_cov_grid(r, a, b)


def sigma2_numeric(
    r_of_t,
    mu: FiniteMeasure,
    T_cutoff: float = 200.0,
    lag_step: float = 0.01,
    d: int = 1,
    lattice: bool = False,
    transform: Transform | None = None,
) -> float:
    """Direct lag integral of ``int int |Cov(1{X_0 > u}, 1{X_t > v})| mu(du) mu(dv)``.

    ``r_of_t`` maps Euclidean lag to the correlation of the underlying
    Gaussian field. The lag integral runs over ``R^d`` (trapezoid with
    ``lag_step``, radially for d = 2) or, with ``lattice=True``, sums over
    ``Z^d`` within distance ``T_cutoff``. A RuntimeWarning is issued when a
    power-law extrapolation of the integrand puts more than 1% of the total
    beyond ``T_cutoff``.
    """
    G = transform if transform is not None else Transform.identity()
    a, w = gaussian_levels(G, mu)
    finite = np.isfinite(a)
    a, w = a[finite], w[finite]
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")

    if lattice:
        if d == 1:
            lags = np.arange(0, int(T_cutoff) + 1, dtype=float)
            mult = np.where(lags == 0, 1.0, 2.0)
        else:
            R = int(T_cutoff)
            i = np.arange(-R, R + 1)
            r2 = (i[:, None] ** 2 + i[None, :] ** 2).ravel()
            r2 = r2[r2 <= R * R]
            uniq, counts = np.unique(r2, return_counts=True)
            lags = np.sqrt(uniq.astype(float))
            mult = counts.astype(float)
    else:
        count = int(round(T_cutoff / lag_step)) + 1
        lags = np.linspace(0.0, T_cutoff, count)
        tw = np.full(count, lag_step)
        tw[0] = tw[-1] = lag_step / 2
        mult = 2.0 * tw if d == 1 else 2 * math.pi * lags * tw

    r = np.clip(np.asarray(r_of_t(lags), dtype=float), -1.0, 1.0)
    ww = np.outer(w, w).ravel()
    A = np.repeat(a, a.size)
    B = np.tile(a, a.size)
    integrand = np.empty(lags.size)
    chunk = max(1, 200_000 // max(1, ww.size))
    for lo in range(0, lags.size, chunk):
        rr = r[lo:lo + chunk, None]
        cov = _pair_cov(rr, A[None, :], B[None, :], G.kind)
        integrand[lo:lo + chunk] = np.abs(cov) @ ww
    total = float(integrand @ mult)

    tail = _lag_tail_estimate(lags, integrand, d)
    if tail > 0.01 * abs(total):
        warnings.warn(
            f"lag tail beyond {T_cutoff:g} estimated at {tail:.3g} "
            f"({tail / abs(total) if total else math.inf:.1%} of the total)",
            RuntimeWarning,
            stacklevel=2,
        )
    return total


def _lag_tail_estimate(lags, g, d):
    """Power-law extrapolation of the lag integrand beyond the last lag."""
    sel = lags >= 0.5 * lags[-1]
    x, y = lags[sel], g[sel]
    pos = (y > 0) & (x > 0)
    if pos.sum() < 3:
        return 0.0
    slope, _ = np.polyfit(np.log(x[pos]), np.log(y[pos]), 1)
    p = -slope
    T, gT = x[pos][-1], y[pos][-1]
    if p <= d:
        return math.inf
    if d == 1:
        return 2.0 * gT * T / (p - 1)
    return 2 * math.pi * gT * T * T / (p - 2)
