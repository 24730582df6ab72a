"""Excursion volumes, Monte Carlo ensembles and variance-scaling exponents."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bigauss import indicator_cov_grid
from .config import ExperimentConfig
from .distributions import ZDistribution, conditional_exceedance
from .fieldsim import (
    FieldSample,
    RngSpec,
    marginal_tail,
    simulate_gaussian_1d,
    simulate_gaussian_2d,
    subordinate,
    volatility_breakpoints,
    volatility_field,
)
from .hermite import (
    DEFAULT_QUADRATURE,
    gaussian_expectation,
    hermite_coefficients,
    hermite_rank,
)
from .memory import CovarianceModel, Transform, generalized_inverse
from .memory.transforms import EVEN_COMPOSED, MONOTONE_DECREASING

__all__ = [
    "ExcursionStat",
    "ScalingReport",
    "CltTheory",
    "LevelEnsemble",
    "EnsembleResult",
    "excursion_volume",
    "excursion_stat",
    "normalized_stat",
    "mc_ensemble",
    "scaling_exponent",
    "partial_sum_scaling",
    "xi_and_rank",
    "window_variance",
]


@dataclass(frozen=True)
class ExcursionStat:
    level: float
    raw_volume: float
    centered_normalized: float
    window_n: int
    d: int


@dataclass(frozen=True)
class ScalingReport:
    n_values: tuple[int, ...]
    variances: tuple[float, ...]
    exponent: float
    exponent_stderr: float
    replicates: int
    statistic: str = "variance"
    bootstrap_stderr: float | None = None


@dataclass(frozen=True)
class CltTheory:
    q: int | None  # None: xi vanishes up to k_max
    sigma2: float
    predicted_exponent: float
    coefficients: tuple[float, ...] = ()
    boundary: bool = False

    @property
    def xi_zero(self) -> bool:
        return self.q is None


def excursion_volume(sample: FieldSample, u: float) -> float:
    """Volume of ``{t : X_t > u}`` (strict inequality)."""
    return float(np.count_nonzero(sample.values > u)) * sample.cell_volume


def normalized_stat(sample: FieldSample, u: float, tail: float) -> float:
    """``(volume - n^d * tail) / n^(d/2)``."""
    if not 0.0 <= tail <= 1.0:
        raise ValueError("tail must be a probability")
    n, d = sample.n, sample.d
    return (excursion_volume(sample, u) - n**d * sample.cell_volume * tail) / n ** (d / 2)


def excursion_stat(sample: FieldSample, u: float, tail: float) -> ExcursionStat:
    return ExcursionStat(u, excursion_volume(sample, u), normalized_stat(sample, u, tail),
                         sample.n, sample.d)


def scaling_exponent(n_values, variances, replicates: int = 0,
                     statistic: str = "variance") -> ScalingReport:
    """OLS slope of ``log2(variance)`` on ``log2(n)`` with its residual standard error."""
    n = np.asarray(n_values, dtype=float)
    v = np.asarray(variances, dtype=float)
    if n.shape != v.shape or n.size < 3:
        raise ValueError("need >= 3 (n, variance) pairs")
    if np.any(np.diff(n) <= 0):
        raise ValueError("n_values must be strictly increasing")
    if n[-1] / n[0] < 8:
        raise ValueError("n_values must span at least a factor of 8")
    if np.any(~(v > 0)) or not np.all(np.isfinite(v)):
        raise ValueError("variances must be positive and finite")
    x = np.log2(n)
    y = np.log2(v)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xc
    dof = max(1, x.size - 2)
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    se = max(se, np.finfo(float).eps * max(1.0, abs(slope)))
    return ScalingReport(tuple(int(k) for k in n_values), tuple(float(s) for s in v), slope, se,
                         replicates, statistic)


# -- theory --------------------------------------------------------------


def _exceedance_function(G: Transform, z: ZDistribution | None, u: float):
    """``y -> P(X_0 > u | Y_0 = y)`` and its break points."""
    if z is not None:
        return (lambda y: conditional_exceedance(G(y), z, u)), volatility_breakpoints(G, z, u)
    lo, hi = G.image
    if u < lo:
        return (lambda y: np.ones_like(np.asarray(y, dtype=float))), []
    if u >= hi:
        return (lambda y: np.zeros_like(np.asarray(y, dtype=float))), []
    a = generalized_inverse(G, u)
    if G.kind == EVEN_COMPOSED:
        return (lambda y: (np.abs(y) > a).astype(float)), [a, -a] if a > 0 else []
    if G.kind == MONOTONE_DECREASING:
        return (lambda y: (np.asarray(y) < a).astype(float)), [a] if math.isfinite(a) else []
    return (lambda y: (np.asarray(y) > a).astype(float)), [a] if math.isfinite(a) else []


def xi_and_rank(
    G: Transform,
    z: ZDistribution | None,
    u: float,
    model: CovarianceModel | None = None,
    k_max: int = 12,
    tol: float = 1e-7,
    quad=DEFAULT_QUADRATURE,
) -> CltTheory:
    """Hermite rank ``q`` of ``xi(y) = P(X_0 > u | Y_0 = y) - P(X_0 > u)`` and the
    variance exponent it implies.

    ``sigma2 = E[chi(Y_0)]`` with ``chi(y) = F(y) (1 - F(y))`` the conditional
    variance of the indicator, for the unit window. For long-memory power
    models the exponent is ``max(2d - q eta, d)``; it is ``d`` whenever
    ``xi`` vanishes or correlations are summable.
    """
    F, bps = _exceedance_function(G, z, u)
    mean = gaussian_expectation(F, quad, bps)
    xi = lambda y: F(y) - mean
    rank = hermite_rank(xi, k_max=k_max, tol=tol, quad=quad, breakpoints=bps)
    sigma2 = gaussian_expectation(lambda y: F(y) * (1.0 - F(y)), quad, bps)
    d = model.d if model is not None else 1
    q = rank.rank
    boundary = False
    if q is None or model is None or model.family != "cauchy":
        pred = float(d)
    else:
        pred = max(2.0 * d - q * model.eta, float(d))
        boundary = abs(q * model.eta - d) <= 0.1 * d
    return CltTheory(q, float(sigma2), pred, rank.coefficients, boundary)


def window_variance(
    G: Transform,
    z: ZDistribution | None,
    u: float,
    model: CovarianceModel,
    n: int,
    k_max: int = 60,
    quad=DEFAULT_QUADRATURE,
) -> float:
    """Exact variance of the excursion volume over the lattice window ``{0..n-1}^d``.

    Pure subordination uses the closed-form indicator covariance; with a
    volatility factor the lag covariance is the Hermite series of
    ``P(X > u | Y = y)`` (truncated at ``k_max``) and lag zero is the
    Bernoulli variance.
    """
    F, bps = _exceedance_function(G, z, u)
    p = marginal_tail(G, z, u)
    d = model.d
    lags1 = np.arange(0, n, dtype=float)
    if d == 1:
        dist = lags1
        mult = np.where(lags1 == 0, n, 2.0 * (n - lags1))
    else:
        h1, h2 = np.meshgrid(lags1, lags1, indexing="ij")
        dist = np.hypot(h1, h2).ravel()
        w1 = np.where(lags1 == 0, n, 2.0 * (n - lags1))
        mult = np.outer(w1, w1).ravel()
    rho = np.asarray(model.corr(dist), dtype=float)
    off = dist > 0
    cov = np.empty_like(rho)
    cov[~off] = p * (1.0 - p)
    if z is None:
        a = generalized_inverse(G, u) if G.image[0] <= u <= G.image[1] else math.inf
        r = rho[off]
        if not math.isfinite(a):
            cov[off] = 0.0
        elif G.kind == EVEN_COMPOSED:
            cov[off] = 2.0 * (indicator_cov_grid(r, a, a) + indicator_cov_grid(-r, a, a))
        else:
            cov[off] = indicator_cov_grid(r, a, a)
    else:
        A = hermite_coefficients(F, k_max, quad, bps, normalized=True).values
        k = np.arange(1, k_max + 1)
        cov[off] = (rho[off, None] ** k[None, :]) @ (A[1:] ** 2)
    return float(mult @ cov)


# -- Monte Carlo ---------------------------------------------------------


@dataclass(frozen=True)
class LevelEnsemble:
    level: float
    tail: float
    n_values: tuple[int, ...]
    mean: tuple[float, ...]
    variance: tuple[float, ...]
    skewness: tuple[float, ...]
    kurtosis: tuple[float, ...]
    scaling: ScalingReport
    theory: CltTheory | None = None


@dataclass(frozen=True)
class EnsembleResult:
    config: ExperimentConfig
    levels: tuple[LevelEnsemble, ...]
    stats: np.ndarray = field(repr=False)  # (levels, n_values, replicates)


def _simulate_x(cfg: ExperimentConfig, model, G, z, n, rep):
    rng = RngSpec(cfg.seed, rep)
    y = simulate_gaussian_1d(n, model, rng) if cfg.d == 1 else simulate_gaussian_2d(n, model, rng)
    if z is not None:
        return volatility_field(y, G, z, rng)
    return subordinate(y, G)


def _window(values, n, d):
    return values[:n] if d == 1 else values[:n, :n]


def _bootstrap_stderr(raw, n_values, seed, draws=200):
    """Exponent standard error from resampling replicates (raw: n_values x replicates)."""
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(2**31,))))
    reps = raw.shape[1]
    slopes = []
    for _ in range(draws):
        idx = gen.integers(0, reps, reps)
        v = raw[:, idx].var(axis=1, ddof=1)
        if np.all(v > 0):
            slopes.append(scaling_exponent(n_values, v).exponent)
    return float(np.std(slopes, ddof=1)) if len(slopes) > 2 else None


def mc_ensemble(cfg: ExperimentConfig, threads: int | None = None) -> EnsembleResult:
    """Replicate the field, measure excursion statistics on nested windows, and fit exponents.

    Each replicate is simulated once at the largest window; smaller windows
    are its leading sub-blocks. Replicate ``i`` uses stream ``i`` of the master
    seed, so results do not depend on ``threads``.
    """
    if cfg.seed is None:
        raise ValueError("mc_ensemble needs a seed")
    model = cfg.build_model()
    G = cfg.build_transform()
    z = cfg.build_z()
    levels = cfg.levels or (0.0,)
    ns = cfg.resolved_n_values()
    reps = cfg.resolved_replicates()
    d = cfg.d
    tails = [marginal_tail(G, z, u) for u in levels]
    n_max = ns[-1]

    def one(rep):
        x = _simulate_x(cfg, model, G, z, n_max, rep).values
        out = np.empty((len(levels), len(ns)))
        for j, n in enumerate(ns):
            win = _window(x, n, d)
            for i, u in enumerate(levels):
                out[i, j] = np.count_nonzero(win > u)
        return out

    counts = np.empty((len(levels), len(ns), reps))
    workers = threads or cfg.threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rep, res in enumerate(pool.map(one, range(reps))):
                counts[:, :, rep] = res
    else:
        for rep in range(reps):
            counts[:, :, rep] = one(rep)

    nd = np.asarray(ns, dtype=float) ** d
    stat = (counts - nd[None, :, None] * np.asarray(tails)[:, None, None]) / np.sqrt(nd)[None, :, None]
    out = []
    for i, u in enumerate(levels):
        s = stat[i]
        var = s.var(axis=1, ddof=1)
        raw_var = var * nd
        try:
            rep_ = scaling_exponent(ns, raw_var, reps)
            boot = _bootstrap_stderr(counts[i], ns, cfg.seed)
            rep_ = ScalingReport(rep_.n_values, rep_.variances, rep_.exponent,
                                 rep_.exponent_stderr, reps, "variance", boot)
        except ValueError:
            rep_ = ScalingReport(tuple(ns), tuple(raw_var), math.nan, math.nan, reps)
        try:
            theory = xi_and_rank(G, z, u, model)
        except ValueError:
            theory = None
        out.append(LevelEnsemble(
            level=float(u),
            tail=float(tails[i]),
            n_values=tuple(ns),
            mean=tuple(float(x) for x in s.mean(axis=1)),
            variance=tuple(float(x) for x in var),
            skewness=tuple(float(x) for x in stats.skew(s, axis=1, bias=False)),
            kurtosis=tuple(float(x) for x in stats.kurtosis(s, axis=1, fisher=True, bias=False)),
            scaling=rep_,
            theory=theory,
        ))
    return EnsembleResult(cfg, tuple(out), stat)


@dataclass(frozen=True)
class PartialSumResult:
    report: ScalingReport
    predicted_exponent: float
    mean_x: float
    quantiles: tuple[tuple[float, float, float], ...]  # (q25, median, q75) per n
    alpha: float
    eta: float


def partial_sum_scaling(cfg: ExperimentConfig) -> PartialSumResult:
    """Dispersion scaling of ``S_n = sum_{t < n} (X_t - E X)`` for ``X = exp(Y^2 / (2 alpha))``.

    The spread is the inter-quartile range across replicates (the variance
    is infinite for ``alpha < 2``). Prediction: ``max(1/alpha, 1 - eta)``.
    """
    if cfg.transform_name != "exp_sq":
        raise ValueError("partial sums are defined for the exp_sq transform")
    alpha = cfg.alpha
    if alpha is None or not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    if cfg.model_family != "cauchy" or cfg.d != 1:
        raise ValueError("partial sums need a one-dimensional cauchy model")
    model = cfg.build_model()
    G = cfg.build_transform()
    mean_x = gaussian_expectation(G)
    closed = (1.0 - 1.0 / alpha) ** -0.5
    if abs(mean_x - closed) > 1e-8 * closed:
        raise ArithmeticError(f"E X by quadrature {mean_x} disagrees with {closed}")
    ns = cfg.resolved_n_values()
    reps = cfg.resolved_replicates()
    n_max = ns[-1]
    idx = np.asarray(ns) - 1

    def one(rep):
        y = simulate_gaussian_1d(n_max, model, RngSpec(cfg.seed, rep))
        c = np.cumsum(G(y.values) - mean_x)
        return c[idx]

    sums = np.empty((len(ns), reps))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for rep, res in enumerate(pool.map(one, range(reps))):
                sums[:, rep] = res
    else:
        for rep in range(reps):
            sums[:, rep] = one(rep)
    q25, q50, q75 = np.quantile(sums, [0.25, 0.5, 0.75], axis=1)
    iqr = q75 - q25
    report = scaling_exponent(ns, iqr, reps, statistic="iqr")
    pred = max(1.0 / alpha, 1.0 - model.eta)
    quants = tuple((float(a), float(b), float(c)) for a, b, c in zip(q25, q50, q75))
    return PartialSumResult(report, pred, float(mean_x), quants, float(alpha), float(model.eta))
