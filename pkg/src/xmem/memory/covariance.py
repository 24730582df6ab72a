"""Isotropic correlation models and integrals of their powers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

__all__ = ["CovarianceModel", "rho_power_integral", "rho_power_integrals"]

_FAMILIES = ("cauchy", "exp_decay", "white_noise", "user_grid")
_LATTICE_DIRECT_1D = 2000
_LATTICE_RADIUS_2D = 100


@dataclass(frozen=True)
class CovarianceModel:
    """Correlation ``rho`` as a function of the Euclidean lag.

    ``cauchy``: ``(1 + |t|^2)^(-eta/2)``; ``exp_decay``: ``exp(-lam |t|)``;
    ``white_noise``: 1 at lag 0 and 0 elsewhere; ``user_grid``: linear
    interpolation of tabulated values with a fitted power-law tail.
    """

    family: str
    d: int = 1
    eta: float | None = None
    lam: float | None = None
    grid: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown covariance family {self.family!r}")
        if self.d not in (1, 2):
            raise ValueError("only d = 1 and d = 2 are supported")
        if self.family == "cauchy" and not (self.eta is not None and self.eta > 0):
            raise ValueError("cauchy model needs eta > 0")
        if self.family == "exp_decay" and not (self.lam is not None and self.lam > 0):
            raise ValueError("exp_decay model needs lam > 0")
        if self.family == "user_grid":
            if self.grid is None or self.values is None or len(self.grid) != len(self.values):
                raise ValueError("user_grid needs grid and values of equal length")
            g = tuple(float(x) for x in self.grid)
            v = tuple(float(x) for x in self.values)
            if len(g) < 8 or g[0] != 0.0 or np.any(np.diff(g) <= 0):
                raise ValueError("user_grid lags must start at 0, ascend, and hold >= 8 points")
            if v[0] != 1.0:
                raise ValueError("correlation at lag 0 must be 1")
            if np.any(np.abs(v[1:]) >= 1.0):
                raise ValueError("|rho(t)| must be < 1 away from the origin")
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "values", v)

    @classmethod
    def cauchy(cls, eta: float, d: int = 1) -> "CovarianceModel":
        return cls("cauchy", d=d, eta=float(eta))

    @classmethod
    def exp_decay(cls, lam: float, d: int = 1) -> "CovarianceModel":
        return cls("exp_decay", d=d, lam=float(lam))

    @classmethod
    def white_noise(cls, d: int = 1) -> "CovarianceModel":
        return cls("white_noise", d=d)

    @classmethod
    def user_grid(cls, grid, values, d: int = 1) -> "CovarianceModel":
        return cls("user_grid", d=d, grid=tuple(grid), values=tuple(values))

    def __call__(self, t):
        return self.corr(t)

    def corr(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        if self.family == "cauchy":
            return (1.0 + t * t) ** (-self.eta / 2)
        if self.family == "exp_decay":
            return np.exp(-self.lam * t)
        if self.family == "white_noise":
            return np.where(t == 0, 1.0, 0.0)
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        out = np.interp(t, g, v)
        beyond = t > g[-1]
        if np.any(beyond):
            p, _ = self.tail_fit()
            out = np.where(beyond, v[-1] * (np.maximum(t, g[-1]) / g[-1]) ** (-p), out)
        return out

    @property
    def nonnegative(self) -> bool:
        if self.family == "user_grid":
            return bool(np.all(np.asarray(self.values) >= 0))
        return True

    def tail_fit(self) -> tuple[float, float]:
        """Power-law exponent ``p`` and prefactor fitted on the last fifth of a user grid."""
        return _tail_fit(self.grid, self.values)

    def describe(self) -> dict:
        out = {"family": self.family, "d": self.d}
        if self.eta is not None:
            out["eta"] = self.eta
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.family == "user_grid":
            out["points"] = len(self.grid)
        return out

    def decay_exponent(self) -> float:
        """Power-law decay exponent of rho (``inf`` for faster-than-polynomial decay)."""
        if self.family == "cauchy":
            return self.eta
        if self.family == "user_grid":
            return self.tail_fit()[0]
        return math.inf


@lru_cache(maxsize=64)
def _tail_fit(grid, values):
    g = np.asarray(grid)
    v = np.asarray(values)
    start = int(0.8 * len(g))
    sel = slice(max(start, 1), None)
    gs, vs = g[sel], v[sel]
    if np.any(vs <= 0):
        return math.inf, 0.0
    slope, icpt = np.polyfit(np.log(gs), np.log(vs), 1)
    return float(-slope), float(math.exp(icpt))


def _cauchy_continuous(s, eta, d):
    x = np.asarray(s, dtype=float) * eta
    out = np.full(x.shape, np.inf)
    ok = x > d
    xo = x[ok]
    out[ok] = np.exp((d / 2) * math.log(math.pi) + special.gammaln((xo - d) / 2)
                     - special.gammaln(xo / 2))
    return out


def _cauchy_tail_1d(M, p):
    """int_M^inf (1 + t^2)^(-p) dt for p > 1/2."""
    w = 1.0 / (1.0 + M * M)
    return 0.5 * special.beta(p - 0.5, 0.5) * special.betainc(p - 0.5, 0.5, w)


def _cauchy_lattice_1d(s, eta):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.full(s.shape, np.inf)
    ok = s * eta > 1
    if not np.any(ok):
        return out
    N = _LATTICE_DIRECT_1D
    t = np.arange(1, N + 1, dtype=float)
    p = s[ok] * eta / 2
    direct = ((1.0 + t[None, :] ** 2) ** (-p[:, None])).sum(axis=1)
    # Euler-Maclaurin for sum_{t > N}
    fN = (1.0 + N * N) ** (-p)
    dfN = -2 * p * N * (1.0 + N * N) ** (-p - 1)
    tail = _cauchy_tail_1d(N, p) - fN / 2 - dfN / 12
    out[ok] = 1.0 + 2.0 * (direct + tail)
    return out


@lru_cache(maxsize=4)
def _disk_shells(radius):
    i = np.arange(-radius, radius + 1)
    r2 = (i[:, None] ** 2 + i[None, :] ** 2).ravel()
    r2 = r2[r2 <= radius * radius]
    uniq, counts = np.unique(r2, return_counts=True)
    return uniq.astype(float), counts.astype(float)


def _lattice_2d(s, shell_values, radial_tail):
    """sum over Z^2 of f(|t|)^s using exact shells inside a disk plus a radial tail integral."""
    R = _LATTICE_RADIUS_2D
    r2, counts = _disk_shells(R)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    logf = shell_values(r2)
    out = np.empty(s.shape)
    for lo in range(0, len(s), 256):
        chunk = s[lo:lo + 256]
        out[lo:lo + 256] = np.exp(chunk[:, None] * logf[None, :]) @ counts
    # shells fill the disk of area pi (R + 1/2)^2 on average
    return out + radial_tail(s, R + 0.5)


def rho_power_integrals(model: CovarianceModel, ks, lattice: bool = False) -> np.ndarray:
    """Vectorised :func:`rho_power_integral` over an array of (possibly real) powers."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if np.any(ks <= 0):
        raise ValueError("powers must be positive")
    d = model.d
    fam = model.family
    if fam == "white_noise":
        return np.full(ks.shape, 1.0 if lattice else 0.0)
    if fam == "cauchy":
        eta = model.eta
        if not lattice:
            return _cauchy_continuous(ks, eta, d)
        if d == 1:
            return _cauchy_lattice_1d(ks, eta)
        out = np.full(ks.shape, np.inf)
        ok = ks * eta > 2
        if np.any(ok):
            out[ok] = _lattice_2d(
                ks[ok],
                lambda r2: -eta / 2 * np.log1p(r2),
                lambda s, R: 2 * math.pi * (1 + R * R) ** (1 - s * eta / 2) / (s * eta - 2),
            )
        return out
    if fam == "exp_decay":
        lam = model.lam
        if not lattice:
            return 2.0 / (ks * lam) if d == 1 else 2 * math.pi / (ks * lam) ** 2
        if d == 1:
            return 1.0 / np.tanh(ks * lam / 2)
        return _lattice_2d(
            ks,
            lambda r2: -lam * np.sqrt(r2),
            lambda s, R: 2 * math.pi * np.exp(-s * lam * R) * (R / (s * lam) + 1 / (s * lam) ** 2),
        )
    return _user_grid_integrals(model, ks, lattice)


def _user_grid_integrals(model, ks, lattice):
    g = np.asarray(model.grid)
    v = np.asarray(model.values)
    d = model.d
    p, _ = model.tail_fit()
    out = np.empty(ks.shape)
    for i, k in enumerate(ks):
        if k * p <= d:
            out[i] = np.inf
            continue
        if lattice:
            if d == 1:
                t = np.arange(1, int(g[-1]) + 1)
                body = 1.0 + 2.0 * np.sum(np.abs(model.corr(t)) ** k)
                tail_from = t[-1] + 0.5 if len(t) else 0.5
            else:
                r2, counts = _disk_shells(int(g[-1]))
                body = float(counts @ (np.abs(model.corr(np.sqrt(r2))) ** k))
                tail_from = int(g[-1]) + 0.5
            G = tail_from
        else:
            f = np.abs(v) ** k
            if d == 1:
                body = 2.0 * integrate.trapezoid(f, g)
            else:
                body = 2 * math.pi * integrate.trapezoid(f * g, g)
            G = g[-1]
        vG = abs(float(model.corr(G))) ** k
        # analytic power-law tail beyond the grid
        if d == 1:
            tail = 2.0 * vG * G / (k * p - 1)
        else:
            tail = 2 * math.pi * vG * G * G / (k * p - 2)
        out[i] = body + tail
    return out


def rho_power_integral(model: CovarianceModel, k: float, lattice: bool = False) -> float:
    """``int_{R^d} |rho| rho^(k-1) dt`` (or the lattice sum over Z^d).

    Returns ``inf`` when the integral diverges; for the power-law families
    this happens exactly when ``k * eta <= d``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(rho_power_integrals(model, [k], lattice)[0])
