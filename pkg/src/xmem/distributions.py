"""Laws for the white-noise factor ``Z`` of a stochastic-volatility field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["ZDistribution", "conditional_exceedance"]

_FAMILIES = ("gaussian", "pareto", "symmetric_pareto", "exponential", "rademacher")


def _norm_sf(x):
    return 0.5 * special.erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class ZDistribution:
    """One of a handful of white-noise laws.

    Pareto laws use ``P(|Z| > x) = (x_min / x)^alpha`` for ``x >= x_min``; by
    default ``x_min = 2^(-1/alpha)`` so the median of ``|Z|`` is 1. The
    symmetric Pareto attaches an independent fair sign.
    """

    family: str = "gaussian"
    alpha: float | None = None
    x_min: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown Z family {self.family!r}")
        if self.family in ("pareto", "symmetric_pareto"):
            if not (self.alpha is not None and self.alpha > 0):
                raise ValueError("pareto Z needs alpha > 0")
            if self.x_min is None:
                object.__setattr__(self, "x_min", 2.0 ** (-1.0 / self.alpha))
            elif not self.x_min > 0:
                raise ValueError("x_min must be positive")
        if self.family == "exponential":
            if self.lam is None:
                object.__setattr__(self, "lam", 1.0)
            elif not self.lam > 0:
                raise ValueError("lambda must be positive")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def pareto(cls, alpha, x_min=None):
        return cls("pareto", alpha=alpha, x_min=x_min)

    @classmethod
    def symmetric_pareto(cls, alpha, x_min=None):
        return cls("symmetric_pareto", alpha=alpha, x_min=x_min)

    @classmethod
    def exponential(cls, lam=1.0):
        return cls("exponential", lam=lam)

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @property
    def symmetric(self) -> bool:
        return self.family in ("gaussian", "symmetric_pareto", "rademacher")

    @property
    def label(self) -> str:
        if self.family in ("pareto", "symmetric_pareto"):
            return f"{self.family}({self.alpha:g})"
        if self.family == "exponential":
            return f"exponential({self.lam:g})"
        return self.family

    def _pareto_sf(self, x):
        with np.errstate(divide="ignore"):
            return np.where(x >= self.x_min, (self.x_min / np.maximum(x, self.x_min)) ** self.alpha, 1.0)

    def tail(self, x):
        """``P(Z > x)``."""
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "gaussian":
            return _norm_sf(x)
        if f == "pareto":
            return self._pareto_sf(x)
        if f == "symmetric_pareto":
            ax = np.abs(x)
            half = 0.5 * self._pareto_sf(ax)
            return np.where(x >= 0, half, 1.0 - half)
        if f == "exponential":
            return np.where(x <= 0, 1.0, np.exp(-self.lam * np.maximum(x, 0.0)))
        return np.where(x < -1, 1.0, np.where(x < 1, 0.5, 0.0))

    def cdf_below(self, x):
        """``P(Z < x)`` (strict)."""
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "rademacher":
            return np.where(x <= -1, 0.0, np.where(x <= 1, 0.5, 1.0))
        if f == "symmetric_pareto":
            return self.tail(-x)
        if f == "gaussian":
            return _norm_sf(-x)
        # continuous laws: P(Z < x) = 1 - P(Z > x)
        return 1.0 - self.tail(x)

    def kinks(self) -> tuple[float, ...]:
        """Points where the tail function is not smooth."""
        f = self.family
        if f == "pareto":
            return (self.x_min,)
        if f == "symmetric_pareto":
            return (-self.x_min, self.x_min)
        if f == "exponential":
            return (0.0,)
        if f == "rademacher":
            return (-1.0, 1.0)
        return ()

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        f = self.family
        if f == "gaussian":
            return rng.standard_normal(size)
        if f in ("pareto", "symmetric_pareto"):
            u = rng.random(size)
            mag = self.x_min * (1.0 - u) ** (-1.0 / self.alpha)
            if f == "pareto":
                return mag
            return np.where(rng.random(size) < 0.5, -mag, mag)
        if f == "exponential":
            return rng.exponential(1.0 / self.lam, size)
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)

    def describe(self) -> dict:
        out = {"family": self.family}
        if self.alpha is not None:
            out["alpha"] = self.alpha
            out["x_min"] = self.x_min
        if self.lam is not None:
            out["lambda"] = self.lam
        return out


def conditional_exceedance(g, z: ZDistribution, u: float):
    """``P(g Z > u)`` for fixed volatility values ``g`` (vectorised)."""
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = u / g
        pos = z.tail(np.where(g > 0, ratio, 0.0))
        neg = z.cdf_below(np.where(g < 0, ratio, 0.0))
    zero = 1.0 if 0.0 > u else 0.0
    out = np.where(g > 0, pos, np.where(g < 0, neg, zero))
    # infinite volatility: the sign of Z decides
    if np.any(np.isinf(g)):
        out = np.where(np.isposinf(g), z.tail(0.0), out)
        out = np.where(np.isneginf(g), z.cdf_below(0.0), out)
    return out
