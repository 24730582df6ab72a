"""Finite measures on the level axis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = ["FiniteMeasure"]


@dataclass(frozen=True)
class FiniteMeasure:
    """Weighted atoms plus an optional density tabulated on an ascending grid.

    The density part is integrated with the trapezoid rule, so
    :meth:`discretize` turns the whole measure into weighted points.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density_grid: tuple[float, ...] | None = None
    density_values: tuple[float, ...] | None = None
    label: str = ""

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for x, w in atoms:
            if not np.isfinite(x):
                raise ValueError("atom locations must be finite")
            if not (w > 0 and np.isfinite(w)):
                raise ValueError(f"atom weights must be positive and finite, got {w}")
        if (self.density_grid is None) != (self.density_values is None):
            raise ValueError("density grid and values must be given together")
        if self.density_grid is not None:
            grid = tuple(float(g) for g in self.density_grid)
            vals = tuple(float(v) for v in self.density_values)
            if len(grid) != len(vals) or len(grid) < 2:
                raise ValueError("density grid and values need equal length >= 2")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("density grid must be strictly ascending")
            if min(vals) < 0 or not np.all(np.isfinite(vals)):
                raise ValueError("density values must be finite and nonnegative")
            object.__setattr__(self, "density_grid", grid)
            object.__setattr__(self, "density_values", vals)
        m = self.total_mass
        if not (m > 0 and np.isfinite(m)):
            raise ValueError("measure must have finite positive total mass")

    @classmethod
    def dirac(cls, location: float, weight: float = 1.0) -> "FiniteMeasure":
        return cls(atoms=((location, weight),))

    @classmethod
    def diracs(cls, locations: Sequence[float], weights: Sequence[float] | None = None):
        if weights is None:
            weights = [1.0] * len(locations)
        if len(weights) != len(locations):
            raise ValueError("locations and weights differ in length")
        return cls(atoms=tuple(zip(locations, weights)))

    @classmethod
    def gaussian_density(
        cls, mean: float, sd: float, halfwidth: float = 6.0, points: int = 241, mass: float = 1.0
    ) -> "FiniteMeasure":
        """Normal density with the given mean and sd, tabulated on
        ``mean +- halfwidth * sd`` and scaled to carry ``mass``."""
        if sd <= 0:
            raise ValueError("sd must be positive")
        grid = np.linspace(mean - halfwidth * sd, mean + halfwidth * sd, points)
        vals = mass * np.exp(-0.5 * ((grid - mean) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        return cls(density_grid=tuple(grid), density_values=tuple(vals),
                   label=f"gaussian({mean:g},{sd:g})")

    @property
    def is_atomic(self) -> bool:
        return self.density_grid is None

    @property
    def total_mass(self) -> float:
        m = sum(w for _, w in self.atoms)
        if self.density_grid is not None:
            m += float(integrate.trapezoid(self.density_values, self.density_grid))
        return m

    def scaled(self, c: float) -> "FiniteMeasure":
        if not c > 0:
            raise ValueError("scale must be positive")
        vals = None if self.density_values is None else tuple(c * v for v in self.density_values)
        return FiniteMeasure(tuple((x, c * w) for x, w in self.atoms), self.density_grid, vals,
                             self.label)

    def discretize(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and weights such that ``integrate(f) == weights @ f(locations)``."""
        locs = [x for x, _ in self.atoms]
        wts = [w for _, w in self.atoms]
        if self.density_grid is not None:
            g = np.asarray(self.density_grid)
            h = np.diff(g)
            tw = np.zeros_like(g)
            tw[:-1] += h / 2
            tw[1:] += h / 2
            keep = np.asarray(self.density_values) > 0
            locs.extend(g[keep])
            wts.extend((tw * np.asarray(self.density_values))[keep])
        return np.asarray(locs, dtype=float), np.asarray(wts, dtype=float)

    def integrate(self, f: Callable) -> float:
        x, w = self.discretize()
        return float(w @ np.asarray(f(x), dtype=float))

    def describe(self) -> dict:
        out: dict = {"total_mass": self.total_mass}
        if self.atoms:
            out["atoms"] = [[x, w] for x, w in self.atoms]
        if self.density_grid is not None:
            out["density"] = {
                "label": self.label or "grid",
                "min": self.density_grid[0],
                "max": self.density_grid[-1],
                "points": len(self.density_grid),
            }
        return out
