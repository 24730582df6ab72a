"""Subordination transforms ``X = G(Y)`` and their generalized inverses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Transform",
    "OutOfRangeError",
    "generalized_inverse",
    "MONOTONE_INCREASING",
    "MONOTONE_DECREASING",
    "EVEN_COMPOSED",
]

MONOTONE_INCREASING = "monotone_increasing"
MONOTONE_DECREASING = "monotone_decreasing"
EVEN_COMPOSED = "even_composed"
_KINDS = (MONOTONE_INCREASING, MONOTONE_DECREASING, EVEN_COMPOSED)
_SIGNS = ("signed", "nonnegative", "nonpositive")

_PROBE = np.linspace(-8.0, 8.0, 1000)
_BRACKET_LIMIT = 64.0
_BISECT_TOL = 1e-12


class OutOfRangeError(ValueError):
    """Level lies outside the closure of the transform's image."""


def _quiet(func, y):
    with np.errstate(over="ignore", invalid="ignore"):
        return func(y)


@dataclass(frozen=True)
class Transform:
    """A deterministic map ``G`` applied to a standard Gaussian field.

    ``func`` evaluates ``G`` on the whole real line (vectorised). For
    ``even_composed`` transforms ``func`` must already be even and
    nondecreasing on ``[0, inf)``; ``inverse_hint`` then inverts the
    restriction to ``[0, inf)``.
    """

    kind: str
    func: Callable = field(compare=False)
    label: str
    inverse_hint: Callable | None = field(default=None, compare=False)
    domain_sign: str = "signed"
    tail_index: float | None = None
    image: tuple[float, float] | None = None
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.domain_sign not in _SIGNS:
            raise ValueError(f"unknown domain sign {self.domain_sign!r}")
        vals = np.asarray(_quiet(self.func, _PROBE), dtype=float)
        if vals.shape != _PROBE.shape:
            raise ValueError("transform must be vectorised")
        finite = np.isfinite(vals)
        dv = np.diff(vals)
        ok = finite[1:] & finite[:-1]
        slack = 1e-12 * np.maximum(1.0, np.abs(vals[1:]))
        if self.kind == MONOTONE_INCREASING and np.any(dv[ok] < -slack[ok]):
            raise ValueError(f"{self.label}: not nondecreasing on the probe grid")
        if self.kind == MONOTONE_DECREASING and np.any(dv[ok] > slack[ok]):
            raise ValueError(f"{self.label}: not nonincreasing on the probe grid")
        if self.kind == EVEN_COMPOSED:
            mirror = np.asarray(_quiet(self.func, -_PROBE), dtype=float)
            if not np.allclose(vals, mirror, rtol=1e-12, atol=0, equal_nan=True):
                raise ValueError(f"{self.label}: not even on the probe grid")
            half = _PROBE >= 0
            dh = np.diff(vals[half])
            if np.any(dh < -1e-12 * np.maximum(1.0, np.abs(vals[half][1:]))):
                raise ValueError(f"{self.label}: base is not nondecreasing on [0, inf)")
        if self.image is None:
            lo, hi = self._probe_image()
            object.__setattr__(self, "image", (lo, hi))

    def _probe_image(self):
        ends = np.asarray(_quiet(self.func, np.array([-_BRACKET_LIMIT, 0.0, _BRACKET_LIMIT])))
        if self.kind == EVEN_COMPOSED:
            return float(ends[1]), float(ends[2])
        return float(np.min(ends)), float(np.max(ends))

    def __call__(self, y):
        return _quiet(self.func, np.asarray(y, dtype=float))

    @property
    def is_even(self) -> bool:
        return self.kind == EVEN_COMPOSED

    def describe(self) -> dict:
        return {"label": self.label, "kind": self.kind, "params": list(self.params)}

    # presets -----------------------------------------------------------

    @classmethod
    def identity(cls) -> "Transform":
        return cls(MONOTONE_INCREASING, lambda y: np.asarray(y, dtype=float) * 1.0, "identity",
                   inverse_hint=lambda u: u, image=(-math.inf, math.inf))

    @classmethod
    def exp_sq(cls, alpha: float, label: str = "exp_sq") -> "Transform":
        """``G(y) = exp(y^2 / (2 alpha))``; regularly varying tail with index ``alpha``."""
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        a = float(alpha)
        return cls(
            EVEN_COMPOSED,
            lambda y: np.exp(np.asarray(y, dtype=float) ** 2 / (2 * a)),
            f"{label}({a:g})",
            inverse_hint=lambda u: math.sqrt(2 * a * math.log(u)) if u > 1 else 0.0,
            domain_sign="nonnegative",
            tail_index=a,
            image=(1.0, math.inf),
            params=(a,),
        )

    @classmethod
    def abs_exp_sq(cls, alpha: float) -> "Transform":
        """Written as ``G(|y|)`` with ``G(x) = exp(x^2 / (2 alpha))``; same map as :meth:`exp_sq`."""
        return cls.exp_sq(alpha, label="abs_exp_sq")

    @classmethod
    def signed_exp(cls, beta: float) -> "Transform":
        """``G(y) = sgn(y) (exp(y^2 / beta^2) - 1)``, tail index ``beta^2 / 2``."""
        if not beta > 0:
            raise ValueError("beta must be positive")
        b = float(beta)

        def g(y):
            y = np.asarray(y, dtype=float)
            return np.sign(y) * np.expm1(y * y / (b * b))

        return cls(
            MONOTONE_INCREASING,
            g,
            f"signed_exp({b:g})",
            inverse_hint=lambda u: math.copysign(b * math.sqrt(math.log1p(abs(u))), u),
            tail_index=b * b / 2,
            image=(-math.inf, math.inf),
            params=(b,),
        )

    @classmethod
    def constant(cls, c: float = 1.0) -> "Transform":
        """Constant map; only meaningful as a volatility factor."""
        c = float(c)
        sign = "nonnegative" if c >= 0 else "nonpositive"
        return cls(MONOTONE_INCREASING, lambda y: np.full(np.shape(y), c), f"constant({c:g})",
                   domain_sign=sign, image=(c, c), params=(c,))

    @classmethod
    def preset(cls, name: str, alpha: float | None = None, beta: float | None = None):
        if name == "identity":
            return cls.identity()
        if name in ("exp_sq", "abs_exp_sq"):
            if alpha is None:
                raise ValueError(f"{name} needs alpha")
            return cls.exp_sq(alpha) if name == "exp_sq" else cls.abs_exp_sq(alpha)
        if name == "signed_exp":
            if beta is None:
                raise ValueError("signed_exp needs beta")
            return cls.signed_exp(beta)
        raise ValueError(f"unknown transform preset {name!r}")


def _bisect(pred, lo, hi):
    """Smallest x in [lo, hi] with pred(x) true, given pred(hi) and not pred(lo)."""
    while hi - lo > _BISECT_TOL * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def generalized_inverse(G: Transform, u: float) -> float:
    """``inf{x : G(x) >= u}`` for nondecreasing G, ``inf{x : G(x) <= u}`` for
    nonincreasing G, and the inverse of the base on ``[0, inf)`` for even G.

    May return ``-inf`` when ``u`` is the lower end of an open image
    (every point exceeds ``u``).
    """
    u = float(u)
    lo_img, hi_img = G.image
    if not (lo_img <= u <= hi_img) or math.isnan(u):
        raise OutOfRangeError(f"level {u} outside the image [{lo_img}, {hi_img}] of {G.label}")
    if G.inverse_hint is not None:
        return float(G.inverse_hint(u))

    g = lambda x: float(G(np.array([x]))[0])
    if G.kind == EVEN_COMPOSED:
        if g(0.0) >= u:
            return 0.0
        hi = 1.0
        while g(hi) < u:
            hi *= 2
            if hi > _BRACKET_LIMIT:
                raise OutOfRangeError(f"level {u} not reached by {G.label}")
        return _bisect(lambda x: g(x) >= u, 0.0, hi)

    if G.kind == MONOTONE_INCREASING:
        pred = lambda x: g(x) >= u
    else:
        pred = lambda x: g(x) <= u
    lo, hi = -1.0, 1.0
    while not pred(hi):
        hi *= 2
        if hi > _BRACKET_LIMIT:
            raise OutOfRangeError(f"level {u} not reached by {G.label}")
    while pred(lo):
        lo *= 2
        if lo < -_BRACKET_LIMIT:
            return -math.inf
    return _bisect(pred, lo, hi)

