"""Exact simulation of stationary Gaussian fields on ``{0..n-1}^d`` and fields built from them.

Gaussian fields come from circulant embedding: the correlation is wrapped
onto a periodic grid of side ``m >= 2n``, its FFT gives the eigenvalues of
the embedding, and one complex FFT of scaled white noise produces a field
whose real part has exactly the target covariance on the first ``n``
points per axis.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bigauss import normal_cdf, normal_sf
from .distributions import ZDistribution, conditional_exceedance
from .hermite import DEFAULT_QUADRATURE, gaussian_expectation
from .memory.covariance import CovarianceModel
from .memory.transforms import EVEN_COMPOSED, MONOTONE_DECREASING, Transform, generalized_inverse

__all__ = [
    "NonEmbeddableError",
    "RngSpec",
    "FieldSample",
    "ZDistribution",
    "simulate_gaussian_1d",
    "simulate_gaussian_2d",
    "subordinate",
    "volatility_field",
    "marginal_tail",
    "volatility_breakpoints",
    "write_binary",
    "read_binary",
    "to_csv",
]

CLAMP_TOL = 1e-8
MAX_EMBED_FACTOR = 16
_MAGIC = b"XMEM"
_HEADER = struct.Struct("<4sIIIQ8x")
_VERSION = 1

Y_SUBSTREAM = 0
Z_SUBSTREAM = 1


class NonEmbeddableError(RuntimeError):
    """The correlation cannot be embedded in a nonnegative-definite circulant."""


@dataclass(frozen=True)
class RngSpec:
    """A reproducible random stream: ``(master_seed, stream_id)`` plus a substream index."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")

    def generator(self, substream: int = Y_SUBSTREAM) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, substream))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class FieldSample:
    values: np.ndarray
    n: int
    d: int
    model: CovarianceModel | None
    seed: int | None
    stream_id: int | None
    transforms: tuple[str, ...] = ()
    z: ZDistribution | None = None
    gaussian: bool = True
    clamped: int = 0
    cell_volume: float = 1.0
    embedding_size: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n,) * self.d:
            raise ValueError(f"values must have shape {(self.n,) * self.d}, got {v.shape}")
        if v.flags.writeable:
            v = v.copy()
            v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def provenance(self) -> dict:
        return {
            "model": None if self.model is None else self.model.describe(),
            "transforms": list(self.transforms),
            "z": None if self.z is None else self.z.describe(),
            "seed": self.seed,
            "stream_id": self.stream_id,
            "gaussian": self.gaussian,
            "clamped_eigenvalues": self.clamped,
        }

    def derive(self, values, label: str, **changes) -> "FieldSample":
        fields = dict(
            n=self.n, d=self.d, model=self.model, seed=self.seed, stream_id=self.stream_id,
            transforms=self.transforms + (label,), z=self.z, gaussian=False,
            clamped=self.clamped, cell_volume=self.cell_volume,
            embedding_size=self.embedding_size,
        )
        fields.update(changes)
        return FieldSample(values, **fields)


def _wrapped_lags(m: int) -> np.ndarray:
    j = np.arange(m)
    return np.minimum(j, m - j).astype(float)


@lru_cache(maxsize=32)
def _embedding(model: CovarianceModel, n: int):
    """Square roots of the scaled embedding eigenvalues, the embedding size, and the clamp count."""
    d = model.d
    m = 2 * n
    worst = None
    while m <= MAX_EMBED_FACTOR * n:
        lag = _wrapped_lags(m)
        if d == 1:
            c = model.corr(lag)
            lam = np.fft.fft(c).real
        else:
            dist = np.hypot(lag[:, None], lag[None, :])
            c = model.corr(dist)
            lam = np.fft.fft2(c).real
        top = float(lam.max())
        low = float(lam.min())
        if low >= -CLAMP_TOL * top:
            neg = lam < 0
            clamped = int(neg.sum())
            lam = np.where(neg, 0.0, lam)
            root = np.sqrt(lam / lam.size)
            root.flags.writeable = False
            return root, m, clamped
        worst = low / top
        m *= 2
    raise NonEmbeddableError(
        f"circulant embedding of {model.describe()} for n={n} needs negative eigenvalues "
        f"(relative {worst:.2e}) up to size {MAX_EMBED_FACTOR}n"
    )


def _simulate(n: int, model: CovarianceModel, rng: RngSpec, d: int) -> FieldSample:
    if model.d != d:
        raise ValueError(f"model dimension {model.d} does not match d={d}")
    if n < 2:
        raise ValueError("n must be >= 2")
    root, m, clamped = _embedding(model, n)
    gen = rng.generator(Y_SUBSTREAM)
    shape = root.shape
    noise = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
    if d == 1:
        y = np.fft.fft(root * noise).real[:n]
    else:
        y = np.fft.fft2(root * noise).real[:n, :n]
    return FieldSample(y, n, d, model, rng.master_seed, rng.stream_id, clamped=clamped,
                       embedding_size=m)


def simulate_gaussian_1d(n: int, model: CovarianceModel, rng: RngSpec) -> FieldSample:
    """Stationary centred unit-variance Gaussian sequence of length ``n`` (a power of two)."""
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two")
    return _simulate(n, model, rng, 1)


def simulate_gaussian_2d(n: int, model: CovarianceModel, rng: RngSpec) -> FieldSample:
    """``n x n`` stationary Gaussian field with isotropic correlation ``model``."""
    return _simulate(n, model, rng, 2)


def subordinate(sample: FieldSample, G: Transform) -> FieldSample:
    """Pointwise ``X = G(Y)``."""
    if not sample.gaussian:
        raise ValueError("subordination expects a Gaussian sample")
    return sample.derive(G(sample.values), G.label)


def volatility_field(sampleY: FieldSample, G: Transform, z: ZDistribution, rng: RngSpec) -> FieldSample:
    """``X = G(Y) Z`` with ``Z`` i.i.d. from ``z``, drawn from a stream independent of ``Y``."""
    if not sampleY.gaussian:
        raise ValueError("the volatility factor must be built on a Gaussian sample")
    zs = z.sample(rng.generator(Z_SUBSTREAM), sampleY.values.shape)
    with np.errstate(invalid="ignore"):
        x = G(sampleY.values) * zs
    return sampleY.derive(x, f"{G.label}*Z", z=z)


def volatility_breakpoints(G, z, u):
    """Gaussian points where ``y -> P(G(y) Z > u)`` can jump or kink."""
    pts = []
    for k in z.kinks():
        if k == 0:
            continue
        try:
            y = generalized_inverse(G, u / k)
        except ValueError:
            continue
        if math.isfinite(y):
            pts += [y, -y] if G.kind == EVEN_COMPOSED else [y]
    try:
        y0 = generalized_inverse(G, 0.0)
        if math.isfinite(y0):
            pts.append(y0)
    except ValueError:
        pass
    return pts


def marginal_tail(G: Transform, z: ZDistribution | None, u: float, quad=DEFAULT_QUADRATURE) -> float:
    """``P(X_0 > u)`` for ``X = G(Y)`` (``z`` is None) or ``X = G(Y) Z``."""
    u = float(u)
    if z is not None:
        f = lambda y: conditional_exceedance(G(y), z, u)
        return float(min(1.0, max(0.0, gaussian_expectation(f, quad, volatility_breakpoints(G, z, u)))))
    lo, hi = G.image
    if u < lo:
        return 1.0
    if u >= hi:
        return 0.0
    a = generalized_inverse(G, u)
    if G.kind == EVEN_COMPOSED:
        return float(min(1.0, 2.0 * normal_sf(a)))
    if G.kind == MONOTONE_DECREASING:
        return float(normal_cdf(a))
    return float(normal_sf(a))


# -- persistence --------------------------------------------------------


def write_binary(sample: FieldSample, path) -> None:
    """32-byte header (magic, version, d, n, seed) followed by little-endian float64 values."""
    seed = sample.seed if sample.seed is not None else 0
    header = _HEADER.pack(_MAGIC, _VERSION, sample.d, sample.n, seed)
    body = np.ascontiguousarray(sample.values, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_binary(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a field header")
    magic, version, d, n, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a field dump (bad magic)")
    if version != _VERSION:
        raise ValueError(f"unsupported dump version {version}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if values.size != n ** d:
        raise ValueError("payload size does not match the header")
    return {"version": version, "d": d, "n": n, "seed": seed}, values.reshape((n,) * d)


def to_csv(sample: FieldSample, max_points: int = 1 << 16) -> str:
    """CSV text with one row per grid point: index columns then ``value``."""
    if sample.values.size > max_points:
        raise ValueError(f"grid of {sample.values.size} points exceeds the CSV limit {max_points}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if sample.d == 1:
        w.writerow(["i", "value"])
        for i, v in enumerate(sample.values):
            w.writerow([i, repr(float(v))])
    else:
        w.writerow(["i", "j", "value"])
        for (i, j), v in np.ndenumerate(sample.values):
            w.writerow([i, j, repr(float(v))])
    return buf.getvalue()
