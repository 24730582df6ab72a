"""Flat ``key = value`` experiment configuration.

One setting per line, dotted keys, ``#`` starts a comment. Lists are
comma separated; numeric lists also accept ``lo..hi:step``. Dirac atoms are
written ``location[:weight]``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from .distributions import ZDistribution
from .memory import CovarianceModel, FiniteMeasure, Transform

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "COMMANDS"]

COMMANDS = ("classify", "volatility-classify", "rank", "clt", "partial-sum", "cov-check")
STOCHASTIC = ("clt", "partial-sum")


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


def _floats(text: str) -> tuple[float, ...]:
    out: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            span, _, step = part.partition(":")
            lo, _, hi = span.partition("..")
            lo_f, hi_f = float(lo), float(hi)
            st = float(step) if step else 1.0
            if st <= 0:
                raise ValueError("range step must be positive")
            count = int(math.floor((hi_f - lo_f) / st + 1e-9)) + 1
            out.extend(round(lo_f + i * st, 12) for i in range(count))
        else:
            out.append(float(part))
    return tuple(out)


def _ints(text: str) -> tuple[int, ...]:
    vals = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "^" in part:
            base, _, exp = part.partition("^")
            vals.append(int(base) ** int(exp))
        else:
            vals.append(int(part))
    return tuple(vals)


def _atoms(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        loc, _, w = part.partition(":")
        out.append((float(loc), float(w) if w else 1.0))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in value)
        return ", ".join(_fmt(v) for v in value)
    return str(value)


# key -> (attribute, parser)
_KEYS = {
    "command": ("command", str),
    "experiment.id": ("experiment_id", str),
    "model.family": ("model_family", str),
    "model.eta": ("eta", float),
    "model.lambda": ("lam", float),
    "model.d": ("d", int),
    "transform.name": ("transform_name", str),
    "transform.alpha": ("alpha", float),
    "transform.beta": ("beta", float),
    "measure.dirac": ("measure_dirac", _atoms),
    "measure.gaussian": ("measure_gaussian", _floats),
    "measure.grid": ("measure_grid", _floats),
    "measure.sweep": ("measure_sweep", str),
    "z.family": ("z_family", str),
    "z.alpha": ("z_alpha", float),
    "z.x_min": ("z_x_min", float),
    "z.lambda": ("z_lambda", float),
    "run.levels": ("levels", _floats),
    "run.n_values": ("n_values", _ints),
    "run.replicates": ("replicates", int),
    "run.seed": ("seed", int),
    "run.output": ("output", str),
    "run.k_max": ("k_max", int),
    "run.tol": ("tol", float),
    "run.lattice": ("lattice", _bool),
    "run.threads": ("threads", int),
    "sweep.eta": ("sweep_eta", _floats),
    "cov.r_values": ("cov_r_values", _floats),
    "cov.levels": ("cov_levels", _floats),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    experiment_id: str = "experiment"
    model_family: str = "cauchy"
    eta: float | None = None
    lam: float | None = None
    d: int = 1
    transform_name: str = "identity"
    alpha: float | None = None
    beta: float | None = None
    measure_dirac: tuple[tuple[float, float], ...] = ()
    measure_gaussian: tuple[float, ...] = ()
    measure_grid: tuple[float, ...] = ()
    measure_sweep: str = "single"
    z_family: str | None = None
    z_alpha: float | None = None
    z_x_min: float | None = None
    z_lambda: float | None = None
    levels: tuple[float, ...] = ()
    n_values: tuple[int, ...] = ()
    replicates: int | None = None
    seed: int | None = None
    output: str | None = None
    k_max: int | None = None
    tol: float | None = None
    lattice: bool = False
    threads: int = 1
    sweep_eta: tuple[float, ...] = ()
    cov_r_values: tuple[float, ...] = ()
    cov_levels: tuple[float, ...] = ()

    def __post_init__(self):
        self.validate()

    # -- validation -----------------------------------------------------

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.d not in (1, 2):
            raise ConfigError("model.d must be 1 or 2")
        if self.threads < 1:
            raise ConfigError("run.threads must be >= 1")
        if self.measure_sweep not in ("single", "each"):
            raise ConfigError("measure.sweep must be 'single' or 'each'")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError("run.seed must be an unsigned 64-bit integer")
        if self.command in STOCHASTIC and self.seed is None:
            raise ConfigError(f"command {self.command!r} needs run.seed")
        if self.command in ("classify", "volatility-classify"):
            if not (self.measure_dirac or self.measure_gaussian):
                raise ConfigError("a measure (measure.dirac or measure.gaussian) is required")
            if self.command == "volatility-classify":
                if self.z_family is None:
                    raise ConfigError("volatility-classify needs z.family")
                if self.measure_gaussian:
                    raise ConfigError("volatility-classify accepts only Dirac measures")
        if self.command == "cov-check" and not self.cov_r_values:
            raise ConfigError("cov-check needs cov.r_values")
        if self.command in ("clt", "partial-sum"):
            ns = self.resolved_n_values()
            if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
                raise ConfigError("run.n_values needs >= 3 strictly increasing entries")
            if self.d == 1 and ns[-1] & (ns[-1] - 1):
                raise ConfigError("the largest n must be a power of two in d = 1")
            if self.resolved_replicates() < 2:
                raise ConfigError("run.replicates must be >= 2")
        if self.command == "partial-sum":
            if self.transform_name != "exp_sq":
                raise ConfigError("partial-sum needs transform.name = exp_sq")
            if self.d != 1:
                raise ConfigError("partial-sum is one-dimensional")
        if self.command in ("clt", "rank") and not self.levels:
            raise ConfigError("run.levels is required")
        # build the objects once so bad parameters surface as config errors
        try:
            if self.command != "cov-check":
                self.build_model(self.sweep_eta[0] if self.sweep_eta else None)
                self.build_transform()
            if self.z_family is not None:
                self.build_z()
            if self.measure_dirac or self.measure_gaussian:
                self.build_measures()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    # -- builders -------------------------------------------------------

    def build_model(self, eta: float | None = None) -> CovarianceModel:
        fam = self.model_family
        if fam == "cauchy":
            e = self.eta if eta is None else eta
            if e is None:
                raise ConfigError("cauchy model needs model.eta")
            return CovarianceModel.cauchy(e, self.d)
        if fam == "exp_decay":
            if self.lam is None:
                raise ConfigError("exp_decay model needs model.lambda")
            return CovarianceModel.exp_decay(self.lam, self.d)
        if fam == "white_noise":
            return CovarianceModel.white_noise(self.d)
        raise ConfigError(f"unknown model.family {fam!r}")

    def build_transform(self) -> Transform:
        try:
            return Transform.preset(self.transform_name, alpha=self.alpha, beta=self.beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_z(self) -> ZDistribution | None:
        if self.z_family is None:
            return None
        return ZDistribution(self.z_family, alpha=self.z_alpha, x_min=self.z_x_min, lam=self.z_lambda)

    def build_measures(self) -> list[FiniteMeasure]:
        """The measure(s) to classify against; ``measure.sweep = each`` splits Dirac lists."""
        out = []
        if self.measure_dirac:
            if self.measure_sweep == "each":
                out.extend(FiniteMeasure.dirac(x, w) for x, w in self.measure_dirac)
            else:
                out.append(FiniteMeasure(atoms=self.measure_dirac))
        if self.measure_gaussian:
            if len(self.measure_gaussian) != 2:
                raise ConfigError("measure.gaussian takes 'mean, sd'")
            mean, sd = self.measure_gaussian
            grid = self.measure_grid or (6.0, 241.0)
            if len(grid) != 2:
                raise ConfigError("measure.grid takes 'halfwidth, points'")
            out.append(FiniteMeasure.gaussian_density(mean, sd, grid[0], int(grid[1])))
        return out

    def resolved_n_values(self) -> tuple[int, ...]:
        if self.n_values:
            return self.n_values
        if self.d == 1:
            return tuple(2**k for k in range(10, 15))
        return (64, 128, 256)

    def resolved_replicates(self) -> int:
        if self.replicates is not None:
            return self.replicates
        return 500 if self.d == 1 else 200

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- serialisation --------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value == f.default or value is None:
                if f.name != "command":
                    continue
            lines.append(f"{_ATTR_TO_KEY[f.name]} = {_fmt(value)}")
        return "\n".join(lines) + "\n"


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse config text; keyword ``overrides`` (attribute names) win over the file."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv = _KEYS[key]
        if attr in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[attr] = conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "command" not in values:
        raise ConfigError("missing 'command'")
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)
