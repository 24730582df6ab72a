"""Command-line front end: ``xmem <command> --config PATH`` and ``xmem report DIR``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bigauss
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config
from .excursion import mc_ensemble, partial_sum_scaling, xi_and_rank
from .fieldsim import NonEmbeddableError
from .hermite import QuadratureError
from .memory import classify_subordinated, volatility_memory_series, worst_verdict
from .memory.classify import VERDICT_SEVERITY

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

CLT_COLUMNS = (
    "experiment_id", "d", "eta", "transform", "z_family", "level", "n", "replicates", "mean",
    "variance", "skewness", "kurtosis", "exponent", "exponent_stderr", "predicted_exponent", "seed",
)
PARTIAL_SUM_COLUMNS = (
    "experiment_id", "d", "eta", "alpha", "n", "replicates", "q25", "median", "q75", "iqr",
    "exponent", "exponent_stderr", "predicted_exponent", "seed",
)
COV_COLUMNS = ("r", "u", "v", "integral", "series", "oracle", "max_delta")
COV_TOLERANCE = 1e-8


class NumericFailure(RuntimeError):
    pass


def _num(x):
    """Float formatting shared by all writers: shortest round-trip repr, blanks for NaN."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else None)


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the destination directory and rename over ``path``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([row.get(c, "") for c in columns])
    return buf.getvalue()


# -- commands ------------------------------------------------------------


def _verdict_record(v, transform, model) -> dict:
    body = v.to_json()
    return {
        "verdict": body["verdict"],
        "series_value": body["series_value"],
        "certificate": body["certificate"],
        "mu": body["mu"],
        "transform": transform.describe(),
        "model": model.describe(),
        "truncation": body["truncation"],
        "tail_bound": body["tail_bound"],
    }


def _classify(cfg: ExperimentConfig) -> dict:
    G = cfg.build_transform()
    z = cfg.build_z()
    measures = cfg.build_measures()
    etas = cfg.sweep_eta or (None,)
    results = []
    worst_per_eta = []
    for eta in etas:
        model = cfg.build_model(eta)
        per_mu = []
        for mu in measures:
            if cfg.command == "volatility-classify":
                v = volatility_memory_series(G, z, model, mu, K_max=cfg.k_max or 40,
                                             tol=cfg.tol or 1e-10, lattice=cfg.lattice)
            else:
                v = classify_subordinated(G, model, mu, K_max=cfg.k_max or 4096,
                                          tol=cfg.tol or 1e-10, lattice=cfg.lattice)
            per_mu.append(v)
        worst = worst_verdict(per_mu)
        worst_per_eta.append(worst)
        rec = _verdict_record(worst, G, model)
        if eta is not None:
            rec["eta"] = eta
        if len(per_mu) > 1:
            rec["per_measure"] = [_verdict_record(v, G, model) for v in per_mu]
        results.append(rec)
    out = {"schema": SCHEMA, "command": cfg.command, "experiment_id": cfg.experiment_id}
    # headline: the worst verdict over the whole sweep
    top = max(range(len(results)), key=lambda i: VERDICT_SEVERITY[worst_per_eta[i].verdict])
    out.update({k: v for k, v in results[top].items() if k not in ("eta", "per_measure")})
    if len(results) > 1:
        out["results"] = results
    if z is not None:
        out["z"] = z.describe()
    return out


def _rank(cfg: ExperimentConfig) -> dict:
    G = cfg.build_transform()
    z = cfg.build_z()
    model = cfg.build_model()
    results = []
    for u in cfg.levels:
        th = xi_and_rank(G, z, u, model, k_max=cfg.k_max or 12, tol=cfg.tol or 1e-7)
        results.append({
            "level": u,
            "rank": th.q,
            "none_up_to": (cfg.k_max or 12) if th.q is None else None,
            "sigma2": th.sigma2,
            "predicted_exponent": th.predicted_exponent,
            "boundary": th.boundary,
            "coefficients": [_json_float(c) for c in th.coefficients],
        })
    return {
        "schema": SCHEMA,
        "command": "rank",
        "experiment_id": cfg.experiment_id,
        "transform": G.describe(),
        "z": None if z is None else z.describe(),
        "model": model.describe(),
        "results": results,
    }


def _clt(cfg: ExperimentConfig) -> str:
    res = mc_ensemble(cfg)
    G = cfg.build_transform()
    z = cfg.build_z()
    rows = []
    base = {
        "experiment_id": cfg.experiment_id,
        "d": cfg.d,
        "eta": _num(cfg.eta),
        "transform": G.label,
        "z_family": "none" if z is None else z.label,
        "seed": cfg.seed,
    }
    for lev in res.levels:
        pred = _num(lev.theory.predicted_exponent) if lev.theory else ""
        for j, n in enumerate(lev.n_values):
            rows.append({**base, "level": _num(lev.level), "n": n,
                         "replicates": lev.scaling.replicates,
                         "mean": _num(lev.mean[j]), "variance": _num(lev.variance[j]),
                         "skewness": _num(lev.skewness[j]), "kurtosis": _num(lev.kurtosis[j]),
                         "exponent": "", "exponent_stderr": "", "predicted_exponent": pred})
        rows.append({**base, "level": _num(lev.level), "n": "all",
                     "replicates": lev.scaling.replicates,
                     "exponent": _num(lev.scaling.exponent),
                     "exponent_stderr": _num(lev.scaling.exponent_stderr),
                     "predicted_exponent": pred})
    return _csv_text(CLT_COLUMNS, rows)


def _partial_sum(cfg: ExperimentConfig) -> str:
    res = partial_sum_scaling(cfg)
    rows = []
    base = {"experiment_id": cfg.experiment_id, "d": 1, "eta": _num(res.eta),
            "alpha": _num(res.alpha), "seed": cfg.seed,
            "predicted_exponent": _num(res.predicted_exponent)}
    rep = res.report
    for n, (q25, med, q75), iqr in zip(rep.n_values, res.quantiles, rep.variances):
        rows.append({**base, "n": n, "replicates": rep.replicates, "q25": _num(q25),
                     "median": _num(med), "q75": _num(q75), "iqr": _num(iqr)})
    rows.append({**base, "n": "all", "replicates": rep.replicates, "exponent": _num(rep.exponent),
                 "exponent_stderr": _num(rep.exponent_stderr)})
    return _csv_text(PARTIAL_SUM_COLUMNS, rows)


def _cov_check(cfg: ExperimentConfig) -> tuple[str, float]:
    levels = cfg.cov_levels or (-2.0, -1.0, 0.0, 1.0, 2.0)
    rows = []
    worst = 0.0
    for r in cfg.cov_r_values:
        for u in levels:
            for v in levels:
                a = bigauss.indicator_cov_integral(r, u, v)
                b = bigauss.indicator_cov_series(r, u, v, K=cfg.k_max)
                c = bigauss.orthant_oracle(r, u, v) - float(bigauss.normal_sf(u) * bigauss.normal_sf(v))
                delta = max(abs(a - b), abs(a - c), abs(b - c))
                worst = max(worst, delta)
                rows.append({"r": _num(r), "u": _num(u), "v": _num(v), "integral": _num(a),
                             "series": _num(b), "oracle": _num(c), "max_delta": _num(delta)})
    return _csv_text(COV_COLUMNS, rows), worst


def execute(cfg: ExperimentConfig, out_path=None) -> Path:
    """Run one configured command and write its artifact; returns the artifact path."""
    ext = "json" if cfg.command in ("classify", "volatility-classify", "rank") else "csv"
    path = Path(out_path or cfg.output or f"{cfg.experiment_id}.{ext}")
    failure = None
    if cfg.command in ("classify", "volatility-classify"):
        text = json.dumps(_classify(cfg), indent=2) + "\n"
    elif cfg.command == "rank":
        text = json.dumps(_rank(cfg), indent=2) + "\n"
    elif cfg.command == "clt":
        text = _clt(cfg)
    elif cfg.command == "partial-sum":
        text = _partial_sum(cfg)
    else:
        text, worst = _cov_check(cfg)
        if worst >= COV_TOLERANCE:
            failure = f"cov-check: forms disagree by {worst:.3e} (limit {COV_TOLERANCE:g})"
    atomic_write(path, text)
    if failure:
        raise NumericFailure(failure)
    return path


# -- report --------------------------------------------------------------


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _fmt2(x):
    return f"{float(x):.2f}" if x not in ("", None) else "n/a"


def report(run_dir, plot_data=None, stream=None) -> int:
    stream = stream or sys.stdout
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"{run_dir} is not a directory")
    files = sorted(p for p in run_dir.iterdir() if p.suffix in (".csv", ".json") and p.is_file())
    if not files:
        raise ConfigError(f"no run artifacts in {run_dir}")
    lines = []
    plot_blocks = []
    for p in files:
        if p.suffix == ".json":
            try:
                doc = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{p.name}: unreadable JSON ({exc})") from exc
            lines.append(f"[{p.name}] {doc.get('command', '?')}")
            if "results" in doc and doc.get("command") != "rank":
                lines.append(f"  {'eta':>6}  verdict")
                for rec in doc["results"]:
                    lines.append(f"  {rec.get('eta', ''):>6}  {rec['verdict']}")
            elif doc.get("command") == "rank":
                for rec in doc["results"]:
                    rk = rec["rank"] if rec["rank"] is not None else f"none up to {rec['none_up_to']}"
                    lines.append(f"  level {rec['level']:g}: rank {rk}, "
                                 f"predicted exponent {rec['predicted_exponent']:.2f}")
            if "verdict" in doc:
                cert = doc.get("certificate")
                extra = f" (k={cert['k']}, {cert['reason']})" if cert else ""
                lines.append(f"  verdict {doc['verdict']}{extra}")
            continue
        rows = _read_csv(p)
        if not rows:
            continue
        cols = rows[0].keys()
        if "iqr" in cols:
            for row in rows:
                if row["n"] == "all":
                    lines.append(f"[{p.name}] partial sums eta={row['eta']} alpha={row['alpha']}: "
                                 f"measured {_fmt2(row['exponent'])}±{_fmt2(row['exponent_stderr'])} "
                                 f"predicted {_fmt2(row['predicted_exponent'])}")
            plot_blocks.append((f"{p.name} iqr", [(r["n"], r["iqr"]) for r in rows if r["n"] != "all"]))
        elif "variance" in cols:
            for row in rows:
                if row["n"] == "all":
                    lines.append(f"[{p.name}] level {row['level']}: "
                                 f"measured {_fmt2(row['exponent'])}±{_fmt2(row['exponent_stderr'])} "
                                 f"predicted {_fmt2(row['predicted_exponent'])}")
            by_level: dict = {}
            for r in rows:
                if r["n"] != "all":
                    raw = float(r["variance"]) * float(r["n"]) ** int(r["d"])
                    by_level.setdefault(r["level"], []).append((r["n"], repr(raw)))
            for lev, pts in by_level.items():
                plot_blocks.append((f"{p.name} level {lev}", pts))
        elif "max_delta" in cols:
            worst = max(float(r["max_delta"]) for r in rows)
            lines.append(f"[{p.name}] cov-check: {len(rows)} triples, max delta {worst:.2e}")
    stream.write("\n".join(lines) + "\n")
    if plot_data:
        out = []
        for title, pts in plot_blocks:
            out.append(f"# {title}")
            out.extend(f"{n} {v}" for n, v in pts)
            out.append("")
            out.append("")
        atomic_write(plot_data, "\n".join(out))
    return EXIT_OK


# -- entry point ---------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="xmem", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
    rp = sub.add_parser("report")
    rp.add_argument("run_dir")
    rp.add_argument("--plot-data")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "report":
            return report(args.run_dir, args.plot_data)
        cfg = load_config(args.config, seed=args.seed, threads=args.threads)
        if cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
        execute(cfg, args.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"xmem: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, NonEmbeddableError, QuadratureError, ArithmeticError) as exc:
        print(f"xmem: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"xmem: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
