"""Command-line entry point: ``dtaoi <command> [options]``.

Every command prints a table as CSV (default) or a JSON document holding the
resolved run spec and the result.  Feeding that JSON back through
``--config`` reproduces the same output.

Exit status: 0 success, 1 a ``validate`` check failed, 2 invalid input,
3 accuracy, convergence, or divergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Any, Optional, Sequence

import numpy as np

from . import coud, models, optimize, sim
from .errors import AccuracyError, InsufficientDataError, InvalidInputError
from .framework import total_variation

SEED_ENV = "DTAOI_SEED"
COMMANDS = ("analyze", "simulate", "validate", "coud", "approx", "optimize")

COLUMNS = {
    "analyze": ("x", "aoi_pmf", "paoi_pmf", "aoi_cdf", "paoi_cdf"),
    "simulate": (
        "model", "lambda", "mu", "p", "seed", "slots", "warmup", "effective_slots",
        "deliveries", "rate_estimate", "aoi_mean", "paoi_mean", "system_time_mean",
    ),
    "validate": ("check", "value", "threshold", "status"),
    "coud": ("metric", "cost", "closed_form", "numeric"),
    "approx": ("k", "power", "weight", "approximation", "gap"),
    "optimize": ("model", "metric", "cost", "mu", "p", "lambda_star", "objective", "method", "iterations"),
}

ROUNDOFF_FLOOR = 1e-13
THRESHOLDS = {"aoi_tv": 0.01, "paoi_tv": 0.01, "aoi_mean_rel_err": 0.02, "theorem1_residual": 0.01}


@dataclass
class RunSpec:
    command: str
    model: Optional[str] = None
    lam: Optional[float] = None
    mu: Optional[float] = None
    p: Optional[float] = None
    f: str = "linear"
    alpha: float = 1.0
    beta: float = 0.0
    n: int = 1
    metric: str = "coud"
    x_max: int = 50
    slots: int = sim.DEFAULT_HORIZON
    warmup: Optional[int] = None
    seed: int = 0
    replications: int = 1
    epsilon: float = 1e-3
    probe_t: int = 15
    max_terms: int = 1000
    format: str = "csv"

    def __post_init__(self):
        for name, kind in (
            ("lam", float), ("mu", float), ("p", float), ("alpha", float), ("beta", float), ("epsilon", float),
            ("n", int), ("x_max", int), ("slots", int), ("warmup", int), ("seed", int),
            ("replications", int), ("probe_t", int), ("max_terms", int),
        ):
            value = getattr(self, name)
            if value is None:
                continue
            try:
                converted = kind(value)
            except (TypeError, ValueError):
                raise InvalidInputError(f"{name} must be a number, got {value!r}") from None
            if kind is int and converted != value:
                raise InvalidInputError(f"{name} must be an integer, got {value!r}")
            setattr(self, name, converted)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def params(self) -> models.QueueParams:
        if self.model is None:
            raise InvalidInputError("--model is required for this command")
        if self.lam is None:
            raise InvalidInputError("--lambda is required for this command")
        return models.QueueParams(models.Model.parse(self.model), self.lam, self.mu, self.p)

    def cost(self) -> coud.AgeFunction:
        kind = coud.CostKind(self.f)
        if kind is coud.CostKind.SERIES:
            raise InvalidInputError("series costs are available from the library, not the command line")
        return coud.AgeFunction(kind, self.alpha, n=self.n, beta=self.beta)


# --- argument handling ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtaoi", description="Age of information for discrete-time status-update systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with option values; command-line flags win")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--model", choices=("fcfs", "lcfs", "bufferless"))
        p.add_argument("--lambda", dest="lam", type=float, help="arrival (generation) probability per slot")
        p.add_argument("--mu", type=float, help="service success probability per slot")
        p.add_argument("--p", type=float, help="channel success probability (bufferless only)")
        if name in ("coud", "approx", "optimize"):
            p.add_argument("--f", choices=[k.value for k in coud.CostKind if k is not coud.CostKind.SERIES])
            p.add_argument("--alpha", type=float)
            p.add_argument("--beta", type=float)
            p.add_argument("--n", type=int)
        if name in ("coud", "optimize"):
            p.add_argument("--metric", choices=("coud", "pcoud"))
        if name == "analyze":
            p.add_argument("--x-max", dest="x_max", type=int)
        if name in ("simulate", "validate"):
            p.add_argument("--slots", type=int)
            p.add_argument("--warmup", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--replications", type=int)
        if name == "simulate":
            p.add_argument("--trace", help="write per-delivery records to this CSV file")
        if name == "approx":
            p.add_argument("--epsilon", type=float)
            p.add_argument("--probe-t", dest="probe_t", type=int)
            p.add_argument("--max-terms", dest="max_terms", type=int)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("spec"), dict):
        data = data["spec"]
    if not isinstance(data, dict):
        raise InvalidInputError(f"config {path} must hold a JSON object")
    return data


def resolve_spec(args: argparse.Namespace) -> RunSpec:
    known = {f.name for f in fields(RunSpec)}
    values: dict[str, Any] = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    if args.config:
        for key, value in _load_config(args.config).items():
            key = {"lambda": "lam"}.get(key, key.replace("-", "_"))
            if key == "command":
                continue
            if key not in known:
                raise InvalidInputError(f"unknown config field {key!r}")
            values[key] = value
    for key, value in vars(args).items():
        if key in known and key != "command" and value is not None:
            values[key] = value
    return RunSpec(command=args.command, **values)


# --- commands ---------------------------------------------------------------------


def _analyze(spec: RunSpec):
    params = spec.params()
    if spec.x_max < 1:
        raise InvalidInputError(f"--x-max must be positive, got {spec.x_max}")
    x = np.arange(1, spec.x_max + 1)
    # round-off can push a closed form a hair outside [0, 1]; values under
    # ROUNDOFF_FLOOR carry no significant digits, so print them as 0
    cols = []
    for fn in (models.aoi_pmf, models.paoi_pmf, models.aoi_cdf, models.paoi_cdf):
        v = np.clip(fn(params, x), 0.0, 1.0)
        cols.append(np.where(v < ROUNDOFF_FLOOR, 0.0, v))
    return [(int(xi),) + tuple(float(c[i]) for c in cols) for i, xi in enumerate(x)]


def _sim_config(spec: RunSpec) -> sim.SimConfig:
    return sim.SimConfig(spec.params(), horizon_slots=spec.slots, warmup_slots=spec.warmup, seed=spec.seed)


def _run_sim(spec: RunSpec) -> sim.EmpiricalStats:
    config = _sim_config(spec)
    if spec.replications == 1:
        return sim.simulate(config)
    return sim.merge(sim.simulate_replications(config, spec.replications))


def _simulate(spec: RunSpec, trace: Optional[str] = None):
    stats = _run_sim(spec)
    if trace:
        with open(trace, "w", encoding="utf-8", newline="") as fh:
            sim.write_trace(stats, fh)
    s = stats.summary()
    return [(
        s["model"], s["lambda"], s["mu"], s["p"], s["seed"], s["horizon_slots"], s["warmup_slots"],
        s["effective_slots"], s["deliveries"], s["rate_estimate"], s["aoi_mean"], s["paoi_mean"],
        s["system_time_mean"],
    )]


def _validate(spec: RunSpec):
    params = spec.params()
    stats = _run_sim(spec)
    mean = coud.coud_mean_closed(params, coud.AgeFunction.linear())
    values = {
        "aoi_tv": total_variation(sim.empirical_pmf(stats, sim.Quantity.AOI), models.aoi_distribution(params)),
        "paoi_tv": total_variation(sim.empirical_pmf(stats, sim.Quantity.PAOI), models.paoi_distribution(params)),
        "aoi_mean_rel_err": abs(stats.aoi_mean - mean) / mean,
        "theorem1_residual": sim.theorem1_residual(stats),
    }
    return [(k, v, THRESHOLDS[k], "PASS" if v < THRESHOLDS[k] else "FAIL") for k, v in values.items()]


def _coud(spec: RunSpec):
    params, f = spec.params(), spec.cost()
    rows = []
    for metric in (coud.Metric.COUD, coud.Metric.PCOUD):
        closed = None
        if f.polynomial_terms() is not None:
            closed_fn = coud.coud_mean_closed if metric is coud.Metric.COUD else coud.pcoud_mean_closed
            closed = closed_fn(params, f)
        rows.append((metric.value, f.describe(), closed, coud.model_cost_numeric(params, f, metric)))
    return rows


def _approx(spec: RunSpec):
    result = coud.approximate(spec.cost(), spec.probe_t, spec.epsilon, spec.max_terms)
    rows = []
    for k in range(1, result.k + 1):
        power, weight = result.terms[k - 1]
        value = float(coud.truncate(result, k)(spec.probe_t))
        rows.append((k, power, weight, value, result.gaps[k - 1]))
    return rows


def _optimize(spec: RunSpec):
    model = models.Model.parse(spec.model) if spec.model else None
    if model is None:
        raise InvalidInputError("--model is required for this command")
    f = spec.cost()
    res = optimize.optimal_lambda_numeric(model, f, spec.metric, spec.mu, p=spec.p)
    return [(model.value, spec.metric, f.describe(), spec.mu, spec.p, res.lambda_star, res.objective_value,
             res.method.value, res.iterations)]


# --- output -----------------------------------------------------------------------


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if v == 0.0:
            return "0"
        return format(v, ".9g")
    return str(value)


def render(spec: RunSpec, rows: list[tuple]) -> str:
    columns = COLUMNS[spec.command]
    if spec.format == "json":
        records = [dict(zip(columns, (_json_value(v) for v in row))) for row in rows]
        return json.dumps({"spec": spec.to_dict(), "columns": list(columns), "rows": records}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = resolve_spec(args)
        if spec.format not in ("csv", "json"):
            raise InvalidInputError(f"format must be csv or json, got {spec.format!r}")
        handler = {
            "analyze": _analyze,
            "validate": _validate,
            "coud": _coud,
            "approx": _approx,
            "optimize": _optimize,
        }.get(spec.command)
        rows = _simulate(spec, getattr(args, "trace", None)) if spec.command == "simulate" else handler(spec)
        text = render(spec, rows)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if spec.command == "validate" and any(r[3] == "FAIL" for r in rows):
        return 1
    return 0


def main() -> None:
    sys.exit(run())
