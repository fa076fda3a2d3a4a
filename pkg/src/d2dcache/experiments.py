"""Experiment specs, parameter sweeps and S-1 / S-2 comparison reports.

Spec files are flat YAML mappings. Network and library parameters sit at
the top level (``lambda_u``, ``D_L``, ``rate``, ``epsilon``, ...); values in
decibels use the ``_db`` suffix (``G_m_db``) and the noise density is given
as ``N_o_dbm`` (dBm/Hz). Anything omitted takes the reference defaults,
except ``lambda_u``, which must be given either directly or as a sweep axis.
Experiment keys: ``sweep`` (mapping, at most two axes), ``systems``,
``trials``, ``seed``, ``out``.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .analytic import overall_report
from .errors import ConfigurationError
from .model import ContentLibrary, NetworkConfig, db_to_linear, dbm_to_watt, derive_constants
from .simulator import delivery_thresholds, run_campaign, system_policy

log = logging.getLogger(__name__)

SYSTEMS = ("S-1", "S-2")
WORKERS_ENV = "D2DCACHE_WORKERS"
REQUIRED = ("lambda_u",)

NETWORK_FIELDS = {f.name for f in fields(NetworkConfig)}
LIBRARY_FIELDS = {"N", "epsilon", "rates", "M_d", "M_e"}
DB_FIELDS = {"G_m_db": "G_m", "G_s_db": "G_s", "F_N_db": "F_N",
             "G_T_db": "G_T", "G_R_db": "G_R"}
EXPERIMENT_FIELDS = {"sweep", "systems", "trials", "seed", "out"}

# Fixed CSV layout; sweep-axis columns come first.
RESULT_COLUMNS = ("system", "sp", "sp_ci", "op_d", "sop_d", "ee_total", "ee_d2d",
                  "p_s", "p_d_analytic", "sp_analytic", "trials", "seed",
                  "op_d_ci", "sop_d_ci", "self_hit", "d2d_fraction", "status")


@dataclass
class ExperimentSpec:
    config: NetworkConfig
    library: ContentLibrary
    sweep: dict = field(default_factory=dict)
    systems: tuple = SYSTEMS
    trials: int = 1000
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if len(self.sweep) > 2:
            raise ConfigurationError(f"at most two sweep axes allowed, got {list(self.sweep)}")
        for name, values in self.sweep.items():
            if name not in NETWORK_FIELDS | LIBRARY_FIELDS | {"rate"}:
                raise ConfigurationError(f"sweep: unknown parameter {name!r}")
            if not values or not all(isinstance(v, (int, float)) and math.isfinite(v)
                                     for v in values):
                raise ConfigurationError(f"sweep.{name}: values must be a nonempty list of finite numbers")
        bad = [s for s in self.systems if s not in SYSTEMS]
        if bad or not self.systems:
            raise ConfigurationError(f"systems: expected a subset of {SYSTEMS}, got {list(self.systems)}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigurationError(f"trials must be a positive integer, got {self.trials!r}")
        # Every sweep point must be a valid configuration.
        for point in self.points():
            self.at(point)

    def points(self) -> list[dict]:
        names = list(self.sweep)
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.sweep[n] for n in names))]

    def at(self, point: dict) -> tuple[NetworkConfig, ContentLibrary]:
        return apply_overrides(self.config, self.library, point)


def apply_overrides(config: NetworkConfig, library: ContentLibrary, values: dict):
    net = {k: v for k, v in values.items() if k in NETWORK_FIELDS}
    lib = {k: v for k, v in values.items() if k in LIBRARY_FIELDS}
    if "rate" in values:
        lib["rates"] = values["rate"]
    try:
        if net:
            config = replace(config, **net)
        if lib:
            if "N" in lib and "rates" not in lib and len(set(library.rates)) == 1:
                lib["rates"] = library.rates[0]
            library = replace(library, **lib)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    return config, library


def _parse(raw: dict) -> ExperimentSpec:
    unknown = set(raw) - NETWORK_FIELDS - LIBRARY_FIELDS - set(DB_FIELDS) \
        - EXPERIMENT_FIELDS - {"rate", "N_o_dbm"}
    if unknown:
        raise ConfigurationError(f"unknown field(s): {', '.join(sorted(unknown))}")
    sweep = raw.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ConfigurationError("sweep: expected a mapping of parameter -> list of values")
    sweep = {k: [_number(f"sweep.{k}", x) for x in (v if isinstance(v, (list, tuple)) else [v])]
             for k, v in sweep.items()}
    missing = [k for k in REQUIRED if k not in raw and k not in sweep]
    if missing:
        raise ConfigurationError(f"missing required field(s): {', '.join(missing)}")

    net, lib = {}, {}
    for key, value in raw.items():
        if key in DB_FIELDS:
            target = DB_FIELDS[key]
            if target in raw:
                raise ConfigurationError(f"{key}: give either {key} or {target}, not both")
            net[target] = db_to_linear(_number(key, value))
        elif key == "N_o_dbm":
            if "N_o" in raw:
                raise ConfigurationError("N_o_dbm: give either N_o_dbm or N_o, not both")
            net["N_o"] = dbm_to_watt(_number(key, value))
        elif key in NETWORK_FIELDS:
            net[key] = value if key == "laplace_variant" else _number(key, value)
        elif key == "rate":
            if "rates" in raw:
                raise ConfigurationError("rate: give either rate or rates, not both")
            lib["rates"] = _number(key, value)
        elif key == "rates":
            lib["rates"] = value
        elif key in LIBRARY_FIELDS:
            lib[key] = _number(key, value)
    if "lambda_u" not in net:
        net["lambda_u"] = sweep["lambda_u"][0]
    try:
        config = NetworkConfig(**net)
        library = ContentLibrary(**lib)
        systems = raw.get("systems", SYSTEMS)
        systems = (systems,) if isinstance(systems, str) else tuple(systems)
        return ExperimentSpec(config, library, sweep, systems,
                              int(raw.get("trials", 1000)), int(raw.get("seed", 0)),
                              raw.get("out"))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def _number(key, value) -> float:
    if isinstance(value, bool):
        raise ConfigurationError(f"{key}: expected a number, got {value!r}")
    if not isinstance(value, (int, float)):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{key}: expected a number, got {value!r}") from None
    return value


def load_spec(path) -> ExperimentSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: cannot parse: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected a mapping at top level")
    return _parse(raw)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    out = {k: v for k, v in asdict(spec.config).items()}
    lib = asdict(spec.library)
    rates = lib.pop("rates")
    if len(set(rates)) == 1:
        out["rate"] = rates[0]
    else:
        out["rates"] = list(rates)
    out.update(lib)
    out.update(sweep={k: list(v) for k, v in spec.sweep.items()}, systems=list(spec.systems),
               trials=spec.trials, seed=spec.seed)
    if spec.out is not None:
        out["out"] = spec.out
    return out


def write_spec(spec: ExperimentSpec, path) -> None:
    Path(path).write_text(yaml.safe_dump(spec_to_dict(spec), sort_keys=False),
                          encoding="utf-8")


def evaluate_point(config: NetworkConfig, library: ContentLibrary, system: str,
                   trials: int, seed: int) -> dict:
    """Monte Carlo and analytic metrics of one system at one parameter point."""
    constants = derive_constants(config, library)
    policy = system_policy(system, config, library, constants)
    thresholds = delivery_thresholds(policy, config, library, constants)
    mc = run_campaign(config, library, policy, trials, seed, thresholds)
    an = overall_report(policy, thresholds, config, library, constants)
    return {
        "system": system, "sp": mc.sp, "sp_ci": mc.sp_ci, "op_d": mc.op_d, "sop_d": mc.sop_d,
        "ee_total": mc.ee_total, "ee_d2d": mc.ee_d2d, "p_s": an.p_s,
        "p_d_analytic": an.p_d, "sp_analytic": an.sp_total, "trials": mc.trials,
        "seed": seed, "op_d_ci": mc.op_d_ci, "sop_d_ci": mc.sop_d_ci,
        "self_hit": mc.self_hit, "d2d_fraction": mc.d2d_fraction, "status": "ok",
    }


def _job(args):
    spec, point, system = args
    config, library = spec.at(point)
    row = dict(point)
    row.update(evaluate_point(config, library, system, spec.trials, spec.seed))
    return row


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


def csv_columns(spec: ExperimentSpec) -> list[str]:
    return list(spec.sweep) + list(RESULT_COLUMNS)


def run_experiment(spec: ExperimentSpec, out=None, workers: int | None = None) -> list[dict]:
    """One row per (sweep point, system), in sweep order. Written as CSV to
    ``out`` (or ``spec.out``) when given. A failing point stops the run after
    a ``status=failed`` marker row and the exception is re-raised."""
    jobs = [(spec, p, s) for p in spec.points() for s in spec.systems]
    workers = workers or _workers()
    target = out if out is not None else spec.out
    rows: list[dict] = []
    error = None
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_job, j) for j in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # noqa: BLE001
                    error = (job, exc)
                    break
    else:
        for job in jobs:
            try:
                rows.append(_job(job))
            except Exception as exc:  # noqa: BLE001
                error = (job, exc)
                break
    if error is not None:
        (_, point, system), exc = error
        log.error("sweep point %s / %s failed: %s", point, system, exc)
        rows.append({**point, "system": system, "status": "failed"})
    if target is not None:
        write_csv(rows, csv_columns(spec), target)
    if error is not None:
        raise error[1]
    return rows


def write_csv(rows: list[dict], columns: list[str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows, columns))


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: ("" if row.get(c) is None else row.get(c)) for c in columns})
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _ratio(a, b):
    try:
        a, b = float(a), float(b)
    except (TypeError, ValueError):
        return math.nan
    if b == 0.0:
        return math.inf if a > 0 else (1.0 if a == 0 else math.nan)
    return a / b


def compare_rows(rows: list[dict]) -> dict:
    """S-1/S-2 ratios of sp, sop_d and ee_d2d per sweep point, plus their means."""
    sweep_cols = [c for c in rows[0] if c not in RESULT_COLUMNS] if rows else []
    by_point: dict[tuple, dict] = {}
    for row in rows:
        if row.get("status", "ok") != "ok":
            continue
        key = tuple(row[c] for c in sweep_cols)
        by_point.setdefault(key, {})[row["system"]] = row
    points = []
    for key, systems in by_point.items():
        missing = [s for s in SYSTEMS if s not in systems]
        if missing:
            raise ValueError(f"point {dict(zip(sweep_cols, key))} lacks system(s) {missing}")
        s1, s2 = systems["S-1"], systems["S-2"]
        points.append({"point": dict(zip(sweep_cols, key)),
                       **{m: _ratio(s1[m], s2[m]) for m in ("sp", "sop_d", "ee_d2d")}})
    if not points:
        raise ValueError("no completed sweep points to compare")
    # points where a ratio is undefined (no D2D attempts, say) are skipped
    means = {}
    for m in ("sp", "sop_d", "ee_d2d"):
        finite = [p[m] for p in points if math.isfinite(p[m])]
        means[m] = float(np.mean(finite)) if finite else math.nan
    return {"points": points, "mean": means}


def compare_report(source) -> str:
    """Text table of S-1/S-2 ratios; ``source`` is a CSV path or a list of rows."""
    rows = read_csv(source) if isinstance(source, (str, os.PathLike)) else source
    result = compare_rows(rows)
    lines = ["point".ljust(32) + "sp".rjust(10) + "sop_d".rjust(10) + "ee_d2d".rjust(10)]
    for p in result["points"]:
        label = ", ".join(f"{k}={v}" for k, v in p["point"].items()) or "-"
        lines.append(label.ljust(32) + "".join(f"{p[m]:10.4f}" for m in ("sp", "sop_d", "ee_d2d")))
    m = result["mean"]
    lines.append("mean".ljust(32) + "".join(f"{m[k]:10.4f}" for k in ("sp", "sop_d", "ee_d2d")))
    return "\n".join(lines)
