"""Shared helpers for the experiment scripts."""
import argparse
import logging
from pathlib import Path

from d2dcache.experiments import csv_columns, load_spec, read_csv, run_experiment, write_csv

ROOT = Path(__file__).resolve().parents[1]
FIG1_CONFIGS = [ROOT / "configs" / "fig1_dl75.yaml", ROOT / "configs" / "fig1_dl50.yaml"]


def parse_args(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--trials", type=int, help="override trials per point")
    p.add_argument("--outdir", default=str(ROOT / "results"))
    p.add_argument("--reuse", action="store_true",
                   help="reuse existing sweep CSVs instead of rerunning")
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    return p.parse_args()


def sweep_rows(config_path, args):
    """Rows of a sweep config, run (or reloaded) into ``outdir``."""
    spec = load_spec(config_path)
    if args.trials:
        spec.trials = args.trials
    out = Path(args.outdir) / (Path(config_path).stem + ".csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.reuse and out.exists():
        return spec, read_csv(out)
    logging.info("running %s (%d points x %d systems, %d trials)", config_path.name,
                 len(spec.points()), len(spec.systems), spec.trials)
    rows = run_experiment(spec, out=out)
    return spec, [{k: str(v) for k, v in r.items()} for r in rows]


def emit(rows, columns, path):
    write_csv(rows, columns, path)
    logging.info("wrote %s", path)
