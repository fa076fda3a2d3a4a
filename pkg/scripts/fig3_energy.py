"""D2D energy efficiency of S-1 and S-2 against MU density, both D_L
values, plus the S-1/S-2 ratio report.

Writes results/fig3_energy.csv and prints the ratio tables.
"""
from pathlib import Path

from d2dcache.experiments import compare_report

from _common import FIG1_CONFIGS, emit, parse_args, sweep_rows


def main():
    args = parse_args(__doc__)
    out = []
    for cfg in FIG1_CONFIGS:
        spec, rows = sweep_rows(cfg, args)
        print(f"\nD_L = {spec.config.D_L:g} m")
        print(compare_report(rows))
        for r in rows:
            out.append({"D_L": spec.config.D_L,
                        "lambda_per_km2": round(float(r["lambda_u"]) * 1e6),
                        "system": r["system"], "ee_d2d": r["ee_d2d"],
                        "ee_total": r["ee_total"]})
    emit(out, list(out[0]), Path(args.outdir) / "fig3_energy.csv")


if __name__ == "__main__":
    main()
