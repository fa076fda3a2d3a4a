"""SP of S-1 and S-2 against MU density for both (D_L, R) combinations.

Writes results/fig1_sp.csv with Monte Carlo and analytic SP side by side.
"""
from pathlib import Path

from _common import FIG1_CONFIGS, emit, parse_args, sweep_rows


def main():
    args = parse_args(__doc__)
    out = []
    for cfg in FIG1_CONFIGS:
        spec, rows = sweep_rows(cfg, args)
        for r in rows:
            out.append({"D_L": spec.config.D_L, "rate": spec.library.rates[0],
                        "lambda_per_km2": round(float(r["lambda_u"]) * 1e6),
                        "system": r["system"], "sp": r["sp"], "sp_ci": r["sp_ci"],
                        "sp_analytic": r["sp_analytic"]})
    emit(out, list(out[0]), Path(args.outdir) / "fig1_sp.csv")


if __name__ == "__main__":
    main()
