"""Offloading (OP_d) and successful offloading (SOP_d) probabilities
against MU density at D_L = 75 m, 1 Gbit/s.

Writes results/fig2_offloading.csv.
"""
from pathlib import Path

from _common import FIG1_CONFIGS, emit, parse_args, sweep_rows


def main():
    args = parse_args(__doc__)
    spec, rows = sweep_rows(FIG1_CONFIGS[0], args)
    out = [{"lambda_per_km2": round(float(r["lambda_u"]) * 1e6), "system": r["system"],
            "op_d": r["op_d"], "op_d_ci": r["op_d_ci"], "sop_d": r["sop_d"],
            "sop_d_ci": r["sop_d_ci"]} for r in rows]
    emit(out, list(out[0]), Path(args.outdir) / "fig2_offloading.csv")


if __name__ == "__main__":
    main()
