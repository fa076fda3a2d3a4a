"""Compare the closed-form worst-case interference with a stratified
Monte Carlo Campbell sum for both LoS-ball radii."""
import argparse

from d2dcache.model import NetworkConfig, worst_case_avg_interference
from d2dcache.simulator import worst_case_interference_mc


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--realizations", type=int, default=100_000)
    p.add_argument("--lambda-u", type=float, default=500e-6)
    args = p.parse_args()
    for D_L in (50.0, 75.0):
        cfg = NetworkConfig(lambda_u=args.lambda_u, D_L=D_L)
        exact = worst_case_avg_interference(cfg)
        mc, se = worst_case_interference_mc(cfg, args.realizations, seed=int(D_L))
        print(f"D_L={D_L:4.0f} m  closed form {exact:.6e}  MC {mc:.6e} +- {se:.1e}  "
              f"rel diff {mc / exact - 1:+.2e}")


if __name__ == "__main__":
    main()
