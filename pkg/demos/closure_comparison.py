"""Compare the plain Galerkin ROM with ridge and quadratic closures on Burgers.

Usage: python demos/closure_comparison.py [--r 3] [--big-r 15] [--csv energy.csv]
"""

import argparse

from romlab import generate_burgers
from romlab.eval import build_study, evaluate_model, grid_search, default_grid, write_energy_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--r", type=int, default=3)
    parser.add_argument("--big-r", type=int, default=15)
    parser.add_argument("--csv", help="write E_FOM and the best closed E_ROM here")
    args = parser.parse_args()

    ensemble = generate_burgers()
    study = build_study(ensemble, args.r, args.big_r)
    baseline = evaluate_model(study, None)
    print(f"{'model':<28}{'R2_val':>12}{'rMSE_test':>14}")
    print(f"{'G-ROM':<28}{baseline.r2_val:>12.4f}{baseline.rmse_test:>14.4e}")

    best = baseline
    for family in ("lr", "d2"):
        model, params, _ = grid_search(family, default_grid(family, study.dataset), study)
        run = evaluate_model(study, model)
        label = f"{family} {params}"
        print(f"{label:<28}{run.r2_val:>12.4f}{run.rmse_test:>14.4e}")
        if run.rmse_test < best.rmse_test:
            best = run
    if args.csv:
        write_energy_csv(study.times, study.e_fom, best.e_rom, args.csv)
        print(f"energy series written to {args.csv}")


if __name__ == "__main__":
    main()
