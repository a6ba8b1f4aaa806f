"""Evolve symbolic closures for a small Burgers study and count their building blocks.

Usage: python demos/symbolic_closure.py [--seeds 3] [--generations 10]
"""

import argparse

from romlab import generate_burgers
from romlab.eval import build_study, evaluate_model, occurrence_statistics
from romlab.regress import SrConfig, fit_symbolic


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--generations", type=int, default=10)
    parser.add_argument("--population", type=int, default=300)
    args = parser.parse_args()

    ensemble = generate_burgers(n_snapshots=400, sample_dt=0.02)
    study = build_study(ensemble, 3, 12)
    print(f"G-ROM rMSE_test: {evaluate_model(study, None).rmse_test:.4e}")
    models = []
    for seed in range(args.seeds):
        cfg = SrConfig(primitive_set=2, max_length=15, generations=args.generations,
                       population=args.population, seed=seed)
        model = fit_symbolic(study.dataset, cfg)
        run = evaluate_model(study, model, seed)
        models.append(model)
        print(f"\nseed {seed}: rMSE_test {run.rmse_test:.4e}, "
              f"fitness {[round(f, 4) for f in model.meta['fitness']]}")
        for i, text in enumerate(model.expressions(), start=1):
            print(f"  g{i} = {text}")
    print("\noccurrences per model (mean, std):")
    for token, (mean, std) in sorted(occurrence_statistics(models).items()):
        print(f"  {token:<6}{mean:6.2f}{std:6.2f}")


if __name__ == "__main__":
    main()
