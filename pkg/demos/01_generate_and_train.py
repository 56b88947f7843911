"""Generate a synthetic treatment cohort and train the mixture model.

The generator plants two kinds of latent structure: three baseline-survival
clusters tied to the first two covariates, and a treatment-effect group
tied to the last two (benefit when |x3| + |x4| > 2, harm otherwise).
This script fits the model and saves everything the later demos need.

Run from the repository root:

    python3 demos/01_generate_and_train.py
"""

import pathlib

import numpy as np

from survmix.data import split, standardize, write_csv
from survmix.model import FitConfig
from survmix.serialize import save_model
from survmix.synthetic import SyntheticConfig, generate
from survmix.train import fit

OUT = pathlib.Path(__file__).parent / "out"
N = 5000
SEED = 1


def main():
    OUT.mkdir(exist_ok=True)

    cfg = SyntheticConfig(n=N, seed=SEED)
    dataset, truth = generate(cfg)
    print(f"generated n={dataset.n}: {dataset.delta.mean():.0%} events, "
          f"{dataset.a.mean():.0%} treated, "
          f"{truth.phi_true.mean():.0%} in the benefit group")

    train, test = split(dataset, 0.75, seed=SEED)
    train_std, stats = standardize(train)

    config = FitConfig(K=3, M=2, seed=SEED)
    print(f"fitting K={config.K} baseline clusters, M={config.M} effect "
          f"groups, encoder {config.layer_sizes} ...")
    model = fit(train_std, config, standardization=stats)

    best = max(h["val_loglik"] for h in model.history)
    print(f"stopped after {model.history[-1]['epoch']} epochs, "
          f"best validation loglik {best:.2f}")
    print("treatment log-effects per group:", np.round(model.params.omega, 3))

    save_model(model, OUT / "model.json")
    write_csv(train, OUT / "train.csv")
    write_csv(test, OUT / "test.csv")
    # test.ids index the original cohort, so the labels align with test rows
    np.savez(OUT / "truth.npz", phi_true_test=truth.phi_true[test.ids],
             z_true_test=truth.z_true[test.ids])
    print(f"wrote model and splits to {OUT}/")


if __name__ == "__main__":
    main()
