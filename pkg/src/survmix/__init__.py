"""Cox mixture survival models with latent treatment-effect phenogroups.

A numpy/scipy library for right-censored treatment data: a two-latent-
variable proportional-hazards mixture trained by stochastic EM, with
counterfactual survival prediction, phenogroup extraction, censoring-aware
metrics, and a synthetic benchmark generator with known ground truth.
"""

from .data import (StandardizationStats, SurvivalDataset, SurvivalRecord,
                   load_csv, split, standardize, write_csv)
from .model import (CmheModel, FitConfig, Posteriors, conditional_hazard_loglik,
                    conditional_survival, e_step, full_loglik, predict_survival)
from .train import fit

__all__ = [
    "SurvivalRecord", "SurvivalDataset", "StandardizationStats",
    "load_csv", "write_csv", "standardize", "split",
    "FitConfig", "CmheModel", "Posteriors",
    "conditional_survival", "conditional_hazard_loglik", "e_step",
    "full_loglik", "predict_survival", "fit",
]

__version__ = "0.1.0"
