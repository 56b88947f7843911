"""Versioned JSON serialization of fitted models.

The document stores the fit config, standardization stats, all parameter
arrays (row-major nested lists) and the per-cluster baseline spline knots
and values. Serialization is deterministic: the same model always produces
byte-identical output.
"""

from __future__ import annotations

import json

import numpy as np

from .baseline import BaselineSurvival
from .data import StandardizationStats
from .model import CmheModel, FitConfig
from .network import CmheParams

FORMAT = "survmix-model"
VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: CmheModel) -> dict:
    cfg = model.config
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": {
            "K": cfg.K, "M": cfg.M, "layer_sizes": list(cfg.layer_sizes),
            "batch_size": cfg.batch_size, "learning_rate": cfg.learning_rate,
            "max_epochs": cfg.max_epochs, "patience": cfg.patience,
            "spline_penalty": cfg.spline_penalty, "val_fraction": cfg.val_fraction,
            "seed": cfg.seed,
        },
        "standardization": {
            "mean": _arr(model.standardization.mean),
            "sd": _arr(model.standardization.sd),
            "feature_names": list(model.standardization.feature_names),
        },
        "params": {
            "encoder": [[_arr(W), _arr(b)] for W, b in model.params.encoder],
            "f_W": _arr(model.params.f_W), "f_b": _arr(model.params.f_b),
            "g_W": _arr(model.params.g_W), "g_b": _arr(model.params.g_b),
            "h_W": _arr(model.params.h_W), "h_b": _arr(model.params.h_b),
            "omega": _arr(model.params.omega),
        },
        "baselines": {
            "knots": [_arr(k) for k in model.baselines.knots],
            "values": [_arr(v) for v in model.baselines.values],
            "lam": list(model.baselines.lam),
        },
    }


def model_from_dict(doc: dict) -> CmheModel:
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    c = doc["config"]
    config = FitConfig(
        K=c["K"], M=c["M"], layer_sizes=tuple(c["layer_sizes"]),
        batch_size=c["batch_size"], learning_rate=c["learning_rate"],
        max_epochs=c["max_epochs"], patience=c["patience"],
        spline_penalty=c["spline_penalty"], val_fraction=c["val_fraction"],
        seed=c["seed"],
    )
    p = doc["params"]
    params = CmheParams(
        encoder=[(np.asarray(W, dtype=float), np.asarray(b, dtype=float))
                 for W, b in p["encoder"]],
        f_W=np.asarray(p["f_W"], dtype=float), f_b=np.asarray(p["f_b"], dtype=float),
        g_W=np.asarray(p["g_W"], dtype=float), g_b=np.asarray(p["g_b"], dtype=float),
        h_W=np.asarray(p["h_W"], dtype=float), h_b=np.asarray(p["h_b"], dtype=float),
        omega=np.asarray(p["omega"], dtype=float),
    )
    b = doc["baselines"]
    baselines = BaselineSurvival(
        knots=[np.asarray(k, dtype=float) for k in b["knots"]],
        values=[np.asarray(v, dtype=float) for v in b["values"]],
        lam=list(b["lam"]),
    )
    s = doc["standardization"]
    stats = StandardizationStats(
        mean=np.asarray(s["mean"], dtype=float), sd=np.asarray(s["sd"], dtype=float),
        feature_names=list(s["feature_names"]),
    )
    return CmheModel(params=params, baselines=baselines, standardization=stats,
                     config=config)


def save_model(model: CmheModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> CmheModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
