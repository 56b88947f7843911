"""Command-line entry point.

Subcommands: simulate | train | evaluate | phenotype | predict. Options
may come from ``--config <json>`` (unknown keys rejected) with individual
flags taking precedence. All randomness flows from a single per-command
seed. Output files are written atomically (temp file + rename) and every
command writes a manifest sufficient to reproduce it. Log verbosity is
controlled by the SURVMIX_LOG environment variable (e.g. DEBUG, INFO).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import data as data_mod
from . import phenotyping, serialize, synthetic
from .data import StandardizationStats, load_csv, standardize, write_csv
from .metrics import MetricsReport, brier_score, concordance_td, integrated_brier
from .model import FitConfig, predict_survival
from .train import fit

logger = logging.getLogger(__name__)


def _atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_write_rows(path: str, header, rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def _write_manifest(path: str, command: str, settings: dict) -> None:
    _atomic_write_text(path, json.dumps(
        {"command": command, "settings": settings}, sort_keys=True, indent=1) + "\n")


def _load_config_file(path, allowed: set) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - allowed
    if unknown:
        raise SystemExit(f"config error: unknown keys {sorted(unknown)}")
    return doc


def _merge(args: argparse.Namespace, keys, config_doc: dict) -> dict:
    """Config-file values, overridden by flags that were explicitly set."""
    merged = dict(config_doc)
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _schema(settings: dict) -> dict:
    return {
        "time": settings.get("time_col", "time"),
        "event": settings.get("event_col", "event"),
        "treatment": settings.get("treatment_col", "treatment"),
    }


def _load_dataset(path: str, settings: dict):
    return load_csv(path, schema=_schema(settings))


# --------------------------------------------------------------------------
# simulate

SIMULATE_KEYS = {"n", "seed", "effect_magnitude", "p_event", "blob_sd", "shape",
                 "out_dir"}


def cmd_simulate(args, config_doc) -> int:
    settings = _merge(args, SIMULATE_KEYS, config_doc)
    out_dir = settings.get("out_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    cfg = synthetic.SyntheticConfig(
        n=int(settings.get("n", 5000)),
        seed=int(settings.get("seed", 0)),
        effect_magnitude=float(settings.get("effect_magnitude", 1.0)),
        p_event=float(settings.get("p_event", 0.75)),
        blob_sd=float(settings.get("blob_sd", 1.0)),
        shape=float(settings.get("shape", 1.0)),
    )
    dataset, truth = synthetic.generate(cfg)

    data_path = os.path.join(out_dir, "data.csv")
    tmp = data_path + ".tmp"
    write_csv(dataset, tmp)
    os.replace(tmp, data_path)

    _atomic_write_rows(
        os.path.join(out_dir, "ground_truth.csv"),
        ["z_true", "phi_true", "t_star"],
        [[int(z), int(p), repr(float(t))]
         for z, p, t in zip(truth.z_true, truth.phi_true, truth.t_star)],
    )
    _write_manifest(os.path.join(out_dir, "manifest.json"), "simulate", cfg.to_dict())
    print(f"wrote {cfg.n} rows to {data_path}")
    return 0


# --------------------------------------------------------------------------
# train

TRAIN_KEYS = {"data", "time_col", "event_col", "treatment_col", "k", "m",
              "layer_sizes", "batch_size", "learning_rate", "max_epochs",
              "patience", "spline_penalty", "val_fraction", "seed",
              "standardize", "model_out", "log_out"}


def cmd_train(args, config_doc) -> int:
    settings = _merge(args, TRAIN_KEYS, config_doc)
    if "data" not in settings:
        raise SystemExit("train: --data is required")
    dataset = _load_dataset(settings["data"], settings)
    if settings.get("standardize", True):
        dataset, stats = standardize(dataset)
    else:
        stats = StandardizationStats.identity(dataset.d, dataset.feature_names)

    config = FitConfig(
        K=int(settings.get("k", 3)),
        M=int(settings.get("m", 2)),
        layer_sizes=tuple(settings.get("layer_sizes", (16,))),
        batch_size=int(settings.get("batch_size", 128)),
        learning_rate=float(settings.get("learning_rate", 5e-3)),
        max_epochs=int(settings.get("max_epochs", 300)),
        patience=int(settings.get("patience", 30)),
        spline_penalty=settings.get("spline_penalty"),
        val_fraction=float(settings.get("val_fraction", 0.25)),
        seed=int(settings.get("seed", 0)),
    )
    model = fit(dataset, config, standardization=stats)

    model_out = settings.get("model_out", "model.json")
    doc = json.dumps(serialize.model_to_dict(model), sort_keys=True, indent=1) + "\n"
    _atomic_write_text(model_out, doc)

    log_out = settings.get("log_out", os.path.splitext(model_out)[0] + "_log.csv")
    _atomic_write_rows(log_out, ["epoch", "val_loglik"],
                       [[h["epoch"], repr(float(h["val_loglik"]))] for h in model.history])
    _write_manifest(model_out + ".manifest.json", "train",
                    {k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in settings.items()})
    best = max(h["val_loglik"] for h in model.history)
    print(f"wrote model to {model_out} (best validation loglik {best:.4f})")
    return 0


# --------------------------------------------------------------------------
# evaluate

EVAL_KEYS = {"model", "data", "time_col", "event_col", "treatment_col",
             "horizons", "report_out", "curves_out"}


def default_horizons(times) -> list:
    """1x/3x/5x the median observed time, capped at the data support.

    Mirrors the short/medium/long follow-up landmarks customary in clinical
    studies (1, 3 and 5 years), with the median observed time standing in
    for the year on datasets whose time axis has no calendar unit.
    """
    times = np.asarray(times, dtype=float)
    med = float(np.median(times))
    t_max = float(times.max())
    return sorted({min(m * med, t_max) for m in (1.0, 3.0, 5.0)})


def cmd_evaluate(args, config_doc) -> int:
    settings = _merge(args, EVAL_KEYS, config_doc)
    for req in ("model", "data"):
        if req not in settings:
            raise SystemExit(f"evaluate: --{req} is required")
    model = serialize.load_model(settings["model"])
    dataset = _load_dataset(settings["data"], settings)

    horizons = settings.get("horizons") or default_horizons(dataset.t)
    horizons = [float(h) for h in horizons]
    t_obs_max = float(dataset.t.max())
    for h in horizons:
        if h > t_obs_max:
            logger.warning("horizon %g beyond data support (max %g); computing anyway",
                           h, t_obs_max)

    report = MetricsReport(horizons=horizons)
    for t in horizons:
        surv_t = np.array([
            predict_survival(model, dataset.x[i], int(dataset.a[i]), [t])[0]
            for i in range(dataset.n)
        ])
        report.brier[t] = brier_score(surv_t, dataset.t, dataset.delta, t)
        report.concordance[t] = concordance_td(1.0 - surv_t, dataset.t, dataset.delta, t)
    report.ibs = integrated_brier(report.brier)

    report_out = settings.get("report_out", "metrics.json")
    _atomic_write_text(report_out,
                       json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n")

    # per-arm mean survival curves for plotting
    grid = np.linspace(0.0, t_obs_max, 200)
    curves_out = settings.get("curves_out", "curves.csv")
    rows = []
    for arm in (0, 1):
        mean_curve = predict_survival(model, dataset.x, arm, grid).mean(axis=0)
        rows += [[arm, repr(float(t)), repr(float(s))] for t, s in zip(grid, mean_curve)]
    _atomic_write_rows(curves_out, ["arm", "time", "survival"], rows)
    _write_manifest(report_out + ".manifest.json", "evaluate",
                    {**{k: v for k, v in settings.items()}, "horizons": horizons})
    print(f"wrote {report_out}: "
          + ", ".join(f"Ctd({t:.3g})={report.concordance[t]:.4f}" for t in horizons)
          + f", IBS={report.ibs:.4f}")
    return 0


# --------------------------------------------------------------------------
# phenotype

PHENO_KEYS = {"model", "train_data", "test_data", "time_col", "event_col",
              "treatment_col", "fraction", "horizon", "seed",
              "report_out", "assignments_out"}


def cmd_phenotype(args, config_doc) -> int:
    settings = _merge(args, PHENO_KEYS, config_doc)
    for req in ("model", "train_data", "test_data"):
        if req not in settings:
            raise SystemExit(f"phenotype: --{req.replace('_', '-')} is required")
    model = serialize.load_model(settings["model"])
    train = _load_dataset(settings["train_data"], settings)
    test = _load_dataset(settings["test_data"], settings)
    fraction = float(settings.get("fraction", 0.15))
    horizon = float(settings.get("horizon") or np.quantile(train.t, 0.75))
    seed = int(settings.get("seed", 0))

    estimator = phenotyping.model_estimator(model)
    ranked = phenotyping.rank_phenogroups(model, train, horizon, estimator,
                                          target_fraction=fraction, seed=seed)
    if not ranked:
        raise SystemExit("phenotype: no nonempty phenogroups")
    enhanced, diminished = ranked[0], ranked[-1]

    probs = phenotyping.phi_probabilities(model, test)
    grid = np.linspace(0.0, horizon, 201)
    summary = {"evaluation": "self-evaluated", "horizon": horizon,
               "fraction": fraction, "groups": {}}
    member_flags = {}
    for label, ge in (("enhanced", enhanced), ("diminished", diminished)):
        assignment = phenotyping.assign(probs, ge.group, fraction)
        members = np.flatnonzero(assignment.member)
        member_flags[ge.group] = assignment.member
        s1 = estimator(test, members, 1, grid)
        s0 = estimator(test, members, 0, grid)
        cate, hw = phenotyping.cate_rmst(
            [phenotyping._grid_curve(grid, r) for r in s1],
            [phenotyping._grid_curve(grid, r) for r in s0],
            horizon, seed=seed)
        summary["groups"][label] = {
            "group": ge.group, "train_cate": ge.cate,
            "test_cate": cate, "test_ci_half_width": hw,
            "test_size": int(len(members)), "test_fraction": float(len(members) / test.n),
        }

    report_out = settings.get("report_out", "phenotypes.json")
    _atomic_write_text(report_out, json.dumps(summary, sort_keys=True, indent=1) + "\n")

    assignments_out = settings.get("assignments_out", "phenotype_assignments.csv")
    header = ["id", *[f"phi_prob_{m}" for m in range(model.M)],
              "selected_group", "member"]
    sel = enhanced.group
    rows = [[int(test.ids[i]), *[repr(float(p)) for p in probs[i]],
             sel, int(member_flags[sel][i])] for i in range(test.n)]
    _atomic_write_rows(assignments_out, header, rows)
    _write_manifest(report_out + ".manifest.json", "phenotype",
                    {**settings, "horizon": horizon})
    print(f"wrote {report_out}: enhanced group {enhanced.group} "
          f"(train CATE {enhanced.cate:.4f}), diminished group {diminished.group} "
          f"(train CATE {diminished.cate:.4f})")
    return 0


# --------------------------------------------------------------------------
# predict

PREDICT_KEYS = {"model", "data", "time_col", "event_col", "treatment_col",
                "arm", "times", "out"}


def cmd_predict(args, config_doc) -> int:
    settings = _merge(args, PREDICT_KEYS, config_doc)
    for req in ("model", "data", "times"):
        if req not in settings:
            raise SystemExit(f"predict: --{req} is required")
    model = serialize.load_model(settings["model"])
    dataset = _load_dataset(settings["data"], settings)
    times = [float(t) for t in settings["times"]]
    if any(b < a for a, b in zip(times, times[1:])):
        raise SystemExit("predict: times must be ascending")
    arm = int(settings.get("arm", 1))

    curves = predict_survival(model, dataset.x, arm, times)
    out = settings.get("out", "predictions.csv")
    header = ["id", *[f"t={t:g}" for t in times]]
    rows = [[int(dataset.ids[i]), *[repr(float(v)) for v in curves[i]]]
            for i in range(dataset.n)]
    _atomic_write_rows(out, header, rows)
    _write_manifest(out + ".manifest.json", "predict", {**settings, "times": times})
    print(f"wrote {out} ({dataset.n} rows x {len(times)} horizons, arm={arm})")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survmix")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("--data")
        p.add_argument("--time-col", dest="time_col")
        p.add_argument("--event-col", dest="event_col")
        p.add_argument("--treatment-col", dest="treatment_col")

    def add_config_flag(p):
        p.add_argument("--config", help="JSON settings file; flags override")

    p = sub.add_parser("simulate", help="generate the synthetic benchmark")
    add_config_flag(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--effect-magnitude", dest="effect_magnitude", type=float)
    p.add_argument("--p-event", dest="p_event", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_simulate, allowed=SIMULATE_KEYS)

    p = sub.add_parser("train", help="fit a model")
    add_config_flag(p)
    add_data_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--layer-sizes", dest="layer_sizes", type=int, nargs="*")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-standardize", dest="standardize", action="store_false",
                   default=None)
    p.add_argument("--model-out", dest="model_out")
    p.add_argument("--log-out", dest="log_out")
    p.set_defaults(func=cmd_train, allowed=TRAIN_KEYS)

    p = sub.add_parser("evaluate", help="compute metrics for a fitted model")
    add_config_flag(p)
    add_data_flags(p)
    p.add_argument("--model")
    p.add_argument("--horizons", type=float, nargs="*")
    p.add_argument("--report-out", dest="report_out")
    p.add_argument("--curves-out", dest="curves_out")
    p.set_defaults(func=cmd_evaluate, allowed=EVAL_KEYS)

    p = sub.add_parser("phenotype", help="extract and rank treatment-effect groups")
    add_config_flag(p)
    p.add_argument("--model")
    p.add_argument("--train-data", dest="train_data")
    p.add_argument("--test-data", dest="test_data")
    p.add_argument("--time-col", dest="time_col")
    p.add_argument("--event-col", dest="event_col")
    p.add_argument("--treatment-col", dest="treatment_col")
    p.add_argument("--fraction", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--report-out", dest="report_out")
    p.add_argument("--assignments-out", dest="assignments_out")
    p.set_defaults(func=cmd_phenotype, allowed=PHENO_KEYS)

    p = sub.add_parser("predict", help="per-sample survival under do(A)=arm")
    add_config_flag(p)
    add_data_flags(p)
    p.add_argument("--model")
    p.add_argument("--arm", type=int)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict, allowed=PREDICT_KEYS)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SURVMIX_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    config_doc = _load_config_file(getattr(args, "config", None), args.allowed)
    try:
        return args.func(args, config_doc)
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
