"""Loading, validation, standardization, and splitting of right-censored
treatment datasets.

The canonical CSV layout has required columns ``time``, ``event`` and
``treatment``; every other numeric column is taken as a feature. Header row
is mandatory, RFC-4180 style, UTF-8, '.' decimal separator.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

TIME_COL = "time"
EVENT_COL = "event"
TREATMENT_COL = "treatment"


class SchemaError(ValueError):
    """A required column is missing or the header is malformed."""


class ValidationError(ValueError):
    """A cell or record violates the data contract."""


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: features, follow-up time, event indicator, arm."""

    x: np.ndarray
    t: float
    delta: int
    a: int


@dataclass(frozen=True)
class StandardizationStats:
    """Per-feature location/scale used to standardize a dataset.

    ``sd`` is the population (ddof=0) standard deviation.
    """

    mean: np.ndarray
    sd: np.ndarray
    feature_names: list[str]

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.sd

    @classmethod
    def identity(cls, d: int, feature_names=None) -> "StandardizationStats":
        names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(d)]
        return cls(mean=np.zeros(d), sd=np.ones(d), feature_names=names)


@dataclass(frozen=True)
class SurvivalDataset:
    """Immutable right-censored treatment dataset.

    Stored column-wise: ``x`` is (n, d), ``t``/``delta``/``a`` are length n.
    ``ids`` preserves original row identity across splits.
    """

    x: np.ndarray
    t: np.ndarray
    delta: np.ndarray
    a: np.ndarray
    feature_names: list[str]
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=int))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=int))
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(self.n))
        else:
            object.__setattr__(self, "ids", np.asarray(self.ids, dtype=int))
        self._validate()

    def _validate(self):
        if self.x.ndim != 2:
            raise ValidationError("feature matrix must be 2-d")
        n = self.x.shape[0]
        if n < 2:
            raise ValidationError("dataset needs at least 2 records")
        for name, arr in (("t", self.t), ("delta", self.delta), ("a", self.a), ("ids", self.ids)):
            if arr.shape != (n,):
                raise ValidationError(f"column {name!r} has wrong length")
        if len(self.feature_names) != self.d:
            raise ValidationError("feature_names length does not match d")
        if not np.all(np.isfinite(self.x)):
            raise ValidationError("non-finite feature values")
        if not np.all(np.isfinite(self.t)) or np.any(self.t <= 0):
            raise ValidationError("times must be finite and > 0")
        if not np.all(np.isin(self.delta, (0, 1))):
            raise ValidationError("event indicator must be 0 or 1")
        if not np.all(np.isin(self.a, (0, 1))):
            raise ValidationError("treatment indicator must be 0 or 1")
        if not np.any(self.delta == 1):
            raise ValidationError("dataset must contain at least one event")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def record(self, i: int) -> SurvivalRecord:
        return SurvivalRecord(x=self.x[i], t=float(self.t[i]), delta=int(self.delta[i]), a=int(self.a[i]))

    def records(self):
        return [self.record(i) for i in range(self.n)]

    def subset(self, rows) -> "SurvivalDataset":
        rows = np.asarray(rows, dtype=int)
        return SurvivalDataset(
            x=self.x[rows], t=self.t[rows], delta=self.delta[rows], a=self.a[rows],
            feature_names=list(self.feature_names), ids=self.ids[rows],
        )


def _default_schema(schema=None) -> dict:
    s = {"time": TIME_COL, "event": EVENT_COL, "treatment": TREATMENT_COL}
    if schema:
        s.update(schema)
    return s


def load_csv(path, schema=None) -> SurvivalDataset:
    """Load a dataset from CSV.

    `schema` may remap the special column names, e.g.
    ``{"time": "days", "event": "died"}``. All remaining numeric columns
    become features, in file order. Row order is preserved.
    """
    s = _default_schema(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        for role in ("time", "event", "treatment"):
            if s[role] not in header:
                raise SchemaError(f"{path}: missing required column {s[role]!r}")
        special = {s["time"], s["event"], s["treatment"]}
        feat_cols = [c for c in header if c not in special]
        idx = {c: header.index(c) for c in header}

        t, delta, a, rows = [], [], [], []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValidationError(f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}")

            def cell(col):
                raw = row[idx[col]]
                try:
                    return float(raw)
                except ValueError:
                    raise ValidationError(
                        f"{path}: row {rownum}, column {col!r}: non-numeric value {raw!r}")

            ti = cell(s["time"])
            if not np.isfinite(ti) or ti <= 0:
                raise ValidationError(f"{path}: row {rownum}, column {s['time']!r}: time must be > 0")
            di = cell(s["event"])
            if di not in (0.0, 1.0):
                raise ValidationError(f"{path}: row {rownum}, column {s['event']!r}: must be 0 or 1")
            ai = cell(s["treatment"])
            if ai not in (0.0, 1.0):
                raise ValidationError(f"{path}: row {rownum}, column {s['treatment']!r}: must be 0 or 1")
            t.append(ti)
            delta.append(int(di))
            a.append(int(ai))
            rows.append([cell(c) for c in feat_cols])

    if len(t) < 2:
        raise ValidationError(f"{path}: dataset needs at least 2 rows")
    return SurvivalDataset(
        x=np.asarray(rows, dtype=float).reshape(len(t), len(feat_cols)),
        t=t, delta=delta, a=a, feature_names=feat_cols,
    )


def write_csv(dataset: SurvivalDataset, path, schema=None) -> None:
    """Write a dataset back to the canonical CSV layout (lossless round trip)."""
    s = _default_schema(schema)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([s["time"], s["event"], s["treatment"], *dataset.feature_names])
        for i in range(dataset.n):
            w.writerow([repr(float(dataset.t[i])), dataset.delta[i], dataset.a[i],
                        *[repr(float(v)) for v in dataset.x[i]]])


def standardize(dataset: SurvivalDataset):
    """Center/scale features to mean 0, variance 1 (population sd).

    Constant features are dropped with a warning. Returns the transformed
    dataset and the stats needed to transform new inputs.
    """
    mean = dataset.x.mean(axis=0)
    sd = dataset.x.std(axis=0, ddof=0)
    keep = sd > 0
    if not np.any(keep):
        raise ValidationError("all features are constant; nothing to standardize")
    dropped = [n for n, k in zip(dataset.feature_names, keep) if not k]
    if dropped:
        logger.warning("dropping constant features: %s", ", ".join(dropped))
    names = [n for n, k in zip(dataset.feature_names, keep) if k]
    stats = StandardizationStats(mean=mean[keep], sd=sd[keep], feature_names=names)
    out = SurvivalDataset(
        x=(dataset.x[:, keep] - mean[keep]) / sd[keep],
        t=dataset.t, delta=dataset.delta, a=dataset.a,
        feature_names=names, ids=dataset.ids,
    )
    return out, stats


def split(dataset: SurvivalDataset, fraction: float, seed: int):
    """Deterministic disjoint/exhaustive train-test partition.

    `fraction` is the training share. Errors if either side would be empty
    or event-free.
    """
    if not 0.0 < fraction < 1.0:
        raise ValidationError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n)
    n_train = int(round(fraction * dataset.n))
    train_rows = np.sort(perm[:n_train])
    test_rows = np.sort(perm[n_train:])
    if len(train_rows) == 0 or len(test_rows) == 0:
        raise ValidationError("fraction yields an empty split")
    if not np.any(dataset.delta[train_rows] == 1) or not np.any(dataset.delta[test_rows] == 1):
        raise ValidationError("split yields an event-free side; choose another fraction or seed")
    return dataset.subset(train_rows), dataset.subset(test_rows)
